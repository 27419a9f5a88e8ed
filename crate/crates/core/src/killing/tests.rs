use approx::assert_relative_eq;

use super::*;
use crate::fibers;
use crate::geometry::ZeroField;
use crate::warped::FiberFlags;

fn opts() -> Options {
    Options::default().with_samples(40)
}

fn field(src: &[&str], coords: &[String]) -> VectorFieldExpr {
    VectorFieldExpr::parse(src, coords).unwrap()
}

fn texpr(src: &str) -> ScalarExpr {
    ScalarExpr::parse(src, &names(&["t"])).unwrap()
}

fn spacetime(fiber: MetricField, f: &str, t1: f64, t2: f64) -> StaticSpacetime {
    let warp = ScalarExpr::parse(f, fiber.chart().names()).unwrap();
    StaticSpacetime::new(fiber, warp, t1, t2).unwrap()
}

fn plane() -> MetricField {
    fibers::euclidean(&["x", "y"], 2.0).unwrap()
}

#[test]
fn plane_fields() {
    let m = plane();
    let c = m.chart().names().to_vec();
    let rot = check_killing(&m, &field(&["-y", "x"], &c), &opts()).unwrap();
    assert_eq!(rot.verdict, Verdict::Killing);
    assert_eq!(rot.max_residual(), 0.0);
    let dil = check_killing(&m, &field(&["x", "y"], &c), &opts()).unwrap();
    assert_eq!(dil.verdict, Verdict::Neither);
    assert_relative_eq!(dil.max_residual(), 2.0);

    let conf = check_conformal(&m, &field(&["x", "y"], &c), &opts()).unwrap();
    assert_eq!(conf.verdict, Verdict::Conformal);
    assert!(conf.sigma.iter().all(|&s| s == 1.0));
    let conf = check_conformal(&m, &field(&["-y", "x"], &c), &opts()).unwrap();
    assert_eq!(conf.verdict, Verdict::Conformal);
    assert!(conf.sigma.iter().all(|&s| s == 0.0));
    let bad = check_conformal(&m, &field(&["x^2", "0"], &c), &opts()).unwrap();
    assert_eq!(bad.verdict, Verdict::Neither);
    assert!(bad.max_residual() > 0.1);
}

#[test]
fn sphere_rotation_is_killing() {
    let m = fibers::round_sphere(0.1).unwrap();
    let r = check_killing(&m, &field(&["0", "1"], m.chart().names()), &opts()).unwrap();
    assert!(r.max_residual() <= 1e-12);
    let c = m.chart().names();
    for src in [["-sin(ph)", "-cos(th)/sin(th)*cos(ph)"], ["cos(ph)", "-cos(th)/sin(th)*sin(ph)"]] {
        let r = check_killing(&m, &field(&src, c), &opts()).unwrap();
        assert!(r.max_residual() <= 1e-12, "{src:?}: {}", r.max_residual());
    }
}

#[test]
fn empty_sample_set_is_an_error() {
    let m = plane();
    assert!(check_killing(&m, &ZeroField(2), &opts().with_samples(0)).is_err());
}

#[test]
fn b_tensor_examples() {
    let m = plane();
    let c = m.chart().names().to_vec();
    let x = ScalarExpr::parse("x", &c).unwrap();
    let b = b_tensor(&m, &field(&["0", "1"], &c), &x, &[0.3, 0.4]).unwrap();
    assert_eq!(b.entries(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    assert_eq!(b_tensor(&m, &ZeroField(2), &x, &[0.3, 0.4]).unwrap().max_abs(), 0.0);
    let one = ScalarExpr::parse("1", &c).unwrap();
    assert_eq!(b_tensor(&m, &field(&["0", "1"], &c), &one, &[0.3, 0.4]).unwrap().max_abs(), 0.0);
}

#[test]
fn warped_gradient_examples() {
    let m = plane();
    let c = m.chart().names().to_vec();
    let e = |s: &str| ScalarExpr::parse(s, &c).unwrap();
    for (f, psi, expected) in [("1", "3", Verdict::Killing), ("1", "x", Verdict::Killing), ("1", "x^2", Verdict::Neither)] {
        let r = check_f2grad_killing(&m, &e(f), &e(psi), &opts()).unwrap();
        assert_eq!(r.verdict, expected, "{psi}");
        assert_eq!(r.cross_checks[0].within_tol, expected == Verdict::Killing);
        assert!(r.notes.is_empty());
    }
    let r = check_f2grad_killing(&m, &e("1 + y^2"), &e("x*y"), &opts()).unwrap();
    assert_eq!(r.verdict, Verdict::Neither);
    assert!(!r.cross_checks[0].within_tol);
}

#[test]
fn warped_gradient_jacobian_matches_lie_identity() {
    let m = fibers::round_sphere(0.2).unwrap();
    let c = m.chart().names().to_vec();
    let f = ScalarExpr::parse("2 + cos(th)*sin(ph)", &c).unwrap();
    let psi = ScalarExpr::parse("sin(th)^2*cos(ph) + th", &c).unwrap();
    let x = WarpedGradient::new(&m, &f, &psi);
    for p in sampling::fiber_points(m.chart(), &opts()).unwrap() {
        let geo = PointGeometry::at(&m, &p).unwrap();
        let lie = geo.lie_metric(&x.vector_jet(&p).unwrap());
        let fj = f.eval_jet2(&p, &Params::new()).unwrap();
        let pj = psi.eval_jet2(&p, &Params::new()).unwrap();
        let id = geo.hessian(&pj).combine(1.0, &b_form(fj.grad(), pj.grad()), 1.0 / fj.value());
        let expected = id.scale(2.0 * fj.value() * fj.value());
        for i in 0..2 {
            for j in 0..2 {
                assert!((lie.get(i, j) - expected.get(i, j)).abs() < 1e-11);
            }
        }
    }
}

#[test]
fn eigen_examples() {
    let m = plane();
    let c = m.chart().names().to_vec();
    let e = |s: &str| ScalarExpr::parse(s, &c).unwrap();
    let one = e("1");
    assert_eq!(eigen_residual(&m, &one, &e("4"), 0.0, &opts()).unwrap(), 0.0);
    assert_eq!(eigen_residual(&m, &one, &e("x"), 0.0, &opts()).unwrap(), 0.0);
    assert!(eigen_residual(&m, &one, &e("sin(x)"), 0.5, &opts()).unwrap() < 1e-15);
    assert!(eigen_residual(&m, &one, &e("sin(x)"), 1.0, &opts()).unwrap() > 0.1);
}

#[test]
fn static_candidates() {
    let s = spacetime(plane(), "cosh(x)", f64::NEG_INFINITY, f64::INFINITY);
    let c = s.fiber().chart().names().to_vec();
    let r = check_theorem_static_candidate(&s, &texpr("1"), &field(&["0", "0"], &c), &opts()).unwrap();
    assert_eq!(r.verdict, Verdict::Killing);
    assert!(r.constants["mu"].abs() < 1e-14);
    assert!(r.cross_checks[0].within_tol);

    let flat = spacetime(plane(), "1", f64::NEG_INFINITY, f64::INFINITY);
    let r = check_theorem_static_candidate(&flat, &texpr("t"), &field(&["x", "y"], &c), &opts()).unwrap();
    assert_eq!(r.verdict, Verdict::Conformal, "{r:?}");
    assert_relative_eq!(r.constants["mu"], 1.0, epsilon = 1e-12);
    assert!(r.cross_checks[0].within_tol, "{r:?}");

    let r = check_theorem_static_candidate(&flat, &texpr("t^2"), &field(&["0", "0"], &c), &opts()).unwrap();
    assert_eq!(r.verdict, Verdict::Neither);
    assert!(!r.residuals[1].within_tol);
}

#[test]
fn minkowski_boost_is_case_ii() {
    let s = spacetime(plane(), "1", f64::NEG_INFINITY, f64::INFINITY);
    let c = s.fiber().chart().names().to_vec();
    let cand = SpacetimeFieldCandidate::new(
        texpr("1"),
        ScalarExpr::parse("x", &c).unwrap(),
        vec![texpr("t"), texpr("0")],
        vec![field(&["1", "0"], &c), field(&["0", "1"], &c)],
    )
    .unwrap();
    let r = classify_structured(&s, &cand, &opts()).unwrap();
    assert_eq!(r.case, Case::Ii);
    assert_eq!(r.verdict, Verdict::Killing, "{r:?}");
    assert_relative_eq!(r.constants["tau[0]"], 1.0, epsilon = 1e-12);
    assert!(r.constants["tau[1]"].abs() < 1e-12);
    assert!(r.cross_checks.iter().all(|c| c.within_tol));
}

#[test]
fn rindler_boost_is_case_iii_b() {
    let chart = crate::geometry::Chart::new(names(&["x"]), vec![(0.5, 3.0)], 0.0).unwrap();
    let fiber = MetricField::from_sources(chart, 0, |_, _| "1".into()).unwrap();
    let s = spacetime(fiber, "x", f64::NEG_INFINITY, f64::INFINITY);
    let c = s.fiber().chart().names().to_vec();
    let cand = SpacetimeFieldCandidate::new(
        texpr("cosh(t)"),
        ScalarExpr::parse("1/x", &c).unwrap(),
        vec![texpr("-sinh(t)")],
        vec![field(&["1"], &c)],
    )
    .unwrap();
    let r = classify_structured(&s, &cand, &opts()).unwrap();
    assert_eq!(r.case, Case::IiiB);
    assert_eq!(r.verdict, Verdict::Killing, "{r:#?}");
    assert_relative_eq!(r.constants["nu"], -1.0, epsilon = 1e-12);
    assert_relative_eq!(r.constants["tau[0]"], -1.0, epsilon = 1e-12);
    assert_relative_eq!(r.constants["a"], 0.5, epsilon = 1e-10);
    assert_relative_eq!(r.constants["omega[0]"], -r.constants["t0"].sinh(), epsilon = 1e-9, max_relative = 1e-9);
    assert!(r.cross_checks.iter().all(|c| c.within_tol), "{r:#?}");

    let wrong = SpacetimeFieldCandidate::new(
        texpr("cosh(t)"),
        ScalarExpr::parse("1/x", &c).unwrap(),
        vec![texpr("sinh(t)")],
        vec![field(&["1"], &c)],
    )
    .unwrap();
    assert_eq!(classify_structured(&s, &wrong, &opts()).unwrap().verdict, Verdict::Neither);
}

#[test]
fn nonconstant_h_without_structure_is_rejected() {
    let s = spacetime(plane(), "1 + x^2", f64::NEG_INFINITY, f64::INFINITY);
    let c = s.fiber().chart().names().to_vec();
    let cand = SpacetimeFieldCandidate::new(texpr("t"), ScalarExpr::parse("1", &c).unwrap(), vec![], vec![]).unwrap();
    let r = classify_structured(&s, &cand, &opts()).unwrap();
    assert_eq!(r.case, Case::IiiB);
    assert_eq!(r.verdict, Verdict::Neither);
    assert!(r.residual_value("h'(t0) psi + omega^b K_b(ln f)").unwrap() > 0.5);

    let cand = SpacetimeFieldCandidate::new(texpr("t^2"), ScalarExpr::parse("1", &c).unwrap(), vec![], vec![]).unwrap();
    let r = classify_structured(&s, &cand, &opts()).unwrap();
    assert_eq!(r.verdict, Verdict::Neither);
}

#[test]
fn case_detection() {
    let s = spacetime(plane(), "1", f64::NEG_INFINITY, f64::INFINITY);
    let c = s.fiber().chart().names().to_vec();
    let rot = field(&["-y", "x"], &c);
    let zero = ScalarExpr::parse("0", &c).unwrap();
    let cand = SpacetimeFieldCandidate::new(texpr("0"), zero.clone(), vec![texpr("2")], vec![rot.clone()]).unwrap();
    let r = classify_structured(&s, &cand, &opts()).unwrap();
    assert_eq!((r.case, r.verdict), (Case::I, Verdict::Killing));
    let cand = SpacetimeFieldCandidate::new(texpr("t"), zero, vec![texpr("2")], vec![rot.clone()]).unwrap();
    let r = classify_structured(&s, &cand, &opts()).unwrap();
    assert_eq!((r.case, r.verdict), (Case::IiiA, Verdict::Killing));
    let cand = SpacetimeFieldCandidate::new(texpr("0"), ScalarExpr::parse("0", &c).unwrap(), vec![texpr("t")], vec![rot]).unwrap();
    assert_eq!(classify_structured(&s, &cand, &opts()).unwrap().verdict, Verdict::Neither);
}

#[test]
fn basis_must_be_killing() {
    let s = spacetime(plane(), "1", f64::NEG_INFINITY, f64::INFINITY);
    let c = s.fiber().chart().names().to_vec();
    let cand = SpacetimeFieldCandidate::new(
        texpr("1"),
        ScalarExpr::parse("0", &c).unwrap(),
        vec![texpr("1")],
        vec![field(&["x", "y"], &c)],
    )
    .unwrap();
    assert!(matches!(classify_structured(&s, &cand, &opts()), Err(Error::Inapplicable(_))));
}

#[test]
fn compact_fiber_survivors() {
    let s = spacetime(fibers::round_sphere(0.2).unwrap(), "2 + cos(th)", f64::NEG_INFINITY, f64::INFINITY);
    assert!(matches!(classify_compact_fiber(&s, &[], &opts()), Err(Error::Inapplicable(_))));
    let s = s.with_flags(FiberFlags {
        compact: true,
        ..FiberFlags::default()
    });
    let c = s.fiber().chart().names().to_vec();
    let basis = vec![
        ("Rz".to_string(), field(&["0", "1"], &c)),
        ("Rx".to_string(), field(&["-sin(ph)", "-cos(th)/sin(th)*cos(ph)"], &c)),
        ("Ry".to_string(), field(&["cos(ph)", "-cos(th)/sin(th)*sin(ph)"], &c)),
    ];
    let r = classify_compact_fiber(&s, &basis, &opts()).unwrap();
    assert_eq!(r.generators, vec!["∂_t", "Rz"]);
    assert_eq!(r.verdict, Verdict::Killing, "{r:#?}");
    let r = classify_compact_fiber(&s, &[], &opts()).unwrap();
    assert_eq!(r.generators, vec!["∂_t"]);
}

#[test]
fn sequential_and_parallel_reports_match() {
    let m = fibers::round_sphere(0.2).unwrap();
    let x = field(&["sin(ph)", "th"], m.chart().names());
    let a = check_conformal(&m, &x, &opts().with_exec(crate::par::Execution::Sequential)).unwrap();
    let b = check_conformal(&m, &x, &opts().with_exec(crate::par::Execution::Parallel)).unwrap();
    assert_eq!(a, b);
}
