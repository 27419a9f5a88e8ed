use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::expr::names;
use crate::fibers;

fn expr(src: &str, coords: &[&str]) -> ScalarExpr {
    ScalarExpr::parse(src, &names(coords)).unwrap()
}

/// A non-diagonal, non-conformally-flat Riemannian metric on a 3-box.
fn skew_metric() -> MetricField {
    let chart = Chart::new(names(&["x", "y", "z"]), vec![(-1.0, 1.0); 3], 0.0).unwrap();
    let src = [
        ["2 + x^2", "x*y/3", "sin(z)/4"],
        ["", "1.5 + cos(x)*y^2/2", "0.2*x*z"],
        ["", "", "1 + exp(x*y)/3"],
    ];
    MetricField::from_sources(chart, 0, |i, j| src[i][j].to_string()).unwrap()
}

fn fixture_set() -> Vec<(MetricField, Vec<(f64, f64)>)> {
    let sphere = fibers::round_sphere(0.3).unwrap();
    let sphere_box = sphere.chart().sample_box();
    let hp = fibers::half_plane(2.0, 0.5, 3.0).unwrap();
    let hp_box = hp.chart().sample_box();
    let s3 = fibers::stereographic_s3(1.7, 2.0).unwrap();
    let s3_box = s3.chart().sample_box();
    let skew = skew_metric();
    let skew_box = skew.chart().sample_box();
    vec![(sphere, sphere_box), (hp, hp_box), (s3, s3_box), (skew, skew_box)]
}

fn random_point(rng: &mut ChaCha8Rng, bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect()
}

fn random_scalar(rng: &mut ChaCha8Rng, coords: &[String]) -> ScalarExpr {
    let a = &coords[0];
    let b = &coords[coords.len() - 1];
    let forms = [
        format!("{a}^2*{b} - 3*{b}"),
        format!("sin({a})*cos({b})"),
        format!("exp({a}/2) + {b}^3"),
        format!("cosh({a} - {b})/(2 + {a}^2)"),
    ];
    let k: f64 = rng.random_range(0.5..2.0);
    ScalarExpr::parse(&format!("{k} * ({})", forms[rng.random_range(0..forms.len())]), coords).unwrap()
}

#[test]
fn euclidean_metric_is_identity() {
    let m = fibers::euclidean(&["x", "y"], 5.0).unwrap();
    let g = metric_at(&m, &[1.3, -2.0]).unwrap();
    assert_eq!(g.entries(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert!(christoffel(&m, &[0.2, 0.1]).unwrap().iter().all(|&c| c == 0.0));
}

#[test]
fn sphere_and_half_plane_metrics() {
    let s = fibers::round_sphere(0.1).unwrap();
    let g = metric_at(&s, &[PI / 2.0, 0.3]).unwrap();
    assert_eq!(g.entries(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    let h = fibers::half_plane(1.0, 0.1, 3.0).unwrap();
    let g = metric_at(&h, &[0.0, 2.0]).unwrap();
    assert_eq!(g.entries(), vec![vec![0.25, 0.0], vec![0.0, 0.25]]);
}

#[test]
fn degenerate_metric_is_rejected() {
    let chart = Chart::new(names(&["x", "y"]), vec![(-1.0, 1.0); 2], 0.0).unwrap();
    let m = MetricField::from_sources(chart, 0, |i, j| if i == j { "x^2".into() } else { "0".into() }).unwrap();
    assert!(matches!(metric_at(&m, &[0.0, 0.5]), Err(GeometryError::Degenerate { .. })));
    assert!(metric_at(&m, &[0.5, 0.5]).is_ok());
}

#[test]
fn signature_validation() {
    let chart = Chart::new(names(&["t", "x"]), vec![(-1.0, 1.0); 2], 0.0).unwrap();
    let m = MetricField::from_sources(chart, 0, |i, j| match (i, j) {
        (0, 0) => "-1".into(),
        (1, 1) => "1".into(),
        _ => "0".into(),
    })
    .unwrap();
    assert!(matches!(m.validate_at(&[0.0, 0.0]), Err(GeometryError::Signature { found: 1, .. })));
}

#[test]
fn chart_margin_must_leave_room() {
    assert!(Chart::new(names(&["x"]), vec![(0.0, 1.0)], 0.5).is_err());
    assert!(Chart::new(names(&["x"]), vec![(0.0, 1.0)], -0.1).is_err());
    let c = Chart::new(names(&["x"]), vec![(0.0, 1.0)], 0.25).unwrap();
    assert_eq!(c.sample_box(), vec![(0.25, 0.75)]);
    assert!(c.contains(&[0.5]) && !c.contains(&[0.1]));
}

#[test]
fn christoffel_symbols_match_oracle() {
    let s = fibers::round_sphere(0.1).unwrap();
    let geo = PointGeometry::at(&s, &[FRAC_PI_4, 0.0]).unwrap();
    assert_abs_diff_eq!(geo.gamma(0, 1, 1), -0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(geo.gamma(1, 0, 1), 1.0, epsilon = 1e-15);
    assert_eq!(geo.gamma(1, 0, 1), geo.gamma(1, 1, 0));
    let h = fibers::half_plane(1.0, 0.5, 2.0).unwrap();
    let geo = PointGeometry::at(&h, &[0.0, 1.0]).unwrap();
    assert_abs_diff_eq!(geo.gamma(0, 0, 1), -1.0, epsilon = 1e-15);
}

#[test]
fn gradients() {
    let e = fibers::euclidean(&["x", "y"], 5.0).unwrap();
    assert_eq!(grad(&e, &expr("x^2 + y^2", &["x", "y"]), &[1.0, 2.0]).unwrap(), vec![2.0, 4.0]);
    assert_eq!(grad(&e, &expr("7", &["x", "y"]), &[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    let h = fibers::half_plane(1.0, 0.5, 3.0).unwrap();
    let g = grad(&h, &expr("y", &["x", "y"]), &[0.0, 2.0]).unwrap();
    assert_abs_diff_eq!(g[0], 0.0);
    assert_abs_diff_eq!(g[1], 4.0, epsilon = 1e-14);
}

#[test]
fn hessians_and_laplacians() {
    let e = fibers::euclidean(&["x", "y"], 5.0).unwrap();
    let phi = expr("x^2 + y^2", &["x", "y"]);
    assert_eq!(hessian(&e, &phi, &[0.3, 0.4]).unwrap().entries(), vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
    assert_eq!(laplacian(&e, &phi, &[0.3, 0.4]).unwrap(), 4.0);
    assert_eq!(hessian(&e, &expr("2", &["x", "y"]), &[0.3, 0.4]).unwrap().max_abs(), 0.0);

    let s = fibers::round_sphere(0.1).unwrap();
    let phi = expr("cos(th)", &["th", "ph"]);
    let h = hessian(&s, &phi, &[FRAC_PI_3, 0.0]).unwrap();
    assert_abs_diff_eq!(h.get(0, 0), -0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(h.get(1, 1), -0.375, epsilon = 1e-15);
    assert_abs_diff_eq!(h.get(0, 1), 0.0, epsilon = 1e-15);
    for th in [0.4, 1.0, 2.2] {
        let lap = laplacian(&s, &phi, &[th, 0.7]).unwrap();
        assert_abs_diff_eq!(lap, -2.0 * th.cos(), epsilon = 1e-14);
    }
}

#[test]
fn constant_curvature_fixtures() {
    let e = fibers::euclidean(&["x", "y"], 5.0).unwrap();
    assert_eq!(ricci(&e, &[0.1, 0.2]).unwrap().max_abs(), 0.0);
    assert_eq!(scalar_curv(&e, &[0.1, 0.2]).unwrap(), 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = fibers::round_sphere(0.2).unwrap();
    let h = fibers::half_plane(2.0, 0.3, 4.0).unwrap();
    for _ in 0..50 {
        let p = random_point(&mut rng, &s.chart().sample_box());
        let geo = PointGeometry::at(&s, &p).unwrap();
        let diff = geo.ricci().combine(1.0, &geo.metric(), -1.0);
        assert!(diff.max_abs() < 1e-12, "sphere Ric - g = {diff:?}");
        assert_abs_diff_eq!(geo.scalar(), 2.0, epsilon = 1e-12);

        let p = random_point(&mut rng, &h.chart().sample_box());
        let geo = PointGeometry::at(&h, &p).unwrap();
        let diff = geo.ricci().combine(1.0, &geo.metric(), 1.0);
        assert!(diff.max_abs() < 1e-12 * (1.0 + geo.metric().max_abs()));
        assert_abs_diff_eq!(geo.scalar(), -2.0, epsilon = 1e-11);
    }
}

#[test]
fn s3_is_einstein_with_constant_scalar_curvature() {
    let r = 1.7;
    let s3 = fibers::stereographic_s3(r, 2.0).unwrap();
    let geo = PointGeometry::at(&s3, &[0.3, -0.8, 1.1]).unwrap();
    // Ric = (2/R²) g on a 3-sphere of radius R.
    let diff = geo.ricci().combine(1.0, &geo.metric(), -2.0 / (r * r));
    assert!(diff.max_abs() < 1e-12);
    assert_abs_diff_eq!(geo.scalar(), 6.0 / (r * r), epsilon = 1e-12);
}

#[test]
fn lie_derivatives_of_flat_fields() {
    let e = fibers::euclidean(&["x", "y"], 5.0).unwrap();
    let coords = names(&["x", "y"]);
    let rot = VectorFieldExpr::parse(&["-y", "x"], &coords).unwrap();
    assert_eq!(lie_metric(&e, &rot, &[0.7, -0.2]).unwrap().max_abs(), 0.0);
    assert_eq!(lie_metric(&e, &ZeroField(2), &[0.7, -0.2]).unwrap().max_abs(), 0.0);
    let dil = VectorFieldExpr::parse(&["x", "y"], &coords).unwrap();
    assert_eq!(
        lie_metric(&e, &dil, &[0.7, -0.2]).unwrap().entries(),
        vec![vec![2.0, 0.0], vec![0.0, 2.0]]
    );
}

/// Divergence form `Δφ = g^{ij}∂_ij φ + ∂_i g^{ij} ∂_j φ + ½ g^{ij} ∂_i ln|g| ∂_j φ`,
/// computed from the metric jets without Christoffel symbols.
fn laplacian_divergence_form(m: &MetricField, phi: &ScalarExpr, p: &[f64]) -> f64 {
    let n = p.len();
    let jet = m.metric_jet(p).unwrap();
    let g = nalgebra::DMatrix::from_row_slice(n, n, &jet.g);
    let gi = g.clone().try_inverse().unwrap();
    let pj = phi.eval_jet2(p, &Params::new()).unwrap();
    let dg = |k: usize| nalgebra::DMatrix::from_fn(n, n, |a, b| jet.dg[(k * n + a) * n + b]);
    let mut out = 0.0;
    for i in 0..n {
        let dgi = &gi * dg(i) * &gi;
        let dlndet = (&gi * dg(i)).trace();
        for j in 0..n {
            out += gi[(i, j)] * pj.hess(i, j) - dgi[(i, j)] * pj.grad()[j] + 0.5 * gi[(i, j)] * dlndet * pj.grad()[j];
        }
    }
    out
}

#[test]
fn laplacian_is_metric_trace_of_hessian() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let fixtures = fixture_set();
    for k in 0..100 {
        let (m, bounds) = &fixtures[k % fixtures.len()];
        let phi = random_scalar(&mut rng, m.chart().names());
        let p = random_point(&mut rng, bounds);
        let geo = PointGeometry::at(m, &p).unwrap();
        let pj = phi.eval_jet2(&p, &Params::new()).unwrap();
        let lap = geo.laplacian(&pj);
        let h = geo.hessian(&pj);
        let trace = (geo.inverse() * h.to_matrix()).trace();
        assert!((lap - trace).abs() <= 1e-12 * (1.0 + lap.abs()));
        let div = laplacian_divergence_form(m, &phi, &p);
        assert!((lap - div).abs() <= 1e-10 * (1.0 + lap.abs()), "{lap} vs {div}");
    }
}

#[test]
fn lie_derivative_two_ways() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (m, bounds) in fixture_set() {
        let coords = m.chart().names().to_vec();
        let n = coords.len();
        let comps: Vec<String> = (0..n)
            .map(|i| format!("sin({}) * {} + {}^2", coords[i], coords[(i + 1) % n], coords[(i + 2) % n]))
            .collect();
        let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
        let x = VectorFieldExpr::parse(&refs, &coords).unwrap();
        for _ in 0..20 {
            let p = random_point(&mut rng, &bounds);
            let geo = PointGeometry::at(&m, &p).unwrap();
            let xj = x.vector_jet(&p).unwrap();
            let l = geo.lie_metric(&xj);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = l.apply(&y, &z);
            let b = geo.lie_metric_covariant(&xj, &y, &z);
            assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn first_bianchi_identity_and_ricci_contraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (m, bounds) in fixture_set() {
        for _ in 0..10 {
            let p = random_point(&mut rng, &bounds);
            let geo = PointGeometry::at(&m, &p).unwrap();
            let r = geo.riemann();
            let n = r.dim();
            let scale = (0..n * n * n * n).fold(1.0f64, |s, q| {
                let (l, i, j, k) = (q / (n * n * n), (q / (n * n)) % n, (q / n) % n, q % n);
                s.max(r.get(l, i, j, k).abs())
            });
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let cyc = r.get(l, i, j, k) + r.get(l, j, k, i) + r.get(l, k, i, j);
                            assert!(cyc.abs() <= 1e-9 * scale, "Bianchi {cyc}");
                            assert!((r.get(l, i, j, k) + r.get(l, i, k, j)).abs() <= 1e-12 * scale);
                        }
                    }
                }
            }
            let ric = geo.ricci();
            let raw = r.contract();
            for a in 0..n {
                for b in 0..n {
                    assert!((ric.get(a, b) - raw[a * n + b]).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}
