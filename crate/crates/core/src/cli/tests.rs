use super::*;
use crate::manifest::parse_manifest;

fn fixture(name: &str) -> Manifest {
    let path = format!("{}/fixtures/{name}.ini", env!("CARGO_MANIFEST_DIR"));
    crate::manifest::load_manifest(std::path::Path::new(&path)).unwrap()
}

fn status(r: &Report, name: &str) -> CheckStatus {
    r.checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("no check {name}"))
        .status
}

#[test]
fn command_names_round_trip() {
    for c in Command::ALL {
        assert_eq!(Command::from_name(c.name()), Some(c));
    }
    assert_eq!(Command::from_name("nope"), None);
}

#[test]
fn overrides_replace_numerics() {
    let base = Numerics::default();
    let o = Overrides {
        samples: Some(7),
        tol: Some(1e-6),
        ..Overrides::default()
    };
    let n = o.apply(&base).unwrap();
    assert_eq!((n.samples, n.tol, n.seed), (7, 1e-6, base.seed));
    assert!(Overrides { samples: Some(0), ..Overrides::default() }.apply(&base).is_err());
    assert!(Overrides { step: Some(-1.0), ..Overrides::default() }.apply(&base).is_err());
}

#[test]
fn energy_on_paraboloid() {
    let m = fixture("paraboloid");
    let r = run(Command::Energy, &m, "paraboloid.ini", &Overrides::default()).unwrap();
    assert_eq!(r.exit_code, 0);
    assert_eq!(status(&r, "energy:ncc"), CheckStatus::Pass);
    assert!(r.to_json().contains("\"conformally-hyperbolic\""));
}

#[test]
fn boost_and_t_squared() {
    let r = run(Command::KillingCheck, &fixture("minkowski"), "m", &Overrides::default()).unwrap();
    assert_eq!(r.exit_code, 0);
    assert_eq!(status(&r, "candidate-killing"), CheckStatus::Pass);
    let r = run(Command::KillingClassify, &fixture("t-squared"), "t", &Overrides::default()).unwrap();
    assert_eq!(r.exit_code, 1);
}

#[test]
fn missing_sections_are_inconclusive_alone_and_informational_in_full_report() {
    let m = fixture("hyperbolic");
    let r = run(Command::Geodesic, &m, "h", &Overrides::default()).unwrap();
    assert_eq!(r.exit_code, 2);
    let r = run(Command::FullReport, &m, "h", &Overrides::default()).unwrap();
    assert_eq!(status(&r, "geodesic"), CheckStatus::Info);
    assert_eq!(r.exit_code, 0);
}

#[test]
fn inapplicable_classification_is_inconclusive() {
    let text = "\
[fiber]
coords = x, y
domain = [-1, 1], [-1, 1]
g.x.x = 1
g.y.y = 1
[warp]
f = 1
[fields]
vector.dil = x, y
[killing]
basis = dil
h = 1
psi = 0
phi = 1
";
    let m = parse_manifest(text).unwrap();
    let r = run(Command::KillingClassify, &m, "inline", &Overrides::default()).unwrap();
    assert_eq!(status(&r, "structured-classification"), CheckStatus::Inconclusive);
    assert_eq!(r.exit_code, 2);
}

#[test]
fn truncated_geodesic_is_inconclusive() {
    let m = fixture("paraboloid");
    let mut m2 = m.clone();
    m2.geodesic.as_mut().unwrap().v0 = crate::warped::SpacetimeVector::new(0.0, vec![1.0, 0.0]);
    let r = run(Command::Geodesic, &m2, "p", &Overrides::default()).unwrap();
    assert_eq!(status(&r, "geodesic-trace"), CheckStatus::Inconclusive);
    assert_eq!(r.exit_code, 2);
}

#[test]
fn reports_are_deterministic() {
    let m = fixture("cosh");
    let a = run(Command::FullReport, &m, "c", &Overrides::default()).unwrap();
    let b = run(Command::FullReport, &m, "c", &Overrides::default()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let c = run(Command::FullReport, &m, "c", &Overrides { seed: Some(9), ..Overrides::default() }).unwrap();
    assert_ne!(a.to_json(), c.to_json());
}

#[test]
fn trace_thinning_keeps_endpoints() {
    let m = fixture("cosh");
    let g = m.geodesic.as_ref().unwrap();
    let trace = integrate_geodesic(&m.spacetime, g.t0, &g.p0, &g.v0, g.span, 0.01).unwrap();
    let thinned = thin(&trace);
    assert!(thinned.len() <= MAX_TRACE_SAMPLES);
    assert_eq!(thinned[0], trace.start());
    assert_eq!(*thinned.last().unwrap(), trace.end());
}
