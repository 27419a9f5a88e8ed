use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn xy() -> Vec<String> {
    names(&["x", "y"])
}

fn p() -> Params {
    Params::new()
}

#[test]
fn parses_sum_of_squares() {
    let e = ScalarExpr::parse("x^2 + y^2", &xy()).unwrap();
    assert_eq!(e.to_string(), "((x ^ 2) + (y ^ 2))");
}

#[test]
fn function_binds_tighter_than_power_base() {
    let coords = names(&["th", "ph"]);
    let e = ScalarExpr::parse("sin(th)^2", &coords).unwrap();
    assert_eq!(e.to_string(), "(sin(th) ^ 2)");
}

#[test]
fn precedence_and_associativity() {
    let e = ScalarExpr::parse("-x^2", &xy()).unwrap();
    assert_eq!(e.to_string(), "(-(x ^ 2))");
    let e = ScalarExpr::parse("x^y^2", &xy()).unwrap();
    assert_eq!(e.to_string(), "(x ^ (y ^ 2))");
    let e = ScalarExpr::parse("x - y - 1", &xy()).unwrap();
    assert_eq!(e.to_string(), "((x - y) - 1)");
    let e = ScalarExpr::parse("x / y * 2", &xy()).unwrap();
    assert_eq!(e.to_string(), "((x / y) * 2)");
    let e = ScalarExpr::parse("2^-x", &xy()).unwrap();
    assert_eq!(e.to_string(), "(2 ^ (-x))");
}

#[test]
fn syntax_error_reports_offset() {
    let err = ScalarExpr::parse("x + * y", &xy()).unwrap_err();
    match err {
        ParseError::Syntax { offset, expected, .. } => {
            assert_eq!(offset, 4);
            assert!(expected.contains(&"number".to_string()));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unknown_identifier_is_named() {
    let err = ScalarExpr::parse("sin(q)", &xy()).unwrap_err();
    assert_eq!(
        err,
        ParseError::UnknownIdentifier {
            name: "q".into(),
            offset: 4
        }
    );
}

#[test]
fn function_requires_parentheses() {
    assert!(matches!(
        ScalarExpr::parse("sin x", &xy()),
        Err(ParseError::Syntax { offset: 4, .. })
    ));
    assert_eq!(ScalarExpr::parse("  ", &xy()).unwrap_err(), ParseError::Empty);
    assert!(ScalarExpr::parse("(x + y", &xy()).is_err());
    assert!(ScalarExpr::parse("x y", &xy()).is_err());
}

#[test]
fn rejects_bad_coordinate_lists() {
    assert!(ScalarExpr::parse("x", &names(&["x", "x"])).is_err());
    assert!(ScalarExpr::parse("x", &names(&["sin"])).is_err());
    assert!(ScalarExpr::parse("x", &names(&["1x"])).is_err());
}

#[test]
fn plain_evaluation() {
    let e = ScalarExpr::parse("x^2 + y^2", &xy()).unwrap();
    assert_eq!(e.eval(&[1.0, 2.0], &p()).unwrap(), 5.0);
    let e = ScalarExpr::parse("cosh(x)", &xy()).unwrap();
    assert_eq!(e.eval(&[0.0, 0.0], &p()).unwrap(), 1.0);
    let e = ScalarExpr::parse("2 * pi", &xy()).unwrap();
    assert_eq!(e.eval(&[0.0, 0.0], &p()).unwrap(), std::f64::consts::TAU);
}

#[test]
fn domain_errors_carry_location() {
    let coords = names(&["x"]);
    let e = ScalarExpr::parse("1 + log(x)", &coords).unwrap();
    match e.eval(&[-1.0], &p()).unwrap_err() {
        EvalError::Domain { op, span, snippet, .. } => {
            assert_eq!(op, "log");
            assert_eq!(span, (4, 10));
            assert_eq!(snippet, "log(x)");
        }
        other => panic!("unexpected {other:?}"),
    }
    let e = ScalarExpr::parse("sqrt(x)", &coords).unwrap();
    assert!(matches!(e.eval(&[-0.5], &p()), Err(EvalError::Domain { op: "sqrt", .. })));
    let e = ScalarExpr::parse("1/x", &coords).unwrap();
    assert!(matches!(e.eval(&[0.0], &p()), Err(EvalError::Domain { op: "division", .. })));
    let e = ScalarExpr::parse("x^0.5", &coords).unwrap();
    assert!(matches!(e.eval(&[-4.0], &p()), Err(EvalError::Domain { op: "power", .. })));
}

#[test]
fn jet_of_sum_of_squares() {
    let e = ScalarExpr::parse("x^2 + y^2", &xy()).unwrap();
    let j = e.eval_jet2(&[1.0, 2.0], &p()).unwrap();
    assert_eq!(j.value(), 5.0);
    assert_eq!(j.grad(), &[2.0, 4.0]);
    assert_eq!(j.hess_matrix(), vec![2.0, 0.0, 0.0, 2.0]);
}

#[test]
fn jet_of_constant_is_flat() {
    let e = ScalarExpr::parse("3.5 * cosh(2)", &xy()).unwrap();
    let j = e.eval_jet2(&[0.3, -1.2], &p()).unwrap();
    assert!(j.is_constant());
    assert_eq!(j.grad(), &[0.0, 0.0]);
}

#[test]
fn jet_of_sin_times_y() {
    // d/dx sin(x) y = cos(x) y, d/dy = sin(x); hess [[-sin(x) y, cos x],[cos x, 0]]
    let e = ScalarExpr::parse("sin(x) * y", &xy()).unwrap();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let j = e.eval_jet2(&[half_pi, 3.0], &p()).unwrap();
    assert_eq!(j.value(), 3.0);
    assert!(j.grad()[0].abs() < 1e-15);
    assert_eq!(j.grad()[1], 1.0);
    assert_eq!(j.hess(0, 0), -3.0);
    assert!(j.hess(0, 1).abs() < 1e-15);
    assert_eq!(j.hess(1, 1), 0.0);
}

#[test]
fn abs_kink_is_an_error_only_for_jets() {
    let coords = names(&["x"]);
    let e = ScalarExpr::parse("abs(x)", &coords).unwrap();
    assert_eq!(e.eval(&[0.0], &p()).unwrap(), 0.0);
    assert!(matches!(
        e.eval_jet2(&[0.0], &p()),
        Err(EvalError::Nondifferentiable { op: "abs", .. })
    ));
    let j = e.eval_jet2(&[-2.0], &p()).unwrap();
    assert_eq!(j.grad(), &[-1.0]);
}

#[test]
fn sqrt_at_zero_has_no_jet() {
    let coords = names(&["x"]);
    let e = ScalarExpr::parse("sqrt(x)", &coords).unwrap();
    assert_eq!(e.eval(&[0.0], &p()).unwrap(), 0.0);
    assert!(e.eval_jet2(&[0.0], &p()).is_err());
}

#[test]
fn variable_exponent_and_parameters() {
    let coords = names(&["x"]);
    let params = names(&["R"]);
    let e = ScalarExpr::parse_with_params("R * 2^x", &coords, &params).unwrap();
    let mut bound = Params::new();
    bound.insert("R".into(), 3.0);
    let j = e.eval_jet2(&[1.0], &bound).unwrap();
    let ln2 = 2f64.ln();
    assert!((j.value() - 6.0).abs() < 1e-14);
    assert!((j.grad()[0] - 6.0 * ln2).abs() < 1e-14);
    assert!((j.hess(0, 0) - 6.0 * ln2 * ln2).abs() < 1e-14);
    assert_eq!(e.eval(&[1.0], &p()), Err(EvalError::UnboundParameter("R".into())));
    let b = e.bind(&bound);
    assert_eq!(b.eval(&[1.0], &p()).unwrap(), 6.0);
}

#[test]
fn dimension_mismatch() {
    let e = ScalarExpr::parse("x", &xy()).unwrap();
    assert!(matches!(e.eval(&[1.0], &p()), Err(EvalError::DimensionMismatch { .. })));
}

#[test]
fn evaluation_is_bit_deterministic() {
    let e = ScalarExpr::parse("sin(x)*exp(y) / (1 + x^2) - tanh(x*y)", &xy()).unwrap();
    let a = e.eval_jet2(&[0.37, -1.1], &p()).unwrap();
    let b = e.eval_jet2(&[0.37, -1.1], &p()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.value().to_bits(), e.eval(&[0.37, -1.1], &p()).unwrap().to_bits());
}

/// Independent oracle: a polynomial stored as (coefficient, exponents) terms,
/// differentiated monomial by monomial.
struct Poly {
    terms: Vec<(f64, Vec<i32>)>,
}

impl Poly {
    fn random(rng: &mut ChaCha8Rng, vars: usize, max_degree: i32) -> Self {
        let count = rng.random_range(1..6);
        let terms = (0..count)
            .map(|_| {
                let mut exps = vec![0; vars];
                let mut budget = rng.random_range(0..=max_degree);
                while budget > 0 {
                    exps[rng.random_range(0..vars)] += 1;
                    budget -= 1;
                }
                (rng.random_range(-3.0..3.0), exps)
            })
            .collect();
        Self { terms }
    }

    fn source(&self, coords: &[String]) -> String {
        self.terms
            .iter()
            .map(|(c, exps)| {
                let mut s = format!("({c})");
                for (v, e) in exps.iter().enumerate() {
                    if *e > 0 {
                        s.push_str(&format!(" * {}^{}", coords[v], e));
                    }
                }
                s
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    fn monomial(exps: &[i32], x: &[f64]) -> f64 {
        exps.iter().zip(x).map(|(e, xi)| xi.powi(*e)).product()
    }

    fn derivative(&self, x: &[f64], wrt: &[usize]) -> f64 {
        self.terms
            .iter()
            .map(|(c, exps)| {
                let mut coef = *c;
                let mut e = exps.clone();
                for &v in wrt {
                    coef *= e[v] as f64;
                    e[v] = (e[v] - 1).max(0);
                }
                coef * Self::monomial(&e, x)
            })
            .sum()
    }

    fn magnitude(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c.abs() * Self::monomial(e, &x.iter().map(|v| v.abs()).collect::<Vec<_>>()))
            .sum::<f64>()
            + 1.0
    }
}

#[test]
fn chain_rule_matches_polynomial_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let coords = names(&["x", "y", "z"]);
    for _ in 0..200 {
        let poly = Poly::random(&mut rng, 3, 4);
        let e = ScalarExpr::parse(&poly.source(&coords), &coords).unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let jet = e.eval_jet2(&x, &p()).unwrap();
        let scale = poly.magnitude(&x);
        assert!((jet.value() - poly.derivative(&x, &[])).abs() <= 1e-12 * scale);
        for i in 0..3 {
            assert!((jet.grad()[i] - poly.derivative(&x, &[i])).abs() <= 1e-12 * scale);
            for j in 0..3 {
                let want = poly.derivative(&x, &[i, j]);
                assert!(
                    (jet.hess(i, j) - want).abs() <= 1e-12 * scale,
                    "{} at {x:?}: d{i}{j} {} vs {want}",
                    e.source(),
                    jet.hess(i, j)
                );
            }
        }
    }
}

fn arb_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..50).prop_map(|v| format!("{}", v as f64 / 4.0)),
        Just("x".to_string()),
        Just("y".to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*", "/"]))
                .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (
                inner,
                prop::sample::select(vec!["sin", "cos", "exp", "sinh", "cosh", "tanh"])
            )
                .prop_map(|(a, f)| format!("{f}({a})")),
        ]
    })
}

proptest! {
    #[test]
    fn print_then_parse_round_trips(src in arb_source()) {
        let coords = xy();
        let e = ScalarExpr::parse(&src, &coords).unwrap();
        let printed = e.to_string();
        let again = ScalarExpr::parse(&printed, &coords).unwrap();
        prop_assert!(e.same_structure(&again), "{src} -> {printed}");
    }

    #[test]
    fn jets_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let coords = xy();
        let e1 = ScalarExpr::parse("sin(x)*y^2 + exp(x*y)", &coords).unwrap();
        let e2 = ScalarExpr::parse("cosh(x - y) / (2 + x^2)", &coords).unwrap();
        let combo = ScalarExpr::parse(
            &format!("({a}) * (sin(x)*y^2 + exp(x*y)) + ({b}) * (cosh(x - y) / (2 + x^2))"),
            &coords,
        ).unwrap();
        let pt = [x, y];
        let j1 = e1.eval_jet2(&pt, &p()).unwrap();
        let j2 = e2.eval_jet2(&pt, &p()).unwrap();
        let jc = combo.eval_jet2(&pt, &p()).unwrap();
        let lin = j1.scale(a).add(&j2.scale(b));
        let tol = 1e-13 * (1.0 + a.abs() + b.abs()) * 50.0;
        prop_assert!((lin.value() - jc.value()).abs() <= tol);
        for i in 0..2 {
            prop_assert!((lin.grad()[i] - jc.grad()[i]).abs() <= tol);
            for j in 0..2 {
                prop_assert!((lin.hess(i, j) - jc.hess(i, j)).abs() <= tol);
            }
        }
    }
}
