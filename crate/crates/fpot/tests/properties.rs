//! Property-based checks that exercise the public surface with generated
//! inputs: print/parse round trips, quadrature additivity, and inversion
//! round trips.

use fpot::expr::parse;
use fpot::numerics::{integrate_adaptive, invert_monotone, Interval, Tolerance};
use proptest::prelude::*;

/// Syntactically valid expression sources, fully parenthesized so nesting
/// depth is the only variable.
fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..10_000u32, 0u32..1000u32).prop_map(|(a, b)| format!("{a}.{b}")),
        (1u32..10_000u32).prop_map(|a| format!("{a}")),
        Just("x".to_string()),
        Just("pi".to_string()),
        Just("e".to_string()),
    ];
    let func = prop_oneof![
        Just("exp"),
        Just("ln"),
        Just("sqrt"),
        Just("sin"),
        Just("cosh"),
        Just("atan"),
        Just("artanh"),
        Just("arccsc"),
    ];
    leaf.prop_recursive(4, 24, 3, move |inner| {
        prop_oneof![
            (
                inner.clone(),
                inner.clone(),
                prop_oneof![Just("+"), Just("-"), Just("*"), Just("/"),]
            )
                .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (inner.clone(), -4i32..5i32).prop_map(|(a, p)| format!("({a})^{p}")),
            (func.clone(), inner).prop_map(|(f, a)| format!("{f}({a})")),
        ]
    })
}

proptest! {
    /// parse ∘ pretty-print ∘ parse is the identity on the AST, and the
    /// printed form is a fixed point.
    #[test]
    fn print_parse_round_trip(src in expr_source()) {
        let first = parse(&src).expect("generated source is valid");
        let printed = first.to_string();
        let second = parse(&printed).unwrap_or_else(|e| {
            panic!("printed form `{printed}` failed to reparse: {e}")
        });
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(printed, second.to_string());
    }

    /// Splitting an integration range at an interior point changes nothing
    /// beyond the summed tolerance budget.
    #[test]
    fn quadrature_is_additive(
        a in -20.0f64..20.0,
        span1 in 0.01f64..15.0,
        span2 in 0.01f64..15.0,
        c2 in -2.0f64..2.0,
        c1 in -3.0f64..3.0,
        freq in 0.1f64..2.0,
    ) {
        let b = a + span1;
        let c = b + span2;
        let f = move |x: f64| c2 * x * x + c1 * x + (freq * x).sin();
        let tol = Tolerance::default();
        let whole = integrate_adaptive(f, a, c, &tol).unwrap();
        let left = integrate_adaptive(f, a, b, &tol).unwrap();
        let right = integrate_adaptive(f, b, c, &tol).unwrap();
        let budget = 3.0 * tol.abs_tol.max(tol.rel_tol * whole.abs()).max(1e-12);
        prop_assert!(
            (whole - left - right).abs() <= budget,
            "additivity broke: {} vs {} + {}",
            whole, left, right
        );
    }

    /// Inverting a strictly increasing function returns a point whose image
    /// reproduces the target.
    #[test]
    fn inversion_round_trip(
        alpha in 0.1f64..3.0,
        beta in 0.01f64..2.0,
        target_x in -4.0f64..4.0,
    ) {
        let f = move |x: f64| alpha * x + beta * x.exp();
        let y = f(target_x);
        let tol = Tolerance::default();
        let domain = Interval::new(-5.0, 5.0).unwrap();
        let x = invert_monotone(f, y, &domain, &tol).unwrap();
        prop_assert!(
            (f(x) - y).abs() <= tol.abs_tol.max(tol.rel_tol * y.abs()).max(1e-9),
            "round trip failed: f({x}) = {} vs {y}",
            f(x)
        );
    }
}
