//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test -p fpot --test acceptance -- --nocapture` to see the
//! per-criterion summary.

use fpot::criteria::{
    classify_dual_pair, h_slope_identity_residual, Pairing, PotentialType, PotentialVerdict,
};
use fpot::generator::{generate_f, roundtrip_h, HSpec};
use fpot::means::{derivative_density, directional_derivatives, eval_potential, GeneratorFunction};
use fpot::numerics::{differentiate_fd, DerivOrder, Interval, Tolerance};
use fpot::verify::{jensen_search, random_distribution, reproduce_table, table_catalog};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1234;

fn tight() -> Tolerance {
    Tolerance {
        abs_tol: 0.0,
        rel_tol: 1e-15,
        decision_band: 1e-7,
    }
}

fn generator(src: &str, lo: f64, hi: f64) -> GeneratorFunction {
    GeneratorFunction::from_expr_source(src, Interval::new(lo, hi).unwrap()).unwrap()
}

fn table_generators() -> Vec<GeneratorFunction> {
    table_catalog()
        .iter()
        .map(|r| GeneratorFunction::from_expr_source(r.f_source, r.domain).unwrap())
        .collect()
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Criterion 1: all 13 catalog rows classify to the expected type, h formula
/// (pointwise relative error <= 1e-6 on 64-point grids), h sign/curvature,
/// and potential verdict.
#[test]
fn criterion_1_table_reproduction() {
    let outcomes = reproduce_table(64, &Tolerance::default());
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("{}: {}", o.row.label, o.failure.clone().unwrap_or_default()))
        .collect();
    let convex_rows = outcomes[..4]
        .iter()
        .all(|o| o.potential_verdict == Some(PotentialVerdict::Convex));
    let concave_rows = outcomes[4..]
        .iter()
        .all(|o| o.potential_verdict == Some(PotentialVerdict::Concave));
    let pass = failed.is_empty() && convex_rows && concave_rows;
    report(
        "1 (table reproduction)",
        pass,
        &format!(
            "{}/13 rows pass",
            outcomes.iter().filter(|o| o.pass).count()
        ),
    );
    assert!(pass, "failing rows: {failed:?}");
}

/// Criterion 2: sinh, arsinh, tanh, artanh on (-1, 1) each yield Jensen
/// violations in both directions within 10^4 seeded trials, with
/// self-verifying witnesses.
#[test]
fn criterion_2_unclassifiable_catalog() {
    let mut all_pass = true;
    let mut details = Vec::new();
    for src in ["sinh(x)", "arsinh(x)", "tanh(x)", "artanh(x)"] {
        let f = generator(src, -1.0, 1.0);
        let out = jensen_search(&f, 10_000, SEED).unwrap();
        let ok = match (&out.convexity_violation, &out.concavity_violation) {
            (Some(cv), Some(cc)) => {
                cv.reverify(&f, &tight()).unwrap() && cc.reverify(&f, &tight()).unwrap()
            }
            _ => false,
        };
        details.push(format!("{src}: both directions = {ok}"));
        all_pass &= ok;
    }
    report("2 (unclassifiable catalog)", all_pass, &details.join(", "));
    assert!(all_pass, "{details:?}");
}

/// Criterion 3: max |H'(f(x)) - h'(x) - 1| <= 1e-4 over 64-point grids for
/// every non-affine catalog generator (all 13 rows).
#[test]
fn criterion_3_slope_identity() {
    let mut worst_overall: f64 = 0.0;
    let mut failures = Vec::new();
    for (row, f) in table_catalog().iter().zip(table_generators()) {
        let residual = h_slope_identity_residual(&f, 64).unwrap();
        worst_overall = worst_overall.max(residual);
        if residual > 1e-4 {
            failures.push(format!("{}: {residual:e}", row.label));
        }
    }
    let pass = failures.is_empty();
    report(
        "3 (slope identity)",
        pass,
        &format!("worst residual {worst_overall:.3e} (limit 1e-4)"),
    );
    assert!(pass, "{failures:?}");
}

/// Criterion 4: |H_f(y) + g'(y)/g''(y)| <= 1e-5 on image grids, and the
/// inverse-pair types match (exp, ln) -> (a, d), (x^2, sqrt) -> (a, d),
/// (1/x, 1/y) -> (c, c).
#[test]
fn criterion_4_inverse_duality() {
    let cases = [
        ("exp(x)", -3.0, 3.0, PotentialType::A, PotentialType::D),
        ("x^2", 0.1, 10.0, PotentialType::A, PotentialType::D),
        ("x^-1", 0.1, 10.0, PotentialType::C, PotentialType::C),
    ];
    let mut all_pass = true;
    let mut details = Vec::new();
    for (src, lo, hi, want_f, want_g) in cases {
        let f = generator(src, lo, hi);
        let dual = classify_dual_pair(&f, 64, &Tolerance::default()).unwrap();
        let residual = dual.max_duality_residual.unwrap_or(f64::INFINITY);
        let ok = dual.type_f == want_f
            && dual.type_g == want_g
            && dual.pairing == Pairing::Consistent
            && residual <= 1e-5;
        details.push(format!(
            "{src}: ({:?}, {:?}), residual {residual:.3e}",
            dual.type_f, dual.type_g
        ));
        all_pass &= ok;
    }
    report("4 (inverse duality)", all_pass, &details.join("; "));
    assert!(all_pass, "{details:?}");
}

/// Criterion 5: generator reconstruction round-trips h with relative error
/// <= 1e-5, and the reconstructed potential classifies on the side the sign
/// and curvature of h dictate.
#[test]
fn criterion_5_generator_round_trip() {
    let cases: [(&str, f64, f64, PotentialVerdict); 5] = [
        ("1", -2.0, 2.0, PotentialVerdict::Convex),
        ("-x", 0.1, 10.0, PotentialVerdict::Concave),
        ("x", 0.1, 10.0, PotentialVerdict::Convex),
        ("tanh(x)", 0.1, 3.0, PotentialVerdict::Convex),
        (
            "-sin(2*x)/(3 + cos(2*x))",
            0.05,
            1.52,
            PotentialVerdict::Concave,
        ),
    ];
    let mut all_pass = true;
    let mut details = Vec::new();
    for (src, lo, hi, expected) in cases {
        let h = HSpec::from_source(src, Interval::new(lo, hi).unwrap()).unwrap();
        let x0 = h.default_x0();
        let residual = roundtrip_h(&h, x0, 1.0, 0.0, 64).unwrap();
        let f = generate_f(&h, x0, 1.0, 0.0, &Tolerance::default()).unwrap();
        let verdict = fpot::criteria::classify_potential(
            &f.as_generator().unwrap(),
            64,
            &Tolerance::default(),
        )
        .unwrap()
        .potential_verdict;
        let ok = residual <= 1e-5 && verdict == expected;
        details.push(format!(
            "h={src}: residual {residual:.3e}, verdict {verdict:?}"
        ));
        all_pass &= ok;
    }
    report("5 (generator round trip)", all_pass, &details.join("; "));
    assert!(all_pass, "{details:?}");
}

/// Criterion 6: analytic directional first/second derivatives agree with
/// finite differences of t -> potential(phi + t psi) to 1e-6 / 1e-4 over 500
/// random cases per generator; for exp the derivative density is a
/// probability vector to 1e-12.
#[test]
fn criterion_6_derivative_consistency() {
    let tol = tight();
    let mut worst_first: f64 = 0.0;
    let mut worst_second: f64 = 0.0;
    let mut failures = Vec::new();
    for (row, f) in table_catalog().iter().zip(table_generators()) {
        let (lo, hi) = f.domain().interior_band(0.8);
        let scale = ((hi - lo) / 10.0).max(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0xd1f);
        for _ in 0..500 {
            let n = rng.random_range(2..=4);
            let d = random_distribution(&mut rng, lo, hi, n);
            let psi: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (first, second) = directional_derivatives(&f, &d, &psi, &tol).unwrap();
            let lambda_at = |s: f64| {
                d.shifted(&psi, s)
                    .and_then(|shifted| eval_potential(&f, &shifted, &tol))
                    .unwrap_or(f64::NAN)
            };
            let fd1 = differentiate_fd(lambda_at, 0.0, DerivOrder::First, 1e-4 * scale).unwrap();
            let fd2 = differentiate_fd(lambda_at, 0.0, DerivOrder::Second, 1e-3 * scale).unwrap();
            let e1 = (first - fd1).abs();
            let e2 = (second - fd2).abs();
            worst_first = worst_first.max(e1);
            worst_second = worst_second.max(e2);
            if e1 > 1e-6 || e2 > 1e-4 {
                failures.push(format!("{}: first {e1:e}, second {e2:e}", row.label));
            }
        }
    }

    // Gibbs normalization for the exponential generator.
    let exp = generator("exp(x)", -10.0, 10.0);
    let mut worst_norm: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x61bb5);
    for _ in 0..500 {
        let n = rng.random_range(2..=5);
        let d = random_distribution(&mut rng, -8.0, 8.0, n);
        let rho = derivative_density(&exp, &d, &tol).unwrap();
        let norm: f64 = d.atoms().iter().zip(&rho).map(|(a, r)| a.p * r).sum();
        worst_norm = worst_norm.max((norm - 1.0).abs());
    }
    if worst_norm > 1e-12 {
        failures.push(format!("gibbs normalization residual {worst_norm:e}"));
    }

    let pass = failures.is_empty();
    report(
        "6 (derivative consistency)",
        pass,
        &format!(
            "worst first {worst_first:.3e} (1e-6), worst second {worst_second:.3e} (1e-4), gibbs {worst_norm:.3e} (1e-12)"
        ),
    );
    assert!(pass, "{failures:?}");
}

/// Criterion 7: internality, affine invariance, and monotonicity of the
/// potential each pass 10^3 randomized trials per catalog generator.
#[test]
fn criterion_7_functional_invariants() {
    let tol = tight();
    let mut worst_internality: f64 = 0.0;
    let mut worst_affine: f64 = 0.0;
    let mut worst_monotonicity: f64 = 0.0;
    let mut failures = Vec::new();

    for (row, f) in table_catalog().iter().zip(table_generators()) {
        let (lo, hi) = f.domain().interior_band(0.8);
        let headroom = (f.domain().clamped().1 - hi).clamp(1e-3, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x7ab);

        for _ in 0..1000 {
            let n = rng.random_range(2..=5);
            let d = random_distribution(&mut rng, lo, hi, n);
            let lambda = eval_potential(&f, &d, &tol).unwrap();
            worst_internality =
                worst_internality.max((d.min_x() - lambda).max(lambda - d.max_x()).max(0.0));
        }
        for _ in 0..1000 {
            let a = rng.random_range(0.2..4.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
            let b = rng.random_range(-5.0..5.0);
            let imaged = f.affine_image(a, b).unwrap();
            let d = random_distribution(&mut rng, lo, hi, 3);
            let base = eval_potential(&f, &d, &tol).unwrap();
            let via = eval_potential(&imaged, &d, &tol).unwrap();
            worst_affine = worst_affine.max((base - via).abs());
        }
        for _ in 0..1000 {
            let n = rng.random_range(2..=4);
            let d = random_distribution(&mut rng, lo, hi, n);
            let bumps: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..headroom)).collect();
            let raised = d.shifted(&bumps, 1.0).unwrap();
            let before = eval_potential(&f, &d, &tol).unwrap();
            let after = eval_potential(&f, &raised, &tol).unwrap();
            worst_monotonicity = worst_monotonicity.max((before - after).max(0.0));
        }
        if worst_internality > 1e-9 || worst_affine > 1e-8 || worst_monotonicity > 1e-9 {
            failures.push(format!(
                "{}: internality {worst_internality:e}, affine {worst_affine:e}, monotonicity {worst_monotonicity:e}",
                row.label
            ));
        }
    }

    let pass = failures.is_empty();
    report(
        "7 (functional invariants)",
        pass,
        &format!(
            "worst internality {worst_internality:.3e} (1e-9), affine {worst_affine:.3e} (1e-8), monotonicity {worst_monotonicity:.3e} (1e-9)"
        ),
    );
    assert!(pass, "{failures:?}");
}

/// Criterion 8: H-superadditivity holds to -1e-7 slack over 10^3 random
/// (y0, y1, p0) draws for every convex-classified catalog generator.
#[test]
fn criterion_8_h_superadditivity() {
    let tol = tight();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut convex_count = 0;
    for (row, f) in table_catalog().iter().zip(table_generators()) {
        if !matches!(row.expected_type, PotentialType::A | PotentialType::B) {
            continue;
        }
        convex_count += 1;
        let (lo, hi) = f.domain().interior_band(0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x5ad);
        for _ in 0..1000 {
            let x0 = rng.random_range(lo..hi);
            let x1 = rng.random_range(lo..hi);
            let p0 = rng.random_range(0.1..0.9);
            let y0 = f.value(x0).unwrap();
            let y1 = f.value(x1).unwrap();
            let y = p0 * y0 + (1.0 - p0) * y1;
            let h_y = fpot::criteria::compute_big_h(&f, y, &tol).unwrap();
            let h_y0 = fpot::criteria::compute_big_h(&f, y0, &tol).unwrap();
            let h_y1 = fpot::criteria::compute_big_h(&f, y1, &tol).unwrap();
            if h_y.is_infinite() || h_y0.is_infinite() || h_y1.is_infinite() {
                continue;
            }
            let breach = p0 * h_y0 + (1.0 - p0) * h_y1 - h_y;
            worst = worst.max(breach);
            if breach > 1e-7 {
                failures.push(format!("{}: breach {breach:e}", row.label));
                break;
            }
        }
    }
    let pass = failures.is_empty() && convex_count == 4;
    report(
        "8 (H superadditivity)",
        pass,
        &format!("worst breach {worst:.3e} (limit 1e-7) over {convex_count} convex generators"),
    );
    assert!(pass, "{failures:?}");
}
