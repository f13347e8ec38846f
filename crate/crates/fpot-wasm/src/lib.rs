//! Browser bindings for the interactive demo page. Every function takes
//! plain strings and numbers and returns a JSON string with either the
//! result or an `error` field, so the page never has to unwind exceptions
//! across the boundary.

use fpot::criteria::{classify_potential, compute_h};
use fpot::generator::{generate_f, roundtrip_h, HSpec};
use fpot::means::{eval_potential, GeneratorFunction, WeightedDistribution};
use fpot::{Interval, Tolerance};
use wasm_bindgen::prelude::wasm_bindgen;

fn error_json(message: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": message.to_string() }).to_string()
}

/// Classify the potential generated by `f_source` on `(lo, hi)` and sample
/// the curves of `f` and `h` for plotting. Non-finite `h` samples serialize
/// as `null`.
#[wasm_bindgen]
pub fn classify(f_source: &str, lo: f64, hi: f64, samples: usize) -> String {
    let tol = Tolerance::default();
    let run = || -> fpot::Result<String> {
        let domain = Interval::new(lo, hi)?;
        let f = GeneratorFunction::from_expr_source(f_source, domain)?;
        let report = classify_potential(&f, samples.clamp(16, 512), &tol)?;
        let points: Vec<serde_json::Value> = report
            .grid
            .iter()
            .map(|&x| {
                let jet = f.jet(x)?;
                let h = compute_h(&f, x, &tol)?;
                Ok(serde_json::json!([x, jet.value, h]))
            })
            .collect::<fpot::Result<_>>()?;
        let mut doc = serde_json::to_value(&report).expect("report serializes");
        doc["points"] = serde_json::Value::Array(points);
        Ok(doc.to_string())
    };
    run().unwrap_or_else(error_json)
}

/// Reconstruct `f` from `h_source` on `(lo, hi)` with gauge `(a, b)` and
/// return sampled `(x, f, f', f'')` rows plus the round-trip residual.
/// Pass a non-finite `x0` to use the default anchor.
#[wasm_bindgen]
pub fn generate(
    h_source: &str,
    lo: f64,
    hi: f64,
    x0: f64,
    a: f64,
    b: f64,
    samples: usize,
) -> String {
    let tol = Tolerance::default();
    let run = || -> fpot::Result<String> {
        let domain = Interval::new(lo, hi)?;
        let h = HSpec::from_source(h_source, domain)?;
        let anchor = if x0.is_finite() { x0 } else { h.default_x0() };
        let f = generate_f(&h, anchor, a, b, &tol)?;
        let rows = f.sample_table(samples.clamp(16, 512))?;
        let residual = roundtrip_h(&h, anchor, a, b, 64)?;
        Ok(serde_json::json!({
            "h": h_source,
            "x0": anchor,
            "A": a,
            "B": b,
            "roundtrip_max_rel_error": residual,
            "samples": rows,
        })
        .to_string())
    };
    run().unwrap_or_else(error_json)
}

/// Evaluate the potential of inline atoms `"x:p,x:p,..."` under the
/// generator `f_source` on `(lo, hi)`.
#[wasm_bindgen]
pub fn eval_mean(f_source: &str, atoms: &str, lo: f64, hi: f64) -> String {
    let tol = Tolerance::default();
    let run = || -> fpot::Result<String> {
        let pairs: fpot::Result<Vec<(f64, f64)>> = atoms
            .split(',')
            .map(|chunk| {
                let (x, p) = chunk.trim().split_once(':').ok_or_else(|| {
                    fpot::Error::InvalidInput(format!("atom `{chunk}` is not of the form x:p"))
                })?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| fpot::Error::InvalidInput(format!("`{s}` is not a number")))
                };
                Ok((parse(x)?, parse(p)?))
            })
            .collect();
        let dist = WeightedDistribution::from_pairs(&pairs?)?;
        let domain = Interval::new(lo, hi)?;
        let f = GeneratorFunction::from_expr_source(f_source, domain)?;
        let lambda = eval_potential(&f, &dist, &tol)?;
        Ok(serde_json::json!({
            "function": f.label(),
            "atoms": dist,
            "lambda": lambda,
        })
        .to_string())
    };
    run().unwrap_or_else(error_json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_returns_type_and_points() {
        let out = classify("exp(x)", -3.0, 3.0, 64);
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(doc["potential_type"], "a");
        assert_eq!(doc["points"].as_array().unwrap().len(), 64);
    }

    #[test]
    fn classify_reports_errors_as_json() {
        let out = classify("frob(x)", -1.0, 1.0, 64);
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(doc["error"]
            .as_str()
            .unwrap()
            .contains("unknown identifier"));
    }

    #[test]
    fn generate_samples_match_log() {
        let out = generate("-x", 0.1, 10.0, 1.0, 1.0, 0.0, 64);
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(doc["roundtrip_max_rel_error"].as_f64().unwrap() <= 1e-5);
        for row in doc["samples"].as_array().unwrap() {
            let x = row[0].as_f64().unwrap();
            let f = row[1].as_f64().unwrap();
            assert!((f - x.ln()).abs() <= 1e-6);
        }
    }

    #[test]
    fn generate_uses_default_anchor_for_nan() {
        let out = generate("1", -2.0, 2.0, f64::NAN, 1.0, 0.0, 32);
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((doc["x0"].as_f64().unwrap()).abs() < 1e-6);
    }

    #[test]
    fn eval_mean_geometric() {
        let out = eval_mean("ln(x)", "1:0.5, 4:0.5", 0.5, 5.0);
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((doc["lambda"].as_f64().unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn eval_mean_rejects_malformed_atoms() {
        let out = eval_mean("x", "1;0.5", -1.0, 2.0);
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(doc["error"].as_str().is_some());
    }
}
