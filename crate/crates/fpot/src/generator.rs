//! Reconstruction of a generator from a prescribed `h`:
//!
//! ```text
//! f(x) = A ∫ₓ₀ˣ exp{ ∫ₓ₀ˢ du/h(u) } ds + B,     A ≠ 0,
//! ```
//!
//! so that `f'(x) = A·exp(∫ₓ₀ˣ du/h)` and `f''(x) = f'(x)/h(x)`. The inner
//! integral is tabulated once on adaptively refined nodes and interpolated
//! by a monotone cubic; the outer integral gets the same treatment. Without
//! the tables every evaluation inside an inversion loop would pay for a
//! double quadrature.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{ExprAst, Jet2};
use crate::means::{GeneratorFunction, JetFn};
use crate::numerics::{integrate_adaptive, Interval, Tolerance};

/// Sign of `h` on its domain; mixed-sign `h` is rejected outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

/// Grid resolution used to validate `h` at construction.
const H_VALIDATION_SAMPLES: usize = 129;

/// A prescribed `h` on an open interval: finite, nonvanishing, and of
/// constant sign on the validation grid.
#[derive(Debug, Clone)]
pub struct HSpec {
    body: ExprAst,
    domain: Interval,
    expected_sign: Sign,
}

impl HSpec {
    /// Validate `h` on the clamped domain grid and record its sign.
    pub fn new(body: ExprAst, domain: Interval) -> Result<Self> {
        let mut sign: Option<Sign> = None;
        for x in domain.grid(H_VALIDATION_SAMPLES) {
            let v = body.eval(x)?;
            if v == 0.0 {
                return Err(Error::SingularH {
                    x,
                    what: "h vanishes".into(),
                });
            }
            let here = if v > 0.0 {
                Sign::Positive
            } else {
                Sign::Negative
            };
            match sign {
                None => sign = Some(here),
                Some(s) if s != here => {
                    return Err(Error::SingularH {
                        x,
                        what: "h flips sign inside the domain".into(),
                    });
                }
                _ => {}
            }
        }
        Ok(Self {
            body,
            domain,
            expected_sign: sign.expect("validation grid is nonempty"),
        })
    }

    pub fn from_source(source: &str, domain: Interval) -> Result<Self> {
        Self::new(crate::expr::parse(source)?, domain)
    }

    /// Like [`HSpec::new`] but additionally demands a particular sign.
    pub fn with_expected_sign(body: ExprAst, domain: Interval, expected: Sign) -> Result<Self> {
        let spec = Self::new(body, domain)?;
        if spec.expected_sign != expected {
            let (lo, _) = domain.clamped();
            return Err(Error::SingularH {
                x: lo,
                what: format!(
                    "h has {:?} sign, expected {:?}",
                    spec.expected_sign, expected
                ),
            });
        }
        Ok(spec)
    }

    pub fn body(&self) -> &ExprAst {
        &self.body
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn expected_sign(&self) -> Sign {
        self.expected_sign
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.body.eval(x)
    }

    /// Default anchor: midpoint of the working range for finite domains,
    /// zero clamped into the range otherwise.
    pub fn default_x0(&self) -> f64 {
        let (lo, hi) = self.domain.clamped();
        if self.domain.lo().is_finite() && self.domain.hi().is_finite() {
            0.5 * (lo + hi)
        } else {
            0.0f64.clamp(lo, hi)
        }
    }
}

// ---------------------------------------------------------------------------
// Monotone cubic table
// ---------------------------------------------------------------------------

/// Cubic Hermite interpolant on sorted nodes with exact node slopes, slope-
/// limited where necessary to preserve monotonicity (Fritsch-Carlson region).
#[derive(Debug, Clone)]
struct CubicTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl CubicTable {
    fn new(xs: Vec<f64>, ys: Vec<f64>, mut slopes: Vec<f64>) -> Self {
        // Fritsch-Carlson limiting: per cell, slopes scaled into the
        // monotonicity region alpha² + beta² <= 9.
        for i in 0..xs.len() - 1 {
            let dx = xs[i + 1] - xs[i];
            let secant = (ys[i + 1] - ys[i]) / dx;
            if secant == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let alpha = slopes[i] / secant;
            let beta = slopes[i + 1] / secant;
            if alpha < 0.0 {
                slopes[i] = 0.0;
            }
            if beta < 0.0 {
                slopes[i + 1] = 0.0;
            }
            let r = alpha * alpha + beta * beta;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                slopes[i] = tau * alpha * secant;
                slopes[i + 1] = tau * beta * secant;
            }
        }
        Self { xs, ys, slopes }
    }

    fn lo(&self) -> f64 {
        self.xs[0]
    }

    fn hi(&self) -> f64 {
        *self.xs.last().expect("table has nodes")
    }

    fn node_count(&self) -> usize {
        self.xs.len()
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let dx = self.xs[i + 1] - self.xs[i];
        let t = ((x - self.xs[i]) / dx).clamp(0.0, 1.0);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i]
            + h10 * dx * self.slopes[i]
            + h01 * self.ys[i + 1]
            + h11 * dx * self.slopes[i + 1]
    }
}

const MAX_TABLE_NODES: usize = 1 << 15;
const MAX_REFINE_DEPTH: usize = 28;

/// Build the antiderivative table `F(x) = ∫_anchor^x w(s) ds` on `[lo, hi]`
/// with `anchor` as an exact node. Cells split until the cubic Hermite
/// prediction of the midpoint value matches direct quadrature.
fn build_antiderivative<W: Fn(f64) -> Result<f64>>(
    w: &W,
    lo: f64,
    hi: f64,
    anchor: f64,
    cell_tol: f64,
) -> Result<CubicTable> {
    let quad_tol = Tolerance {
        abs_tol: (cell_tol * 0.05).max(1e-15),
        rel_tol: 1e-13,
        decision_band: 1.0,
    };

    // Initial partition: uniform plus the anchor.
    let mut seeds: Vec<f64> = (0..=32).map(|i| lo + (hi - lo) * i as f64 / 32.0).collect();
    seeds.push(anchor);
    seeds.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
    seeds.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * (hi - lo));

    // Nodes in order together with the integral over the preceding cell.
    let mut xs: Vec<f64> = vec![seeds[0]];
    let mut increments: Vec<f64> = vec![0.0];
    let mut slopes: Vec<f64> = vec![w(seeds[0])?];

    #[allow(clippy::too_many_arguments)]
    fn refine<W: Fn(f64) -> Result<f64>>(
        w: &W,
        a: f64,
        b: f64,
        wa: f64,
        wb: f64,
        tol: f64,
        depth: usize,
        quad_tol: &Tolerance,
        xs: &mut Vec<f64>,
        increments: &mut Vec<f64>,
        slopes: &mut Vec<f64>,
    ) -> Result<()> {
        if xs.len() > MAX_TABLE_NODES {
            return Err(Error::Accuracy {
                estimate: f64::NAN,
                error: tol,
                requested: tol,
            });
        }
        let mid = 0.5 * (a + b);
        let wm = w(mid)?;
        let i_left = integrate_adaptive(|x| w(x).unwrap_or(f64::NAN), a, mid, quad_tol)?;
        let i_right = integrate_adaptive(|x| w(x).unwrap_or(f64::NAN), mid, b, quad_tol)?;
        let i_cell = i_left + i_right;
        // Hermite prediction of the mid value from cell endpoints alone.
        let predicted = 0.5 * i_cell + 0.125 * (b - a) * (wa - wb);
        if depth >= MAX_REFINE_DEPTH || (predicted - i_left).abs() <= tol {
            xs.push(mid);
            increments.push(i_left);
            slopes.push(wm);
            xs.push(b);
            increments.push(i_right);
            slopes.push(wb);
            return Ok(());
        }
        refine(
            w,
            a,
            mid,
            wa,
            wm,
            0.5 * tol,
            depth + 1,
            quad_tol,
            xs,
            increments,
            slopes,
        )?;
        refine(
            w,
            mid,
            b,
            wm,
            wb,
            0.5 * tol,
            depth + 1,
            quad_tol,
            xs,
            increments,
            slopes,
        )
    }

    for pair in seeds.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let wa = w(a)?;
        let wb = w(b)?;
        refine(
            w,
            a,
            b,
            wa,
            wb,
            cell_tol,
            0,
            &quad_tol,
            &mut xs,
            &mut increments,
            &mut slopes,
        )?;
    }

    // Cumulative sum, then shift so the anchor maps to zero.
    let mut ys = Vec::with_capacity(increments.len());
    let mut acc = crate::means::KahanSum::default();
    for inc in &increments {
        acc.add(*inc);
        ys.push(acc.value());
    }
    let anchor_idx = xs
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - anchor)
                .abs()
                .partial_cmp(&(*b - anchor).abs())
                .expect("finite nodes")
        })
        .map(|(i, _)| i)
        .expect("table has nodes");
    let shift = ys[anchor_idx];
    for y in &mut ys {
        *y -= shift;
    }
    Ok(CubicTable::new(xs, ys, slopes))
}

// ---------------------------------------------------------------------------
// Generated generator
// ---------------------------------------------------------------------------

/// A generator reconstructed from `h`, evaluable with jets:
/// `f = A·outer + B`, `f' = A·exp(inner)`, `f'' = f'/h`.
#[derive(Clone)]
pub struct GeneratedF {
    h: Arc<HSpec>,
    x0: f64,
    scale_a: f64,
    offset_b: f64,
    inner: Arc<CubicTable>,
    outer: Arc<CubicTable>,
    domain: Interval,
}

impl std::fmt::Debug for GeneratedF {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratedF")
            .field("h", &self.h.body().to_string())
            .field("x0", &self.x0)
            .field("a", &self.scale_a)
            .field("b", &self.offset_b)
            .field("domain", &self.domain)
            .field("inner_nodes", &self.inner.node_count())
            .finish()
    }
}

/// Evaluate the quadrature formula for `f` given `h`, the anchor `x0`, and
/// the affine gauge `(a, b)`; `f(x0) = b` and `f'(x0) = a`.
pub fn generate_f(h: &HSpec, x0: f64, a: f64, b: f64, tol: &Tolerance) -> Result<GeneratedF> {
    if a == 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!(
            "generation requires finite a != 0 and finite b, got a={a}, b={b}"
        )));
    }
    let (lo, hi) = h.domain().clamped();
    if !(x0 > lo && x0 < hi) {
        return Err(Error::InvalidInput(format!(
            "anchor x0={x0} must lie inside the working range ({lo}, {hi})"
        )));
    }

    let cell_tol = tol.abs_tol.max(1e-13) * 0.25;
    let body = h.body().clone();
    let inner = build_antiderivative(
        &|x| {
            let v = body.eval(x)?;
            if v == 0.0 {
                return Err(Error::SingularH {
                    x,
                    what: "h vanishes inside the domain".into(),
                });
            }
            Ok(1.0 / v)
        },
        lo,
        hi,
        x0,
        cell_tol,
    )?;

    let inner_ref = &inner;
    let outer = build_antiderivative(&|x| Ok(inner_ref.eval(x).exp()), lo, hi, x0, cell_tol)?;

    // The generated domain is the h domain shrunk by the endpoint margin; no
    // analytic continuation past the tabulated range.
    let domain = Interval::new(lo, hi)?;
    Ok(GeneratedF {
        h: Arc::new(h.clone()),
        x0,
        scale_a: a,
        offset_b: b,
        inner: Arc::new(inner),
        outer: Arc::new(outer),
        domain,
    })
}

impl GeneratedF {
    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn scale(&self) -> f64 {
        self.scale_a
    }

    pub fn offset(&self) -> f64 {
        self.offset_b
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn h(&self) -> &HSpec {
        &self.h
    }

    pub fn jet(&self, x: f64) -> Result<Jet2> {
        let lo = self.inner.lo();
        let hi = self.inner.hi();
        if x < lo - 1e-12 * (hi - lo) || x > hi + 1e-12 * (hi - lo) {
            return Err(Error::OutsideDomain {
                x,
                domain: self.domain.to_string(),
            });
        }
        let x = x.clamp(lo, hi);
        let d1 = self.scale_a * self.inner.eval(x).exp();
        let value = self.scale_a * self.outer.eval(x) + self.offset_b;
        let h_here = self.h.eval(x)?;
        if h_here == 0.0 {
            return Err(Error::SingularH {
                x,
                what: "h vanishes at evaluation point".into(),
            });
        }
        Ok(Jet2 {
            value,
            d1,
            d2: d1 / h_here,
        })
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        Ok(self.jet(x)?.value)
    }

    /// Wrap into a [`GeneratorFunction`] (monotone by construction: `f'`
    /// carries the sign of `A` everywhere).
    pub fn as_generator(&self) -> Result<GeneratorFunction> {
        GeneratorFunction::from_jet_fn(
            Arc::new(self.clone()),
            self.domain,
            format!(
                "generated from h = {} (x0={}, A={}, B={})",
                self.h.body(),
                self.x0,
                self.scale_a,
                self.offset_b
            ),
        )
    }

    /// `(x, f, f', f'')` rows on a uniform grid, ready for CSV export.
    pub fn sample_table(&self, n: usize) -> Result<Vec<[f64; 4]>> {
        self.domain
            .grid(n.max(2))
            .into_iter()
            .map(|x| {
                let j = self.jet(x)?;
                Ok([x, j.value, j.d1, j.d2])
            })
            .collect()
    }
}

impl JetFn for GeneratedF {
    fn jet(&self, x: f64) -> Result<Jet2> {
        GeneratedF::jet(self, x)
    }
}

/// Round-trip check: reconstruct `f` from `h`, recover `h = f'/f''` with the
/// second derivative taken by finite differences of the tabulated `f'`
/// (never through the `f'' = f'/h` shortcut, which would be circular), and
/// report the maximum relative deviation over an interior grid.
pub fn roundtrip_h(h: &HSpec, x0: f64, a: f64, b: f64, grid_n: usize) -> Result<f64> {
    let tol = Tolerance::default();
    let f = generate_f(h, x0, a, b, &tol)?;
    let (lo, hi) = f.domain().interior_band(0.95);
    let inner = Interval::new(lo, hi)?;

    let mut worst: f64 = 0.0;
    for x in inner.grid(grid_n.max(8)) {
        let gap = (x - lo).min(hi - x).max(1e-6);
        let step = (1e-3 * x.abs().max(1.0)).min(gap / 2.0);
        let d1 = |t: f64| f.jet(t).map_or(f64::NAN, |j| j.d1);
        let d2_fd =
            crate::numerics::differentiate_fd(d1, x, crate::numerics::DerivOrder::First, step)?;
        if d2_fd == 0.0 {
            return Err(Error::SingularH {
                x,
                what: "recovered f'' vanished in round trip".into(),
            });
        }
        let h_recovered = f.jet(x)?.d1 / d2_fd;
        let h_true = h.eval(x)?;
        worst = worst.max((h_recovered - h_true).abs() / h_true.abs().max(1e-12));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{classify_potential, PotentialType};
    use crate::means::{eval_potential, WeightedDistribution};
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn hspec(src: &str, lo: f64, hi: f64) -> HSpec {
        HSpec::from_source(src, Interval::new(lo, hi).unwrap()).unwrap()
    }

    #[test]
    fn hspec_rejects_sign_flips_and_zeros() {
        assert!(matches!(
            HSpec::from_source("x", Interval::new(-1.0, 1.0).unwrap()),
            Err(Error::SingularH { .. })
        ));
        assert!(HSpec::from_source("x", Interval::new(0.1, 10.0).unwrap()).is_ok());
        assert_eq!(hspec("-x", 0.1, 10.0).expected_sign(), Sign::Negative);
        assert!(HSpec::with_expected_sign(
            crate::expr::parse("x").unwrap(),
            Interval::new(0.1, 10.0).unwrap(),
            Sign::Negative
        )
        .is_err());
    }

    #[test]
    fn constant_h_reproduces_shifted_exponential() {
        // h = 1, x0 = 0, A = 1, B = 0: f(x) = e^x - 1.
        let f = generate_f(&hspec("1", -2.0, 2.0), 0.0, 1.0, 0.0, &tol()).unwrap();
        assert_abs_diff_eq!(
            f.value(1.0).unwrap(),
            std::f64::consts::E - 1.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(f.value(0.0).unwrap(), 0.0, epsilon = 1e-12);
        let j = f.jet(0.0).unwrap();
        assert_abs_diff_eq!(j.d1, 1.0, epsilon = 1e-10);
        for i in 0..21 {
            let x = -1.9 + 3.8 * i as f64 / 20.0;
            assert_abs_diff_eq!(f.value(x).unwrap(), x.exp() - 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn negative_h_reproduces_log() {
        // h = -u on (0, ∞), x0 = 1: inner = -ln s, f' = 1/x, f = ln x.
        let f = generate_f(&hspec("-x", 0.1, 10.0), 1.0, 1.0, 0.0, &tol()).unwrap();
        assert_abs_diff_eq!(f.value(std::f64::consts::E).unwrap(), 1.0, epsilon = 1e-9);
        for i in 0..21 {
            let x = 0.15 + (9.8 - 0.15) * i as f64 / 20.0;
            assert_abs_diff_eq!(f.value(x).unwrap(), x.ln(), epsilon = 1e-8);
        }
    }

    #[test]
    fn linear_h_reproduces_half_square() {
        // h = u, x0 = 1: inner = ln s, f' = x, f = (x² - 1)/2.
        let f = generate_f(&hspec("x", 0.1, 10.0), 1.0, 1.0, 0.0, &tol()).unwrap();
        assert_abs_diff_eq!(f.value(3.0).unwrap(), 4.0, epsilon = 1e-9);
    }

    #[test]
    fn anchor_gauge_holds() {
        let h = hspec("tanh(x)", 0.1, 3.0);
        let f = generate_f(&h, 1.2, -2.5, 0.75, &tol()).unwrap();
        assert_abs_diff_eq!(f.value(1.2).unwrap(), 0.75, epsilon = 1e-10);
        assert_abs_diff_eq!(f.jet(1.2).unwrap().d1, -2.5, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        let h = hspec("1", -1.0, 1.0);
        assert!(generate_f(&h, 0.0, 0.0, 0.0, &tol()).is_err());
        assert!(generate_f(&h, 5.0, 1.0, 0.0, &tol()).is_err());
    }

    #[test]
    fn roundtrip_closed_forms() {
        assert!(roundtrip_h(&hspec("1", -2.0, 2.0), 0.0, 1.0, 0.0, 64).unwrap() <= 1e-6);
        assert!(roundtrip_h(&hspec("-x", 0.1, 10.0), 1.0, 1.0, 0.0, 64).unwrap() <= 1e-6);
        assert!(roundtrip_h(&hspec("x", 0.1, 10.0), 1.0, 1.0, 0.0, 64).unwrap() <= 1e-6);
    }

    #[test]
    fn roundtrip_tanh_and_classify() {
        let h = hspec("tanh(x)", 0.1, 3.0);
        assert!(roundtrip_h(&h, 1.0, 1.0, 0.0, 64).unwrap() <= 1e-5);
        // tanh is positive and concave there: the generated potential must
        // land in the convex family, type a for increasing f.
        let f = generate_f(&h, 1.0, 1.0, 0.0, &tol()).unwrap();
        let report = classify_potential(&f.as_generator().unwrap(), 48, &tol()).unwrap();
        assert_eq!(report.potential_type, PotentialType::A);
    }

    #[test]
    fn generated_potential_ignores_the_gauge() {
        let h = hspec("tanh(x)", 0.1, 3.0);
        let f1 = generate_f(&h, 1.0, 1.0, 0.0, &tol())
            .unwrap()
            .as_generator()
            .unwrap();
        let f2 = generate_f(&h, 1.0, 3.5, -2.0, &tol())
            .unwrap()
            .as_generator()
            .unwrap();
        let d = WeightedDistribution::from_pairs(&[(0.4, 0.3), (1.8, 0.45), (2.6, 0.25)]).unwrap();
        let l1 = eval_potential(&f1, &d, &tol()).unwrap();
        let l2 = eval_potential(&f2, &d, &tol()).unwrap();
        assert!((l1 - l2).abs() <= 1e-7, "{l1} vs {l2}");
    }

    #[test]
    fn generated_derivative_sign_follows_scale() {
        let h = hspec("-x", 0.1, 10.0);
        for (a, expect_positive) in [(2.0, true), (-0.5, false)] {
            let f = generate_f(&h, 1.0, a, 0.0, &tol()).unwrap();
            for row in f.sample_table(33).unwrap() {
                assert_eq!(row[2] > 0.0, expect_positive, "f' sign at {}", row[0]);
            }
        }
    }

    #[test]
    fn criterion_closure_for_catalog() {
        // Positive concave h lands in {a, b}; negative convex h in {c, d}.
        let convex_family = [("1", -2.0, 2.0), ("tanh(x)", 0.1, 3.0)];
        for (src, lo, hi) in convex_family {
            let h = hspec(src, lo, hi);
            let f = generate_f(&h, h.default_x0(), 1.0, 0.0, &tol()).unwrap();
            let t = classify_potential(&f.as_generator().unwrap(), 48, &tol())
                .unwrap()
                .potential_type;
            assert!(
                matches!(t, PotentialType::A | PotentialType::B),
                "{src}: {t:?}"
            );
        }
        let concave_family = [
            ("-x", 0.1, 10.0),
            ("-tanh(x)/2", 0.1, 3.0),
            ("-sin(2*x)/(3 + cos(2*x))", 0.05, 1.52),
        ];
        for (src, lo, hi) in concave_family {
            let h = hspec(src, lo, hi);
            let f = generate_f(&h, h.default_x0(), 1.0, 0.0, &tol()).unwrap();
            let t = classify_potential(&f.as_generator().unwrap(), 48, &tol())
                .unwrap()
                .potential_type;
            assert!(
                matches!(t, PotentialType::C | PotentialType::D),
                "{src}: {t:?}"
            );
        }
    }

    #[test]
    fn sample_table_is_monotone_in_x_and_f() {
        let h = hspec("tanh(x)", 0.1, 3.0);
        let f = generate_f(&h, 1.0, 1.0, 0.0, &tol()).unwrap();
        let rows = f.sample_table(65).unwrap();
        assert_eq!(rows.len(), 65);
        for pair in rows.windows(2) {
            assert!(pair[1][0] > pair[0][0]);
            assert!(pair[1][1] > pair[0][1], "f must increase with A > 0");
        }
    }
}
