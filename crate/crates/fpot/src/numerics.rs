//! Numerical foundation: open intervals, tolerances, adaptive Gauss-Legendre
//! quadrature, Richardson-extrapolated finite differences, and guaranteed
//! inversion of monotone functions.
//!
//! Everything here is a pure function of its inputs; values are immutable
//! after construction and safe to share across threads.

use once_cell::sync::Lazy;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Half-width of the finite window used when a sweep must truncate an
/// infinite interval endpoint.
pub const SWEEP_WINDOW: f64 = 50.0;

/// Open interval of the real line. Endpoints may be infinite; membership is
/// strict at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// Requires `lo < hi` strictly. Either endpoint may be infinite.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidInput("interval endpoint is NaN".into()));
        }
        if lo >= hi {
            return Err(Error::InvalidInput(format!(
                "interval requires lo < hi, got ({lo}, {hi})"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// The whole real line.
    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Strict membership test.
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    fn endpoint_margin(e: f64) -> f64 {
        1e-9f64.max(1e-9 * e.abs())
    }

    /// Finite closed working range: finite endpoints are pulled inward by
    /// `max(1e-9, 1e-9*|endpoint|)`, infinite endpoints are truncated to the
    /// sweep window. The result is guaranteed nonempty.
    pub fn clamped(&self) -> (f64, f64) {
        let mut a = if self.lo.is_finite() {
            self.lo + Self::endpoint_margin(self.lo)
        } else {
            -SWEEP_WINDOW
        };
        let mut b = if self.hi.is_finite() {
            self.hi - Self::endpoint_margin(self.hi)
        } else {
            SWEEP_WINDOW
        };
        // Window missed a half-line that starts beyond it; slide the
        // truncated side instead.
        if a >= b {
            if self.hi.is_finite() {
                a = b - 2.0 * SWEEP_WINDOW;
                a = a.max(self.lo + Self::endpoint_margin(self.lo.max(-1e300)));
            } else {
                b = a + 2.0 * SWEEP_WINDOW;
            }
        }
        (a, b)
    }

    /// Uniform grid of `n >= 2` points over the clamped range, endpoints
    /// included.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        let (a, b) = self.clamped();
        (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Central sub-range covering `fraction` of the clamped width, e.g.
    /// `0.8` keeps the middle 80%.
    pub fn interior_band(&self, fraction: f64) -> (f64, f64) {
        let (a, b) = self.clamped();
        let pad = (b - a) * (1.0 - fraction.clamp(0.0, 1.0)) / 2.0;
        (a + pad, b - pad)
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        // JSON has no literal for infinity; encode unbounded ends as strings.
        fn end(v: f64) -> serde_json::Value {
            if v.is_finite() {
                serde_json::json!(v)
            } else if v > 0.0 {
                serde_json::json!("inf")
            } else {
                serde_json::json!("-inf")
            }
        }
        let mut s = serializer.serialize_struct("Interval", 2)?;
        s.serialize_field("lo", &end(self.lo))?;
        s.serialize_field("hi", &end(self.hi))?;
        s.end()
    }
}

/// Accuracy targets shared by quadrature, inversion, and verdicts.
///
/// `decision_band` is the dead zone within which a sign or curvature probe is
/// treated as "too close to call" rather than forced to a verdict.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub decision_band: f64,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, decision_band: f64) -> Result<Self> {
        for (name, v) in [
            ("abs_tol", abs_tol),
            ("rel_tol", rel_tol),
            ("decision_band", decision_band),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if decision_band <= abs_tol {
            return Err(Error::InvalidInput(format!(
                "decision_band ({decision_band}) must exceed abs_tol ({abs_tol})"
            )));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            decision_band,
        })
    }

    /// Tolerance actually required of a quantity with magnitude `scale`.
    pub fn slack(&self, scale: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * scale.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            decision_band: 1e-7,
        }
    }
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

const GAUSS_ORDER: usize = 15;
const MAX_PANELS: usize = 1 << 16;

/// Gauss-Legendre nodes and weights on [-1, 1], found by Newton iteration on
/// the Legendre recurrence.
static GAUSS_RULE: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| gauss_legendre(GAUSS_ORDER));

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let next = ((2 * k + 1) as f64 * x * p - k as f64 * p_prev) / (k + 1) as f64;
        p_prev = p;
        p = next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..64 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gauss_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<f64> {
    let (nodes, weights) = (&GAUSS_RULE.0, &GAUSS_RULE.1);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (&t, &w) in nodes.iter().zip(weights) {
        let x = mid + half * t;
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::EvalFailure {
                x,
                what: "integrand returned a non-finite value".into(),
            });
        }
        acc += w * v;
    }
    Ok(acc * half)
}

/// Adaptive quadrature of `f` over `[a, b]` by panel bisection with a
/// fixed-order Gauss-Legendre rule; the error estimate of a panel is the
/// discrepancy against its two halves. Antisymmetric under swapping `a`, `b`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!(
            "integration bounds must be finite, got [{a}, {b}]"
        )));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let rough = gauss_panel(&f, lo, hi)?;
    let target = tol.slack(rough);

    // Stack of (lo, hi, whole-panel estimate, local error budget).
    let mut stack = vec![(lo, hi, rough, target)];
    let mut total = 0.0;
    let mut err_total = 0.0;
    let mut panels = 0usize;

    while let Some((a, b, whole, budget)) = stack.pop() {
        panels += 1;
        if panels > MAX_PANELS {
            // Flush what remains at its current resolution and report.
            let mut estimate = total + whole;
            for &(_, _, w, _) in &stack {
                estimate += w;
            }
            return Err(Error::Accuracy {
                estimate: sign * estimate,
                error: err_total + budget,
                requested: target,
            });
        }
        let mid = 0.5 * (a + b);
        let left = gauss_panel(&f, a, mid)?;
        let right = gauss_panel(&f, mid, b)?;
        let refined = left + right;
        let err = (whole - refined).abs();
        let width_exhausted = (b - a) <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0);
        if err <= budget || width_exhausted {
            total += refined;
            err_total += err;
        } else {
            stack.push((a, mid, left, 0.5 * budget));
            stack.push((mid, b, right, 0.5 * budget));
        }
    }
    Ok(sign * total)
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Which derivative `differentiate_fd` estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    First,
    Second,
}

/// Step balancing truncation against round-off: eps^(1/3) scaling for first
/// derivatives, eps^(1/4) for second, both relative to `max(1, |x|)`.
pub fn default_step(x: f64, order: DerivOrder) -> f64 {
    let scale = x.abs().max(1.0);
    match order {
        DerivOrder::First => f64::EPSILON.powf(1.0 / 3.0) * scale,
        DerivOrder::Second => f64::EPSILON.powf(0.25) * scale,
    }
}

/// Central-difference derivative estimate with one Richardson extrapolation
/// step (error O(step^4) for smooth functions). Pass `step <= 0` to use
/// [`default_step`].
pub fn differentiate_fd<F: Fn(f64) -> f64>(
    f: F,
    x: f64,
    order: DerivOrder,
    step: f64,
) -> Result<f64> {
    let h = if step > 0.0 {
        step
    } else {
        default_step(x, order)
    };
    let sample = |t: f64| -> Result<f64> {
        let v = f(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::EvalFailure {
                x: t,
                what: "non-finite sample in finite difference".into(),
            })
        }
    };
    match order {
        DerivOrder::First => {
            let diff =
                |h: f64| -> Result<f64> { Ok((sample(x + h)? - sample(x - h)?) / (2.0 * h)) };
            let coarse = diff(h)?;
            let fine = diff(0.5 * h)?;
            Ok((4.0 * fine - coarse) / 3.0)
        }
        DerivOrder::Second => {
            let fx = sample(x)?;
            let diff = |h: f64| -> Result<f64> {
                Ok((sample(x + h)? - 2.0 * fx + sample(x - h)?) / (h * h))
            };
            let coarse = diff(h)?;
            let fine = diff(0.5 * h)?;
            Ok((4.0 * fine - coarse) / 3.0)
        }
    }
}

// ---------------------------------------------------------------------------
// Monotone inversion
// ---------------------------------------------------------------------------

/// Solve `f(x) = y` for strictly monotone `f` by bracketing bisection.
pub fn invert_monotone<F: Fn(f64) -> f64>(
    f: F,
    y: f64,
    domain: &Interval,
    tol: &Tolerance,
) -> Result<f64> {
    invert_impl(&f, None::<&fn(f64) -> f64>, y, domain, tol)
}

/// Like [`invert_monotone`], refining the bracket with safeguarded Newton
/// steps from `df`.
pub fn invert_monotone_with_derivative<F, D>(
    f: F,
    df: D,
    y: f64,
    domain: &Interval,
    tol: &Tolerance,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    invert_impl(&f, Some(&df), y, domain, tol)
}

fn finite_eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::EvalFailure {
            x,
            what: "non-finite value while inverting".into(),
        })
    }
}

fn invert_impl<F, D>(
    f: &F,
    df: Option<&D>,
    y: f64,
    domain: &Interval,
    tol: &Tolerance,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if !y.is_finite() {
        return Err(Error::InvalidInput(format!(
            "inversion target {y} not finite"
        )));
    }
    let (mut a, mut b) = domain.clamped();
    let mut fa = finite_eval(f, a)?;
    let mut fb = finite_eval(f, b)?;

    // Grow the window geometrically over unbounded ends until y is bracketed.
    let mut width = b - a;
    for _ in 0..64 {
        if y >= fa.min(fb) && y <= fa.max(fb) {
            break;
        }
        let mut grew = false;
        if !domain.lo().is_finite() && width < 1e12 {
            a -= width;
            fa = finite_eval(f, a)?;
            grew = true;
        }
        if !domain.hi().is_finite() && width < 1e12 {
            b += width;
            fb = finite_eval(f, b)?;
            grew = true;
        }
        if !grew {
            break;
        }
        width = b - a;
    }

    let slack = tol.slack(y);
    let (range_lo, range_hi) = (fa.min(fb), fa.max(fb));

    // Coarse scan: detects direction reversals and narrows the bracket. This
    // runs before the range verdict so that a non-monotone function is
    // reported as such rather than as an unattainable target.
    let increasing = fb >= fa;
    const SCAN: usize = 8;
    let mut prev_x = a;
    let mut prev_v = fa;
    let wobble = 1e-12 * (range_hi - range_lo).abs().max(f64::MIN_POSITIVE);
    let mut lo_x = a;
    let mut lo_v = fa;
    let mut hi_x = b;
    let mut hi_v = fb;
    for i in 1..=SCAN {
        let x = a + (b - a) * i as f64 / SCAN as f64;
        let v = if i == SCAN { fb } else { finite_eval(f, x)? };
        let reversed = if increasing {
            v < prev_v - wobble
        } else {
            v > prev_v + wobble
        };
        if reversed {
            return Err(Error::MonotonicityViolation { x0: prev_x, x1: x });
        }
        let before = if increasing { v <= y } else { v >= y };
        if before {
            lo_x = x;
            lo_v = v;
        } else if hi_x == b || x < hi_x {
            hi_x = x;
            hi_v = v;
        }
        prev_x = x;
        prev_v = v;
    }
    if y < range_lo || y > range_hi {
        // Accept targets a hair outside the attainable range.
        if y >= range_lo - slack && y <= range_hi + slack {
            return Ok(if (y - fa).abs() <= (y - fb).abs() {
                a
            } else {
                b
            });
        }
        return Err(Error::OutOfRange {
            y,
            lo: range_lo,
            hi: range_hi,
        });
    }
    if lo_x > hi_x {
        // Scan samples straddled y in reverse order; fall back to full range.
        lo_x = a;
        lo_v = fa;
        hi_x = b;
        hi_v = fb;
    }

    // Bisection, optionally accelerated by Newton from the better endpoint.
    // When the requested slack is below what evaluation noise permits, the
    // loop keeps polishing until the residual stagnates or the bracket
    // collapses, so the returned point is as good as the data allows.
    let (mut a, mut b) = (lo_x, hi_x);
    let (mut best_x, mut best_v) = if (lo_v - y).abs() <= (hi_v - y).abs() {
        (lo_x, lo_v)
    } else {
        (hi_x, hi_v)
    };
    let mut stagnant = 0usize;
    for _ in 0..200 {
        if (best_v - y).abs() <= slack {
            return Ok(best_x);
        }
        if (b - a) <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            return Ok(best_x);
        }
        if stagnant > 24 {
            return Ok(best_x);
        }
        let mut x = 0.5 * (a + b);
        if let Some(df) = df {
            let d = df(best_x);
            if d.is_finite() && d != 0.0 {
                let candidate = best_x - (best_v - y) / d;
                if candidate > a && candidate < b {
                    x = candidate;
                }
            }
        }
        let v = finite_eval(f, x)?;
        if (v - y).abs() < (best_v - y).abs() {
            best_x = x;
            best_v = v;
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        let below = if increasing { v <= y } else { v >= y };
        if below {
            a = x;
        } else {
            b = x;
        }
    }
    Ok(best_x)
}
