//! The curvature criterion for potentials: `h = f'/f''` and its companion
//! `H` on the image interval, numerical curvature classification, the
//! four-type verdict, the slope identity `H'(f(x)) - h'(x) = 1`, and the
//! inverse-generator duality.
//!
//! Type grid (direction of `f`, sign and curvature of `h`):
//!
//! | type | f          | h                   | potential |
//! |------|------------|---------------------|-----------|
//! | a    | increasing | positive, concave   | convex    |
//! | b    | decreasing | positive, concave   | convex    |
//! | c    | decreasing | negative, convex    | concave   |
//! | d    | increasing | negative, convex    | concave   |
//!
//! An identically infinite `h` (affine `f`) makes the potential linear.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Jet2;
use crate::means::{Direction, GeneratorFunction, JetFn};
use crate::numerics::{invert_monotone_with_derivative, Interval, Tolerance};

/// Verdict of a numerical curvature probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureTag {
    Convex,
    Concave,
    Affine,
    Neither,
    Inconclusive,
}

/// A chord probe that strictly violates one curvature direction:
/// `lhs = f(θx₀ + (1-θ)x₁)` against `rhs = θf(x₀) + (1-θ)f(x₁)`.
/// Re-evaluating the stored points reproduces the violation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JensenViolation {
    pub x0: f64,
    pub x1: f64,
    pub theta: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Curvature verdict with re-checkable witnesses; both witnesses are present
/// exactly when the tag is `Neither`.
#[derive(Debug, Clone, Serialize)]
pub struct Curvature {
    pub tag: CurvatureTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convexity_violation: Option<JensenViolation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concavity_violation: Option<JensenViolation>,
}

impl Curvature {
    fn plain(tag: CurvatureTag) -> Self {
        Self {
            tag,
            convexity_violation: None,
            concavity_violation: None,
        }
    }

    /// Concave in the weak sense that the type grid needs: strictly concave
    /// or affine.
    pub fn admits_concave(&self) -> bool {
        matches!(self.tag, CurvatureTag::Concave | CurvatureTag::Affine)
    }

    pub fn admits_convex(&self) -> bool {
        matches!(self.tag, CurvatureTag::Convex | CurvatureTag::Affine)
    }
}

/// Sign pattern of `h` over the sample grid. `Infinite` is the affine
/// alternative (`f'' ≈ 0` everywhere, `h ≡ ±∞`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HSign {
    Positive,
    Negative,
    Infinite,
    Mixed,
}

/// The four potential types plus the degenerate outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialType {
    A,
    B,
    C,
    D,
    Linear,
    Neither,
    Inconclusive,
}

/// Convexity verdict for the potential functional itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialVerdict {
    Convex,
    Concave,
    Linear,
    Neither,
    Inconclusive,
}

impl PotentialType {
    pub fn verdict(self) -> PotentialVerdict {
        match self {
            PotentialType::A | PotentialType::B => PotentialVerdict::Convex,
            PotentialType::C | PotentialType::D => PotentialVerdict::Concave,
            PotentialType::Linear => PotentialVerdict::Linear,
            PotentialType::Neither => PotentialVerdict::Neither,
            PotentialType::Inconclusive => PotentialVerdict::Inconclusive,
        }
    }
}

/// Full classification output, serializable with a reproducibility header.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub tolerances: Tolerance,
    pub grid_n: usize,
    pub f_label: String,
    pub domain: Interval,
    pub f_direction: Direction,
    pub f_curvature: Curvature,
    pub h_sign: HSign,
    pub h_curvature: Curvature,
    pub potential_type: PotentialType,
    pub potential_verdict: PotentialVerdict,
    /// Sample abscissas the verdicts were computed on.
    pub grid: Vec<f64>,
}

impl ClassificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes infallibly")
    }
}

/// `h(x) = f'(x)/f''(x)`. Returns `±∞` (sign of `f'`) when
/// `|f''| <= decision_band·|f'|`, the affine alternative.
pub fn compute_h(f: &GeneratorFunction, x: f64, tol: &Tolerance) -> Result<f64> {
    let jet = f.jet(x)?;
    h_from_jet(jet, x, tol)
}

fn h_from_jet(jet: Jet2, x: f64, tol: &Tolerance) -> Result<f64> {
    if jet.d1 == 0.0 {
        return Err(Error::DerivativeDegenerate { x });
    }
    if jet.d2.abs() <= tol.decision_band * jet.d1.abs() {
        return Ok(if jet.d1 > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        });
    }
    Ok(jet.d1 / jet.d2)
}

/// `H(y) = f'(x)²/f''(x)` at `x = f⁻¹(y)`, defined on `J = f(I)`.
pub fn compute_big_h(f: &GeneratorFunction, y: f64, tol: &Tolerance) -> Result<f64> {
    let value = |x: f64| f.jet_unchecked(x).map_or(f64::NAN, |j| j.value);
    let slope = |x: f64| f.jet_unchecked(x).map_or(f64::NAN, |j| j.d1);
    let x = invert_monotone_with_derivative(value, slope, y, f.domain(), tol)?;
    let jet = f.jet_unchecked(x)?;
    if jet.d1 == 0.0 {
        return Err(Error::DerivativeDegenerate { x });
    }
    if jet.d2.abs() <= tol.decision_band * jet.d1.abs() {
        return Ok(if jet.d2 < 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        });
    }
    Ok(jet.d1 * jet.d1 / jet.d2)
}

/// Ratio of evidence strength to the decision band required before a
/// violation counts as strict.
const STRICT_FACTOR: f64 = 8.0;

/// Classify the curvature of an arbitrary scalar function on a grid of
/// symmetric second differences plus `4·grid_n` randomized chord probes.
///
/// A probe is `θf(x₀) + (1-θ)f(x₁) - f(θx₀+(1-θ)x₁)`; values beyond the
/// decision band count as curvature evidence, and `Neither` requires strict
/// violations in both directions, which it documents with witnesses.
pub fn curvature_classify<F>(
    func: F,
    domain: &Interval,
    grid_n: usize,
    tol: &Tolerance,
) -> Result<Curvature>
where
    F: Fn(f64) -> Result<f64>,
{
    let grid_n = grid_n.max(8);
    let grid = domain.grid(grid_n);
    let values: Vec<f64> = grid.iter().map(|&x| func(x)).collect::<Result<Vec<_>>>()?;

    struct Probe {
        x0: f64,
        x1: f64,
        theta: f64,
        lhs: f64,
        rhs: f64,
        gap: f64,
        band: f64,
    }
    let mut probes: Vec<Probe> = Vec::with_capacity(5 * grid_n);
    let mut push = |x0: f64, x1: f64, theta: f64, v0: f64, v1: f64, mid: f64| {
        let rhs = theta * v0 + (1.0 - theta) * v1;
        let band = tol.decision_band * v0.abs().max(v1.abs()).max(1.0);
        probes.push(Probe {
            x0,
            x1,
            theta,
            lhs: mid,
            rhs,
            gap: rhs - mid,
            band,
        });
    };

    // Uniform symmetric second differences.
    for i in 1..grid.len() - 1 {
        push(
            grid[i - 1],
            grid[i + 1],
            0.5,
            values[i - 1],
            values[i + 1],
            values[i],
        );
    }

    // Randomized chords; uniform grids alone can miss curvature failures
    // squeezed between grid points.
    let (lo, hi) = domain.clamped();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ grid_n as u64);
    for _ in 0..4 * grid_n {
        let x0 = rng.random_range(lo..hi);
        let x1 = rng.random_range(lo..hi);
        if (x1 - x0).abs() < 1e-9 * (hi - lo) {
            continue;
        }
        let theta = rng.random_range(0.05..0.95);
        let xm = theta * x0 + (1.0 - theta) * x1;
        push(x0, x1, theta, func(x0)?, func(x1)?, func(xm)?);
    }

    let mut pos = false;
    let mut neg = false;
    let mut strict_pos: Option<&Probe> = None;
    let mut strict_neg: Option<&Probe> = None;
    for p in &probes {
        if p.gap > p.band {
            pos = true;
            if p.gap > STRICT_FACTOR * p.band
                && strict_pos.is_none_or(|best| p.gap / p.band > best.gap / best.band)
            {
                strict_pos = Some(p);
            }
        } else if p.gap < -p.band {
            neg = true;
            if p.gap < -STRICT_FACTOR * p.band
                && strict_neg.is_none_or(|best| p.gap / p.band < best.gap / best.band)
            {
                strict_neg = Some(p);
            }
        }
    }

    let witness = |p: &Probe| JensenViolation {
        x0: p.x0,
        x1: p.x1,
        theta: p.theta,
        lhs: p.lhs,
        rhs: p.rhs,
    };
    Ok(match (pos, neg) {
        (false, false) => Curvature::plain(CurvatureTag::Affine),
        (true, false) => Curvature::plain(CurvatureTag::Convex),
        (false, true) => Curvature::plain(CurvatureTag::Concave),
        (true, true) => match (strict_pos, strict_neg) {
            (Some(cp), Some(cn)) => Curvature {
                tag: CurvatureTag::Neither,
                // gap < 0 puts the function above its chord: convexity is
                // violated. gap > 0 violates concavity.
                convexity_violation: Some(witness(cn)),
                concavity_violation: Some(witness(cp)),
            },
            _ => Curvature::plain(CurvatureTag::Inconclusive),
        },
    })
}

/// Classify the potential generated by `f`.
///
/// The verdict is derived strictly from the direction of `f` and the sign
/// and curvature of `h`; the curvature of `f` itself is reported alongside
/// as corroborating evidence.
pub fn classify_potential(
    f: &GeneratorFunction,
    grid_n: usize,
    tol: &Tolerance,
) -> Result<ClassificationReport> {
    let grid_n = grid_n.max(8);
    let grid = f.domain().grid(grid_n);
    let jets: Vec<Jet2> = grid
        .iter()
        .map(|&x| f.jet_unchecked(x))
        .collect::<Result<Vec<_>>>()?;

    // Re-verify strict monotonicity on this grid.
    let want_increasing = f.direction() == Direction::Increasing;
    for (i, (&x, jet)) in grid.iter().zip(&jets).enumerate() {
        if jet.d1 == 0.0 {
            return Err(Error::DerivativeDegenerate { x });
        }
        if (jet.d1 > 0.0) != want_increasing {
            let x0 = if i > 0 { grid[i - 1] } else { x };
            return Err(Error::MonotonicityViolation { x0, x1: x });
        }
    }

    let f_curvature = curvature_classify(
        |x| f.jet_unchecked(x).map(|j| j.value),
        f.domain(),
        grid_n,
        tol,
    )?;

    let h_values: Vec<f64> = grid
        .iter()
        .zip(&jets)
        .map(|(&x, &jet)| h_from_jet(jet, x, tol))
        .collect::<Result<Vec<_>>>()?;

    let infinite = h_values.iter().filter(|h| h.is_infinite()).count();
    let h_sign = if infinite == h_values.len() {
        HSign::Infinite
    } else if infinite > 0 {
        HSign::Mixed
    } else if h_values.iter().all(|&h| h > 0.0) {
        HSign::Positive
    } else if h_values.iter().all(|&h| h < 0.0) {
        HSign::Negative
    } else {
        HSign::Mixed
    };

    let h_curvature = match h_sign {
        // Identically infinite h has a convex subgraph in the extended
        // sense; the affine alternative treats it as concave.
        HSign::Infinite => Curvature::plain(CurvatureTag::Concave),
        HSign::Mixed => Curvature::plain(CurvatureTag::Inconclusive),
        _ => curvature_classify(|x| compute_h(f, x, tol), f.domain(), grid_n, tol)?,
    };

    let potential_type = match h_sign {
        HSign::Infinite => PotentialType::Linear,
        HSign::Mixed => PotentialType::Neither,
        HSign::Positive => {
            if h_curvature.admits_concave() {
                if want_increasing {
                    PotentialType::A
                } else {
                    PotentialType::B
                }
            } else if matches!(
                h_curvature.tag,
                CurvatureTag::Convex | CurvatureTag::Neither
            ) {
                PotentialType::Neither
            } else {
                PotentialType::Inconclusive
            }
        }
        HSign::Negative => {
            if h_curvature.admits_convex() {
                if want_increasing {
                    PotentialType::D
                } else {
                    PotentialType::C
                }
            } else if matches!(
                h_curvature.tag,
                CurvatureTag::Concave | CurvatureTag::Neither
            ) {
                PotentialType::Neither
            } else {
                PotentialType::Inconclusive
            }
        }
    };

    Ok(ClassificationReport {
        tool: "fpot",
        version: env!("CARGO_PKG_VERSION"),
        tolerances: *tol,
        grid_n,
        f_label: f.label().to_string(),
        domain: *f.domain(),
        f_direction: f.direction(),
        f_curvature,
        h_sign,
        h_curvature,
        potential_type,
        potential_verdict: potential_type.verdict(),
        grid,
    })
}

/// Maximum residual of the slope identity `H'(f(x)) - h'(x) = 1` over an
/// interior grid, with both slopes taken by central finite differences.
/// `H` is probed at image points `f(x ± δ)`, never by inverting outside the
/// attainable range.
pub fn h_slope_identity_residual(f: &GeneratorFunction, grid_n: usize) -> Result<f64> {
    let tol = Tolerance::default();
    let (lo, hi) = f.domain().interior_band(0.9);
    let inner = Interval::new(lo, hi)?;
    let grid = inner.grid(grid_n.max(8));

    let mut worst: f64 = 0.0;
    for &x in &grid {
        let gap = (x - lo).min(hi - x).max(1e-6);
        let delta =
            crate::numerics::default_step(x, crate::numerics::DerivOrder::First).min(gap / 4.0);

        let jet_m = f.jet_unchecked(x - delta)?;
        let jet_p = f.jet_unchecked(x + delta)?;
        for (jet, at) in [(jet_m, x - delta), (jet_p, x + delta)] {
            if jet.d1 == 0.0 {
                return Err(Error::DerivativeDegenerate { x: at });
            }
            if jet.d2.abs() <= tol.decision_band * jet.d1.abs() {
                return Err(Error::NotApplicable(
                    "slope identity is vacuous for affine generators".into(),
                ));
            }
        }

        let h_m = jet_m.d1 / jet_m.d2;
        let h_p = jet_p.d1 / jet_p.d2;
        let h_slope = (h_p - h_m) / (2.0 * delta);

        // Q(x) = H(f(x)) = f'(x)²/f''(x), so H'(f(x)) = Q'(x)/f'(x).
        let q_m = jet_m.d1 * jet_m.d1 / jet_m.d2;
        let q_p = jet_p.d1 * jet_p.d1 / jet_p.d2;
        let big_h_slope = (q_p - q_m) / (jet_p.value - jet_m.value);

        worst = worst.max((big_h_slope - h_slope - 1.0).abs());
    }
    Ok(worst)
}

/// How the potential types of a generator and its inverse relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// The pair is one of (a,d), (d,a), (b,b), (c,c), (linear,linear).
    Consistent,
    Mismatch,
    /// At least one side could not be classified decisively.
    Inconclusive,
}

/// Outcome of classifying a generator together with its inverse.
#[derive(Debug, Clone, Serialize)]
pub struct DualReport {
    pub type_f: PotentialType,
    pub type_g: PotentialType,
    pub pairing: Pairing,
    /// Max over the image grid of `|H_f(y) + g'(y)/g''(y)|`; `None` for
    /// affine generators where both sides are infinite.
    pub max_duality_residual: Option<f64>,
}

struct InverseJet {
    forward: Arc<dyn JetFn>,
    forward_domain: Interval,
    tol: Tolerance,
}

impl JetFn for InverseJet {
    fn jet(&self, y: f64) -> Result<Jet2> {
        let value = |x: f64| self.forward.jet(x).map_or(f64::NAN, |j| j.value);
        let slope = |x: f64| self.forward.jet(x).map_or(f64::NAN, |j| j.d1);
        let x = invert_monotone_with_derivative(value, slope, y, &self.forward_domain, &self.tol)?;
        let j = self.forward.jet(x)?;
        if j.d1 == 0.0 {
            return Err(Error::DerivativeDegenerate { x });
        }
        // g = f⁻¹: g' = 1/f', g'' = -f''/f'³.
        Ok(Jet2 {
            value: x,
            d1: 1.0 / j.d1,
            d2: -j.d2 / (j.d1 * j.d1 * j.d1),
        })
    }
}

/// Realize `g = f⁻¹` on `J = f(I)` as a generator in its own right.
pub fn inverse_generator(f: &GeneratorFunction, tol: &Tolerance) -> Result<GeneratorFunction> {
    let range = f.range()?;
    GeneratorFunction::from_jet_fn(
        Arc::new(InverseJet {
            forward: f.jet_fn(),
            forward_domain: *f.domain(),
            tol: *tol,
        }),
        range,
        format!("inverse of {}", f.label()),
    )
}

/// Classify `f` and `g = f⁻¹`, check the type pairing, and measure the
/// identity `H_f(y) = -g'(y)/g''(y)` on the image grid.
pub fn classify_dual_pair(
    f: &GeneratorFunction,
    grid_n: usize,
    tol: &Tolerance,
) -> Result<DualReport> {
    let report_f = classify_potential(f, grid_n, tol)?;
    let g = inverse_generator(f, tol)?;
    let report_g = classify_potential(&g, grid_n, tol)?;

    let type_f = report_f.potential_type;
    let type_g = report_g.potential_type;
    let pairing = if type_f == PotentialType::Inconclusive || type_g == PotentialType::Inconclusive
    {
        Pairing::Inconclusive
    } else {
        use PotentialType::*;
        // (Neither, Neither) is forced by contraposition: a convex or
        // concave inverse would classify the forward potential too.
        let consistent = matches!(
            (type_f, type_g),
            (A, D) | (D, A) | (B, B) | (C, C) | (Linear, Linear) | (Neither, Neither)
        );
        if consistent {
            Pairing::Consistent
        } else {
            Pairing::Mismatch
        }
    };

    // Probe y on images of an interior x-grid so no inversion ever lands
    // outside the attainable range.
    let (lo, hi) = f.domain().interior_band(0.9);
    let inner = Interval::new(lo, hi)?;
    let mut residual: Option<f64> = None;
    if type_f != PotentialType::Linear {
        let mut worst: f64 = 0.0;
        for &x in &inner.grid(grid_n.max(8)) {
            let y = f.jet_unchecked(x)?.value;
            let big_h = compute_big_h(f, y, tol)?;
            if big_h.is_infinite() {
                continue;
            }
            let gj = g.jet(y)?;
            if gj.d2 == 0.0 {
                continue;
            }
            worst = worst.max((big_h + gj.d1 / gj.d2).abs());
        }
        residual = Some(worst);
    }

    Ok(DualReport {
        type_f,
        type_g,
        pairing,
        max_duality_residual: residual,
    })
}
