//! Weighted distributions, generator functions, and the potential
//! `f⁻¹(Σ pᵢ f(xᵢ))` together with its first and second directional
//! derivatives, the derivative-measure density, and the cumulant generating
//! function.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{ExprAst, Jet2};
use crate::numerics::{invert_monotone_with_derivative, Interval, Tolerance};

/// One point mass: value `x` carrying probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub p: f64,
}

/// Finite weighted distribution: the simple function taking value `xᵢ` with
/// probability `pᵢ > 0`, `Σ pᵢ = 1` within 1e-12.
///
/// A single atom is a valid (degenerate) distribution; non-degeneracy tests
/// need at least two atoms with distinct values.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightedDistribution {
    atoms: Vec<Atom>,
}

impl WeightedDistribution {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("distribution has no atoms".into()));
        }
        let mut sum = KahanSum::default();
        for (i, a) in atoms.iter().enumerate() {
            if !a.x.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "atom {i} has non-finite value {}",
                    a.x
                )));
            }
            if !a.p.is_finite() || a.p <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "atom {i} has invalid probability {}",
                    a.p
                )));
            }
            sum.add(a.p);
        }
        if (sum.value() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {}, expected 1 within 1e-12",
                sum.value()
            )));
        }
        Ok(Self { atoms })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(x, p)| Atom { x, p }).collect())
    }

    /// Two atoms with probabilities `(p0, 1 - p0)`, the workhorse of
    /// counterexample search.
    pub fn two_point(x0: f64, p0: f64, x1: f64) -> Result<Self> {
        Self::from_pairs(&[(x0, p0), (x1, 1.0 - p0)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn min_x(&self) -> f64 {
        self.atoms.iter().map(|a| a.x).fold(f64::INFINITY, f64::min)
    }

    pub fn max_x(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.x)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The shifted simple function `φ + tψ` over the same partition.
    pub fn shifted(&self, psi: &[f64], t: f64) -> Result<Self> {
        if psi.len() != self.atoms.len() {
            return Err(Error::InvalidInput(format!(
                "direction has {} entries for {} atoms",
                psi.len(),
                self.atoms.len()
            )));
        }
        Self::new(
            self.atoms
                .iter()
                .zip(psi)
                .map(|(a, &d)| Atom {
                    x: a.x + t * d,
                    p: a.p,
                })
                .collect(),
        )
    }

    /// Pointwise convex combination `θ·self + (1-θ)·other`; both arguments
    /// must live over the same partition (equal probabilities).
    pub fn mixed(&self, other: &Self, theta: f64) -> Result<Self> {
        if self.atoms.len() != other.atoms.len() {
            return Err(Error::InvalidInput(
                "cannot mix distributions over different partitions".into(),
            ));
        }
        for (a, b) in self.atoms.iter().zip(&other.atoms) {
            if (a.p - b.p).abs() > 1e-12 {
                return Err(Error::InvalidInput(
                    "cannot mix distributions with different probabilities".into(),
                ));
            }
        }
        Self::new(
            self.atoms
                .iter()
                .zip(&other.atoms)
                .map(|(a, b)| Atom {
                    x: theta * a.x + (1.0 - theta) * b.x,
                    p: a.p,
                })
                .collect(),
        )
    }

    /// Parse the JSON wire form `[{"x": ..., "p": ...}, ...]`, validating
    /// probabilities on load.
    pub fn from_json(text: &str) -> Result<Self> {
        let atoms: Vec<Atom> = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("malformed distribution JSON: {e}")))?;
        Self::new(atoms)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.atoms).expect("atoms serialize infallibly")
    }
}

impl<'de> Deserialize<'de> for WeightedDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let atoms = Vec::<Atom>::deserialize(deserializer)?;
        Self::new(atoms).map_err(serde::de::Error::custom)
    }
}

/// Compensated accumulator; the potential's inner sum must stay accurate for
/// large atom counts because the inversion tolerance is tight.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Anything evaluable with first and second derivatives.
pub trait JetFn: Send + Sync {
    fn jet(&self, x: f64) -> Result<Jet2>;
}

impl JetFn for ExprAst {
    fn jet(&self, x: f64) -> Result<Jet2> {
        self.eval_jet(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Number of samples used to certify strict monotonicity at construction.
const MONOTONE_SAMPLES: usize = 64;

/// A generator: an evaluable scalar function with first and second
/// derivatives, strictly monotone on its open domain. Monotonicity and the
/// direction are certified by a sampled check at construction.
#[derive(Clone)]
pub struct GeneratorFunction {
    f: Arc<dyn JetFn>,
    domain: Interval,
    direction: Direction,
    label: String,
}

impl std::fmt::Debug for GeneratorFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratorFunction")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("direction", &self.direction)
            .finish()
    }
}

impl GeneratorFunction {
    /// Wrap an arbitrary jet-evaluable function, sampling the clamped domain
    /// to certify strict monotonicity and detect the direction.
    pub fn from_jet_fn(
        f: Arc<dyn JetFn>,
        domain: Interval,
        label: impl Into<String>,
    ) -> Result<Self> {
        let grid = domain.grid(MONOTONE_SAMPLES);
        let mut direction: Option<Direction> = None;
        let mut prev: Option<(f64, f64)> = None;
        for &x in &grid {
            let jet = f.jet(x)?;
            if !jet.is_finite() {
                return Err(Error::EvalFailure {
                    x,
                    what: "generator not finite on clamped domain".into(),
                });
            }
            if jet.d1 == 0.0 {
                return Err(Error::DerivativeDegenerate { x });
            }
            let dir = if jet.d1 > 0.0 {
                Direction::Increasing
            } else {
                Direction::Decreasing
            };
            match direction {
                None => direction = Some(dir),
                Some(d) if d != dir => {
                    let (px, _) = prev.expect("direction was set from an earlier sample");
                    return Err(Error::MonotonicityViolation { x0: px, x1: x });
                }
                _ => {}
            }
            if let Some((px, pv)) = prev {
                let rising = jet.value > pv;
                if jet.value != pv && rising != (direction == Some(Direction::Increasing)) {
                    return Err(Error::MonotonicityViolation { x0: px, x1: x });
                }
            }
            prev = Some((x, jet.value));
        }
        Ok(Self {
            f,
            domain,
            direction: direction.expect("grid is nonempty"),
            label: label.into(),
        })
    }

    pub fn from_expr(ast: ExprAst, domain: Interval) -> Result<Self> {
        let label = ast.to_string();
        Self::from_jet_fn(Arc::new(ast), domain, label)
    }

    pub fn from_expr_source(source: &str, domain: Interval) -> Result<Self> {
        Self::from_expr(crate::expr::parse(source)?, domain)
    }

    /// The affine image `a·f + b`, `a ≠ 0`. The potential it generates is
    /// identical; the direction flips when `a < 0`.
    pub fn affine_image(&self, a: f64, b: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!(
                "affine image requires finite a != 0 and finite b, got a={a}, b={b}"
            )));
        }
        struct Affine {
            inner: Arc<dyn JetFn>,
            a: f64,
            b: f64,
        }
        impl JetFn for Affine {
            fn jet(&self, x: f64) -> Result<Jet2> {
                let j = self.inner.jet(x)?;
                Ok(Jet2 {
                    value: self.a * j.value + self.b,
                    d1: self.a * j.d1,
                    d2: self.a * j.d2,
                })
            }
        }
        let label = format!("{a}*({}) + {b}", self.label);
        Self::from_jet_fn(
            Arc::new(Affine {
                inner: self.f.clone(),
                a,
                b,
            }),
            self.domain,
            label,
        )
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Evaluate the jet at a point of the open domain.
    pub fn jet(&self, x: f64) -> Result<Jet2> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain {
                x,
                domain: self.domain.to_string(),
            });
        }
        self.f.jet(x)
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        Ok(self.jet(x)?.value)
    }

    /// Jet evaluation without the domain membership check, for callers that
    /// already work on the clamped range.
    pub(crate) fn jet_unchecked(&self, x: f64) -> Result<Jet2> {
        self.f.jet(x)
    }

    pub(crate) fn jet_fn(&self) -> Arc<dyn JetFn> {
        self.f.clone()
    }

    /// Image interval `J = f(I)` over the clamped working range.
    pub fn range(&self) -> Result<Interval> {
        let (a, b) = self.domain.clamped();
        let fa = self.f.jet(a)?.value;
        let fb = self.f.jet(b)?.value;
        Interval::new(fa.min(fb), fa.max(fb))
    }
}

/// The potential `f⁻¹(Σ pᵢ f(xᵢ))`. The inner sum is compensated; the
/// inversion bracket is `[min xᵢ, max xᵢ]`, which internality guarantees to
/// be valid.
pub fn eval_potential(
    f: &GeneratorFunction,
    dist: &WeightedDistribution,
    tol: &Tolerance,
) -> Result<f64> {
    let mut acc = KahanSum::default();
    for a in dist.atoms() {
        acc.add(a.p * f.jet(a.x)?.value);
    }
    let target = acc.value();

    let (lo, hi) = (dist.min_x(), dist.max_x());
    if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
        return Ok(0.5 * (lo + hi));
    }
    let bracket = Interval::new(lo, hi)?;
    let value = |x: f64| f.f.jet(x).map_or(f64::NAN, |j| j.value);
    let slope = |x: f64| f.f.jet(x).map_or(f64::NAN, |j| j.d1);
    let lambda = invert_monotone_with_derivative(value, slope, target, &bracket, tol)?;
    Ok(lambda.clamp(lo, hi))
}

/// Density `ρᵢ = f'(xᵢ) / f'(λ_f(φ))` of the derivative measure. For
/// `f = exp` this is the Gibbs distribution and `Σ pᵢ ρᵢ = 1`.
pub fn derivative_density(
    f: &GeneratorFunction,
    dist: &WeightedDistribution,
    tol: &Tolerance,
) -> Result<Vec<f64>> {
    let lambda = eval_potential(f, dist, tol)?;
    let at_lambda = f.jet(lambda)?;
    if at_lambda.d1 == 0.0 {
        return Err(Error::DerivativeDegenerate { x: lambda });
    }
    dist.atoms()
        .iter()
        .map(|a| {
            let j = f.jet(a.x)?;
            if j.d1 == 0.0 {
                return Err(Error::DerivativeDegenerate { x: a.x });
            }
            Ok(j.d1 / at_lambda.d1)
        })
        .collect()
}

/// First and second derivatives of `t ↦ λ_f(φ + tψ)` at `t = 0`:
///
/// ```text
/// first  = Σ pᵢ f'(xᵢ) ψᵢ / f'(λ)
/// second = Σ pᵢ f''(xᵢ) ψᵢ² / f'(λ) − f''(λ) (Σ pᵢ f'(xᵢ) ψᵢ)² / f'(λ)³
/// ```
pub fn directional_derivatives(
    f: &GeneratorFunction,
    dist: &WeightedDistribution,
    psi: &[f64],
    tol: &Tolerance,
) -> Result<(f64, f64)> {
    if psi.len() != dist.len() {
        return Err(Error::InvalidInput(format!(
            "direction has {} entries for {} atoms",
            psi.len(),
            dist.len()
        )));
    }
    let lambda = eval_potential(f, dist, tol)?;
    let at_lambda = f.jet(lambda)?;
    if at_lambda.d1 == 0.0 {
        return Err(Error::DerivativeDegenerate { x: lambda });
    }
    let mut weighted_d1 = KahanSum::default();
    let mut weighted_d2 = KahanSum::default();
    for (a, &dir) in dist.atoms().iter().zip(psi) {
        let j = f.jet(a.x)?;
        weighted_d1.add(a.p * j.d1 * dir);
        weighted_d2.add(a.p * j.d2 * dir * dir);
    }
    let s1 = weighted_d1.value();
    let first = s1 / at_lambda.d1;
    let second = weighted_d2.value() / at_lambda.d1
        - at_lambda.d2 * s1 * s1 / (at_lambda.d1 * at_lambda.d1 * at_lambda.d1);
    Ok((first, second))
}

/// Cumulant generating function `Γ(t) = ln Σ pᵢ exp(t·xᵢ)`, computed with
/// the max shifted out for stability.
pub fn cgf(dist: &WeightedDistribution, t: f64) -> f64 {
    let m = dist
        .atoms()
        .iter()
        .map(|a| t * a.x)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut acc = KahanSum::default();
    for a in dist.atoms() {
        acc.add(a.p * (t * a.x - m).exp());
    }
    m + acc.value().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{differentiate_fd, DerivOrder};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn gen(src: &str, lo: f64, hi: f64) -> GeneratorFunction {
        GeneratorFunction::from_expr_source(src, Interval::new(lo, hi).unwrap()).unwrap()
    }

    #[test]
    fn distribution_validation() {
        assert!(WeightedDistribution::from_pairs(&[]).is_err());
        assert!(WeightedDistribution::from_pairs(&[(1.0, 0.5), (2.0, 0.6)]).is_err());
        assert!(WeightedDistribution::from_pairs(&[(1.0, -0.5), (2.0, 1.5)]).is_err());
        assert!(WeightedDistribution::from_pairs(&[(1.0, 0.5), (2.0, 0.5)]).is_ok());
        assert!(WeightedDistribution::from_pairs(&[(3.0, 1.0)]).is_ok());
    }

    #[test]
    fn distribution_json_round_trip() {
        let d = WeightedDistribution::from_pairs(&[(1.0, 0.25), (4.0, 0.75)]).unwrap();
        let text = d.to_json();
        let back = WeightedDistribution::from_json(&text).unwrap();
        assert_eq!(d, back);
        assert!(WeightedDistribution::from_json(r#"[{"x":1,"p":2}]"#).is_err());
    }

    #[test]
    fn arithmetic_mean_for_identity() {
        let f = gen("x", -10.0, 10.0);
        let d = WeightedDistribution::from_pairs(&[(2.0, 0.5), (4.0, 0.5)]).unwrap();
        assert_abs_diff_eq!(eval_potential(&f, &d, &tol()).unwrap(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn geometric_mean_for_log() {
        let f = gen("ln(x)", 0.01, 100.0);
        let d = WeightedDistribution::from_pairs(&[(1.0, 0.5), (4.0, 0.5)]).unwrap();
        assert_abs_diff_eq!(eval_potential(&f, &d, &tol()).unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn exponential_mean() {
        let f = gen("exp(x)", -10.0, 10.0);
        let d = WeightedDistribution::from_pairs(&[(0.0, 0.5), (3.0f64.ln(), 0.5)]).unwrap();
        assert_abs_diff_eq!(
            eval_potential(&f, &d, &tol()).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-9
        );
    }

    #[test]
    fn atom_outside_domain_is_rejected() {
        let f = gen("ln(x)", 0.5, 100.0);
        let d = WeightedDistribution::from_pairs(&[(0.1, 0.5), (4.0, 0.5)]).unwrap();
        assert!(matches!(
            eval_potential(&f, &d, &tol()),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn density_is_flat_for_identity() {
        let f = gen("x", -10.0, 10.0);
        let d = WeightedDistribution::from_pairs(&[(1.0, 0.3), (2.0, 0.7)]).unwrap();
        let rho = derivative_density(&f, &d, &tol()).unwrap();
        for r in rho {
            assert_abs_diff_eq!(r, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn density_is_gibbs_for_exp() {
        let f = gen("exp(x)", -10.0, 10.0);
        let d = WeightedDistribution::from_pairs(&[(0.0, 0.5), (3.0f64.ln(), 0.5)]).unwrap();
        // The 1e-12 normalization check needs the potential inverted well
        // below the default target.
        let tol = Tolerance {
            abs_tol: 0.0,
            rel_tol: 1e-15,
            decision_band: 1e-7,
        };
        let rho = derivative_density(&f, &d, &tol).unwrap();
        assert_abs_diff_eq!(rho[0], 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(rho[1], 1.5, epsilon = 1e-8);
        let norm: f64 = d.atoms().iter().zip(&rho).map(|(a, r)| a.p * r).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn density_for_square() {
        let f = gen("x^2", 0.01, 100.0);
        let d = WeightedDistribution::from_pairs(&[(1.0, 0.5), (3.0, 0.5)]).unwrap();
        let rho = derivative_density(&f, &d, &tol()).unwrap();
        let s5 = 5.0f64.sqrt();
        assert_abs_diff_eq!(rho[0], 1.0 / s5, epsilon = 1e-8);
        assert_abs_diff_eq!(rho[1], 3.0 / s5, epsilon = 1e-8);
    }

    #[test]
    fn directional_derivatives_of_identity() {
        let f = gen("x", -10.0, 10.0);
        let d = WeightedDistribution::from_pairs(&[(1.0, 0.25), (2.0, 0.75)]).unwrap();
        let psi = [0.5, -1.5];
        let (first, second) = directional_derivatives(&f, &d, &psi, &tol()).unwrap();
        assert_abs_diff_eq!(first, 0.25 * 0.5 - 0.75 * 1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(second, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn directional_derivatives_of_exp_at_constant() {
        let f = gen("exp(x)", -10.0, 10.0);
        let d = WeightedDistribution::from_pairs(&[(0.7, 0.5), (0.7, 0.5)]).unwrap();
        let (first, second) = directional_derivatives(&f, &d, &[1.0, 0.0], &tol()).unwrap();
        assert_abs_diff_eq!(first, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(second, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn directional_second_derivative_of_log() {
        let f = gen("ln(x)", 0.01, 100.0);
        let d = WeightedDistribution::from_pairs(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let (_, second) = directional_derivatives(&f, &d, &[1.0, 0.0], &tol()).unwrap();
        assert_abs_diff_eq!(second, -2.0f64.sqrt() / 4.0, epsilon = 1e-9);
    }

    #[test]
    fn cgf_examples() {
        let d = WeightedDistribution::from_pairs(&[(0.0, 0.5), (3.0f64.ln(), 0.5)]).unwrap();
        assert_abs_diff_eq!(cgf(&d, 0.0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cgf(&d, 1.0), std::f64::consts::LN_2, epsilon = 1e-12);

        let constant = WeightedDistribution::from_pairs(&[(2.5, 1.0)]).unwrap();
        assert_abs_diff_eq!(cgf(&constant, 3.0), 7.5, epsilon = 1e-12);

        // Stability under extreme shifts.
        let wide = WeightedDistribution::from_pairs(&[(-400.0, 0.5), (400.0, 0.5)]).unwrap();
        let g = cgf(&wide, 2.0);
        assert!(g.is_finite());
        assert_abs_diff_eq!(g, 800.0 + 0.5f64.ln(), epsilon = 1e-9);
    }

    fn random_dist(rng: &mut ChaCha8Rng, lo: f64, hi: f64, n: usize) -> WeightedDistribution {
        let mut pairs = Vec::with_capacity(n);
        let mut remaining = 1.0;
        for i in 0..n {
            let p = if i == n - 1 {
                remaining
            } else {
                let share = rng.random_range(0.1..0.9);
                let p = share * (remaining - 0.01 * (n - 1 - i) as f64);
                remaining -= p;
                p
            };
            pairs.push((rng.random_range(lo..hi), p));
        }
        WeightedDistribution::from_pairs(&pairs).unwrap()
    }

    #[test]
    fn internality_holds_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = gen("exp(x)", -10.0, 10.0);
        for _ in 0..200 {
            let n = rng.random_range(2..5);
            let d = random_dist(&mut rng, -8.0, 8.0, n);
            let lambda = eval_potential(&f, &d, &tol()).unwrap();
            assert!(lambda >= d.min_x() - 1e-9 && lambda <= d.max_x() + 1e-9);
        }
    }

    #[test]
    fn affine_invariance_of_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = gen("cosh(x)", 0.1, 10.0);
        for _ in 0..100 {
            let a = rng.random_range(0.2..4.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
            let b: f64 = rng.random_range(-5.0..5.0);
            let g = f.affine_image(a, b).unwrap();
            let d = random_dist(&mut rng, 0.5, 9.0, 3);
            let base = eval_potential(&f, &d, &tol()).unwrap();
            let imaged = eval_potential(&g, &d, &tol()).unwrap();
            assert!(
                (base - imaged).abs() <= 1e-8,
                "gauge broken: {base} vs {imaged}"
            );
        }
    }

    #[test]
    fn monotonicity_of_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = gen("ln(x)", 0.01, 100.0);
        for _ in 0..100 {
            let d = random_dist(&mut rng, 1.0, 50.0, 3);
            let bumps: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..5.0)).collect();
            let higher = d.shifted(&bumps, 1.0).unwrap();
            let lo = eval_potential(&f, &d, &tol()).unwrap();
            let hi = eval_potential(&f, &higher, &tol()).unwrap();
            assert!(hi >= lo - 1e-9, "monotonicity broken: {hi} < {lo}");
        }
    }

    #[test]
    fn directional_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let t = tol();
        for src in ["exp(x)", "ln(x)", "x^2", "cosh(x)"] {
            let (lo, hi) = if src == "exp(x)" || src == "cosh(x)" {
                (0.1, 6.0)
            } else {
                (0.2, 20.0)
            };
            let f = gen(src, lo - 0.05, hi + 5.0);
            for _ in 0..25 {
                let d = random_dist(&mut rng, lo, hi, 3);
                let psi: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (first, second) = directional_derivatives(&f, &d, &psi, &t).unwrap();
                let lambda_at = |s: f64| {
                    let shifted = d.shifted(&psi, s).unwrap();
                    eval_potential(&f, &shifted, &t).unwrap_or(f64::NAN)
                };
                let fd1 = differentiate_fd(lambda_at, 0.0, DerivOrder::First, 1e-4).unwrap();
                let fd2 = differentiate_fd(lambda_at, 0.0, DerivOrder::Second, 1e-3).unwrap();
                assert!(
                    (first - fd1).abs() <= 1e-6,
                    "{src}: first {first} vs fd {fd1}"
                );
                assert!(
                    (second - fd2).abs() <= 1e-4,
                    "{src}: second {second} vs fd {fd2}"
                );

                // Consistency with the derivative density.
                let rho = derivative_density(&f, &d, &t).unwrap();
                let via_density: f64 = d
                    .atoms()
                    .iter()
                    .zip(&rho)
                    .zip(&psi)
                    .map(|((a, r), dir)| a.p * r * dir)
                    .sum();
                assert!((first - via_density).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn cgf_is_convex_in_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let n = rng.random_range(2..6);
            let d = random_dist(&mut rng, -3.0, 3.0, n);
            for i in 0..20 {
                let t = -2.0 + 4.0 * i as f64 / 19.0;
                let dt = 1e-3;
                let second = cgf(&d, t - dt) - 2.0 * cgf(&d, t) + cgf(&d, t + dt);
                assert!(second >= -1e-9, "CGF second difference negative: {second}");
            }
        }
    }

    #[test]
    fn generator_construction_rejects_non_monotone() {
        let err = GeneratorFunction::from_expr_source("x^2", Interval::new(-1.0, 1.0).unwrap());
        assert!(err.is_err());
        let ok = GeneratorFunction::from_expr_source("x^2", Interval::new(0.0, 1.0).unwrap());
        assert!(ok.is_ok());
        assert_eq!(ok.unwrap().direction(), Direction::Increasing);
        let dec = gen("1/x", 0.1, 10.0);
        assert_eq!(dec.direction(), Direction::Decreasing);
    }
}
