//! Weighted quasi-arithmetic (Kolmogorov) means and their convexity
//! structure.
//!
//! Given a continuous strictly monotone generator `f` on an interval `I`,
//! the `f`-potential of a finite weighted distribution is
//! `f⁻¹(Σ pᵢ f(xᵢ))`. This crate evaluates such potentials, decides whether
//! the potential functional is convex, concave, linear, or neither by
//! examining the sign and curvature of `h = f'/f''`, reconstructs generators
//! from a prescribed `h` by quadrature, and ships property suites that check
//! the classification against direct Jensen sampling.
//!
//! Module map:
//! - [`numerics`]: intervals, tolerances, quadrature, finite differences,
//!   monotone inversion.
//! - [`expr`]: the expression language and second-order jets.
//! - [`means`]: distributions, generator functions, potential evaluation and
//!   directional derivatives.
//! - [`criteria`]: `h`/`H` computation and the four-type classification.
//! - [`generator`]: reconstruction of `f` from `h`.
//! - [`verify`]: golden classification table, Jensen counterexample search,
//!   cross-module consistency suites.

pub mod criteria;
pub mod error;
pub mod expr;
pub mod generator;
pub mod means;
pub mod numerics;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{Interval, Tolerance};
