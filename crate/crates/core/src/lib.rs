//! Sharp lower and upper bounds for the Gaussian measure of shifted symmetric
//! convex sets and shifted even unimodal weights, together with the Monte Carlo
//! and quadrature machinery used to check them.
//!
//! For a centered Gaussian `X ~ N(0, Σ)`, a symmetric convex set `A`, a unit
//! vector `u` and a shift `t ≥ 0`:
//!
//! ```text
//! exp(-t² ⟨u, Σ⁻¹u⟩ / 2)  ≤  P(X ∈ tu + A) / P(X ∈ A)  ≤  r_{t‖Σ^{-1/2}u‖}(a)  ≤  1
//! ```
//!
//! where `a = δ*(Σ⁻¹u | A) / ‖Σ^{-1/2}u‖` and `r_t(a) = (Φ(t+a) − Φ(t−a)) / (Φ(a) − Φ(−a))`.
//!
//! Module map:
//!
//! * [`kernels`]: normal CDF/PDF, incomplete gamma, `r_t(a)` and the slab functions.
//! * [`linalg`]: small dense SPD algebra: Cholesky, Jacobi eigensolver, `Σ^{-1/2}`.
//! * [`bodies`]: symmetric convex bodies with membership and support oracles.
//! * [`bounds`]: the ratio sandwich, derivative floor and power envelope.
//! * [`verify`]: seeded Monte Carlo estimators and quadrature oracles.
//! * [`cli`]: run configurations, reports and the command implementations.

// Guards are written `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bodies;
pub mod bounds;
pub mod cli;
mod error;
pub mod kernels;
pub mod linalg;
pub mod verify;

pub use bodies::{ConvexBody, Exactness, SupportValue};
pub use bounds::{BoundReport, LayeredUnimodal, PowerReport};
pub use error::{Error, Result};
pub use kernels::{ExtendedHalfWidth, RatioValue};
pub use linalg::{Covariance, Direction, Matrix};
pub use verify::{McEstimate, SandwichVerdict};
