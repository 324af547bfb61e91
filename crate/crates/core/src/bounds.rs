//! The shift bounds.
//!
//! For `X ~ N(0, Σ)`, a symmetric convex `A` (or an even unimodal weight `w`
//! with support `A_w`), unit `u` and `t ≥ 0`:
//!
//! ```text
//! e^{-t² ⟨u,Σ⁻¹u⟩/2}  ≤  E w(X − tu) / E w(X)  ≤  r_{t m}(a)  ≤  1,
//! m = ‖Σ^{-1/2}u‖,   a = δ*(Σ⁻¹u | A_w) / m.
//! ```
//!
//! The upper bound is attained by slabs, see [`extremal_slab`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bodies::{ConvexBody, Exactness};
use crate::error::{Error, Result};
use crate::kernels::{ratio_r, std_normal_quantile, ExtendedHalfWidth};
use crate::linalg::{Covariance, Direction, Matrix};

const NESTING_PROBES: usize = 4096;
const NESTING_DIRECTIONS: usize = 64;
const NESTING_SEED: u64 = 0x6e65_7374;

/// `w(x) = Σ_k c_k 𝟙[x ∈ A_k]` with `A_1 ⊇ A_2 ⊇ …`: an even unimodal weight.
#[derive(Debug, Clone)]
pub struct LayeredUnimodal {
    layers: Vec<(f64, ConvexBody)>,
}

impl LayeredUnimodal {
    /// Validates weights, dimensions and (by random probes) the nesting.
    pub fn new(layers: Vec<(f64, ConvexBody)>) -> Result<Self> {
        let Some((_, first)) = layers.first() else {
            return Err(Error::domain("a layered weight needs at least one layer"));
        };
        let dim = first.dim();
        for (k, (c, body)) in layers.iter().enumerate() {
            if !(*c > 0.0) || !c.is_finite() {
                return Err(Error::domain(format!(
                    "layer {k} weight must be finite and positive, got {c}"
                )));
            }
            if body.dim() != dim {
                return Err(Error::shape(format!(
                    "layer {k} has dimension {} but layer 0 has {dim}",
                    body.dim()
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(NESTING_SEED);
        for k in 1..layers.len() {
            check_nested(&layers[k - 1].1, &layers[k].1, k, &mut rng)?;
        }
        Ok(LayeredUnimodal { layers })
    }

    /// The indicator `𝟙_A`.
    pub fn indicator(body: ConvexBody) -> Self {
        LayeredUnimodal {
            layers: vec![(1.0, body)],
        }
    }

    pub fn dim(&self) -> usize {
        self.layers[0].1.dim()
    }

    pub fn layers(&self) -> &[(f64, ConvexBody)] {
        &self.layers
    }

    /// The support `A_w = {w > 0}`, i.e. the outermost layer.
    pub fn support_set(&self) -> &ConvexBody {
        &self.layers[0].1
    }

    pub fn total_weight(&self) -> f64 {
        self.layers.iter().map(|(c, _)| c).sum()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::shape("point dimension does not match the weight"));
        }
        Ok(self.value_at(x))
    }

    pub(crate) fn value_at(&self, x: &[f64]) -> f64 {
        self.layers
            .iter()
            .filter(|(_, body)| body.member(x))
            .map(|(c, _)| c)
            .sum()
    }

    /// Applies `L` to every layer.
    pub fn transform(&self, map: &Matrix) -> Result<Self> {
        Ok(LayeredUnimodal {
            layers: self
                .layers
                .iter()
                .map(|(c, b)| Ok((*c, b.transform(map)?)))
                .collect::<Result<_>>()?,
        })
    }
}

fn check_nested(outer: &ConvexBody, inner: &ConvexBody, k: usize, rng: &mut ChaCha8Rng) -> Result<()> {
    let n = inner.dim();
    let scale = inner.probe_scale();
    let mut point = vec![0.0; n];
    for _ in 0..NESTING_PROBES {
        for x in point.iter_mut() {
            *x = scale * std_normal_quantile(rng.gen_range(f64::EPSILON..1.0));
        }
        if inner.member(&point) && !outer.member(&point) {
            return Err(Error::domain(format!(
                "layer {k} is not contained in layer {}: found {point:?}",
                k - 1
            )));
        }
    }
    for _ in 0..NESTING_DIRECTIONS {
        for x in point.iter_mut() {
            *x = std_normal_quantile(rng.gen_range(f64::EPSILON..1.0));
        }
        let s_in = inner.support(&point)?;
        let s_out = outer.support(&point)?;
        if s_in.exactness == Exactness::Exact && s_in.value > s_out.value + 1e-8 * s_out.value.max(1.0) {
            return Err(Error::domain(format!(
                "layer {k} support {} exceeds layer {} support {}",
                s_in.value,
                k - 1,
                s_out.value
            )));
        }
    }
    Ok(())
}

/// The evaluated sandwich for one `(Σ, A or w, u, t)` query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub t: f64,
    /// `‖Σ^{-1/2}u‖`.
    pub mahalanobis: f64,
    pub exponent_a: ExtendedHalfWidth,
    pub exponent_exactness: Exactness,
    pub lower: f64,
    pub upper: f64,
}

/// The power envelope of the test "reject iff `Y ∉ A`".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub theta: f64,
    pub alpha: f64,
    pub beta_lower: f64,
    pub beta_upper: f64,
}

fn check_dims(sigma: &Covariance, body_dim: usize, u: &Direction) -> Result<()> {
    if sigma.dim() != body_dim || u.dim() != body_dim {
        return Err(Error::shape(format!(
            "dimensions disagree: covariance {}, body {body_dim}, direction {}",
            sigma.dim(),
            u.dim()
        )));
    }
    Ok(())
}

fn check_shift(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 || t.is_infinite() {
        return Err(Error::domain(format!("shift t must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `a_{Σ,A,u} = δ*(Σ⁻¹u | A) / ‖Σ^{-1/2}u‖`, with the support oracle's exactness.
pub fn shift_exponent(
    sigma: &Covariance,
    body: &ConvexBody,
    u: &Direction,
) -> Result<(ExtendedHalfWidth, Exactness)> {
    check_dims(sigma, body.dim(), u)?;
    let v = sigma.solve(u.as_slice())?;
    let support = body.support(&v)?;
    let m = sigma.mahalanobis_norm(u)?;
    Ok((ExtendedHalfWidth::new(support.value / m)?, support.exactness))
}

fn report(sigma: &Covariance, body: &ConvexBody, u: &Direction, t: f64) -> Result<BoundReport> {
    check_shift(t)?;
    let (a, exactness) = shift_exponent(sigma, body, u)?;
    let m = sigma.mahalanobis_norm(u)?;
    let scaled = t * m;
    Ok(BoundReport {
        t,
        mahalanobis: m,
        exponent_a: a,
        exponent_exactness: exactness,
        lower: (-0.5 * scaled * scaled).exp(),
        upper: ratio_r(scaled, a)?.value(),
    })
}

/// Bounds on `P(X ∈ tu + A) / P(X ∈ A)`.
///
/// When the exponent is only an upper bound (intersections) the reported
/// `upper` is still valid because `r_t` is nondecreasing in `a`.
pub fn ratio_bounds_set(
    sigma: &Covariance,
    body: &ConvexBody,
    u: &Direction,
    t: f64,
) -> Result<BoundReport> {
    report(sigma, body, u, t)
}

/// Bounds on `E w(X − tu) / E w(X)`; only the support `A_w` matters.
pub fn ratio_bounds_layered(
    sigma: &Covariance,
    w: &LayeredUnimodal,
    u: &Direction,
    t: f64,
) -> Result<BoundReport> {
    report(sigma, w.support_set(), u, t)
}

/// `−t ⟨u, Σ⁻¹u⟩ · current`, the floor on `d/dt E w(X − tu)` given
/// `current = E w(X − tu)`.
pub fn derivative_floor(sigma: &Covariance, u: &Direction, t: f64, current: f64) -> Result<f64> {
    check_shift(t)?;
    if current.is_nan() || current < 0.0 {
        return Err(Error::domain(format!(
            "current expectation must be >= 0, got {current}"
        )));
    }
    if sigma.dim() != u.dim() {
        return Err(Error::shape("covariance and direction dimensions disagree"));
    }
    Ok(-t * sigma.quad_form_inv(u.as_slice())? * current)
}

/// The ceiling `t` on `⟨u, E(Z | Z ∈ tu + A)⟩` for standard Gaussian `Z`.
pub fn conditional_coordinate_ceiling(t: f64) -> f64 {
    t
}

/// Envelope `[1 − r·(1−α), 1 − e^{−θ²⟨u,Σ⁻¹u⟩/2}(1−α)]` for the power at `θu`
/// of the test rejecting when `Y ∉ A`, whose size is `alpha = P(X ∉ A)`.
pub fn power_envelope(
    sigma: &Covariance,
    body: &ConvexBody,
    u: &Direction,
    theta: f64,
    alpha: f64,
) -> Result<PowerReport> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and positive, got {theta}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let b = report(sigma, body, u, theta)?;
    let mut beta_upper = 1.0 - b.lower * (1.0 - alpha);
    let mut beta_lower = 1.0 - b.upper * (1.0 - alpha);
    const SLACK: f64 = 1e-12;
    if beta_lower < alpha - SLACK || beta_lower > beta_upper + SLACK || beta_upper > 1.0 + SLACK {
        return Err(Error::Numeric(format!(
            "power chain violated: alpha={alpha}, lower={beta_lower}, upper={beta_upper}"
        )));
    }
    beta_upper = beta_upper.min(1.0);
    beta_lower = beta_lower.clamp(alpha, beta_upper);
    Ok(PowerReport {
        theta,
        alpha,
        beta_lower,
        beta_upper,
    })
}

/// The body for which the upper bound is an equality:
/// `Σ^{1/2} {z : |⟨z, w⟩| ≤ a}` with `w = Σ^{-1/2}u / ‖Σ^{-1/2}u‖`
/// (just the slab `{|⟨z, u⟩| ≤ a}` when `Σ = I`).
pub fn extremal_slab(sigma: &Covariance, u: &Direction, a: f64) -> Result<ConvexBody> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("slab half-width must be finite and positive, got {a}")));
    }
    if sigma.dim() != u.dim() {
        return Err(Error::shape("covariance and direction dimensions disagree"));
    }
    if sigma.is_identity() {
        return ConvexBody::slab(u.clone(), a);
    }
    let w = Direction::normalize(&sigma.inv_sqrt().matvec(u.as_slice())?)?;
    ConvexBody::slab(w, a)?.transform(sigma.sqrt())
}

/// A query rewritten in whitened coordinates `x̃ = Σ^{-1/2}x`.
#[derive(Debug, Clone)]
pub struct Whitened<B> {
    pub target: B,
    pub direction: Direction,
    pub t: f64,
}

/// Whitens `(Σ, A, u, t)` to `(I, Σ^{-1/2}A, Σ^{-1/2}u/m, t·m)`.
pub fn whiten(sigma: &Covariance, body: &ConvexBody, u: &Direction, t: f64) -> Result<Whitened<ConvexBody>> {
    check_dims(sigma, body.dim(), u)?;
    let (direction, m) = whiten_direction(sigma, u)?;
    Ok(Whitened {
        target: body.transform(sigma.inv_sqrt())?,
        direction,
        t: t * m,
    })
}

/// Whitens a layered weight the same way as [`whiten`].
pub fn whiten_layered(
    sigma: &Covariance,
    w: &LayeredUnimodal,
    u: &Direction,
    t: f64,
) -> Result<Whitened<LayeredUnimodal>> {
    check_dims(sigma, w.dim(), u)?;
    let (direction, m) = whiten_direction(sigma, u)?;
    Ok(Whitened {
        target: w.transform(sigma.inv_sqrt())?,
        direction,
        t: t * m,
    })
}

fn whiten_direction(sigma: &Covariance, u: &Direction) -> Result<(Direction, f64)> {
    let m = sigma.mahalanobis_norm(u)?;
    let direction = Direction::normalize(&sigma.inv_sqrt().matvec(u.as_slice())?)?;
    Ok((direction, m))
}
