//! Monte Carlo estimators and quadrature oracles used to check the bounds.
//!
//! Every estimator is a deterministic function of its seed: samples come from
//! [`rng`] streams in fixed-size chunks, and chunk results are merged in chunk
//! order whatever the thread count.

pub mod quadrature;
pub mod rng;

use serde::{Deserialize, Serialize};

use crate::bodies::ConvexBody;
use crate::bounds::{derivative_floor, ratio_bounds_layered, ratio_bounds_set, BoundReport, LayeredUnimodal};
use crate::error::{Error, Result};
use crate::kernels::{regularized_gamma_p, slab_g, std_normal_pdf, ExtendedHalfWidth};
use crate::linalg::{dot, Covariance, Direction};

pub use rng::{sample_gaussian, SeedRecord};
use rng::fold_samples;

/// Default z threshold for verdicts.
pub const DEFAULT_Z: f64 = 4.0;

/// Conditional estimates need at least this many hits.
pub const MIN_CONDITIONAL_HITS: u64 = 100;

/// Ratio denominators need at least this many hits.
pub const MIN_DENOMINATOR_HITS: u64 = 10;

// Stream tags, so that estimates of different quantities on one seed are independent.
const STREAM_DIRECT: u64 = 0;
const STREAM_NUMERATOR: u64 = 1;
const STREAM_DENOMINATOR: u64 = 2;
const STREAM_SIZE: u64 = 3;

/// A Monte Carlo estimate with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    #[serde(with = "crate::cli::float")]
    pub value: f64,
    #[serde(with = "crate::cli::float")]
    pub stderr: f64,
    pub samples: u64,
    /// Samples that landed in the region of interest (`w > 0`, or the
    /// conditioning event).
    pub hits: u64,
    pub seed: SeedRecord,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub(crate) fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub(crate) fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64),
        }
    }

    pub(crate) fn stderr(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

fn check_count(count: u64) -> Result<()> {
    if count == 0 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    Ok(())
}

fn check_shift(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 || t.is_infinite() {
        return Err(Error::domain(format!("shift t must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn check_dims(sigma_dim: usize, body_dim: usize, u: &Direction) -> Result<()> {
    if sigma_dim != body_dim || u.dim() != body_dim {
        return Err(Error::shape(format!(
            "dimensions disagree: covariance {sigma_dim}, body {body_dim}, direction {}",
            u.dim()
        )));
    }
    Ok(())
}

/// What the numerator and denominator of a ratio integrate.
#[derive(Debug, Clone, Copy)]
pub enum Integrand<'a> {
    Set(&'a ConvexBody),
    Layered(&'a LayeredUnimodal),
}

impl Integrand<'_> {
    fn dim(&self) -> usize {
        match self {
            Integrand::Set(b) => b.dim(),
            Integrand::Layered(w) => w.dim(),
        }
    }

    fn value_at(&self, x: &[f64]) -> f64 {
        match self {
            Integrand::Set(b) => {
                if b.member(x) {
                    1.0
                } else {
                    0.0
                }
            }
            Integrand::Layered(w) => w.value_at(x),
        }
    }
}

#[derive(Default)]
struct WeightAcc {
    moments: Moments,
    hits: u64,
    scratch: Vec<f64>,
}

fn estimate_weight(
    sigma: &Covariance,
    integrand: Integrand<'_>,
    shift: &[f64],
    count: u64,
    record: SeedRecord,
) -> McEstimate {
    let acc = fold_samples(
        sigma,
        count,
        record,
        WeightAcc::default,
        |acc: &mut WeightAcc, x| {
            acc.scratch.clear();
            acc.scratch.extend(x.iter().zip(shift).map(|(xi, si)| xi - si));
            let w = integrand.value_at(&acc.scratch);
            if w > 0.0 {
                acc.hits += 1;
            }
            acc.moments.push(w);
        },
        |a, b| WeightAcc {
            moments: a.moments.merge(b.moments),
            hits: a.hits + b.hits,
            scratch: Vec::new(),
        },
    );
    McEstimate {
        value: acc.moments.mean,
        stderr: acc.moments.stderr(),
        samples: count,
        hits: acc.hits,
        seed: record,
    }
}

fn scaled(u: &Direction, t: f64) -> Vec<f64> {
    u.as_slice().iter().map(|x| t * x).collect()
}

/// Estimates `P(X ∈ tu + A) = P(X − tu ∈ A)`.
pub fn estimate_shift_prob(
    sigma: &Covariance,
    body: &ConvexBody,
    u: &Direction,
    t: f64,
    count: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_dims(sigma.dim(), body.dim(), u)?;
    check_shift(t)?;
    check_count(count)?;
    Ok(estimate_weight(
        sigma,
        Integrand::Set(body),
        &scaled(u, t),
        count,
        SeedRecord::new(seed, STREAM_DIRECT),
    ))
}

/// Estimates `E w(X − tu)` with one sample stream shared by all layers.
pub fn estimate_layered_expectation(
    sigma: &Covariance,
    w: &LayeredUnimodal,
    u: &Direction,
    t: f64,
    count: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_dims(sigma.dim(), w.dim(), u)?;
    check_shift(t)?;
    check_count(count)?;
    Ok(estimate_weight(
        sigma,
        Integrand::Layered(w),
        &scaled(u, t),
        count,
        SeedRecord::new(seed, STREAM_DIRECT),
    ))
}

/// Estimates `⟨u, E(Z | Z ∈ tu + A)⟩` for standard Gaussian `Z`.
pub fn estimate_conditional_center(
    body: &ConvexBody,
    u: &Direction,
    t: f64,
    count: u64,
    seed: u64,
) -> Result<McEstimate> {
    let n = body.dim();
    check_dims(n, n, u)?;
    check_shift(t)?;
    check_count(count)?;
    let shift = scaled(u, t);
    let record = SeedRecord::new(seed, STREAM_DIRECT);
    let acc = fold_samples(
        &Covariance::identity(n),
        count,
        record,
        WeightAcc::default,
        |acc: &mut WeightAcc, z| {
            acc.scratch.clear();
            acc.scratch.extend(z.iter().zip(&shift).map(|(zi, si)| zi - si));
            if body.member(&acc.scratch) {
                acc.hits += 1;
                acc.moments.push(dot(u.as_slice(), z));
            }
        },
        |a, b| WeightAcc {
            moments: a.moments.merge(b.moments),
            hits: a.hits + b.hits,
            scratch: Vec::new(),
        },
    );
    if acc.hits < MIN_CONDITIONAL_HITS {
        return Err(Error::InsufficientHits {
            hits: acc.hits,
            required: MIN_CONDITIONAL_HITS,
        });
    }
    Ok(McEstimate {
        value: acc.moments.mean,
        stderr: acc.moments.stderr(),
        samples: count,
        hits: acc.hits,
        seed: record,
    })
}

/// Empirical adjudication of one sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichVerdict {
    pub bounds: BoundReport,
    pub numerator: McEstimate,
    pub denominator: McEstimate,
    pub ratio: f64,
    #[serde(with = "crate::cli::float")]
    pub ratio_stderr: f64,
    /// `(ratio − lower) / σ`; very negative means the lower bound is violated.
    #[serde(with = "crate::cli::float")]
    pub lower_z: f64,
    /// `(ratio − upper) / σ`; very positive means the upper bound is violated.
    #[serde(with = "crate::cli::float")]
    pub upper_z: f64,
    pub z_threshold: f64,
    pub pass: bool,
}

fn z_score(diff: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        diff / sigma
    } else if diff.abs() <= 1e-15 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Forms the verdict for given bounds and numerator/denominator estimates,
/// propagating the error of the ratio by the delta method.
pub fn sandwich_verdict(
    bounds: BoundReport,
    numerator: McEstimate,
    denominator: McEstimate,
    z_threshold: f64,
) -> Result<SandwichVerdict> {
    if denominator.hits < MIN_DENOMINATOR_HITS {
        return Err(Error::InsufficientMass {
            hits: denominator.hits,
            samples: denominator.samples,
        });
    }
    let p1 = numerator.value;
    let p0 = denominator.value;
    let ratio = p1 / p0;
    let ratio_stderr = ((numerator.stderr / p0).powi(2) + (p1 * denominator.stderr / (p0 * p0)).powi(2)).sqrt();
    let lower_z = z_score(ratio - bounds.lower, ratio_stderr);
    let upper_z = z_score(ratio - bounds.upper, ratio_stderr);
    Ok(SandwichVerdict {
        bounds,
        numerator,
        denominator,
        ratio,
        ratio_stderr,
        lower_z,
        upper_z,
        z_threshold,
        pass: lower_z >= -z_threshold && upper_z <= z_threshold,
    })
}

/// Checks `lower ≤ E w(X − tu)/E w(X) ≤ upper` by Monte Carlo, with the
/// numerator and denominator on independent streams.
#[allow(clippy::too_many_arguments)]
pub fn verify_sandwich(
    sigma: &Covariance,
    integrand: Integrand<'_>,
    u: &Direction,
    t: f64,
    count: u64,
    z_threshold: f64,
    seed: u64,
) -> Result<SandwichVerdict> {
    check_dims(sigma.dim(), integrand.dim(), u)?;
    check_shift(t)?;
    check_count(count)?;
    let bounds = match integrand {
        Integrand::Set(b) => ratio_bounds_set(sigma, b, u, t)?,
        Integrand::Layered(w) => ratio_bounds_layered(sigma, w, u, t)?,
    };
    let numerator = estimate_weight(
        sigma,
        integrand,
        &scaled(u, t),
        count,
        SeedRecord::new(seed, STREAM_NUMERATOR),
    );
    let denominator = estimate_weight(
        sigma,
        integrand,
        &vec![0.0; u.dim()],
        count,
        SeedRecord::new(seed, STREAM_DENOMINATOR),
    );
    sandwich_verdict(bounds, numerator, denominator, z_threshold)
}

/// Finite-difference versus direct estimates of `d/dt E w(Z − tu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub t: f64,
    pub step: f64,
    /// `E w(Z − tu)`.
    pub level: McEstimate,
    /// `(Ê(t+h) − Ê(t−h)) / 2h` on common random numbers.
    pub finite_difference: McEstimate,
    /// `−⟨u, Ê Z w(Z − tu)⟩`.
    pub direct: McEstimate,
    pub difference: f64,
    /// Standard error of the paired per-sample difference.
    #[serde(with = "crate::cli::float")]
    pub combined_stderr: f64,
    /// Allowance for the `O(h²)` bias of the central difference.
    pub discretization_allowance: f64,
    #[serde(with = "crate::cli::float")]
    pub tolerance: f64,
    pub identity_pass: bool,
    /// `−t Ê(t)`.
    pub floor: f64,
    #[serde(with = "crate::cli::float")]
    pub floor_z_finite_difference: f64,
    #[serde(with = "crate::cli::float")]
    pub floor_z_direct: f64,
    pub floor_pass: bool,
    pub z_threshold: f64,
}

impl DerivativeReport {
    pub fn pass(&self) -> bool {
        self.identity_pass && self.floor_pass
    }
}

#[derive(Default)]
struct DerivativeAcc {
    level: Moments,
    fd: Moments,
    direct: Moments,
    diff: Moments,
    fd_over_floor: Moments,
    direct_over_floor: Moments,
    hits: u64,
    scratch: Vec<f64>,
}

impl DerivativeAcc {
    fn merge(self, o: DerivativeAcc) -> DerivativeAcc {
        DerivativeAcc {
            level: self.level.merge(o.level),
            fd: self.fd.merge(o.fd),
            direct: self.direct.merge(o.direct),
            diff: self.diff.merge(o.diff),
            fd_over_floor: self.fd_over_floor.merge(o.fd_over_floor),
            direct_over_floor: self.direct_over_floor.merge(o.direct_over_floor),
            hits: self.hits + o.hits,
            scratch: Vec::new(),
        }
    }
}

/// Checks `d/dt E w(Z − tu) = −⟨u, E Z w(Z − tu)⟩` and the floor
/// `d/dt E w(Z − tu) ≥ −t E w(Z − tu)` for standard Gaussian `Z`.
///
/// All estimates share one sample stream. The identity passes when the
/// two derivative estimates differ by at most `z·σ + 10 h²`.
pub fn verify_derivative_identity(
    w: &LayeredUnimodal,
    u: &Direction,
    t: f64,
    count: u64,
    step: f64,
    z_threshold: f64,
    seed: u64,
) -> Result<DerivativeReport> {
    let n = w.dim();
    check_dims(n, n, u)?;
    check_shift(t)?;
    check_count(count)?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::domain(format!("finite-difference step must be positive, got {step}")));
    }
    let dir = u.as_slice();
    let record = SeedRecord::new(seed, STREAM_DIRECT);
    let eval = |scratch: &mut Vec<f64>, z: &[f64], s: f64| {
        scratch.clear();
        scratch.extend(z.iter().zip(dir).map(|(zi, ui)| zi - s * ui));
        w.value_at(scratch)
    };
    let acc = fold_samples(
        &Covariance::identity(n),
        count,
        record,
        DerivativeAcc::default,
        |acc: &mut DerivativeAcc, z| {
            let mut scratch = std::mem::take(&mut acc.scratch);
            let w0 = eval(&mut scratch, z, t);
            let wp = eval(&mut scratch, z, t + step);
            let wm = eval(&mut scratch, z, t - step);
            acc.scratch = scratch;
            let fd = (wp - wm) / (2.0 * step);
            let direct = -dot(dir, z) * w0;
            if w0 > 0.0 {
                acc.hits += 1;
            }
            acc.level.push(w0);
            acc.fd.push(fd);
            acc.direct.push(direct);
            acc.diff.push(fd - direct);
            acc.fd_over_floor.push(fd + t * w0);
            acc.direct_over_floor.push(direct + t * w0);
        },
        DerivativeAcc::merge,
    );
    let estimate = |m: &Moments| McEstimate {
        value: m.mean,
        stderr: m.stderr(),
        samples: count,
        hits: acc.hits,
        seed: record,
    };
    let level = estimate(&acc.level);
    let finite_difference = estimate(&acc.fd);
    let direct = estimate(&acc.direct);
    let difference = finite_difference.value - direct.value;
    let combined_stderr = acc.diff.stderr();
    let discretization_allowance = 10.0 * step * step;
    let tolerance = z_threshold * combined_stderr + discretization_allowance;
    let floor = derivative_floor(&Covariance::identity(n), u, t, level.value)?;
    let floor_z_finite_difference = z_score(acc.fd_over_floor.mean, acc.fd_over_floor.stderr());
    let floor_z_direct = z_score(acc.direct_over_floor.mean, acc.direct_over_floor.stderr());
    Ok(DerivativeReport {
        t,
        step,
        level,
        finite_difference,
        direct,
        difference,
        combined_stderr,
        discretization_allowance,
        tolerance,
        identity_pass: difference.abs() <= tolerance,
        floor,
        floor_z_finite_difference,
        floor_z_direct,
        floor_pass: floor_z_finite_difference >= -z_threshold && floor_z_direct >= -z_threshold,
        z_threshold,
    })
}

/// Estimates the power `P(Y ∉ A)` with `Y = X + θu`.
pub fn estimate_power(
    sigma: &Covariance,
    body: &ConvexBody,
    u: &Direction,
    theta: f64,
    count: u64,
    seed: u64,
) -> Result<McEstimate> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and positive, got {theta}")));
    }
    check_dims(sigma.dim(), body.dim(), u)?;
    check_count(count)?;
    Ok(rejection_rate(
        sigma,
        body,
        &scaled(u, -theta),
        count,
        SeedRecord::new(seed, STREAM_DIRECT),
    ))
}

/// Estimates the size `α = P(X ∉ A)`, on a stream independent of
/// [`estimate_power`] with the same seed.
pub fn estimate_size(sigma: &Covariance, body: &ConvexBody, count: u64, seed: u64) -> Result<McEstimate> {
    if sigma.dim() != body.dim() {
        return Err(Error::shape("covariance and body dimensions disagree"));
    }
    check_count(count)?;
    Ok(rejection_rate(
        sigma,
        body,
        &vec![0.0; body.dim()],
        count,
        SeedRecord::new(seed, STREAM_SIZE),
    ))
}

fn rejection_rate(
    sigma: &Covariance,
    body: &ConvexBody,
    shift: &[f64],
    count: u64,
    record: SeedRecord,
) -> McEstimate {
    let kept = estimate_weight(sigma, Integrand::Set(body), shift, count, record);
    McEstimate {
        value: 1.0 - kept.value,
        stderr: kept.stderr,
        samples: count,
        hits: count - kept.hits,
        seed: record,
    }
}

/// `γ(tu + {|⟨z, u⟩| ≤ a}) = Φ(t+a) − Φ(t−a)`.
pub fn oracle_slab(a: f64, t: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("slab half-width must be finite and positive, got {a}")));
    }
    Ok(slab_g(ExtendedHalfWidth::new(a)?, t).value)
}

/// `⟨u, E(Z | Z ∈ tu + slab)⟩`, the mean of a normal truncated to `[t−a, t+a]`.
pub fn oracle_slab_center(a: f64, t: f64) -> Result<f64> {
    let mass = oracle_slab(a, t)?;
    Ok((std_normal_pdf(t - a) - std_normal_pdf(t + a)) / mass)
}

/// Absolute tolerance of [`oracle_ball`].
pub const BALL_ORACLE_TOL: f64 = 1e-10;

/// `γ_n(tu + B_R)` by one-dimensional quadrature over the coordinate along
/// `u`, with the `(n−1)`-dimensional cross-section given by a chi-square CDF:
///
/// ```text
/// γ_n(tu + B_R) = ∫_{−R}^{R} φ(x + t) F_{χ²(n−1)}(R² − x²) dx.
/// ```
///
/// Substituting `x = R sin θ` removes the square-root endpoint behaviour.
pub fn oracle_ball(n: usize, radius: f64, t: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("ball oracle needs n >= 2, got {n}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::domain(format!("ball radius must be finite and positive, got {radius}")));
    }
    check_shift(t)?;
    let shape = 0.5 * (n - 1) as f64;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let integrand = |theta: f64| {
        let (s, c) = theta.sin_cos();
        let c = c.max(0.0);
        let x = radius * s;
        let cross = regularized_gamma_p(shape, 0.5 * (radius * c).powi(2)).unwrap_or(0.0);
        std_normal_pdf(x + t) * cross * radius * c
    };
    let value = quadrature::adaptive_simpson(integrand, -half_pi, half_pi, BALL_ORACLE_TOL)?;
    Ok(value.clamp(0.0, 1.0))
}
