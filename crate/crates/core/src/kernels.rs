//! Scalar special functions.
//!
//! Everything here is a pure function of its arguments. Differences of normal
//! probabilities are always formed from the tail that keeps both terms small,
//! so the results keep their relative accuracy far out in the tails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Below this half-width `r_t(a)` is replaced by its `a → 0` limit
/// `e^{-t²/2} cosh(t a)`.
pub const SMALL_HALF_WIDTH: f64 = 1e-7;

/// A half-width `a ∈ [0, ∞]`.
///
/// `+∞` is an ordinary value here: it is what the support function returns for
/// unbounded directions, and `r_t(∞) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtendedHalfWidth(f64);

impl ExtendedHalfWidth {
    pub const ZERO: Self = ExtendedHalfWidth(0.0);
    pub const INFINITY: Self = ExtendedHalfWidth(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::domain(format!(
                "half-width must lie in [0, inf], got {value}"
            )));
        }
        Ok(ExtendedHalfWidth(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Display for ExtendedHalfWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for ExtendedHalfWidth {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        crate::cli::float::serialize(&self.0, serializer)
    }
}

impl<'de> Deserialize<'de> for ExtendedHalfWidth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = crate::cli::float::deserialize(deserializer)?;
        ExtendedHalfWidth::new(v).map_err(serde::de::Error::custom)
    }
}

/// A value of `r_t(a)`; always in `[e^{-t²/2}, 1]` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct RatioValue(f64);

impl RatioValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Value and `t`-derivative of the slab mass `g_a(t) = Φ(a+t) − Φ(−a+t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabMass {
    pub value: f64,
    pub derivative: f64,
}

/// Standard normal CDF, `Φ(x) = erfc(−x/√2)/2`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal upper tail, `1 − Φ(x)`, without cancellation for large `x`.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Φ(hi) − Φ(lo)` for `lo ≤ hi`, using whichever tail keeps both terms small.
pub fn normal_interval_mass(lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    if lo >= 0.0 {
        std_normal_sf(lo) - std_normal_sf(hi)
    } else if hi <= 0.0 {
        std_normal_cdf(hi) - std_normal_cdf(lo)
    } else {
        1.0 - std_normal_cdf(lo) - std_normal_sf(hi)
    }
}

/// Standard normal quantile by Acklam's rational approximation
/// (relative error below 1.2e-9). Used to turn uniforms into normal variates.
pub fn std_normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma function `P(shape, x)`.
///
/// Equivalently the chi-square CDF at `2x` with `2·shape` degrees of freedom.
/// Series expansion below `x = shape + 1`, Lentz continued fraction above.
pub fn regularized_gamma_p(shape: f64, x: f64) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::domain(format!(
            "incomplete gamma shape must be positive, got {shape}"
        )));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!(
            "incomplete gamma argument must be non-negative, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let log_prefactor = shape * x.ln() - x - ln_gamma(shape);
    if x < shape + 1.0 {
        let p = gamma_series(shape, x)? * log_prefactor.exp();
        Ok(p.clamp(0.0, 1.0))
    } else {
        let q = gamma_continued_fraction(shape, x)? * log_prefactor.exp();
        Ok((1.0 - q).clamp(0.0, 1.0))
    }
}

fn gamma_series(shape: f64, x: f64) -> Result<f64> {
    let mut term = 1.0 / shape;
    let mut sum = term;
    let mut denom = shape;
    for _ in 0..10_000 {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            return Ok(sum);
        }
    }
    Err(Error::Numeric(format!(
        "incomplete gamma series did not converge for shape={shape}, x={x}"
    )))
}

fn gamma_continued_fraction(shape: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - shape;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - shape);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            return Ok(h);
        }
    }
    Err(Error::Numeric(format!(
        "incomplete gamma continued fraction did not converge for shape={shape}, x={x}"
    )))
}

/// Nodes and weights of 20-point Gauss–Legendre quadrature on `[0, 1]`.
fn gauss_legendre_unit() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        const N: usize = 20;
        let mut rule = Vec::with_capacity(N);
        for i in 0..N {
            // Newton iteration on P_N from the Chebyshev-like initial guess.
            let mut x = (PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=N {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule.push((0.5 * (x + 1.0), 0.5 * w));
        }
        rule
    })
}

/// `r_t(a)`: the ratio `(Φ(t+a) − Φ(t−a)) / (Φ(a) − Φ(−a))`, with the limits
/// `e^{-t²/2}` at `a = 0` and `1` at `a = ∞`.
///
/// For `a·max(t, 1) < 1` both numerator and denominator are integrated
/// directly on `[0, a]` (no subtraction at all); otherwise the numerator is a
/// difference of normal tails, which carries no cancellation in that regime.
pub fn ratio_r(t: f64, a: ExtendedHalfWidth) -> Result<RatioValue> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain(format!("r_t(a) requires t >= 0, got {t}")));
    }
    let a = a.value();
    let gaussian = (-0.5 * t * t).exp();
    let r = if a == 0.0 {
        gaussian
    } else if a.is_infinite() || t == 0.0 {
        1.0
    } else if a < SMALL_HALF_WIDTH {
        gaussian * (t * a).cosh()
    } else if a * t.max(1.0) < 1.0 {
        // Integrands are e^{-(x∓t)²/2} and e^{-x²/2} over x ∈ [0, a]; the
        // common factor (2π)^{-1/2} cancels.
        let (mut num, mut den) = (0.0, 0.0);
        for &(node, weight) in gauss_legendre_unit() {
            let x = a * node;
            num += weight * 0.5 * ((-0.5 * (x - t).powi(2)).exp() + (-0.5 * (x + t).powi(2)).exp());
            den += weight * (-0.5 * x * x).exp();
        }
        num / den
    } else {
        normal_interval_mass(t - a, t + a) / libm::erf(a * FRAC_1_SQRT_2)
    };
    Ok(RatioValue(r.min(1.0)))
}

/// `g_a(t) = Φ(a+t) − Φ(−a+t)` and `g'_a(t) = φ(a+t) − φ(−a+t)`.
pub fn slab_g(a: ExtendedHalfWidth, t: f64) -> SlabMass {
    let a = a.value();
    if a.is_infinite() {
        return SlabMass {
            value: 1.0,
            derivative: 0.0,
        };
    }
    SlabMass {
        value: normal_interval_mass(t - a, t + a),
        derivative: std_normal_pdf(a + t) - std_normal_pdf(t - a),
    }
}

/// `λ_a(t) = g_a(t) + g'_a(t)/t` for finite `a > 0` and `t > 0`.
pub fn slab_lambda(a: f64, t: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "slab_lambda requires a finite positive half-width, got {a}"
        )));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!(
            "slab_lambda requires t > 0, got {t}"
        )));
    }
    let g = slab_g(ExtendedHalfWidth(a), t);
    Ok(g.value + g.derivative / t)
}
