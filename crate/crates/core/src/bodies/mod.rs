//! Symmetric convex bodies.
//!
//! Every variant is symmetric about the origin and contains it, by
//! construction. Each one has an exact membership test and a support function
//! `δ*(v | A) = sup{⟨z, v⟩ : z ∈ A}` that is either closed form, an LP, or (for
//! intersections) a guaranteed over-estimate flagged as such.

mod lp;
pub mod spec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::std_normal_quantile;
use crate::linalg::{dot, norm, Covariance, Direction, Matrix, MAX_DIM};

pub use lp::{maximize as lp_maximize, LpOutcome};
pub use spec::{BodySpec, ConstraintSpec};

/// Orthogonal residual (relative to `‖v‖`) below which `v` counts as parallel
/// to a slab normal.
pub const SLAB_PARALLEL_TOL: f64 = 1e-10;

/// Whether a support value is the exact supremum or only an upper bound on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    UpperBound,
}

impl Exactness {
    pub fn and(self, other: Exactness) -> Exactness {
        if self == Exactness::Exact && other == Exactness::Exact {
            Exactness::Exact
        } else {
            Exactness::UpperBound
        }
    }
}

/// `δ*(v | A)`, possibly `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportValue {
    #[serde(with = "crate::cli::float")]
    pub value: f64,
    pub exactness: Exactness,
}

impl SupportValue {
    fn exact(value: f64) -> Self {
        SupportValue {
            value,
            exactness: Exactness::Exact,
        }
    }
}

/// `{x : |⟨x, normal⟩| ≤ halfwidth}`.
#[derive(Debug, Clone)]
pub struct Slab {
    normal: Direction,
    halfwidth: f64,
}

impl Slab {
    pub fn normal(&self) -> &Direction {
        &self.normal
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }
}

/// `{x : ‖x‖_p ≤ radius}`, `p ∈ [1, ∞]`.
#[derive(Debug, Clone)]
pub struct LpBall {
    dim: usize,
    p: f64,
    radius: f64,
}

impl LpBall {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn dual_exponent(&self) -> f64 {
        if self.p == 1.0 {
            f64::INFINITY
        } else if self.p.is_infinite() {
            1.0
        } else {
            self.p / (self.p - 1.0)
        }
    }
}

/// `{x : xᵀ M x ≤ 1}`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    shape: Covariance,
}

impl Ellipsoid {
    pub fn shape(&self) -> &Covariance {
        &self.shape
    }
}

/// `{x : |⟨a_i, x⟩| ≤ b_i for all i}`.
#[derive(Debug, Clone)]
pub struct HPolytope {
    dim: usize,
    normals: Vec<Vec<f64>>,
    bounds: Vec<f64>,
}

impl HPolytope {
    pub fn constraints(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.normals.iter().map(Vec::as_slice).zip(self.bounds.iter().copied())
    }
}

#[derive(Debug, Clone)]
pub struct Intersection {
    parts: Vec<ConvexBody>,
}

impl Intersection {
    pub fn parts(&self) -> &[ConvexBody] {
        &self.parts
    }
}

/// `{L x : x ∈ base}`.
#[derive(Debug, Clone)]
pub struct LinearImage {
    base: Box<ConvexBody>,
    map: Matrix,
    inverse: Matrix,
}

impl LinearImage {
    pub fn base(&self) -> &ConvexBody {
        &self.base
    }

    pub fn map(&self) -> &Matrix {
        &self.map
    }
}

#[derive(Debug, Clone)]
pub enum ConvexBody {
    Slab(Slab),
    LpBall(LpBall),
    Ellipsoid(Ellipsoid),
    HPolytope(HPolytope),
    Intersection(Intersection),
    LinearImage(LinearImage),
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} has non-finite entries")))
    }
}

impl ConvexBody {
    pub fn slab(normal: Direction, halfwidth: f64) -> Result<Self> {
        if !(halfwidth > 0.0) || !halfwidth.is_finite() {
            return Err(Error::domain(format!(
                "slab half-width must be finite and positive, got {halfwidth}"
            )));
        }
        Ok(ConvexBody::Slab(Slab { normal, halfwidth }))
    }

    pub fn lp_ball(dim: usize, p: f64, radius: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::shape(format!("ball dimension {dim} out of range")));
        }
        if !(p >= 1.0) {
            return Err(Error::domain(format!("ball exponent must lie in [1, inf], got {p}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::domain(format!(
                "ball radius must be finite and positive, got {radius}"
            )));
        }
        Ok(ConvexBody::LpBall(LpBall { dim, p, radius }))
    }

    /// The ellipsoid `{x : xᵀ M x ≤ 1}` for SPD `M`.
    pub fn ellipsoid(shape: Matrix) -> Result<Self> {
        Ok(ConvexBody::Ellipsoid(Ellipsoid {
            shape: Covariance::new(shape)?,
        }))
    }

    pub fn h_polytope(normals: Vec<Vec<f64>>, bounds: Vec<f64>) -> Result<Self> {
        if normals.is_empty() || normals.len() != bounds.len() {
            return Err(Error::shape(
                "polytope needs one bound per constraint and at least one constraint",
            ));
        }
        let dim = normals[0].len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::shape(format!("polytope dimension {dim} out of range")));
        }
        for (i, (a, &b)) in normals.iter().zip(&bounds).enumerate() {
            if a.len() != dim {
                return Err(Error::shape(format!(
                    "constraint {i} has length {} but dimension is {dim}",
                    a.len()
                )));
            }
            check_finite(a, "constraint normal")?;
            if norm(a) == 0.0 {
                return Err(Error::domain(format!("constraint {i} has a zero normal")));
            }
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::domain(format!(
                    "constraint {i} bound must be finite and positive, got {b}"
                )));
            }
        }
        Ok(ConvexBody::HPolytope(HPolytope {
            dim,
            normals,
            bounds,
        }))
    }

    pub fn intersection(parts: Vec<ConvexBody>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::shape("intersection needs at least one part"));
        };
        let dim = first.dim();
        if parts.iter().any(|p| p.dim() != dim) {
            return Err(Error::shape("intersection parts differ in dimension"));
        }
        Ok(ConvexBody::Intersection(Intersection { parts }))
    }

    /// `{L x : x ∈ self}`. Nested linear images are composed into one map.
    pub fn transform(&self, map: &Matrix) -> Result<Self> {
        if !map.is_square() || map.rows() != self.dim() {
            return Err(Error::shape(format!(
                "map of shape {}x{} cannot act on dimension {}",
                map.rows(),
                map.cols(),
                self.dim()
            )));
        }
        if !map.is_finite() {
            return Err(Error::domain("map has non-finite entries"));
        }
        let (base, map) = match self {
            ConvexBody::LinearImage(img) => (img.base.clone(), map.matmul(&img.map)?),
            other => (Box::new(other.clone()), map.clone()),
        };
        let inverse = map.inverse()?;
        Ok(ConvexBody::LinearImage(LinearImage { base, map, inverse }))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Slab(s) => s.normal.dim(),
            ConvexBody::LpBall(b) => b.dim,
            ConvexBody::Ellipsoid(e) => e.shape.dim(),
            ConvexBody::HPolytope(h) => h.dim,
            ConvexBody::Intersection(i) => i.parts[0].dim(),
            ConvexBody::LinearImage(l) => l.map.rows(),
        }
    }

    /// True when any part of the body is an intersection, in which case
    /// support values may be upper bounds.
    pub fn has_intersection(&self) -> bool {
        match self {
            ConvexBody::Intersection(i) => i.parts.len() > 1 || i.parts[0].has_intersection(),
            ConvexBody::LinearImage(l) => l.base.has_intersection(),
            _ => false,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::shape(format!(
                "point of length {} does not match body dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(self.member(x))
    }

    /// Membership without the dimension check; used in sampling loops.
    pub(crate) fn member(&self, x: &[f64]) -> bool {
        match self {
            ConvexBody::Slab(s) => dot(x, s.normal.as_slice()).abs() <= s.halfwidth,
            ConvexBody::LpBall(b) => {
                if b.p.is_infinite() {
                    x.iter().all(|xi| xi.abs() <= b.radius)
                } else if b.p == 1.0 {
                    x.iter().map(|xi| xi.abs()).sum::<f64>() <= b.radius
                } else if b.p == 2.0 {
                    dot(x, x) <= b.radius * b.radius
                } else {
                    x.iter().map(|xi| xi.abs().powf(b.p)).sum::<f64>() <= b.radius.powf(b.p)
                }
            }
            ConvexBody::Ellipsoid(e) => {
                let m = e.shape.matrix();
                let n = x.len();
                let mut q = 0.0;
                for i in 0..n {
                    q += x[i] * dot(m.row(i), x);
                }
                q <= 1.0
            }
            ConvexBody::HPolytope(h) => h
                .normals
                .iter()
                .zip(&h.bounds)
                .all(|(a, &b)| dot(a, x).abs() <= b),
            ConvexBody::Intersection(i) => i.parts.iter().all(|p| p.member(x)),
            ConvexBody::LinearImage(l) => {
                let n = x.len();
                let mut buf = [0.0; MAX_DIM];
                for (i, slot) in buf[..n].iter_mut().enumerate() {
                    *slot = dot(l.inverse.row(i), x);
                }
                l.base.member(&buf[..n])
            }
        }
    }

    pub fn support(&self, v: &[f64]) -> Result<SupportValue> {
        Ok(self.support_with_witness(v)?.0)
    }

    /// Support value plus, when the value is exact and finite, a point of the
    /// body attaining it.
    pub fn support_with_witness(&self, v: &[f64]) -> Result<(SupportValue, Option<Vec<f64>>)> {
        self.check_dim(v)?;
        check_finite(v, "support direction")?;
        self.support_inner(v)
    }

    fn support_inner(&self, v: &[f64]) -> Result<(SupportValue, Option<Vec<f64>>)> {
        let n = v.len();
        match self {
            ConvexBody::Slab(s) => {
                let w = s.normal.as_slice();
                let c = dot(v, w);
                let orth: f64 = v
                    .iter()
                    .zip(w)
                    .map(|(vi, wi)| (vi - c * wi).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if orth <= SLAB_PARALLEL_TOL * norm(v) {
                    let sign = if c < 0.0 { -1.0 } else { 1.0 };
                    let point = w.iter().map(|wi| sign * s.halfwidth * wi).collect();
                    Ok((SupportValue::exact(s.halfwidth * c.abs()), Some(point)))
                } else {
                    Ok((SupportValue::exact(f64::INFINITY), None))
                }
            }
            ConvexBody::LpBall(b) => {
                let q = b.dual_exponent();
                let mut point = vec![0.0; n];
                let dual = if q.is_infinite() {
                    let (k, m) = v
                        .iter()
                        .enumerate()
                        .fold((0, 0.0f64), |(bk, bm), (k, x)| if x.abs() > bm { (k, x.abs()) } else { (bk, bm) });
                    if m > 0.0 {
                        point[k] = b.radius * v[k].signum();
                    }
                    m
                } else if q == 1.0 {
                    for (p, vi) in point.iter_mut().zip(v) {
                        *p = if *vi == 0.0 { 0.0 } else { b.radius * vi.signum() };
                    }
                    v.iter().map(|x| x.abs()).sum()
                } else {
                    let dual = v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q);
                    if dual > 0.0 {
                        for (p, vi) in point.iter_mut().zip(v) {
                            *p = b.radius * vi.signum() * (vi.abs() / dual).powf(q - 1.0);
                        }
                    }
                    dual
                };
                Ok((SupportValue::exact(b.radius * dual), Some(point)))
            }
            ConvexBody::Ellipsoid(e) => {
                let m_inv_v = e.shape.solve(v)?;
                let s = dot(v, &m_inv_v).max(0.0).sqrt();
                let point = if s > 0.0 {
                    m_inv_v.iter().map(|x| x / s).collect()
                } else {
                    vec![0.0; n]
                };
                Ok((SupportValue::exact(s), Some(point)))
            }
            ConvexBody::HPolytope(h) => {
                let mut rows = Vec::with_capacity(2 * h.normals.len());
                let mut rhs = Vec::with_capacity(2 * h.normals.len());
                for (a, &b) in h.normals.iter().zip(&h.bounds) {
                    rows.push(a.clone());
                    rows.push(a.iter().map(|x| -x).collect());
                    rhs.push(b);
                    rhs.push(b);
                }
                match lp::maximize(v, &rows, &rhs)? {
                    LpOutcome::Optimal { value, point } => {
                        Ok((SupportValue::exact(value.max(0.0)), Some(point)))
                    }
                    LpOutcome::Unbounded => Ok((SupportValue::exact(f64::INFINITY), None)),
                }
            }
            ConvexBody::Intersection(i) => {
                if i.parts.len() == 1 {
                    return i.parts[0].support_inner(v);
                }
                let mut best = f64::INFINITY;
                for part in &i.parts {
                    best = best.min(part.support_inner(v)?.0.value);
                }
                Ok((
                    SupportValue {
                        value: best,
                        exactness: Exactness::UpperBound,
                    },
                    None,
                ))
            }
            ConvexBody::LinearImage(l) => {
                let pulled = l.map.transpose_matvec(v)?;
                let (value, witness) = l.base.support_inner(&pulled)?;
                let witness = match witness {
                    Some(p) => Some(l.map.matvec(&p)?),
                    None => None,
                };
                Ok((value, witness))
            }
        }
    }

    /// A length scale for probing: the mean finite support value over the
    /// coordinate axes, or 1 if every axis is unbounded.
    pub fn probe_scale(&self) -> f64 {
        let n = self.dim();
        let finite: Vec<f64> = (0..n)
            .filter_map(|i| self.support(Direction::axis(n, i).as_slice()).ok())
            .map(|s| s.value)
            .filter(|s| s.is_finite() && *s > 0.0)
            .collect();
        if finite.is_empty() {
            1.0
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        }
    }

    /// Randomized check of central symmetry and midpoint convexity.
    pub fn validate_symmetry(&self, probes: usize, seed: u64) -> Result<SymmetryReport> {
        if probes == 0 {
            return Err(Error::domain("validate_symmetry needs at least one probe"));
        }
        let n = self.dim();
        let scale = self.probe_scale();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> Vec<f64> {
            (0..n)
                .map(|_| scale * std_normal_quantile(rng.gen_range(f64::EPSILON..1.0)))
                .collect()
        };
        let mut report = SymmetryReport {
            probes,
            ..SymmetryReport::default()
        };
        for _ in 0..probes {
            let x = draw();
            let y = draw();
            let in_x = self.member(&x);
            let in_y = self.member(&y);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            if in_x != self.member(&neg) {
                report.symmetry_violations += 1;
            }
            if in_x && in_y {
                report.contained_pairs += 1;
                let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                if !self.member(&mid) {
                    report.convexity_violations += 1;
                }
            }
        }
        Ok(report)
    }
}

/// Outcome of [`ConvexBody::validate_symmetry`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub probes: usize,
    pub contained_pairs: usize,
    pub symmetry_violations: usize,
    pub convexity_violations: usize,
}

impl SymmetryReport {
    pub fn violations(&self) -> usize {
        self.symmetry_violations + self.convexity_violations
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Direction {
        Direction::axis(n, i)
    }

    fn unit_square() -> ConvexBody {
        ConvexBody::h_polytope(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn membership_examples() {
        let cube = ConvexBody::lp_ball(2, f64::INFINITY, 1.0).unwrap();
        assert!(cube.contains(&[0.5, -0.99]).unwrap());
        let slab = ConvexBody::slab(e(2, 0), 1.0).unwrap();
        assert!(!slab.contains(&[1.001, 7.0]).unwrap());
        let ell = ConvexBody::ellipsoid(Matrix::from_diagonal(&[0.25, 1.0 / 9.0])).unwrap();
        assert!(ell.contains(&[2.0, 0.0]).unwrap());
        assert!(!ell.contains(&[2.0, 0.1]).unwrap());
        assert!(matches!(ell.contains(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn support_examples() {
        let ball = ConvexBody::lp_ball(2, 2.0, 2.0).unwrap();
        assert_eq!(ball.support(&[0.0, 1.0]).unwrap(), SupportValue::exact(2.0));
        let slab = ConvexBody::slab(e(2, 0), 1.5).unwrap();
        assert_eq!(slab.support(&[0.0, 1.0]).unwrap(), SupportValue::exact(f64::INFINITY));
        assert_eq!(slab.support(&[-2.0, 0.0]).unwrap(), SupportValue::exact(3.0));
        let cross = ConvexBody::lp_ball(2, 1.0, 1.0).unwrap();
        assert_eq!(cross.support(&[3.0, -4.0]).unwrap().value, 4.0);
        let square = unit_square();
        let s = square.support(&[1.0, 1.0]).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12 && s.exactness == Exactness::Exact);
        let ell = ConvexBody::ellipsoid(Matrix::from_diagonal(&[0.25, 1.0 / 9.0])).unwrap();
        assert!((ell.support(&[1.0, 0.0]).unwrap().value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn support_matches_vertex_enumeration() {
        // cross-polytope vertices ±r e_i and square vertices {±1}²
        let cross = ConvexBody::lp_ball(3, 1.0, 1.5).unwrap();
        let square = unit_square();
        let dirs = [[3.0, -4.0, 0.5], [-0.1, 0.2, -0.3], [0.0, 0.0, 1.0]];
        for v in dirs {
            let brute = (0..3)
                .flat_map(|i| [1.5 * v[i], -1.5 * v[i]])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((cross.support(&v).unwrap().value - brute).abs() < 1e-14);
            let v2 = [v[0], v[1]];
            let brute2 = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
                .iter()
                .map(|z| dot(z, &v2))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((square.support(&v2).unwrap().value - brute2).abs() < 1e-12);
        }
    }

    #[test]
    fn intersection_flags_upper_bound() {
        let ball = ConvexBody::lp_ball(2, 2.0, 1.2).unwrap();
        let both = ConvexBody::intersection(vec![ball.clone(), unit_square()]).unwrap();
        let s = both.support(&[1.0, 1.0]).unwrap();
        assert_eq!(s.exactness, Exactness::UpperBound);
        assert!((s.value - 1.2 * 2f64.sqrt()).abs() < 1e-12);
        let single = ConvexBody::intersection(vec![ball]).unwrap();
        assert_eq!(single.support(&[1.0, 1.0]).unwrap().exactness, Exactness::Exact);
        assert!(both.has_intersection());
    }

    #[test]
    fn unbounded_polytope() {
        let strip = ConvexBody::h_polytope(vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
        assert!(strip.support(&[0.3, 1.0]).unwrap().value.is_infinite());
    }

    #[test]
    fn construction_errors() {
        assert!(ConvexBody::h_polytope(vec![vec![1.0, 0.0]], vec![-1.0]).is_err());
        assert!(ConvexBody::h_polytope(vec![vec![0.0, 0.0]], vec![1.0]).is_err());
        assert!(ConvexBody::slab(e(2, 0), 0.0).is_err());
        assert!(ConvexBody::lp_ball(2, 0.5, 1.0).is_err());
        assert!(ConvexBody::intersection(vec![]).is_err());
        let mixed = vec![unit_square(), ConvexBody::lp_ball(3, 2.0, 1.0).unwrap()];
        assert!(matches!(ConvexBody::intersection(mixed), Err(Error::Shape(_))));
        let singular = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(unit_square().transform(&singular), Err(Error::Definiteness(_))));
    }

    #[test]
    fn transform_examples() {
        let ball = ConvexBody::lp_ball(2, 2.0, 1.5).unwrap();
        let scaled = ball.transform(&Matrix::from_diagonal(&[3.0, 3.0])).unwrap();
        let u = Direction::normalize(&[0.3, -0.7]).unwrap();
        assert!((scaled.support(u.as_slice()).unwrap().value - 4.5).abs() < 1e-12);

        let (c, s) = (0.6f64, 0.8f64);
        let rot = Matrix::from_rows(&[vec![c, -s], vec![s, c]]).unwrap();
        let slab = ConvexBody::slab(e(2, 0), 0.7).unwrap().transform(&rot).unwrap();
        let n = [c, s];
        assert!((slab.support(&n).unwrap().value - 0.7).abs() < 1e-12);
        assert!((slab.support(&[-c, -s]).unwrap().value - 0.7).abs() < 1e-12);
        assert!(slab.contains(&[0.69 * c, 0.69 * s]).unwrap());
        assert!(!slab.contains(&[0.71 * c, 0.71 * s]).unwrap());

        let id = unit_square().transform(&Matrix::identity(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            assert_eq!(id.contains(&x).unwrap(), unit_square().contains(&x).unwrap());
        }
    }

    #[test]
    fn nested_images_compose() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 3.0]]).unwrap();
        let twice = unit_square().transform(&a).unwrap().transform(&b).unwrap();
        match &twice {
            ConvexBody::LinearImage(img) => assert!(matches!(img.base(), ConvexBody::HPolytope(_))),
            _ => panic!("expected a linear image"),
        }
        let once = unit_square().transform(&b.matmul(&a).unwrap()).unwrap();
        let v = [0.4, -1.3];
        assert!((twice.support(&v).unwrap().value - once.support(&v).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn symmetry_validation() {
        let bodies = vec![
            ConvexBody::slab(Direction::normalize(&[1.0, 2.0, 0.5]).unwrap(), 0.8).unwrap(),
            ConvexBody::lp_ball(3, 1.0, 1.0).unwrap(),
            ConvexBody::lp_ball(3, 3.5, 1.0).unwrap(),
            ConvexBody::lp_ball(3, f64::INFINITY, 1.0).unwrap(),
            ConvexBody::ellipsoid(Matrix::from_diagonal(&[1.0, 4.0, 0.25])).unwrap(),
            ConvexBody::h_polytope(
                vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0], vec![1.0, -1.0, 0.5]],
                vec![1.0, 1.0, 2.0],
            )
            .unwrap(),
        ];
        let map = Matrix::from_rows(&[vec![1.0, 0.5, 0.0], vec![0.0, 2.0, 0.3], vec![0.1, 0.0, 1.0]])
            .unwrap();
        let mut all = bodies.clone();
        all.push(bodies[5].transform(&map).unwrap());
        all.push(ConvexBody::intersection(bodies.clone()).unwrap());
        for body in &all {
            let report = body.validate_symmetry(10_000, 99).unwrap();
            assert_eq!(report.violations(), 0, "{body:?}");
            assert!(report.contained_pairs > 0);
        }
    }
}
