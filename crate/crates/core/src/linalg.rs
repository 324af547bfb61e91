//! Small dense linear algebra for symmetric positive-definite matrices.
//!
//! Sizes are desk scale (`n ≤ 64`), so everything is plain O(n³) dense code on
//! row-major `Vec<f64>` storage.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension accepted by the dense routines.
pub const MAX_DIM: usize = 64;

/// Relative asymmetry tolerated (and then symmetrized away) in SPD input.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Smallest admissible `λ_min / λ_max` for a covariance.
pub const MIN_EIGEN_RATIO: f64 = 1e-10;

/// Largest admissible 1-norm condition number of a linear map.
pub const MAX_CONDITION: f64 = 1e10;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from rows; all rows must have equal, nonzero length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::shape("matrix must be nonempty"));
        }
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::shape("matrix rows have unequal lengths"));
        }
        Ok(Matrix {
            rows: n_rows,
            cols: n_cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::shape(format!(
                "vector of length {} does not match {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `Aᵀ v`.
    pub fn transpose_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::shape(format!(
                "vector of length {} does not match {} rows",
                v.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// True when every off-diagonal entry is exactly zero and the diagonal is one.
    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| self[(i, j)] == if i == j { 1.0 } else { 0.0 })
            })
    }

    fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    fn check_symmetric(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::shape(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let defect = self.symmetry_defect();
        if defect > SYMMETRY_TOL * scale {
            return Err(Error::shape(format!(
                "matrix is not symmetric (max asymmetry {defect:e})"
            )));
        }
        Ok(())
    }

    fn symmetrized(&self) -> Matrix {
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in 0..i {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        s
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting.
    ///
    /// Fails with a definiteness error when the matrix is singular or its
    /// 1-norm condition number exceeds [`MAX_CONDITION`].
    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::shape("only square matrices can be inverted"));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        let scale = self.max_abs();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
                .expect("nonempty range");
            let pivot = a[(pivot_row, col)];
            if pivot.abs() <= f64::EPSILON * scale * n as f64 || pivot == 0.0 {
                return Err(Error::Definiteness("matrix is singular".into()));
            }
            if pivot_row != col {
                for j in 0..n {
                    a.data.swap(pivot_row * n + j, col * n + j);
                    inv.data.swap(pivot_row * n + j, col * n + j);
                }
            }
            for j in 0..n {
                a[(col, j)] /= pivot;
                inv[(col, j)] /= pivot;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let factor = a[(i, col)];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[(i, j)] -= factor * a[(col, j)];
                    inv[(i, j)] -= factor * inv[(col, j)];
                }
            }
        }
        let cond = self.norm_1() * inv.norm_1();
        if !(cond <= MAX_CONDITION) {
            return Err(Error::Definiteness(format!(
                "matrix is too ill-conditioned (condition number {cond:e})"
            )));
        }
        Ok(inv)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigenpairs of a symmetric matrix; `vectors` holds the eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymmetricEigen {
    /// `V f(Λ) Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let fk = f(lambda);
            for i in 0..n {
                let vik = self.vectors[(i, k)] * fk;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)];
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix {
        self.map_spectrum(|l| l)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(s: &Matrix) -> Result<SymmetricEigen> {
    s.check_symmetric()?;
    let n = s.rows();
    let mut a = s.symmetrized();
    let mut v = Matrix::identity(n);
    let total = a.frobenius_norm();

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * total || off == 0.0 {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
            let values = order.iter().map(|&k| a[(k, k)]).collect();
            let mut vectors = Matrix::zeros(n, n);
            for (col, &k) in order.iter().enumerate() {
                for i in 0..n {
                    vectors[(i, col)] = v[(i, k)];
                }
            }
            return Ok(SymmetricEigen { values, vectors });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::Numeric("Jacobi eigensolver did not converge".into()))
}

/// Lower Cholesky factor `L` with `S = L Lᵀ`.
pub fn cholesky(s: &Matrix) -> Result<Matrix> {
    s.check_symmetric()?;
    let n = s.rows();
    let max_diag = (0..n).map(|i| s[(i, i)]).fold(0.0, f64::max);
    let threshold = n as f64 * f64::EPSILON * max_diag;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > threshold) {
            return Err(Error::Definiteness(format!(
                "Cholesky pivot {d:e} at index {j} is not positive"
            )));
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut x = s[(i, j)];
            for k in 0..j {
                x -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = x / djj;
        }
    }
    Ok(l)
}

/// A validated symmetric positive-definite matrix with cached factorizations.
#[derive(Debug, Clone)]
pub struct Covariance {
    sigma: Matrix,
    cholesky: Matrix,
    inverse: Matrix,
    inv_sqrt: Matrix,
    sqrt: Matrix,
    eigenvalues: Vec<f64>,
}

impl Covariance {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::shape(format!(
                "covariance must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if matrix.rows() > MAX_DIM {
            return Err(Error::shape(format!(
                "dimension {} exceeds the dense limit {MAX_DIM}",
                matrix.rows()
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::shape("covariance has non-finite entries"));
        }
        matrix.check_symmetric()?;
        let sigma = matrix.symmetrized();
        let eig = sym_eigen(&sigma)?;
        let (lo, hi) = (eig.values[0], *eig.values.last().expect("n >= 1"));
        if !(hi > 0.0) || lo < MIN_EIGEN_RATIO * hi {
            return Err(Error::Definiteness(format!(
                "covariance eigenvalues span [{lo:e}, {hi:e}]; smallest must exceed {MIN_EIGEN_RATIO:e} x largest"
            )));
        }
        let cholesky = cholesky(&sigma)?;
        let n = sigma.rows();
        let mut inverse = Matrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = cholesky_solve(&cholesky, &e);
            for i in 0..n {
                inverse[(i, j)] = col[i];
            }
        }
        let inverse = inverse.symmetrized();
        let inv_sqrt = eig.map_spectrum(|l| 1.0 / l.sqrt()).symmetrized();
        let sqrt = eig.map_spectrum(f64::sqrt).symmetrized();
        Ok(Covariance {
            sigma,
            cholesky,
            inverse,
            inv_sqrt,
            sqrt,
            eigenvalues: eig.values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Covariance::new(Matrix::identity(n)).expect("identity is SPD")
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Covariance::new(Matrix::from_diagonal(diag))
    }

    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.sigma
    }

    pub fn cholesky(&self) -> &Matrix {
        &self.cholesky
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    /// Symmetric inverse square root `Σ^{-1/2}`.
    pub fn inv_sqrt(&self) -> &Matrix {
        &self.inv_sqrt
    }

    /// Symmetric square root `Σ^{1/2}`.
    pub fn sqrt(&self) -> &Matrix {
        &self.sqrt
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn is_identity(&self) -> bool {
        self.sigma.is_identity()
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::shape(format!(
                "vector of length {} does not match dimension {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `Σ v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.sigma.matvec(v)
    }

    /// `Σ⁻¹ b` through the Cholesky factor.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b)?;
        Ok(cholesky_solve(&self.cholesky, b))
    }

    /// `⟨u, Σ⁻¹u⟩`, computed by a Cholesky solve.
    pub fn quad_form_inv(&self, u: &[f64]) -> Result<f64> {
        let x = self.solve(u)?;
        Ok(dot(u, &x).max(0.0))
    }

    /// `‖Σ^{-1/2}u‖`.
    pub fn mahalanobis_norm(&self, u: &Direction) -> Result<f64> {
        self.check_len(u.as_slice())?;
        let w = self.inv_sqrt.matvec(u.as_slice())?;
        let m = norm(&w);
        debug_assert!({
            let q = self.quad_form_inv(u.as_slice())?.sqrt();
            (m - q).abs() <= 1e-6 * m.max(q)
        });
        Ok(m)
    }
}

/// Solves `L Lᵀ x = b` for lower-triangular `L`.
fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// A unit vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Accepts `v` only if it is already a unit vector (within 1e-12).
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if v.is_empty() || !n.is_finite() || (n - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "direction must be a finite unit vector, has norm {n}"
            )));
        }
        Ok(Direction(v))
    }

    /// Rescales a nonzero finite vector to unit length.
    pub fn normalize(v: &[f64]) -> Result<Self> {
        let n = norm(v);
        if v.is_empty() || !n.is_finite() || n == 0.0 {
            return Err(Error::domain(
                "cannot normalize an empty, zero or non-finite vector",
            ));
        }
        Ok(Direction(v.iter().map(|x| x / n).collect()))
    }

    /// The `i`-th coordinate axis in dimension `n`.
    pub fn axis(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Direction(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn negated(&self) -> Direction {
        Direction(self.0.iter().map(|x| -x).collect())
    }
}
