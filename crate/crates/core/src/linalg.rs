//! Dense square complex matrices and the operator (spectral) norm.
//!
//! The spectral norm is the C*-norm of `M_n(ℂ)`, so every bound and
//! residual in the crate is measured with [`ComplexMatrix::spectral_norm`].

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::Scalar;

/// Iteration cap of the default spectral-norm evaluation.
pub const NORM_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("expected {expected} entries for an {dim}x{dim} matrix, got {got}")]
    WrongLength { dim: usize, expected: usize, got: usize },
    #[error("matrix dimension must be positive")]
    EmptyMatrix,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("power iteration did not converge in {iterations} iterations (last estimate {estimate})")]
    NormNotConverged { estimate: f64, iterations: usize },
}

/// Dense `n×n` complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: fmt::Debug> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for row in self.data.chunks(self.dim.max(1)) {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> ComplexMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex::one();
        }
        m
    }

    /// Matrix unit `E_{row,col}` (zero-based indices).
    pub fn unit(dim: usize, row: usize, col: usize) -> Self {
        assert!(row < dim && col < dim, "unit index out of range");
        let mut m = Self::zeros(dim);
        m.data[row * dim + col] = Complex::one();
        m
    }

    pub fn diag(entries: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * entries.len() + i] = z;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and non-finite values.
    pub fn from_row_major(dim: usize, data: Vec<Complex<T>>) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if data.len() != dim * dim {
            return Err(LinalgError::WrongLength {
                dim,
                expected: dim * dim,
                got: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: k / dim,
                col: k % dim,
            });
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from nested rows of `(re, im)` pairs.
    pub fn from_rows(rows: &[&[(f64, f64)]]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(LinalgError::WrongLength {
                    dim,
                    expected: dim * dim,
                    got: rows.iter().map(|r| r.len()).sum(),
                });
            }
            data.extend(row.iter().map(|&(re, im)| Complex::new(T::lit(re), T::lit(im))));
        }
        Self::from_row_major(dim, data)
    }

    /// Builds a matrix with real entries from nested rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let pairs: Vec<Vec<(f64, f64)>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| (x, 0.0)).collect())
            .collect();
        let refs: Vec<&[(f64, f64)]> = pairs.iter().map(|r| r.as_slice()).collect();
        Self::from_rows(&refs)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.is_zero())
    }

    fn check_same_dim(&self, other: &Self) -> Result<(), LinalgError> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(LinalgError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            })
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn try_matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_dim(other)?;
        Ok(self.matmul_unchecked(other))
    }

    /// Hilbert–Schmidt pairing `trace(x · y*)`.
    pub fn try_hs_inner(&self, other: &Self) -> Result<Complex<T>, LinalgError> {
        self.check_same_dim(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .fold(Complex::zero(), |acc, z| acc + z))
    }

    /// Hilbert–Schmidt pairing; panics on dimension mismatch.
    pub fn hs_inner(&self, other: &Self) -> Complex<T> {
        self.try_hs_inner(other).expect("hs_inner: dimension mismatch")
    }

    pub fn scale(&self, lambda: Complex<T>) -> Self {
        self.map(|z| z * lambda)
    }

    pub fn scale_real(&self, t: T) -> Self {
        self.map(|z| z * t)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim)
            .map(|i| self.data[i * self.dim + i])
            .fold(Complex::zero(), |acc, z| acc + z)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest absolute entrywise difference; the test-equality metric.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "max_abs_diff: dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// `‖self − other‖` in the spectral norm.
    pub fn distance(&self, other: &Self) -> T {
        (self - other).norm()
    }

    /// Approximate equality at a scale-aware tolerance:
    /// `max|Δ| ≤ tol · max(1, ‖self‖_F, ‖other‖_F)`.
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        let scale = T::one().max(self.frobenius_norm()).max(other.frobenius_norm());
        self.dim == other.dim && self.max_abs_diff(other) <= tol * scale
    }

    /// Largest singular value via power iteration on the Gram matrix `x*x`.
    ///
    /// Two deterministic start vectors are used (all-ones and a fixed generic
    /// vector) and the larger Rayleigh quotient wins, so a start vector that is
    /// orthogonal to the top singular vector cannot under-report the norm.
    pub fn spectral_norm(&self, tol: T, max_iter: usize) -> Result<T, LinalgError> {
        if !(tol > T::zero()) {
            return Err(LinalgError::InvalidTolerance(tol.to_f64_lossy()));
        }
        if self.is_zero() {
            return Ok(T::zero());
        }
        // prescale so the Gram matrix neither overflows nor underflows
        let peak = self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max);
        if !peak.is_finite() {
            return Ok(peak);
        }
        let unit = self.scale_real(peak.recip());
        let gram = unit.adjoint().matmul_unchecked(&unit);
        let n = self.dim;
        let ones = vec![Complex::one(); n];
        let generic: Vec<Complex<T>> = (0..n)
            .map(|k| {
                let t = T::lit(0.618_033_988_749_894_9 * (k as f64 + 1.0) + 0.3);
                Complex::new(t.cos(), t.sin()) * (T::one() + T::lit(k as f64) / T::lit(n as f64))
            })
            .collect();
        let mut best = T::zero();
        let mut failure = None;
        for start in [ones, generic] {
            match gram_power_iteration(&gram, start, tol, max_iter) {
                Ok(lambda) => best = best.max(lambda),
                Err((lambda, iterations)) => {
                    best = best.max(lambda);
                    failure = Some(iterations);
                }
            }
        }
        match failure {
            None => Ok(best.sqrt() * peak),
            Some(iterations) => Err(LinalgError::NormNotConverged {
                estimate: (best.sqrt() * peak).to_f64_lossy(),
                iterations,
            }),
        }
    }

    /// Spectral norm at the default tolerance and iteration cap.
    ///
    /// Power iteration on a Hermitian PSD matrix approaches the top eigenvalue
    /// from below, so on the rare non-convergence the last estimate is returned.
    pub fn norm(&self) -> T {
        match self.spectral_norm(T::norm_tol(), NORM_MAX_ITER) {
            Ok(v) => v,
            Err(LinalgError::NormNotConverged { estimate, .. }) => T::lit(estimate),
            Err(e) => unreachable!("default spectral norm parameters are valid: {e}"),
        }
    }

    /// Column-stacked vectorization: `E_11, E_21, …, E_nn` ordering.
    pub fn vec_column_stacked(&self) -> Vec<Complex<T>> {
        let n = self.dim;
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                out.push(self.data[i * n + j]);
            }
        }
        out
    }

    /// Inverse of [`vec_column_stacked`](Self::vec_column_stacked).
    pub fn from_column_stacked(dim: usize, v: &[Complex<T>]) -> Self {
        assert_eq!(v.len(), dim * dim, "from_column_stacked: wrong length");
        Self::from_fn(dim, |i, j| v[j * dim + i])
    }

    pub(crate) fn matmul_unchecked(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = vec![Complex::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d = *d + a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

/// Returns the top eigenvalue estimate, or `(estimate, iterations)` on non-convergence.
fn gram_power_iteration<T: Scalar>(
    gram: &ComplexMatrix<T>,
    start: Vec<Complex<T>>,
    tol: T,
    max_iter: usize,
) -> Result<T, (T, usize)> {
    let n = gram.dim;
    let mut v = start;
    let nv = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    v.iter_mut().for_each(|z| *z = *z / nv);
    let mut w = vec![Complex::zero(); n];
    let mut lambda = T::zero();
    for iter in 1..=max_iter {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = gram.data[i * n..(i + 1) * n]
                .iter()
                .zip(&v)
                .fold(Complex::zero(), |acc, (g, x)| acc + g * x);
        }
        let rayleigh = v
            .iter()
            .zip(&w)
            .fold(Complex::<T>::zero(), |acc, (x, y)| acc + x.conj() * y)
            .re;
        let nw = w.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if nw == T::zero() {
            // start vector lies in the null space of the Gram matrix
            return Ok(T::zero());
        }
        let converged = iter > 1 && (rayleigh - lambda).abs() <= tol * rayleigh.abs();
        lambda = rayleigh;
        if converged {
            return Ok(lambda);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = *wi / nw;
        }
    }
    Err((lambda, max_iter))
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

// Operator overloads panic on dimension mismatch; the `try_*` methods report it.

impl<T: Scalar> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        self.try_add(rhs).expect("matrix add")
    }
}

impl<T: Scalar> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        self.try_sub(rhs).expect("matrix sub")
    }
}

impl<T: Scalar> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.try_matmul(rhs).expect("matrix mul")
    }
}

impl<T: Scalar> Neg for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn neg(self) -> ComplexMatrix<T> {
        self.map(|z| -z)
    }
}

impl<T: Scalar> AddAssign<&ComplexMatrix<T>> for ComplexMatrix<T> {
    fn add_assign(&mut self, rhs: &ComplexMatrix<T>) {
        assert_eq!(self.dim, rhs.dim, "matrix add_assign: dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a + b;
        }
    }
}

impl<T: Scalar> SubAssign<&ComplexMatrix<T>> for ComplexMatrix<T> {
    fn sub_assign(&mut self, rhs: &ComplexMatrix<T>) {
        assert_eq!(self.dim, rhs.dim, "matrix sub_assign: dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a - b;
        }
    }
}
