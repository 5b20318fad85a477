//! Elements of su(n) and the matrix kernels every other module builds on.

use std::ops::Deref;

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// A traceless skew-Hermitian `n x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    mat: CMatrix,
}

impl AlgebraElement {
    /// Validates `mat` against the default skew-Hermitian tolerance.
    pub fn new(mat: CMatrix) -> Result<Self> {
        Self::with_tolerance(mat, 1e-12)
    }

    /// Validates `mat`; deviations are measured relative to `max(1, max|a_jk|)`.
    pub fn with_tolerance(mat: CMatrix, tol: f64) -> Result<Self> {
        let n = check_square(&mat)?;
        let scale = mat.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
        let deviation = skew_deviation(&mat);
        if deviation > tol * scale {
            return Err(Error::NotSkewHermitian { deviation });
        }
        let trace = mat.trace().norm();
        if trace > tol * scale * n as f64 {
            return Err(Error::NotTraceless { trace });
        }
        Ok(Self { mat })
    }

    /// Orthogonal projection of an arbitrary square matrix onto su(n).
    pub fn project(mat: &CMatrix) -> Self {
        Self {
            mat: remove_trace(&symmetrize(mat)),
        }
    }

    pub(crate) fn from_raw(mat: CMatrix) -> Self {
        Self { mat }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            mat: CMatrix::zeros(n, n),
        }
    }

    /// `i * diag(d)` with the mean of `d` removed.
    pub fn from_diagonal(d: &[f64]) -> Self {
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let n = d.len();
        let mut mat = CMatrix::zeros(n, n);
        for (j, &x) in d.iter().enumerate() {
            mat[(j, j)] = C64::new(0.0, x - mean);
        }
        Self { mat }
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn norm(&self) -> f64 {
        norm(&self.mat)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mat: &self.mat * C64::new(s, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same(&self.mat, &other.mat)?;
        Ok(Self {
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same(&self.mat, &other.mat)?;
        Ok(Self {
            mat: &self.mat - &other.mat,
        })
    }
}

impl Deref for AlgebraElement {
    type Target = CMatrix;

    fn deref(&self) -> &CMatrix {
        &self.mat
    }
}

impl AsRef<CMatrix> for AlgebraElement {
    fn as_ref(&self) -> &CMatrix {
        &self.mat
    }
}

pub(crate) fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() < 2 {
        return Err(Error::InvalidDimension(m.nrows()));
    }
    Ok(m.nrows())
}

pub(crate) fn check_same(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    Ok(())
}

/// `max |a_jk + conj(a_kj)|`.
pub fn skew_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for j in 0..n {
        for k in j..n {
            dev = dev.max((m[(j, k)] + m[(k, j)].conj()).norm());
        }
    }
    dev
}

/// Skew-Hermitian part `(A - A^dagger) / 2`.
pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn remove_trace(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let shift = m.trace() / C64::new(n as f64, 0.0);
    let mut out = m.clone();
    for j in 0..n {
        out[(j, j)] -= shift;
    }
    out
}

/// Scaled Frobenius pairing `(1/n) tr(X^dagger Y)`.
pub fn inner(x: &CMatrix, y: &CMatrix) -> Result<C64> {
    check_same(x, y)?;
    Ok(inner_unchecked(x, y))
}

#[inline]
pub(crate) fn inner_unchecked(x: &CMatrix, y: &CMatrix) -> C64 {
    x.dotc(y) / C64::new(x.nrows() as f64, 0.0)
}

/// Real part of the scaled pairing; exact for skew-Hermitian arguments.
#[inline]
pub(crate) fn dot(x: &CMatrix, y: &CMatrix) -> f64 {
    inner_unchecked(x, y).re
}

pub fn norm_sq(x: &CMatrix) -> f64 {
    x.norm_squared() / x.nrows() as f64
}

pub fn norm(x: &CMatrix) -> f64 {
    norm_sq(x).sqrt()
}

/// Matrix commutator `XY - YX`.
pub fn bracket(x: &CMatrix, y: &CMatrix) -> Result<CMatrix> {
    check_same(x, y)?;
    Ok(commutator(x, y))
}

#[inline]
pub(crate) fn commutator(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x * y - y * x
}

/// Casimir `C_k(W) = (1/n) tr((-iW)^k)`.
pub fn casimir(w: &CMatrix, k: u32) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidArgument("Casimir order must be >= 1".into()));
    }
    let h = hermitian_part(w);
    let mut acc = h.clone();
    for _ in 1..k {
        acc = &acc * &h;
    }
    Ok(acc.trace().re / w.nrows() as f64)
}

/// `-iW`, Hermitian when `W` is skew-Hermitian.
pub(crate) fn hermitian_part(w: &CMatrix) -> CMatrix {
    w * C64::new(0.0, -1.0)
}

/// Ascending eigenvalues of the Hermitian matrix `-iW`.
pub fn sorted_spectrum(w: &CMatrix) -> Vec<f64> {
    let h = hermitian_part(w);
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Matrix exponential of a skew-Hermitian matrix via the spectral
/// decomposition of `-iX`; the result is unitary to rounding.
pub fn expm_skew(x: &CMatrix) -> CMatrix {
    let h = hermitian_part(x);
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::new(0.0, lam).exp();
        for r in 0..scaled.nrows() {
            scaled[(r, j)] *= phase;
        }
    }
    scaled * v.adjoint()
}

/// Frobenius norm of the part of `m` off the main diagonal, scaled like `norm`.
pub fn offdiag_norm(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j != k {
                acc += m[(j, k)].norm_sqr();
            }
        }
    }
    (acc / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMatrix {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 1)] = C64::new(1.0, 2.0);
        m[(1, 0)] = C64::new(-1.0, 2.0);
        m[(0, 0)] = C64::new(0.0, 1.0);
        m[(2, 2)] = C64::new(0.0, -1.0);
        m
    }

    #[test]
    fn validates_skew_hermitian_traceless() {
        assert!(AlgebraElement::new(sample()).is_ok());
        let mut bad = sample();
        bad[(1, 0)] = C64::new(1.0, 2.0);
        assert!(matches!(
            AlgebraElement::new(bad),
            Err(Error::NotSkewHermitian { .. })
        ));
        let mut traced = sample();
        traced[(2, 2)] = C64::new(0.0, 1.0);
        assert!(matches!(
            AlgebraElement::new(traced),
            Err(Error::NotTraceless { .. })
        ));
    }

    #[test]
    fn rejects_small_or_rectangular() {
        assert!(matches!(
            AlgebraElement::new(CMatrix::zeros(1, 1)),
            Err(Error::InvalidDimension(1))
        ));
        assert!(AlgebraElement::new(CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn projection_is_idempotent() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 2)] = C64::new(0.3, -1.0);
        m[(1, 1)] = C64::new(2.0, 0.5);
        let p = AlgebraElement::project(&m);
        let pp = AlgebraElement::project(p.as_matrix());
        assert!((p.as_matrix() - pp.as_matrix()).norm() < 1e-15);
        assert!(AlgebraElement::new(p.into_matrix()).is_ok());
    }

    #[test]
    fn inner_and_casimir_basics() {
        let w = sample();
        let z = CMatrix::zeros(3, 3);
        assert_eq!(inner(&z, &w).unwrap(), C64::new(0.0, 0.0));
        let c2 = casimir(&w, 2).unwrap();
        assert!((c2 - norm_sq(&w)).abs() < 1e-14);
        assert!(casimir(&w, 1).unwrap().abs() < 1e-15);
        assert!(casimir(&w, 0).is_err());
        assert!(inner(&w, &CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn bracket_of_diagonals_vanishes() {
        let a = AlgebraElement::from_diagonal(&[1.0, 2.0, -3.0]);
        let b = AlgebraElement::from_diagonal(&[0.5, -0.2, 4.0]);
        assert_eq!(bracket(&a, &b).unwrap().norm(), 0.0);
        assert_eq!(bracket(&a, &a).unwrap().norm(), 0.0);
    }

    #[test]
    fn exponential_is_unitary() {
        let x = AlgebraElement::project(&sample());
        let u = expm_skew(x.as_matrix());
        let id = CMatrix::identity(3, 3);
        assert!((u.adjoint() * &u - id).norm() < 1e-13);
    }
}
