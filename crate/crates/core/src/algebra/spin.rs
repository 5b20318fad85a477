//! Spin generators, the Hoppe–Yau Laplacian and its per-diagonal inverse.
//!
//! The generators are `X_a = -i hbar S_a` where `S_a` are the spin
//! `s = (n-1)/2` angular momentum matrices, so that
//! `[X_i, X_j] = hbar eps_ijk X_k` and `<X_a, X_a> = 1/3`.
//!
//! The Laplacian `(1/hbar^2) sum_a [X_a, [X_a, .]]` maps every diagonal
//! offset `m` to itself. On that diagonal `-Delta` acts as a real symmetric
//! tridiagonal matrix with eigenvalues `l(l+1)`, `l = |m| .. n-1`:
//!
//! ```text
//! -Delta W = 2 s(s+1) W - 2 S3 W S3 - S+ W S- - S- W S+
//! ```
//!
//! which is what `poisson_solve` factorizes once per offset.

use nalgebra::Vector3;

use super::element::{check_same, commutator, dot, AlgebraElement, CMatrix, C64};
use super::tridiag::{tridiag_mul, TridiagFactor};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct DiagonalBlock {
    pub(crate) diag: Vec<f64>,
    pub(crate) off: Vec<f64>,
    factor: TridiagFactor,
}

/// Generators of the irreducible `n`-dimensional representation of so(3)
/// plus the cached Laplacian factorizations.
#[derive(Clone, Debug)]
pub struct SpinBasis {
    n: usize,
    hbar: f64,
    generators: [AlgebraElement; 3],
    /// `ladder[j] = sqrt(j (n - j))`, the `(j-1, j)` entry of `S+`.
    ladder: Vec<f64>,
    mu: Vec<f64>,
    blocks: Vec<DiagonalBlock>,
}

/// Row and column of position `p` on diagonal offset `m`.
#[inline]
pub(crate) fn diag_pos(m: isize, p: usize) -> (usize, usize) {
    if m >= 0 {
        (p, p + m as usize)
    } else {
        (p + m.unsigned_abs(), p)
    }
}

impl SpinBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let nf = n as f64;
        let hbar = 2.0 / (nf * nf - 1.0).sqrt();
        let s = (nf - 1.0) / 2.0;
        let mu: Vec<f64> = (0..n).map(|j| s - j as f64).collect();
        let ladder: Vec<f64> = (0..=n).map(|j| ((j * (n - j)) as f64).sqrt()).collect();

        let mut s1 = CMatrix::zeros(n, n);
        let mut s2 = CMatrix::zeros(n, n);
        let mut s3 = CMatrix::zeros(n, n);
        for j in 0..n {
            s3[(j, j)] = C64::new(mu[j], 0.0);
        }
        for j in 1..n {
            // S+ has entry ladder[j] at (j-1, j); S1 = (S+ + S-)/2, S2 = (S+ - S-)/(2i).
            let a = ladder[j];
            s1[(j - 1, j)] = C64::new(a / 2.0, 0.0);
            s1[(j, j - 1)] = C64::new(a / 2.0, 0.0);
            s2[(j - 1, j)] = C64::new(0.0, -a / 2.0);
            s2[(j, j - 1)] = C64::new(0.0, a / 2.0);
        }
        let scale = C64::new(0.0, -hbar);
        let generators = [
            AlgebraElement::from_raw(s1 * scale),
            AlgebraElement::from_raw(s2 * scale),
            AlgebraElement::from_raw(s3 * scale),
        ];

        let casimir = s * (s + 1.0);
        let mut blocks = Vec::with_capacity(2 * n - 1);
        for m in -(n as isize - 1)..=(n as isize - 1) {
            let len = n - m.unsigned_abs();
            let mut diag = Vec::with_capacity(len);
            let mut off = Vec::with_capacity(len.saturating_sub(1));
            for p in 0..len {
                let (r, c) = diag_pos(m, p);
                diag.push(2.0 * casimir - 2.0 * mu[r] * mu[c]);
                if p + 1 < len {
                    off.push(-ladder[r + 1] * ladder[c + 1]);
                }
            }
            // On the main diagonal the constant vector spans the kernel; the
            // leading (n-1) block is positive definite and the last unknown
            // is pinned, then the trace is removed.
            let factor = if m == 0 {
                TridiagFactor::new(&diag[..len - 1], &off[..len - 2])
            } else {
                TridiagFactor::new(&diag, &off)
            };
            blocks.push(DiagonalBlock { diag, off, factor });
        }

        Ok(Self {
            n,
            hbar,
            generators,
            ladder,
            mu,
            blocks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn generators(&self) -> &[AlgebraElement; 3] {
        &self.generators
    }

    /// `X_1`, `X_2`, `X_3` for `alpha` in `0..3`.
    pub fn generator(&self, alpha: usize) -> &AlgebraElement {
        &self.generators[alpha]
    }

    /// Eigenvalues `s, s-1, ..., -s` of `S3` in diagonal order.
    pub fn spin_weights(&self) -> &[f64] {
        &self.mu
    }

    pub(crate) fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    pub(crate) fn block(&self, m: isize) -> &DiagonalBlock {
        &self.blocks[(m + self.n as isize - 1) as usize]
    }

    fn check(&self, w: &CMatrix) -> Result<()> {
        if w.nrows() != self.n || w.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: w.nrows(),
            });
        }
        Ok(())
    }

    /// `Delta_n W` as the double-commutator sum.
    pub fn laplacian_apply(&self, w: &AlgebraElement) -> Result<AlgebraElement> {
        self.check(w)?;
        Ok(AlgebraElement::from_raw(self.laplacian_matrix(w)))
    }

    /// Double-commutator Laplacian on any square matrix of size `n`.
    pub fn laplacian_matrix(&self, w: &CMatrix) -> CMatrix {
        let mut acc = CMatrix::zeros(self.n, self.n);
        for x in &self.generators {
            let inner = commutator(x, w);
            acc += commutator(x, &inner);
        }
        acc / C64::new(self.hbar * self.hbar, 0.0)
    }

    /// `Delta_n W` through the tridiagonal blocks, O(n^2).
    pub fn laplacian_banded(&self, w: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n, n);
        let mut x = Vec::with_capacity(n);
        let mut y = vec![C64::new(0.0, 0.0); n];
        for m in -(n as isize - 1)..=(n as isize - 1) {
            let block = self.block(m);
            let len = block.diag.len();
            x.clear();
            x.extend((0..len).map(|p| w[diag_pos(m, p)]));
            tridiag_mul(&block.diag, &block.off, &x, &mut y[..len]);
            for (p, v) in y[..len].iter().enumerate() {
                out[diag_pos(m, p)] = -v;
            }
        }
        out
    }

    /// The unique traceless `P` with `Delta_n P = W`.
    pub fn poisson_solve(&self, w: &AlgebraElement) -> Result<AlgebraElement> {
        self.check(w)?;
        Ok(AlgebraElement::from_raw(self.poisson_matrix(w)))
    }

    /// Per-diagonal inverse on any square matrix; the trace of `w` is ignored
    /// and the result is traceless.
    pub fn poisson_matrix(&self, w: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n, n);
        let mut x = Vec::with_capacity(n);
        for m in -(n as isize - 1)..=(n as isize - 1) {
            let block = self.block(m);
            let len = block.diag.len();
            x.clear();
            x.extend((0..len).map(|p| -w[diag_pos(m, p)]));
            if m == 0 {
                let mean = x.iter().sum::<C64>() / C64::new(len as f64, 0.0);
                x.iter_mut().for_each(|v| *v -= mean);
                x[len - 1] = C64::new(0.0, 0.0);
                block.factor.solve_in_place(&mut x[..len - 1]);
                let mean = x.iter().sum::<C64>() / C64::new(len as f64, 0.0);
                x.iter_mut().for_each(|v| *v -= mean);
            } else {
                block.factor.solve_in_place(&mut x);
            }
            for (p, v) in x.iter().enumerate() {
                out[diag_pos(m, p)] = *v;
            }
        }
        out
    }

    /// Angular momentum `(<W, X_1>, <W, X_2>, <W, X_3>)`.
    pub fn momentum(&self, w: &CMatrix) -> Result<Vector3<f64>> {
        self.check(w)?;
        Ok(Vector3::from_fn(|a, _| dot(w, &self.generators[a])))
    }

    /// `H(W) = (1/2) <P, W>` with `Delta_n P = W`.
    pub fn hamiltonian(&self, w: &AlgebraElement) -> Result<f64> {
        self.check(w)?;
        let p = self.poisson_matrix(w);
        Ok(0.5 * dot(&p, w))
    }

    /// Orthogonal projection onto `span{X_1, X_2, X_3}`; returns the real
    /// coefficients `a_alpha` and `P_1 W = sum a_alpha X_alpha`.
    pub fn project_eigenspace_1(&self, w: &CMatrix) -> Result<(Vector3<f64>, CMatrix)> {
        self.check(w)?;
        let mut coeffs = Vector3::zeros();
        let mut proj = CMatrix::zeros(self.n, self.n);
        for (a, x) in self.generators.iter().enumerate() {
            let c = dot(x, w) / dot(x, x);
            coeffs[a] = c;
            proj += x.as_matrix() * C64::new(c, 0.0);
        }
        Ok((coeffs, proj))
    }

    pub(crate) fn check_same(&self, a: &CMatrix, b: &CMatrix) -> Result<()> {
        self.check(a)?;
        check_same(a, b)
    }
}
