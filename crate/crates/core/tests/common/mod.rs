//! Independent oracles: spin matrices from the textbook formulas and the
//! Laplacian as a dense `n^2 x n^2` operator.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use zeitlin_core::{CMatrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `S_z = diag(s, ..., -s)`, `<m+1|S+|m> = sqrt(s(s+1) - m(m+1))`.
pub fn spin_matrices(n: usize) -> [CMatrix; 3] {
    let s = (n as f64 - 1.0) / 2.0;
    let mut sp = CMatrix::zeros(n, n);
    let mut sz = CMatrix::zeros(n, n);
    for j in 0..n {
        let m = s - j as f64;
        sz[(j, j)] = C64::new(m, 0.0);
        if j > 0 {
            // row j-1 has weight m+1
            sp[(j - 1, j)] = C64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let sm = sp.adjoint();
    let sx = (&sp + &sm) * C64::new(0.5, 0.0);
    let sy = (&sp - &sm) * C64::new(0.0, -0.5);
    [sx, sy, sz]
}

pub fn hbar(n: usize) -> f64 {
    2.0 / ((n * n) as f64 - 1.0).sqrt()
}

pub fn generators(n: usize) -> [CMatrix; 3] {
    let h = hbar(n);
    spin_matrices(n).map(|s| s * C64::new(0.0, -h))
}

pub fn comm(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn pair(a: &CMatrix, b: &CMatrix) -> C64 {
    (a.adjoint() * b).trace() / C64::new(a.nrows() as f64, 0.0)
}

/// Dense matrix of `W -> (1/hbar^2) sum [X, [X, W]]` acting on the
/// column-major vectorization of `W`.
pub fn dense_laplacian(n: usize) -> DMatrix<C64> {
    let x = generators(n);
    let h2 = hbar(n).powi(2);
    let mut op = DMatrix::zeros(n * n, n * n);
    for k in 0..n * n {
        let mut e = CMatrix::zeros(n, n);
        e[(k % n, k / n)] = C64::new(1.0, 0.0);
        let mut out = CMatrix::zeros(n, n);
        for g in &x {
            out += comm(g, &comm(g, &e));
        }
        out /= C64::new(h2, 0.0);
        op.set_column(k, &DVector::from_column_slice(out.as_slice()));
    }
    op
}

/// Eigen-decomposition of the dense Laplacian, eigenvalues ascending.
pub fn dense_eigen(n: usize) -> (Vec<f64>, DMatrix<C64>) {
    let op = dense_laplacian(n);
    let op = (&op + op.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(op);
    let mut idx: Vec<usize> = (0..n * n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n * n, n * n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// `Delta^{-1} W` by expansion in the dense eigenvectors, dropping the
/// kernel (the identity).
pub fn dense_poisson(n: usize, eig: &(Vec<f64>, DMatrix<C64>), w: &CMatrix) -> CMatrix {
    let v = DVector::from_column_slice(w.as_slice());
    let mut out = DVector::zeros(n * n);
    for (k, &lam) in eig.0.iter().enumerate() {
        if lam.abs() < 1e-8 {
            continue;
        }
        let col = eig.1.column(k);
        let c = col.dotc(&v);
        out += col * (c / C64::new(lam, 0.0));
    }
    CMatrix::from_column_slice(n, n, out.as_slice())
}

pub fn gaussian_skew(n: usize, r: &mut ChaCha8Rng, traceless: bool) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| {
        C64::new(r.random::<f64>() * 2.0 - 1.0, r.random::<f64>() * 2.0 - 1.0)
    });
    let mut x = (&z - z.adjoint()) * C64::new(0.5, 0.0);
    if traceless {
        let t = x.trace() / C64::new(n as f64, 0.0);
        for j in 0..n {
            x[(j, j)] -= t;
        }
    }
    x
}

/// Random unitary from the QR factorization of a complex Gaussian-like matrix.
pub fn random_unitary(n: usize, r: &mut ChaCha8Rng) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| {
        C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)
    });
    z.qr().q()
}

/// `(U i diag(w) U^dagger, U i diag(p) U^dagger)`.
pub fn commuting_pair(u: &CMatrix, w: &[f64], p: &[f64]) -> (CMatrix, CMatrix) {
    let n = w.len();
    let dw = CMatrix::from_fn(n, n, |r, c| if r == c { C64::new(0.0, w[r]) } else { C64::new(0.0, 0.0) });
    let dp = CMatrix::from_fn(n, n, |r, c| if r == c { C64::new(0.0, p[r]) } else { C64::new(0.0, 0.0) });
    (u * dw * u.adjoint(), u * dp * u.adjoint())
}

pub fn traceless_vec(n: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
    let m = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= m);
    v
}

pub fn fro(a: &CMatrix) -> f64 {
    (a.iter().map(|z| z.norm_sqr()).sum::<f64>() / a.nrows() as f64).sqrt()
}
