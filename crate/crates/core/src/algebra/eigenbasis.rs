//! Eigenbasis `T_{l,m}` of the Laplacian and a real orthonormal basis of
//! su(n) built from it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::element::{CMatrix, C64};
use super::spin::{diag_pos, SpinBasis};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct EigenBasisEntry {
    pub l: usize,
    pub m: isize,
    /// Supported on diagonal offset `m`, unit norm, `Delta T = -l(l+1) T`.
    pub t: CMatrix,
}

/// Real unit eigenvectors of the tridiagonal block at offset `m`, ordered by
/// degree `l = |m|, ..., n-1`. Signs are fixed so that the first entry above
/// `1e-12` in magnitude is positive.
pub(crate) fn diagonal_modes(basis: &SpinBasis, m: isize) -> Vec<(usize, Vec<f64>)> {
    let block = basis.block(m);
    let len = block.diag.len();
    let mut dense = DMatrix::<f64>::zeros(len, len);
    for i in 0..len {
        dense[(i, i)] = block.diag[i];
        if i + 1 < len {
            dense[(i, i + 1)] = block.off[i];
            dense[(i + 1, i)] = block.off[i];
        }
    }
    let eig = SymmetricEigen::new(dense);
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .into_iter()
        .enumerate()
        .map(|(rank, idx)| {
            let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            if let Some(lead) = v.iter().find(|x| x.abs() > 1e-12) {
                if *lead < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            (m.unsigned_abs() + rank, v)
        })
        .collect()
}

fn place(n: usize, m: isize, values: &[f64], factor: C64) -> CMatrix {
    let mut t = CMatrix::zeros(n, n);
    for (p, &v) in values.iter().enumerate() {
        t[diag_pos(m, p)] = factor * v;
    }
    t
}

/// All `T_{l,m}` with `1 <= l <= l_max`, ordered by `l` then `m`.
///
/// `T_{l,m} = i sqrt(n) v` placed on diagonal `m`, with `v` the unit
/// eigenvector of the block; its leading nonzero entry is therefore
/// positive imaginary.
pub fn eigenbasis_build(basis: &SpinBasis, l_max: usize) -> Result<Vec<EigenBasisEntry>> {
    let n = basis.n();
    if l_max < 1 || l_max > n - 1 {
        return Err(Error::InvalidArgument(format!(
            "l_max = {l_max} outside 1..={}",
            n - 1
        )));
    }
    let amp = C64::new(0.0, (n as f64).sqrt());
    let mut per_m: Vec<Vec<(usize, Vec<f64>)>> = Vec::new();
    for m in -(l_max as isize)..=(l_max as isize) {
        per_m.push(diagonal_modes(basis, m));
    }
    let mut out = Vec::new();
    for l in 1..=l_max {
        for m in -(l as isize)..=(l as isize) {
            let modes = &per_m[(m + l_max as isize) as usize];
            let (_, v) = &modes[l - m.unsigned_abs()];
            out.push(EigenBasisEntry {
                l,
                m,
                t: place(n, m, v, amp),
            });
        }
    }
    Ok(out)
}

/// One element of the real orthonormal basis of su(n), stored sparsely.
#[derive(Clone, Debug)]
pub struct RealBasisElement {
    pub l: usize,
    /// Signed order: `m > 0` is the symmetric (cosine-like) combination of
    /// `T_{l,|m|}` and its adjoint, `m < 0` the antisymmetric one.
    pub m: isize,
    entries: Vec<(usize, usize, C64)>,
}

impl RealBasisElement {
    pub fn to_matrix(&self, n: usize) -> CMatrix {
        let mut out = CMatrix::zeros(n, n);
        for &(r, c, v) in &self.entries {
            out[(r, c)] = v;
        }
        out
    }

    /// `<E, W>` (real part).
    pub fn pair(&self, w: &CMatrix) -> f64 {
        let n = w.nrows() as f64;
        self.entries
            .iter()
            .map(|&(r, c, v)| (v.conj() * w[(r, c)]).re)
            .sum::<f64>()
            / n
    }
}

/// Orthonormal basis of su(n) (dimension `n^2 - 1`) made of Laplacian
/// eigenvectors; each element has a definite degree `l`.
#[derive(Clone, Debug)]
pub struct RealBasis {
    n: usize,
    elements: Vec<RealBasisElement>,
}

impl RealBasis {
    pub fn new(basis: &SpinBasis) -> Self {
        Self::up_to(basis, basis.n() - 1)
    }

    /// Elements with `l <= l_max`, ordered by `l` then signed `m`.
    pub fn up_to(basis: &SpinBasis, l_max: usize) -> Self {
        let n = basis.n();
        let sqrt_n = (n as f64).sqrt();
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let modes: Vec<Vec<(usize, Vec<f64>)>> =
            (0..=l_max as isize).map(|m| diagonal_modes(basis, m)).collect();
        let mut elements = Vec::with_capacity(l_max * (l_max + 2));
        for l in 1..=l_max {
            for m in -(l as isize)..=(l as isize) {
                let k = m.unsigned_abs();
                let v = &modes[k][l - k].1;
                let mut entries = Vec::with_capacity(2 * v.len());
                for (p, &x) in v.iter().enumerate() {
                    let (r, c) = diag_pos(k as isize, p);
                    if m == 0 {
                        entries.push((r, c, C64::new(0.0, sqrt_n * x)));
                    } else if m > 0 {
                        let z = C64::new(0.0, sqrt_n * x * half);
                        entries.push((r, c, z));
                        entries.push((c, r, z));
                    } else {
                        let z = sqrt_n * x * half;
                        entries.push((r, c, C64::new(-z, 0.0)));
                        entries.push((c, r, C64::new(z, 0.0)));
                    }
                }
                elements.push(RealBasisElement { l, m, entries });
            }
        }
        Self { n, elements }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[RealBasisElement] {
        &self.elements
    }

    pub fn matrix(&self, k: usize) -> CMatrix {
        self.elements[k].to_matrix(self.n)
    }

    /// Degree-`l` Laplacian eigenvalue `l(l+1)` of `-Delta` for element `k`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let l = self.elements[k].l as f64;
        l * (l + 1.0)
    }

    /// Coordinates `<E_k, W>`.
    pub fn coords(&self, w: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.elements.iter().map(|e| e.pair(w)))
    }

    pub fn synthesize(&self, coords: &[f64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        for (e, &c) in self.elements.iter().zip(coords) {
            for &(r, col, v) in &e.entries {
                out[(r, col)] += v * c;
            }
        }
        out
    }
}
