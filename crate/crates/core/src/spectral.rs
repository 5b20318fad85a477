//! Common eigenbases of commuting pairs, the diagonal-indexed bracket
//! pairing, and the eigenvalue-ratio extrema `L`, `c`, `C`.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::algebra::element::{check_same, commutator, hermitian_part, norm};
use crate::algebra::{CMatrix, C64};
use crate::error::{Error, Result};
use crate::io::{ext_float, MatrixJson};

/// Common eigenbasis `Lambda` of a commuting pair with paired eigenvalues:
/// `P = Lambda i diag(p) Lambda^dagger`, `W = Lambda i diag(w) Lambda^dagger`.
/// Sorted by `p` ascending, ties by `w` ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommonSpectrum {
    pub n: usize,
    pub p: Vec<f64>,
    pub w: Vec<f64>,
    #[serde(rename = "Lambda", with = "crate::io::matrix_serde")]
    pub lambda: CMatrix,
}

fn hermitian(m: &CMatrix) -> CMatrix {
    let h = hermitian_part(m);
    (&h + h.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigen-decomposition with ascending eigenvalues.
fn sorted_eigh(h: CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (vals, vecs)
}

/// Diagonalizes `-iP`, then `-iW` inside each cluster of `-iP` whose
/// consecutive gaps are at most `cluster_tol * ||P||`.
///
/// Fails when `||[P, W]|| > tol * ||P|| ||W||`.
pub fn simultaneous_diagonalize(
    w: &CMatrix,
    p: &CMatrix,
    tol: f64,
    cluster_tol: f64,
) -> Result<CommonSpectrum> {
    check_same(w, p)?;
    let n = w.nrows();
    let scale = norm(p) * norm(w);
    let residual = if scale > 0.0 {
        norm(&commutator(p, w)) / scale
    } else {
        0.0
    };
    if residual > tol {
        return Err(Error::NotSimultaneouslyDiagonalizable { residual });
    }

    let hp = hermitian(p);
    let hw = hermitian(w);
    let (pvals, pvecs) = sorted_eigh(hp.clone());
    let gap = cluster_tol * norm(p);

    let mut lambda = CMatrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pvals[end] - pvals[end - 1] <= gap {
            end += 1;
        }
        let cols = pvecs.columns(start, end - start).into_owned();
        if end - start == 1 {
            lambda.set_column(start, &cols.column(0));
        } else {
            let restricted = cols.adjoint() * &hw * &cols;
            let restricted = (&restricted + restricted.adjoint()) * C64::new(0.5, 0.0);
            let (_, u) = sorted_eigh(restricted);
            let rotated = cols * u;
            for k in 0..(end - start) {
                lambda.set_column(start + k, &rotated.column(k));
            }
        }
        start = end;
    }

    // Rayleigh quotients in the final frame.
    let rayleigh = |h: &CMatrix| -> Vec<f64> {
        (0..n)
            .map(|j| {
                let v = lambda.column(j);
                (v.adjoint() * h * v)[(0, 0)].re
            })
            .collect()
    };
    let pj = rayleigh(&hp);
    let wj = rayleigh(&hw);

    let mut order: Vec<usize> = (0..n).collect();
    let tie = gap.max(f64::MIN_POSITIVE);
    order.sort_by(|&a, &b| {
        if (pj[a] - pj[b]).abs() <= tie {
            wj[a].total_cmp(&wj[b])
        } else {
            pj[a].total_cmp(&pj[b])
        }
    });
    let lambda = CMatrix::from_fn(n, n, |r, c| lambda[(r, order[c])]);
    Ok(CommonSpectrum {
        n,
        p: order.iter().map(|&i| pj[i]).collect(),
        w: order.iter().map(|&i| wj[i]).collect(),
        lambda,
    })
}

impl CommonSpectrum {
    /// Largest off-diagonal residual of `Lambda^dagger M Lambda` relative to
    /// `max(||M||, tiny)`.
    pub fn diagonalization_residual(&self, m: &CMatrix) -> f64 {
        let d = self.lambda.adjoint() * m * &self.lambda;
        let s = norm(m).max(f64::MIN_POSITIVE);
        crate::algebra::offdiag_norm(&d) / s
    }

    pub fn to_json(&self) -> Result<String> {
        MatrixJson::check_finite(&self.lambda)?;
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Right-hand side of the diagonal-indexed bracket identity:
/// `(1/n) sum_m sum_j |Y_{m:j}|^2 (p_{j+|m|} - p_j)(w_{j+|m|} - w_j)`
/// with `Y = Lambda^dagger X Lambda`. Equals `<[X, W], [X, P]>`.
pub fn diagonal_pairing(x: &CMatrix, spec: &CommonSpectrum) -> Result<f64> {
    check_same(x, &spec.lambda)?;
    let n = spec.n;
    let y = spec.lambda.adjoint() * x * &spec.lambda;
    let mut acc = 0.0;
    for m in -(n as isize - 1)..=(n as isize - 1) {
        let len = n - m.unsigned_abs();
        for j in 0..len {
            let (r, c) = crate::algebra::spin::diag_pos(m, j);
            let lo = j;
            let hi = j + m.unsigned_abs();
            acc += y[(r, c)].norm_sqr() * (spec.p[hi] - spec.p[lo]) * (spec.w[hi] - spec.w[lo]);
        }
    }
    Ok(acc / n as f64)
}

/// Ratio extrema over unordered eigenvalue pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioExtrema {
    /// `min (w_k - w_j) / (p_k - p_j)` over pairs with `p_k != p_j`.
    #[serde(rename = "L", with = "ext_float")]
    pub l: f64,
    /// `min (p_k - p_j) / (w_k - w_j)` over pairs with `w_k != w_j`.
    #[serde(with = "ext_float")]
    pub c: f64,
    /// `max (p_k - p_j) / (w_k - w_j)` over pairs with `w_k != w_j`.
    #[serde(rename = "C", with = "ext_float")]
    pub c_max: f64,
    /// Some pair had `p_k = p_j` but `w_k != w_j` (forces `L = -inf`).
    pub p_degenerate: bool,
    /// Some pair had `w_k = w_j` but `p_k != p_j` (forces `c = -inf`, `C = +inf`).
    pub w_degenerate: bool,
}

/// Differences below `tol * max|x|` count as zero. Pairs with both
/// differences zero are skipped; with none admissible, `L = +inf`.
pub fn ratio_extrema(spec: &CommonSpectrum, tol: f64) -> RatioExtrema {
    ratio_extrema_of(&spec.p, &spec.w, tol)
}

pub fn ratio_extrema_of(p: &[f64], w: &[f64], tol: f64) -> RatioExtrema {
    let scale = |v: &[f64]| v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let zp = tol * scale(p);
    let zw = tol * scale(w);
    let mut l = f64::INFINITY;
    let mut c = f64::INFINITY;
    let mut c_max = f64::NEG_INFINITY;
    let mut p_degenerate = false;
    let mut w_degenerate = false;
    let mut any_w = false;
    for j in 0..p.len() {
        for k in (j + 1)..p.len() {
            let dp = p[k] - p[j];
            let dw = w[k] - w[j];
            let p_zero = dp.abs() <= zp;
            let w_zero = dw.abs() <= zw;
            match (p_zero, w_zero) {
                (true, true) => {}
                (true, false) => p_degenerate = true,
                (false, true) => {
                    w_degenerate = true;
                    l = l.min(0.0);
                }
                (false, false) => {
                    any_w = true;
                    l = l.min(dw / dp);
                    let r = dp / dw;
                    c = c.min(r);
                    c_max = c_max.max(r);
                }
            }
        }
    }
    if p_degenerate {
        l = f64::NEG_INFINITY;
    }
    if w_degenerate || !any_w {
        c = f64::NEG_INFINITY;
        c_max = f64::INFINITY;
    }
    RatioExtrema {
        l,
        c,
        c_max,
        p_degenerate,
        w_degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{inner, AlgebraElement, SpinBasis};
    use crate::random::{random_traceless, random_u, random_unitary, rng};

    fn diag_pair(p: &[f64], w: &[f64], u: &CMatrix) -> (CMatrix, CMatrix) {
        let n = p.len();
        let dp = CMatrix::from_fn(n, n, |r, c| if r == c { C64::new(0.0, p[r]) } else { C64::new(0.0, 0.0) });
        let dw = CMatrix::from_fn(n, n, |r, c| if r == c { C64::new(0.0, w[r]) } else { C64::new(0.0, 0.0) });
        (u * dw * u.adjoint(), u * dp * u.adjoint())
    }

    #[test]
    fn diagonal_inputs_give_permutation() {
        let p = [0.5, -1.0, 0.5];
        let w = [2.0, 1.0, -3.0];
        let (wm, pm) = diag_pair(&p, &w, &CMatrix::identity(3, 3));
        let s = simultaneous_diagonalize(&wm, &pm, 1e-10, 1e-9).unwrap();
        assert_eq!(s.p, vec![-1.0, 0.5, 0.5]);
        assert_eq!(s.w, vec![1.0, -3.0, 2.0]);
        for c in 0..3 {
            let nz: Vec<_> = s.lambda.column(c).iter().filter(|z| z.norm() > 1e-12).cloned().collect();
            assert_eq!(nz.len(), 1);
            assert!((nz[0].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn spin_spectrum_of_x3() {
        let n = 6;
        let b = SpinBasis::new(n).unwrap();
        let x3 = b.generator(2);
        let w = x3.scale(-2.0);
        let s = simultaneous_diagonalize(&w, x3, 1e-10, 1e-9).unwrap();
        let spin = (n as f64 - 1.0) / 2.0;
        for (j, &pj) in s.p.iter().enumerate() {
            let expect = b.hbar() * (j as f64 - spin);
            assert!((pj - expect).abs() < 1e-12);
            assert!((s.w[j] + 2.0 * pj).abs() < 1e-12);
        }
        let r = ratio_extrema(&s, 1e-9);
        assert!((r.l + 2.0).abs() < 1e-12);
        assert!((r.c_max + 0.5).abs() < 1e-12);
        assert!((r.c + 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_commuting() {
        let b = SpinBasis::new(4).unwrap();
        let err = simultaneous_diagonalize(b.generator(0), b.generator(1), 1e-8, 1e-9);
        assert!(matches!(err, Err(Error::NotSimultaneouslyDiagonalizable { .. })));
        let err = simultaneous_diagonalize(b.generator(0), &CMatrix::zeros(3, 3), 1e-8, 1e-9);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn degenerate_cluster_is_resolved_by_w() {
        let mut g = rng(3);
        let u = random_unitary(5, &mut g);
        let p = [1.0, 1.0, -0.5, -0.5, -1.0];
        let w = [0.3, -0.7, 0.2, 0.9, -0.7];
        let (wm, pm) = diag_pair(&p, &w, &u);
        let s = simultaneous_diagonalize(&wm, &pm, 1e-10, 1e-9).unwrap();
        assert!(s.diagonalization_residual(&wm) < 1e-10);
        assert!(s.diagonalization_residual(&pm) < 1e-10);
        let id = CMatrix::identity(5, 5);
        assert!((s.lambda.adjoint() * &s.lambda - id).norm() < 1e-12);
        assert!((s.w[3] - (-0.7)).abs() < 1e-10 && (s.w[4] - 0.3).abs() < 1e-10);
    }

    #[test]
    fn pairing_matches_trace() {
        let mut g = rng(11);
        for n in [2, 3, 7] {
            let u = random_unitary(n, &mut g);
            let (wm, pm) = diag_pair(&random_traceless(n, &mut g), &random_traceless(n, &mut g), &u);
            let s = simultaneous_diagonalize(&wm, &pm, 1e-9, 1e-9).unwrap();
            let x = random_u(n, &mut g);
            let lhs = diagonal_pairing(&x, &s).unwrap();
            let direct = inner(&(&x * &wm - &wm * &x), &(&x * &pm - &pm * &x)).unwrap().re;
            assert!((lhs - direct).abs() < 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn identity_direction_pairs_to_zero() {
        let mut g = rng(2);
        let n = 4;
        let u = random_unitary(n, &mut g);
        let (wm, pm) = diag_pair(&random_traceless(n, &mut g), &random_traceless(n, &mut g), &u);
        let s = simultaneous_diagonalize(&wm, &pm, 1e-9, 1e-9).unwrap();
        let x = CMatrix::identity(n, n) * C64::new(0.0, 1.0);
        assert!(diagonal_pairing(&x, &s).unwrap().abs() < 1e-14);
    }

    #[test]
    fn linear_relation_gives_constant_ratio() {
        let p = [-1.5, -0.2, 0.4, 1.3];
        let w: Vec<f64> = p.iter().map(|x| -3.0 * x).collect();
        let r = ratio_extrema_of(&p, &w, 1e-9);
        assert!((r.l + 3.0).abs() < 1e-14);
        assert!((r.c + 1.0 / 3.0).abs() < 1e-14);
        assert!((r.c_max + 1.0 / 3.0).abs() < 1e-14);
        assert!(!r.p_degenerate && !r.w_degenerate);
    }

    #[test]
    fn degenerate_conventions() {
        let r = ratio_extrema_of(&[0.0, 0.0, 1.0, -1.0], &[0.5, -0.5, 1.0, -1.0], 1e-9);
        assert_eq!(r.l, f64::NEG_INFINITY);
        assert!(r.p_degenerate);
        let r = ratio_extrema_of(&[0.0; 4], &[0.0; 4], 1e-9);
        assert_eq!(r.l, f64::INFINITY);
        let r = ratio_extrema_of(&[-1.0, 0.0, 1.0], &[0.0, 0.0, 0.0], 1e-9);
        assert!(r.w_degenerate);
        assert_eq!(r.c, f64::NEG_INFINITY);
        assert_eq!(r.c_max, f64::INFINITY);
        assert_eq!(r.l, 0.0);
    }

    #[test]
    fn json_uses_inf_strings() {
        let r = ratio_extrema_of(&[0.0; 3], &[0.0; 3], 1e-9);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"inf\"") && s.contains("\"-inf\""));
        let back: RatioExtrema = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn zero_pair() {
        let z = AlgebraElement::zeros(3);
        let s = simultaneous_diagonalize(&z, &z, 1e-10, 1e-9).unwrap();
        assert_eq!(s.p, vec![0.0; 3]);
        assert_eq!(ratio_extrema(&s, 1e-9).l, f64::INFINITY);
    }
}
