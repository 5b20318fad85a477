//! Sphere rendering: expands `H = -iW` in Laplacian eigenmatrices with
//! Condon–Shortley phases and evaluates the matching spherical-harmonic
//! series on a latitude-longitude grid.
//!
//! `E_{l,m}` lives on diagonal offset `m` (upper for `m > 0`) with unit norm.
//! `E_{l,0}` is positive in its first (north pole) entry and the signs for
//! `m != 0` make `<E_{l,m+-1}, [S+-, E_{l,m}]>` positive, mirroring the ladder
//! relations of `Y_{l,m}`. Then `E_{l,-m} = (-1)^m E_{l,m}^T` and the series
//! `sum h_{l,m} Y_{l,m}` is real.

use std::f64::consts::PI;

use crate::algebra::eigenbasis::diagonal_modes;
use crate::algebra::element::{check_square, commutator};
use crate::algebra::spin::diag_pos;
use crate::algebra::{inner, CMatrix, SpinBasis, C64};
use crate::error::{Error, Result};
use crate::io::fmt_f64;

#[derive(Clone, Debug)]
pub struct HarmonicMatrix {
    pub l: usize,
    pub m: isize,
    pub e: CMatrix,
}

fn ladders(basis: &SpinBasis) -> (CMatrix, CMatrix) {
    let n = basis.n();
    let mut up = CMatrix::zeros(n, n);
    for j in 1..n {
        up[(j - 1, j)] = C64::new(basis.ladder()[j], 0.0);
    }
    let down = up.transpose();
    (up, down)
}

/// All `E_{l,m}`, `1 <= l <= n-1`, ordered by `l` then `m`.
pub fn harmonic_matrices(basis: &SpinBasis) -> Vec<HarmonicMatrix> {
    let n = basis.n();
    let sqrt_n = (n as f64).sqrt();
    let (up, down) = ladders(basis);
    let place = |m: isize, v: &[f64]| {
        let mut e = CMatrix::zeros(n, n);
        for (p, &x) in v.iter().enumerate() {
            e[diag_pos(m, p)] = C64::new(sqrt_n * x, 0.0);
        }
        e
    };
    let modes: Vec<Vec<(usize, Vec<f64>)>> =
        (0..n as isize).map(|m| diagonal_modes(basis, m)).collect();
    let mut out = Vec::with_capacity(n * n - 1);
    for l in 1..n {
        let mut row: Vec<(isize, CMatrix)> = Vec::with_capacity(2 * l + 1);
        let v0 = &modes[0][l].1;
        let mut e0 = place(0, v0);
        if e0[(0, 0)].re < 0.0 {
            e0 = -e0;
        }
        row.push((0, e0.clone()));
        for (dir, ladder) in [(1isize, &up), (-1, &down)] {
            let mut prev = e0.clone();
            for k in 1..=l as isize {
                let m = dir * k;
                let v = &modes[k as usize][l - k as usize].1;
                let mut e = place(m, v);
                if inner(&e, &commutator(ladder, &prev)).expect("same size").re < 0.0 {
                    e = -e;
                }
                row.push((m, e.clone()));
                prev = e;
            }
        }
        row.sort_by_key(|(m, _)| *m);
        out.extend(row.into_iter().map(|(m, e)| HarmonicMatrix { l, m, e }));
    }
    out
}

/// `h_{l,m} = <E_{l,m}, -iW>`.
pub fn harmonic_coefficients(basis: &SpinBasis, w: &CMatrix) -> Result<Vec<(usize, isize, C64)>> {
    basis.check_same(w, w)?;
    let h = w * C64::new(0.0, -1.0);
    Ok(harmonic_matrices(basis)
        .into_iter()
        .map(|hm| (hm.l, hm.m, inner(&hm.e, &h).expect("same size")))
        .collect())
}

/// Fully normalized `P_l^m(cos theta)` with the Condon–Shortley phase, for
/// `0 <= m <= l <= l_max`, indexed `[l][m]`.
pub fn legendre_table(l_max: usize, theta: f64) -> Vec<Vec<f64>> {
    let (s, x) = theta.sin_cos();
    let mut p = vec![vec![0.0; l_max + 1]; l_max + 1];
    p[0][0] = (0.25 / PI).sqrt();
    for m in 1..=l_max {
        let mf = m as f64;
        p[m][m] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[m - 1][m - 1];
    }
    for m in 0..l_max {
        p[m + 1][m] = (2.0 * m as f64 + 3.0).sqrt() * x * p[m][m];
    }
    for m in 0..=l_max {
        for l in (m + 2)..=l_max {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let lp = lf - 1.0;
            let a_prev = ((4.0 * lp * lp - 1.0) / (lp * lp - mf * mf)).sqrt();
            p[l][m] = a * (x * p[l - 1][m] - p[l - 2][m] / a_prev);
        }
    }
    p
}

/// Orthonormal complex `Y_{l,m}(theta, phi)`.
pub fn spherical_harmonic(l: usize, m: isize, theta: f64, phi: f64) -> C64 {
    let k = m.unsigned_abs();
    if k > l {
        return C64::new(0.0, 0.0);
    }
    let p = legendre_table(l, theta)[l][k];
    let y = C64::from_polar(p, k as f64 * phi);
    if m >= 0 {
        y
    } else if k.is_multiple_of(2) {
        y.conj()
    } else {
        -y.conj()
    }
}

/// `Re sum h_{l,m} Y_{l,m}(theta, phi)`.
pub fn field_at(coeffs: &[(usize, isize, C64)], theta: f64, phi: f64) -> f64 {
    let l_max = coeffs.iter().map(|c| c.0).max().unwrap_or(0);
    let table = legendre_table(l_max, theta);
    series(coeffs, &table, phi)
}

fn series(coeffs: &[(usize, isize, C64)], table: &[Vec<f64>], phi: f64) -> f64 {
    coeffs
        .iter()
        .map(|&(l, m, h)| {
            let k = m.unsigned_abs();
            let y = C64::from_polar(table[l][k], k as f64 * phi);
            let y = match (m < 0, k % 2 == 1) {
                (false, _) => y,
                (true, false) => y.conj(),
                (true, true) => -y.conj(),
            };
            (h * y).re
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderGrid {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// `values[i * n_phi + j]` at `(theta[i], phi[j])`.
    pub values: Vec<f64>,
}

impl RenderGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.phi.len() + j]
    }

    /// Grid point of the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let (k, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bk, bv), (k, &v)| if v > bv { (k, v) } else { (bk, bv) });
        (self.theta[k / self.phi.len()], self.phi[k % self.phi.len()])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,phi,w\n");
        for (i, &t) in self.theta.iter().enumerate() {
            for (j, &p) in self.phi.iter().enumerate() {
                s.push_str(&format!("{},{},{}\n", fmt_f64(t), fmt_f64(p), fmt_f64(self.value(i, j))));
            }
        }
        s
    }
}

/// Field of `W` on `theta_i = (i + 1/2) pi / n_theta`, `phi_j = 2 pi j / n_phi`.
pub fn render(basis: &SpinBasis, w: &CMatrix, n_theta: usize, n_phi: usize) -> Result<RenderGrid> {
    check_square(w)?;
    if n_theta < 2 || n_phi < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid {n_theta}x{n_phi} must be at least 2x2"
        )));
    }
    let coeffs = harmonic_coefficients(basis, w)?;
    let theta: Vec<f64> = (0..n_theta).map(|i| (i as f64 + 0.5) * PI / n_theta as f64).collect();
    let phi: Vec<f64> = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
    let l_max = basis.n() - 1;
    let mut values = Vec::with_capacity(n_theta * n_phi);
    for &t in &theta {
        let table = legendre_table(l_max, t);
        values.extend(phi.iter().map(|&p| series(&coeffs, &table, p)));
    }
    Ok(RenderGrid { theta, phi, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_su, rng};
    use crate::steady::{rotation_matrix, so3_rotate};
    use nalgebra::Vector3;

    #[test]
    fn closed_form_harmonics() {
        let (t, p) = (0.7, 1.3);
        let y10 = spherical_harmonic(1, 0, t, p);
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt() * t.cos()).abs() < 1e-15);
        let y11 = spherical_harmonic(1, 1, t, p);
        let e = C64::from_polar(-(3.0 / (8.0 * PI)).sqrt() * t.sin(), p);
        assert!((y11 - e).norm() < 1e-15);
        let y2m1 = spherical_harmonic(2, -1, t, p);
        let e = C64::from_polar((15.0 / (8.0 * PI)).sqrt() * t.sin() * t.cos(), -p);
        assert!((y2m1 - e).norm() < 1e-15);
        let y20 = spherical_harmonic(2, 0, t, p).re;
        assert!((y20 - (5.0 / (16.0 * PI)).sqrt() * (3.0 * t.cos().powi(2) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn harmonic_matrices_are_orthonormal_with_cs_symmetry() {
        let b = SpinBasis::new(5).unwrap();
        let hs = harmonic_matrices(&b);
        assert_eq!(hs.len(), 24);
        for a in &hs {
            for c in &hs {
                let g = inner(&a.e, &c.e).unwrap();
                let expect = if a.l == c.l && a.m == c.m { 1.0 } else { 0.0 };
                assert!((g - C64::new(expect, 0.0)).norm() < 1e-12);
            }
            let mirror = hs.iter().find(|c| c.l == a.l && c.m == -a.m).unwrap();
            let sign = if a.m.unsigned_abs() % 2 == 0 { 1.0 } else { -1.0 };
            assert!((&mirror.e - a.e.transpose() * C64::new(sign, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn x3_renders_as_cosine() {
        let b = SpinBasis::new(6).unwrap();
        let g = render(&b, b.generator(2), 16, 8).unwrap();
        let amp = g.value(0, 0) / g.theta[0].cos();
        assert!(amp < 0.0);
        for (i, &t) in g.theta.iter().enumerate() {
            for j in 0..g.phi.len() {
                assert!((g.value(i, j) / amp - t.cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_and_small_grids() {
        let b = SpinBasis::new(3).unwrap();
        let g = render(&b, &CMatrix::zeros(3, 3), 4, 4).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
        assert!(render(&b, &CMatrix::zeros(3, 3), 1, 4).is_err());
    }

    #[test]
    fn rendering_is_rotation_equivariant() {
        let n = 5;
        let b = SpinBasis::new(n).unwrap();
        let w = random_su(n, &mut rng(3));
        let rho = [0.3, -0.8, 1.1];
        let rw = so3_rotate(&b, rho, &w).unwrap();
        let c0 = harmonic_coefficients(&b, &w).unwrap();
        let c1 = harmonic_coefficients(&b, &rw).unwrap();
        let r = rotation_matrix(rho);
        for (t, p) in [(0.3f64, 0.2f64), (1.2, 4.0), (2.5, 2.2)] {
            let x = Vector3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos());
            let y = r.transpose() * x;
            let (t2, p2) = (y[2].clamp(-1.0, 1.0).acos(), y[1].atan2(y[0]));
            let a = field_at(&c1, t, p);
            let e = field_at(&c0, t2, p2);
            assert!((a - e).abs() < 1e-10, "{a} vs {e}");
        }
    }

    #[test]
    fn series_is_real() {
        let b = SpinBasis::new(4).unwrap();
        let w = random_su(4, &mut rng(9));
        let c = harmonic_coefficients(&b, &w).unwrap();
        let im: f64 = c
            .iter()
            .map(|&(l, m, h)| (h * spherical_harmonic(l, m, 0.9, 2.0)).im)
            .sum();
        assert!(im.abs() < 1e-12);
    }
}
