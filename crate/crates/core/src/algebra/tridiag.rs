//! LDL^T factorization of real symmetric positive-definite tridiagonal
//! matrices, applied to complex right-hand sides.

use super::element::C64;

#[derive(Clone, Debug)]
pub(crate) struct TridiagFactor {
    pivots: Vec<f64>,
    multipliers: Vec<f64>,
}

impl TridiagFactor {
    /// `diag` has length k, `off` length k - 1. Panics on a non-positive
    /// pivot, which cannot happen for the Laplacian blocks.
    pub(crate) fn new(diag: &[f64], off: &[f64]) -> Self {
        let k = diag.len();
        debug_assert_eq!(off.len() + 1, k.max(1));
        let mut pivots = Vec::with_capacity(k);
        let mut multipliers = Vec::with_capacity(k.saturating_sub(1));
        if k == 0 {
            return Self { pivots, multipliers };
        }
        pivots.push(diag[0]);
        for i in 1..k {
            let l = off[i - 1] / pivots[i - 1];
            multipliers.push(l);
            pivots.push(diag[i] - l * off[i - 1]);
        }
        assert!(
            pivots.iter().all(|&d| d > 0.0),
            "tridiagonal block is not positive definite"
        );
        Self { pivots, multipliers }
    }

    /// Overwrites `rhs` with the solution.
    pub(crate) fn solve_in_place(&self, rhs: &mut [C64]) {
        let k = self.pivots.len();
        debug_assert_eq!(rhs.len(), k);
        for i in 1..k {
            let prev = rhs[i - 1];
            rhs[i] -= prev * self.multipliers[i - 1];
        }
        for i in 0..k {
            rhs[i] /= self.pivots[i];
        }
        for i in (0..k.saturating_sub(1)).rev() {
            let next = rhs[i + 1];
            rhs[i] -= next * self.multipliers[i];
        }
    }
}

/// `y = T x` for the symmetric tridiagonal `T = (diag, off)`.
pub(crate) fn tridiag_mul(diag: &[f64], off: &[f64], x: &[C64], y: &mut [C64]) {
    let k = diag.len();
    for i in 0..k {
        let mut acc = x[i] * diag[i];
        if i > 0 {
            acc += x[i - 1] * off[i - 1];
        }
        if i + 1 < k {
            acc += x[i + 1] * off[i];
        }
        y[i] = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_against_multiply() {
        let diag = [4.0, 5.0, 6.0, 3.5];
        let off = [-1.0, 2.0, -0.5];
        let f = TridiagFactor::new(&diag, &off);
        let x: Vec<C64> = (0..4).map(|i| C64::new(i as f64 - 1.5, 0.3 * i as f64)).collect();
        let mut b = vec![C64::new(0.0, 0.0); 4];
        tridiag_mul(&diag, &off, &x, &mut b);
        f.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).norm() < 1e-14);
        }
    }

    #[test]
    fn single_entry_block() {
        let f = TridiagFactor::new(&[2.0], &[]);
        let mut b = [C64::new(4.0, -2.0)];
        f.solve_in_place(&mut b);
        assert_eq!(b[0], C64::new(2.0, -1.0));
        assert_eq!(f.pivots.len(), 1);
    }
}
