//! Newton iteration for zonal states satisfying `W0 = i f(-i P0)`.
//!
//! With `P0 = i diag(d)` the main-diagonal block of `-Delta_n` is the
//! tridiagonal `T0`, so `W0 = -i T0 d`. The unknowns are `d` and a
//! multiplier `c` for the trace constraint:
//!
//! ```text
//! G(d, c) = -T0 d - f(d) + c 1 = 0,   sum(d) = 0
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Provenance, SteadyState};
use crate::algebra::{AlgebraElement, SpinBasis};
use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Real polynomial with coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Converged when `||G|| <= tol * max(1, ||W0||)`.
    pub tol: f64,
    /// `sigma_min / sigma_max` below which the Jacobian is singular.
    pub singular: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-12,
            singular: 1e-13,
        }
    }
}

struct Zonal<'a> {
    diag: &'a [f64],
    off: &'a [f64],
    f: &'a Polynomial,
    df: Polynomial,
}

impl Zonal<'_> {
    /// `T0 d`.
    fn t0(&self, d: &[f64]) -> Vec<f64> {
        let n = d.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * d[i];
                if i > 0 {
                    y += self.off[i - 1] * d[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * d[i + 1];
                }
                y
            })
            .collect()
    }

    /// Residual on the traceless subspace and the scale `||W0||`, both in the
    /// scaled Frobenius norm.
    fn residual(&self, d: &[f64]) -> (Vec<f64>, f64) {
        let n = d.len() as f64;
        let t = self.t0(d);
        let mut g: Vec<f64> = t.iter().zip(d).map(|(ti, &x)| -ti - self.f.eval(x)).collect();
        let mean = g.iter().sum::<f64>() / n;
        g.iter_mut().for_each(|v| *v -= mean);
        let w_norm = (t.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
        (g, w_norm)
    }

    fn jacobian(&self, d: &[f64]) -> DMatrix<f64> {
        let n = d.len();
        let mut j = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            j[(i, i)] = -self.diag[i] - self.df.eval(d[i]);
            if i + 1 < n {
                j[(i, i + 1)] = -self.off[i];
                j[(i + 1, i)] = -self.off[i];
            }
            j[(i, n)] = 1.0;
            j[(n, i)] = 1.0;
        }
        j
    }
}

fn scaled_norm(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Damped Newton on the zonal subspace. The returned state has
/// `W0 = Delta_n P0`, so its eigenvalues satisfy `w_j = f(p_j) - mean(f(p))`.
pub fn newton_functional_state(
    basis: &SpinBasis,
    f: &Polynomial,
    d_init: &[f64],
    opts: &NewtonOptions,
    tol: &Tolerances,
) -> Result<SteadyState> {
    let n = basis.n();
    if d_init.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: d_init.len(),
        });
    }
    let block = basis.block(0);
    let z = Zonal {
        diag: &block.diag,
        off: &block.off,
        f,
        df: f.derivative(),
    };

    let mean = d_init.iter().sum::<f64>() / n as f64;
    let mut d: Vec<f64> = d_init.iter().map(|x| x - mean).collect();
    let (mut g, mut w_norm) = z.residual(&d);
    let mut res = scaled_norm(&g);
    let mut iterations = 0;

    while res > opts.tol * w_norm.max(1.0) {
        if iterations == opts.max_iter || !res.is_finite() {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: res,
            });
        }
        iterations += 1;

        let jac = z.jacobian(&d);
        let sv = jac.clone().singular_values();
        let (smin, smax) = sv.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if !(smin > opts.singular * smax) {
            return Err(Error::SingularJacobian { iteration: iterations });
        }
        let mut rhs = DVector::from_iterator(n + 1, g.iter().map(|x| -x).chain([0.0]));
        if !jac.lu().solve_mut(&mut rhs) {
            return Err(Error::SingularJacobian { iteration: iterations });
        }

        // Backtracking on the residual norm.
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = d.iter().zip(rhs.iter()).map(|(x, s)| x + alpha * s).collect();
            let (tg, tw) = z.residual(&trial);
            let tres = scaled_norm(&tg);
            if tres < res || alpha < 1.0 / 1024.0 {
                d = trial;
                g = tg;
                w_norm = tw;
                res = tres;
                break;
            }
            alpha *= 0.5;
        }
    }

    let p0 = AlgebraElement::from_diagonal(&d);
    let w0 = AlgebraElement::from_raw(basis.laplacian_banded(&p0));
    SteadyState::from_pair(
        basis,
        w0,
        p0,
        Provenance::Newton {
            f: f.0.clone(),
            iterations,
            residual: res,
        },
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_traceless, rng};

    #[test]
    fn polynomial_eval_and_derivative() {
        let p = Polynomial::new(vec![1.0, -2.0, 0.0, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 24.0);
        assert_eq!(p.derivative().coeffs(), &[-2.0, 0.0, 9.0]);
        assert_eq!(Polynomial::new(vec![]).eval(3.0), 0.0);
    }

    #[test]
    fn linear_f_off_spectrum_converges_to_zero() {
        let b = SpinBasis::new(8).unwrap();
        for (seed, coeffs) in [(1, vec![]), (2, vec![0.0, -1.0]), (3, vec![0.0, -3.0])] {
            let d = random_traceless(8, &mut rng(seed));
            let s = newton_functional_state(
                &b,
                &Polynomial::new(coeffs),
                &d,
                &NewtonOptions::default(),
                &Tolerances::default(),
            )
            .unwrap();
            assert!(s.w0.norm() <= 1e-8 && s.p0.norm() <= 1e-8);
        }
    }

    #[test]
    fn l1_eigenvalue_start_is_fixed_and_perturbation_is_singular() {
        let b = SpinBasis::new(6).unwrap();
        let f = Polynomial::new(vec![0.0, -2.0]);
        let d: Vec<f64> = b.spin_weights().iter().map(|m| 0.7 * m).collect();
        let s = newton_functional_state(&b, &f, &d, &NewtonOptions::default(), &Tolerances::default())
            .unwrap();
        assert!(matches!(s.provenance, Provenance::Newton { iterations: 0, .. }));
        let mut d2 = d.clone();
        d2[0] += 1e-3;
        d2[1] -= 1e-3;
        let err = newton_functional_state(&b, &f, &d2, &NewtonOptions::default(), &Tolerances::default());
        assert!(matches!(err, Err(Error::SingularJacobian { iteration: 1 })));
    }

    #[test]
    fn cubic_branch_satisfies_functional_relation() {
        let b = SpinBasis::new(10).unwrap();
        let f = Polynomial::new(vec![0.0, -1.8, 0.0, -1.0]);
        let d: Vec<f64> = b.spin_weights().iter().map(|m| 0.1 * m).collect();
        let s = newton_functional_state(&b, &f, &d, &NewtonOptions::default(), &Tolerances::default())
            .unwrap();
        assert!(s.w0.norm() > 1e-2);
        let sp = &s.spectrum;
        let c = sp.w[0] - f.eval(sp.p[0]);
        for j in 0..sp.p.len() {
            assert!((sp.w[j] - f.eval(sp.p[j]) - c).abs() < 1e-10);
        }
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let b = SpinBasis::new(6).unwrap();
        let f = Polynomial::new(vec![0.0, -1.0, 0.0, -5.0]);
        let d = random_traceless(6, &mut rng(9));
        let opts = NewtonOptions {
            max_iter: 0,
            ..Default::default()
        };
        let err = newton_functional_state(&b, &f, &d, &opts, &Tolerances::default());
        assert!(matches!(err, Err(Error::NewtonDiverged { iterations: 0, .. })));
    }
}
