//! Arnold quadratic form `Q(X) = <dW, -Delta^{-1} dW> + <dW, [X, P0]>` with
//! `dW = [X, W0]`, the eigenvalue-ratio sandwich bounds and the Hessian of
//! `Q` on the coadjoint-orbit tangent space.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::algebra::element::{commutator, dot, norm_sq};
use crate::algebra::{AlgebraElement, CMatrix, RealBasis, SpinBasis};
use crate::config::Tolerances;
use crate::error::Result;
use crate::io::{ext_float_opt, matrix_hash};
use crate::spectral::{ratio_extrema, simultaneous_diagonalize, RatioExtrema};
use crate::steady::check_steady;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    StableByRatio,
    Indeterminate,
    Trivial,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::StableByRatio => "STABLE_BY_RATIO",
            Verdict::Indeterminate => "INDETERMINATE",
            Verdict::Trivial => "TRIVIAL",
        })
    }
}

fn q_value(basis: &SpinBasis, x: &CMatrix, w0: &CMatrix, p0: &CMatrix) -> (f64, f64, f64) {
    let dw = commutator(x, w0);
    let energy = -dot(&dw, &basis.poisson_matrix(&dw));
    let middle = dot(&dw, &commutator(x, p0));
    (energy + middle, middle, norm_sq(&dw))
}

/// `Q(X)` for a steady pair; `X` may carry a trace.
pub fn quadratic_form_q(
    basis: &SpinBasis,
    x: &CMatrix,
    w0: &AlgebraElement,
    p0: &AlgebraElement,
    tol: &Tolerances,
) -> Result<f64> {
    basis.check_same(x, w0)?;
    check_steady(basis, w0, p0, tol)?;
    Ok(q_value(basis, x, w0, p0).0)
}

/// Slacks of `c ||dW||^2 <= <dW, [X, P0]> <= C ||dW||^2` and of the refined
/// bounds `c ||dW||^2 <= Q <= (1/6 + C) ||dW||^2`. Nonnegative slack means
/// the inequality holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub q: f64,
    /// `Q + <Delta^{-1} dW, dW> = <dW, [X, P0]>`.
    pub middle: f64,
    pub dw_norm_sq: f64,
    /// `||P1 dW|| / ||dW||`, zero when `dW = 0`.
    pub leakage: f64,
    #[serde(with = "ext_float_opt")]
    pub lower_slack: Option<f64>,
    #[serde(with = "ext_float_opt")]
    pub upper_slack: Option<f64>,
    #[serde(with = "ext_float_opt")]
    pub refined_lower_slack: Option<f64>,
    /// Only when `leakage <= tol.leakage`.
    #[serde(with = "ext_float_opt")]
    pub refined_upper_slack: Option<f64>,
}

impl SandwichReport {
    pub fn min_slack(&self) -> Option<f64> {
        [
            self.lower_slack,
            self.upper_slack,
            self.refined_lower_slack,
            self.refined_upper_slack,
        ]
        .into_iter()
        .flatten()
        .reduce(f64::min)
    }
}

pub fn sandwich_check(
    basis: &SpinBasis,
    x: &CMatrix,
    w0: &AlgebraElement,
    p0: &AlgebraElement,
    ratios: &RatioExtrema,
    tol: &Tolerances,
) -> Result<SandwichReport> {
    basis.check_same(x, w0)?;
    check_steady(basis, w0, p0, tol)?;
    let (q, middle, dw2) = q_value(basis, x, w0, p0);
    let leakage = if dw2 > 0.0 {
        let dw = commutator(x, w0);
        let (_, proj) = basis.project_eigenspace_1(&dw)?;
        (norm_sq(&proj) / dw2).sqrt()
    } else {
        0.0
    };
    let finite = ratios.c.is_finite() && ratios.c_max.is_finite();
    let (c, cc) = (ratios.c, ratios.c_max);
    Ok(SandwichReport {
        q,
        middle,
        dw_norm_sq: dw2,
        leakage,
        lower_slack: finite.then_some(middle - c * dw2),
        upper_slack: finite.then_some(cc * dw2 - middle),
        refined_lower_slack: finite.then_some(q - c * dw2),
        refined_upper_slack: (finite && leakage <= tol.leakage)
            .then(|| (1.0 / 6.0 + cc) * dw2 - q),
    })
}

/// Matrices of the orbit Hessian in the real orthonormal eigenbasis `E_k`.
pub struct OrbitForm {
    /// `B_jk = <v_j, -Delta^{-1} v_k> + (1/2)(<[E_j,P0], v_k> + <[E_k,P0], v_j>)`.
    pub b: DMatrix<f64>,
    /// Coordinates of `v_k = [E_k, W0]` in column `k`.
    pub m: DMatrix<f64>,
    pub basis: RealBasis,
}

/// Builds `B` and `M`. Cost is `O(n^5)` for the products plus `O(n^6)` for
/// the dense assembly.
pub fn orbit_bilinear_form(
    basis: &SpinBasis,
    w0: &AlgebraElement,
    p0: &AlgebraElement,
) -> Result<OrbitForm> {
    basis.check_same(w0, p0)?;
    let rb = RealBasis::new(basis);
    let dim = rb.len();
    let mut m = DMatrix::zeros(dim, dim);
    let mut npc = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let e = rb.matrix(k);
        m.set_column(k, &rb.coords(&commutator(&e, w0)));
        npc.set_column(k, &rb.coords(&commutator(&e, p0)));
    }
    let inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        (0..dim).map(|k| 1.0 / rb.eigenvalue(k)),
    ));
    let energy = m.transpose() * &inv * &m;
    let cross = npc.transpose() * &m;
    let b = energy + (&cross + cross.transpose()) * 0.5;
    Ok(OrbitForm { b, m, basis: rb })
}

/// Spectra of the orbit Hessian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitHessian {
    /// Eigenvalues on the tangent space `su(n) / stab(W0)`, ascending.
    pub full: Vec<f64>,
    /// Eigenvalues on the tangent directions with `P1 [X, W0] = 0`, ascending.
    pub constrained: Vec<f64>,
    /// Largest `||P1 [X, W0]|| / ||[X, W0]||` over the tangent basis.
    pub leakage: f64,
    pub tangent_dim: usize,
    pub constrained_dim: usize,
}

fn sorted_eigenvalues(a: DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let sym = (&a + a.transpose()) * 0.5;
    let mut v: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Orthonormal basis (columns) of the eigenvectors of the symmetric `a`
/// whose eigenvalue is at most `cut`.
fn low_eigenspace(a: DMatrix<f64>, cut: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a);
    let cols: Vec<_> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] <= cut)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(eig.eigenvectors.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

pub fn orbit_hessian(
    basis: &SpinBasis,
    w0: &AlgebraElement,
    p0: &AlgebraElement,
    tol: &Tolerances,
) -> Result<OrbitHessian> {
    if w0.norm() <= tol.trivial {
        basis.check_same(w0, p0)?;
        return Ok(OrbitHessian {
            full: Vec::new(),
            constrained: Vec::new(),
            leakage: 0.0,
            tangent_dim: 0,
            constrained_dim: 0,
        });
    }
    let form = orbit_bilinear_form(basis, w0, p0)?;
    let svd = form.m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol.svd_rank * smax)
        .collect();
    let vr = DMatrix::from_columns(
        &keep.iter().map(|&i| v_t.row(i).transpose()).collect::<Vec<_>>(),
    );
    let br = vr.transpose() * &form.b * &vr;

    // The first three basis elements span the l = 1 eigenspace.
    let dw = &form.m * &vr;
    let mut leakage = 0.0_f64;
    for j in 0..dw.ncols() {
        let col = dw.column(j);
        let total = col.norm();
        if total > 0.0 {
            leakage = leakage.max(col.rows(0, 3).norm() / total);
        }
    }
    let k = dw.rows(0, 3).into_owned();
    let ktk = k.transpose() * &k;
    let scale = ktk.norm().max(f64::MIN_POSITIVE);
    let z = low_eigenspace(ktk, 1e-12 * scale);
    let bc = z.transpose() * &br * &z;

    Ok(OrbitHessian {
        tangent_dim: br.nrows(),
        constrained_dim: bc.nrows(),
        full: sorted_eigenvalues(br),
        constrained: sorted_eigenvalues(bc),
        leakage,
    })
}

/// Eigenvalues of the orbit Hessian, on the full tangent space or on the
/// momentum-constrained subspace.
pub fn orbit_hessian_spectrum(
    basis: &SpinBasis,
    w0: &AlgebraElement,
    p0: &AlgebraElement,
    constrain_momentum: bool,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    check_steady(basis, w0, p0, tol)?;
    let h = orbit_hessian(basis, w0, p0, tol)?;
    Ok(if constrain_momentum { h.constrained } else { h.full })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputHashes {
    #[serde(rename = "W0")]
    pub w0: String,
    #[serde(rename = "P0")]
    pub p0: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub n: usize,
    pub ratios: RatioExtrema,
    pub verdict: Verdict,
    pub hessian_computed: bool,
    pub hessian_full: Vec<f64>,
    pub hessian_constrained: Vec<f64>,
    pub tangent_dim: usize,
    pub constrained_dim: usize,
    pub p1_leakage: f64,
    /// Definiteness predicted by `C < -1/6` or `c > 0`, checked on the
    /// constrained spectrum when `L > -6` and the leakage is negligible.
    pub consistency_check: Option<bool>,
    /// The same prediction checked on the constrained spectrum regardless of
    /// leakage.
    pub constrained_consistency: Option<bool>,
    pub commutator_residual: f64,
    pub laplacian_residual: f64,
    pub tolerances: Tolerances,
    pub input_hashes: InputHashes,
}

impl StabilityCertificate {
    pub fn hess_max(&self) -> Option<f64> {
        self.hessian_full.last().copied()
    }

    pub fn hess_constrained_max(&self) -> Option<f64> {
        self.hessian_constrained.last().copied()
    }

    /// `L=<val> verdict=<v> hess_max=<val> hess_c_max=<val>`.
    pub fn summary(&self) -> String {
        let f = |x: Option<f64>| x.map_or("none".to_string(), short);
        format!(
            "L={} verdict={} hess_max={} hess_c_max={}",
            short(self.ratios.l),
            self.verdict,
            f(self.hess_max()),
            f(self.hess_constrained_max())
        )
    }
}

/// Ten decimals, trailing zeros dropped.
fn short(x: f64) -> String {
    if !x.is_finite() {
        return crate::io::fmt_f64(x);
    }
    let r = (x * 1e10).round() / 1e10;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions {
    pub tolerances: Tolerances,
    pub hessian: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            hessian: true,
        }
    }
}

fn definite(spec: &[f64], negative: bool) -> bool {
    let scale = spec.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let margin = 1e-10 * scale;
    if spec.is_empty() {
        return true;
    }
    if negative {
        spec.iter().all(|&x| x < -margin)
    } else {
        spec.iter().all(|&x| x > margin)
    }
}

pub fn certify(
    basis: &SpinBasis,
    w0: &AlgebraElement,
    p0: &AlgebraElement,
    opts: &CertifyOptions,
) -> Result<StabilityCertificate> {
    let tol = &opts.tolerances;
    let (commutator_residual, laplacian_residual) = check_steady(basis, w0, p0, tol)?;
    let spec = simultaneous_diagonalize(w0, p0, tol.commute, tol.cluster)?;
    let ratios = ratio_extrema(&spec, tol.cluster);

    let trivial = w0.norm() <= tol.trivial;
    let verdict = if trivial {
        Verdict::Trivial
    } else if ratios.l > -6.0 + tol.strict_margin {
        Verdict::StableByRatio
    } else {
        Verdict::Indeterminate
    };

    let hess = if opts.hessian && !trivial {
        Some(orbit_hessian(basis, w0, p0, tol)?)
    } else {
        None
    };

    let (consistency_check, constrained_consistency) = match &hess {
        Some(h) if verdict == Verdict::StableByRatio => {
            let predicted = if ratios.c_max < -1.0 / 6.0 {
                Some(true)
            } else if ratios.c > 0.0 {
                Some(false)
            } else {
                None
            };
            match predicted {
                Some(neg) => {
                    let ok = definite(&h.constrained, neg);
                    ((h.leakage <= tol.leakage).then_some(ok), Some(ok))
                }
                None => (None, None),
            }
        }
        _ => (None, None),
    };

    let h = hess.unwrap_or(OrbitHessian {
        full: Vec::new(),
        constrained: Vec::new(),
        leakage: 0.0,
        tangent_dim: 0,
        constrained_dim: 0,
    });
    Ok(StabilityCertificate {
        n: basis.n(),
        ratios,
        verdict,
        hessian_computed: opts.hessian && !trivial,
        hessian_full: h.full,
        hessian_constrained: h.constrained,
        tangent_dim: h.tangent_dim,
        constrained_dim: h.constrained_dim,
        p1_leakage: h.leakage,
        consistency_check,
        constrained_consistency,
        commutator_residual,
        laplacian_residual,
        tolerances: *tol,
        input_hashes: InputHashes {
            w0: matrix_hash(w0),
            p0: matrix_hash(p0),
        },
    })
}
