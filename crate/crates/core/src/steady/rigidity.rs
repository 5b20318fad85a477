//! Rigidity of steady states: `L > -6` forces a rotation to a diagonal
//! state, `L > -2` forces `W0 = 0`.

use serde::{Deserialize, Serialize};

use super::rotation::align_first_eigenspace;
use super::SteadyState;
use crate::algebra::element::{commutator, norm};
use crate::algebra::{offdiag_norm, SpinBasis};
use crate::config::Tolerances;
use crate::error::Result;
use crate::io::ext_float;
use crate::spectral::ratio_extrema;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Conclusion {
    DiagonalConfirmed,
    ZeroConfirmed,
    NotApplicable,
    Violation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    #[serde(rename = "L", with = "ext_float")]
    pub l: f64,
    pub alignment_rotation: [f64; 3],
    /// `||offdiag(R W0)|| / ||W0||`.
    pub offdiag_residual: f64,
    /// `||[R W0, X3]|| / (||W0|| ||X3||)`.
    pub x3_commutator_residual: f64,
    #[serde(rename = "norm_W0")]
    pub norm_w0: f64,
    #[serde(rename = "norm_P0")]
    pub norm_p0: f64,
    pub conclusion: Conclusion,
}

pub fn rigidity_report(
    basis: &SpinBasis,
    state: &SteadyState,
    tol: &Tolerances,
) -> Result<RigidityReport> {
    let ratios = ratio_extrema(&state.spectrum, tol.cluster);
    let l = ratios.l;
    let norm_w0 = state.w0.norm();
    let norm_p0 = state.p0.norm();

    let (rho, aligned) = align_first_eigenspace(basis, &state.w0)?;
    let rel = |x: f64, s: f64| if x == 0.0 { 0.0 } else { x / s.max(f64::MIN_POSITIVE) };
    let offdiag_residual = rel(offdiag_norm(&aligned), norm_w0);
    let x3 = basis.generator(2);
    let x3_commutator_residual = rel(norm(&commutator(&aligned, x3)), norm_w0 * x3.norm());

    // The ratios of a numerically zero state are round-off.
    let conclusion = if norm_w0 <= tol.trivial {
        Conclusion::ZeroConfirmed
    } else if l > -2.0 + tol.strict_margin {
        if norm_w0 <= tol.rigidity * (1.0 + norm_p0) {
            Conclusion::ZeroConfirmed
        } else {
            Conclusion::Violation
        }
    } else if l > -6.0 + tol.strict_margin {
        if offdiag_residual <= tol.rigidity {
            Conclusion::DiagonalConfirmed
        } else {
            Conclusion::Violation
        }
    } else {
        Conclusion::NotApplicable
    };

    Ok(RigidityReport {
        l,
        alignment_rotation: rho,
        offdiag_residual,
        x3_commutator_residual,
        norm_w0,
        norm_p0,
        conclusion,
    })
}
