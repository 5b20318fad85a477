//! Steady states `[P0, W0] = 0`, `W0 = Delta_n P0`: zonal, Laplacian
//! eigenstates and Newton solutions of `W0 = i f(-i P0)` on the zonal
//! subspace. Also the SO(3) action and the rigidity checks.

mod newton;
mod rigidity;
mod rotation;

use serde::{Deserialize, Serialize};

pub use newton::{newton_functional_state, NewtonOptions, Polynomial};
pub use rigidity::{rigidity_report, Conclusion, RigidityReport};
pub use rotation::{align_first_eigenspace, rotation_generator, rotation_matrix, so3_rotate};

use crate::algebra::element::{commutator, norm};
use crate::algebra::{AlgebraElement, RealBasis, SpinBasis};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::spectral::{simultaneous_diagonalize, CommonSpectrum};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    Zonal,
    Eigenstate {
        l: usize,
    },
    Newton {
        /// Polynomial coefficients in ascending powers.
        f: Vec<f64>,
        iterations: usize,
        residual: f64,
    },
    Loaded,
    Rotated {
        rho: [f64; 3],
        base: Box<Provenance>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyState {
    pub n: usize,
    #[serde(rename = "W0")]
    pub w0: AlgebraElement,
    #[serde(rename = "P0")]
    pub p0: AlgebraElement,
    pub spectrum: CommonSpectrum,
    pub commutator_residual: f64,
    pub laplacian_residual: f64,
    pub provenance: Provenance,
}

/// `(||[P0, W0]|| / (||P0|| ||W0||), ||Delta P0 - W0|| / ||W0||)`, each
/// zero when the numerator vanishes.
pub fn steady_residuals(
    basis: &SpinBasis,
    w0: &AlgebraElement,
    p0: &AlgebraElement,
) -> Result<(f64, f64)> {
    basis.check_same(w0, p0)?;
    let rel = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den.max(f64::MIN_POSITIVE) };
    let comm = rel(norm(&commutator(p0, w0)), p0.norm() * w0.norm());
    let lap = rel(norm(&(basis.laplacian_matrix(p0) - w0.as_matrix())), w0.norm());
    Ok((comm, lap))
}

/// Errors with [`Error::NotSteady`] when either residual exceeds `tol.steady`.
pub fn check_steady(
    basis: &SpinBasis,
    w0: &AlgebraElement,
    p0: &AlgebraElement,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    let (commutator, laplacian) = steady_residuals(basis, w0, p0)?;
    if commutator > tol.steady || laplacian > tol.steady {
        return Err(Error::NotSteady {
            commutator,
            laplacian,
        });
    }
    Ok((commutator, laplacian))
}

impl SteadyState {
    /// Validates the pair and computes its common spectrum.
    pub fn from_pair(
        basis: &SpinBasis,
        w0: AlgebraElement,
        p0: AlgebraElement,
        provenance: Provenance,
        tol: &Tolerances,
    ) -> Result<Self> {
        let (commutator_residual, laplacian_residual) = check_steady(basis, &w0, &p0, tol)?;
        let spectrum = simultaneous_diagonalize(&w0, &p0, tol.commute, tol.cluster)?;
        Ok(Self {
            n: basis.n(),
            w0,
            p0,
            spectrum,
            commutator_residual,
            laplacian_residual,
            provenance,
        })
    }

    /// Builds a state from `P0` alone with `W0 = Delta_n P0`.
    pub fn from_stream(basis: &SpinBasis, p0: AlgebraElement, tol: &Tolerances) -> Result<Self> {
        let w0 = AlgebraElement::from_raw(basis.laplacian_banded(&p0));
        Self::from_pair(basis, w0, p0, Provenance::Loaded, tol)
    }

    /// The rotated pair `(R W0, R P0)`.
    pub fn rotated(&self, basis: &SpinBasis, rho: [f64; 3], tol: &Tolerances) -> Result<Self> {
        let w0 = AlgebraElement::project(&so3_rotate(basis, rho, &self.w0)?);
        let p0 = AlgebraElement::project(&so3_rotate(basis, rho, &self.p0)?);
        let provenance = Provenance::Rotated {
            rho,
            base: Box::new(self.provenance.clone()),
        };
        Self::from_pair(basis, w0, p0, provenance, tol)
    }

    /// Scales both matrices by `s`.
    pub fn scaled(&self, basis: &SpinBasis, s: f64, tol: &Tolerances) -> Result<Self> {
        Self::from_pair(
            basis,
            self.w0.scale(s),
            self.p0.scale(s),
            self.provenance.clone(),
            tol,
        )
    }
}

/// `P0 = i diag(d)`, `W0 = Delta_n P0`.
pub fn zonal_state(basis: &SpinBasis, d: &[f64], tol: &Tolerances) -> Result<SteadyState> {
    let n = basis.n();
    if d.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: d.len(),
        });
    }
    let trace: f64 = d.iter().sum();
    let scale = d.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
    if trace.abs() > 1e-12 * scale * n as f64 {
        return Err(Error::NotTraceless { trace: trace.abs() });
    }
    let p0 = AlgebraElement::from_diagonal(d);
    let w0 = AlgebraElement::from_raw(basis.laplacian_banded(&p0));
    SteadyState::from_pair(basis, w0, p0, Provenance::Zonal, tol)
}

/// `P0 = sum_i coeffs[i] E_{l, i - l}` in the real orthonormal eigenbasis,
/// `W0 = -l(l+1) P0`.
pub fn eigen_state(
    basis: &SpinBasis,
    l: usize,
    coeffs: &[f64],
    tol: &Tolerances,
) -> Result<SteadyState> {
    let n = basis.n();
    if l < 1 || l > n - 1 {
        return Err(Error::InvalidArgument(format!("l = {l} outside 1..={}", n - 1)));
    }
    if coeffs.len() != 2 * l + 1 {
        return Err(Error::InvalidArgument(format!(
            "expected {} coefficients for l = {l}, got {}",
            2 * l + 1,
            coeffs.len()
        )));
    }
    let rb = RealBasis::up_to(basis, l);
    let offset = l * l - 1;
    let mut full = vec![0.0; rb.len()];
    full[offset..offset + 2 * l + 1].copy_from_slice(coeffs);
    let p0 = AlgebraElement::project(&rb.synthesize(&full));
    let w0 = p0.scale(-((l * (l + 1)) as f64));
    SteadyState::from_pair(basis, w0, p0, Provenance::Eigenstate { l }, tol)
}

/// Unit zonal coefficient vector for [`eigen_state`].
pub fn zonal_coeffs(l: usize) -> Vec<f64> {
    let mut c = vec![0.0; 2 * l + 1];
    c[l] = 1.0;
    c
}
