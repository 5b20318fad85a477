//! SO(3) acting on u(n) by `R W = F W F^dagger` with
//! `F = exp((1/hbar) sum rho_a X_a) = exp(-i rho . S)`, so that the momentum
//! transforms as `L(R W) = exp(hat rho) L(W)`.

use nalgebra::{Matrix3, Vector3};

use crate::algebra::element::norm;
use crate::algebra::{expm_skew, CMatrix, SpinBasis, C64};
use crate::error::Result;

/// `(1/hbar) sum rho_a X_a`.
pub fn rotation_generator(basis: &SpinBasis, rho: [f64; 3]) -> CMatrix {
    let n = basis.n();
    let mut g = CMatrix::zeros(n, n);
    for (a, x) in basis.generators().iter().enumerate() {
        g += x.as_matrix() * C64::new(rho[a] / basis.hbar(), 0.0);
    }
    g
}

pub fn so3_rotate(basis: &SpinBasis, rho: [f64; 3], w: &CMatrix) -> Result<CMatrix> {
    basis.check_same(w, w)?;
    if rho == [0.0; 3] {
        return Ok(w.clone());
    }
    let f = expm_skew(&rotation_generator(basis, rho));
    Ok(&f * w * f.adjoint())
}

/// `exp(hat rho)` by the Rodrigues formula.
pub fn rotation_matrix(rho: [f64; 3]) -> Matrix3<f64> {
    let v = Vector3::from(rho);
    let theta = v.norm();
    if theta == 0.0 {
        return Matrix3::identity();
    }
    let k = v / theta;
    let hat = k.cross_matrix();
    Matrix3::identity() + hat * theta.sin() + hat * hat * (1.0 - theta.cos())
}

/// Rotation taking the first-eigenspace coefficient vector `a` of `W` to
/// the positive third axis. Returns `rho` and `R W`; `rho = 0` when
/// `||a|| <= 1e-13 ||W||`.
pub fn align_first_eigenspace(basis: &SpinBasis, w: &CMatrix) -> Result<([f64; 3], CMatrix)> {
    let (a, _) = basis.project_eigenspace_1(w)?;
    let rho = alignment_vector(a, norm(w));
    Ok((rho, so3_rotate(basis, rho, w)?))
}

pub(crate) fn alignment_vector(a: Vector3<f64>, scale: f64) -> [f64; 3] {
    let an = a.norm();
    if an <= 1e-13 * scale || an == 0.0 {
        return [0.0; 3];
    }
    let axis = a.cross(&Vector3::z());
    let s = axis.norm();
    // atan2 keeps full accuracy near the poles where acos does not.
    let angle = s.atan2(a[2]);
    if s <= 1e-15 * an {
        return if a[2] > 0.0 {
            [0.0; 3]
        } else {
            [std::f64::consts::PI, 0.0, 0.0]
        };
    }
    let rho = axis * (angle / s);
    [rho[0], rho[1], rho[2]]
}
