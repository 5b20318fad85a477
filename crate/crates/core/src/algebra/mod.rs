//! Quantized geometry of the sphere: su(n) elements, spin generators, the
//! Hoppe–Yau Laplacian and its eigenbasis.

pub mod eigenbasis;
pub mod element;
pub mod spin;
mod tridiag;

pub use eigenbasis::{eigenbasis_build, EigenBasisEntry, RealBasis, RealBasisElement};
pub use element::{
    bracket, casimir, expm_skew, inner, norm, norm_sq, offdiag_norm, remove_trace,
    skew_deviation, sorted_spectrum, symmetrize, AlgebraElement, CMatrix, C64,
};
pub use spin::SpinBasis;
