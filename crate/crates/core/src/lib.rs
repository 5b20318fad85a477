//! Zeitlin's su(n) model of the 2-D Euler equations on the sphere.
//!
//! The vorticity is a traceless skew-Hermitian matrix `W` evolving by
//! `W' = -(1/hbar) [P, W]` with `Delta_n P = W`. This crate builds the
//! quantized Laplacian, constructs steady states, certifies their Lyapunov
//! stability from eigenvalue ratios and orbit Hessians, checks the rigidity
//! of certified states, and integrates the flow with an isospectral
//! midpoint scheme.

pub mod algebra;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod random;
pub mod render;
pub mod spectral;
pub mod stability;
pub mod steady;

pub use algebra::{AlgebraElement, CMatrix, RealBasis, SpinBasis, C64};
pub use config::Tolerances;
pub use error::{Error, Result};
