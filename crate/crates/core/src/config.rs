//! Numerical tolerances shared by the certifier, the steady-state builders
//! and the spectral routines. Every value is a default and may be overridden.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Skew-Hermitian check on construction, relative to `max(1, max|entry|)`.
    pub skew: f64,
    /// Relative gap below which two eigenvalues (or eigenvalue differences)
    /// are treated as equal.
    pub cluster: f64,
    /// Relative commutator residual accepted by simultaneous diagonalization.
    pub commute: f64,
    /// Relative residual gate for steady pairs entering the certifier.
    pub steady: f64,
    /// Strictness margin for the `L > -6` and `L > -2` tests.
    pub strict_margin: f64,
    /// Relative singular-value cutoff for the orbit tangent space.
    pub svd_rank: f64,
    /// First-eigenspace leakage below which the refined bound applies.
    pub leakage: f64,
    /// Norm of `W0` at or below which a state is trivial.
    pub trivial: f64,
    /// Off-diagonal / zero-norm threshold for rigidity conclusions.
    pub rigidity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            skew: 1e-12,
            cluster: 1e-9,
            commute: 1e-8,
            steady: 1e-8,
            strict_margin: 1e-9,
            svd_rank: 1e-10,
            leakage: 1e-10,
            trivial: 1e-10,
            rigidity: 1e-8,
        }
    }
}
