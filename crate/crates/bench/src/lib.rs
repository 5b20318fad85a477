//! Fixtures shared by the benchmarks.

use zeitlin_core::random::unit_su;
use zeitlin_core::steady::{zonal_state, SteadyState};
use zeitlin_core::{AlgebraElement, SpinBasis, Tolerances};

pub struct Fixture {
    pub basis: SpinBasis,
    /// Unit-norm random element.
    pub w: AlgebraElement,
    /// Zonal steady state whose stream is a cubic in the spin weights.
    pub steady: SteadyState,
}

impl Fixture {
    pub fn new(n: usize) -> Self {
        let basis = SpinBasis::new(n).expect("n >= 2");
        let w = unit_su(n, n as u64);
        let d: Vec<f64> = basis
            .spin_weights()
            .iter()
            .map(|m| (m / n as f64) + 0.2 * (m * m * m) / (n * n * n) as f64)
            .collect();
        let steady = zonal_state(&basis, &d, &Tolerances::default()).expect("zonal state");
        Self { basis, w, steady }
    }
}
