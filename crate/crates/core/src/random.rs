//! Seeded pseudo-random elements.
//!
//! Generator: `ChaCha8Rng::seed_from_u64(seed)`; a complex matrix `Z` is
//! filled row-major with `re ~ N(0,1)` then `im ~ N(0,1)` per entry, and the
//! sample is the su(n) projection `(Z - Z^dagger)/2 - (tr/n) I`. The same
//! stream drives every helper here so outputs depend only on the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{expm_skew, AlgebraElement, CMatrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let mut z = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            z[(r, c)] = C64::new(re, im);
        }
    }
    z
}

pub fn random_su<R: Rng>(n: usize, rng: &mut R) -> AlgebraElement {
    AlgebraElement::project(&gaussian_matrix(n, rng))
}

/// Skew-Hermitian with a random trace component, an element of u(n).
pub fn random_u<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let z = gaussian_matrix(n, rng);
    (&z - z.adjoint()) * C64::new(0.5, 0.0)
}

/// Haar-like unitary from the exponential of a random skew-Hermitian matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    expm_skew(&(random_u(n, rng) * C64::new(2.0, 0.0)))
}

/// Traceless real vector with standard normal entries.
pub fn random_traceless<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut d: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    d.iter_mut().for_each(|x| *x -= mean);
    d
}

/// Seeded su(n) element of unit norm.
pub fn unit_su(n: usize, seed: u64) -> AlgebraElement {
    let x = random_su(n, &mut rng(seed));
    let s = x.norm();
    x.scale(1.0 / s)
}
