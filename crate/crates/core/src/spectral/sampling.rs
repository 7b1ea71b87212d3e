//! Random band-limited fields for property checks and verification runs.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::field::{SpectralField, VectorField};
use super::grid::SpectralGrid;

/// Real field with independent Gaussian coefficients on every mode with
/// `|m₁|, |m₂| ≤ max_mode`, excluding the Nyquist lines. The coefficient
/// array is Hermitian by construction; amplitudes decay like `1/(1+|m|²)`.
pub fn random_spectral<R: Rng + ?Sized>(
    grid: &SpectralGrid,
    rng: &mut R,
    max_mode: i64,
    with_mean: bool,
) -> SpectralField {
    let n = grid.n();
    let limit = max_mode.min((n / 2) as i64 - 1);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for m2 in 0..=limit {
        for m1 in -limit..=limit {
            if m2 == 0 && m1 < 0 {
                continue;
            }
            if m1 == 0 && m2 == 0 && !with_mean {
                continue;
            }
            let decay = 1.0 / (1.0 + (m1 * m1 + m2 * m2) as f64);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if m1 == 0 && m2 == 0 { 0.0 } else { rng.sample(StandardNormal) };
            let c = Complex64::new(re, im) * decay;
            let i = grid.flat_index_of_mode(m1, m2).expect("mode in range");
            let j = grid.flat_index_of_mode(-m1, -m2).expect("mode in range");
            coeffs[i] = c;
            coeffs[j] = c.conj();
        }
    }
    SpectralField::from_coefficients(grid, coeffs).expect("grid-sized coefficient array")
}

pub fn random_vector<R: Rng + ?Sized>(grid: &SpectralGrid, rng: &mut R, max_mode: i64) -> VectorField {
    VectorField {
        components: [
            random_spectral(grid, rng, max_mode, true).to_physical(),
            random_spectral(grid, rng, max_mode, true).to_physical(),
        ],
        divergence_free: false,
    }
}

/// Divergence-free, mean-free random velocity, projected in spectral space.
pub fn random_solenoidal<R: Rng + ?Sized>(grid: &SpectralGrid, rng: &mut R, max_mode: i64) -> VectorField {
    let mut u = random_vector(grid, rng, max_mode).to_spectral();
    for c in u.components.iter_mut() {
        c.coeffs_mut()[0] = Default::default();
    }
    super::ops::helmholtz_project(&u).to_physical()
}
