//! Cylindrical Wiener increments and the multiplicative noise operator.
//!
//! The noise acts on the momentum equation only, as `P(Σ_k w_k u dW_k)`.
//! Increments are keyed by `(seed, step, k)`: the ChaCha stream is the step
//! index and each mode reads from its own disjoint block of the keystream,
//! so any increment can be regenerated in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{parameter, Result};
use crate::spectral::{helmholtz_project, SpectralVectorField, VectorField};

// 32-bit words reserved per mode; a normal draw consumes far fewer
const WORDS_PER_MODE: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub lambda: f64,
    pub weights: Vec<f64>,
    pub seed: u64,
}

impl NoiseModel {
    /// Uniform weights `λ/√K`, so that `Σ w_k² = λ²`.
    pub fn new(mode_count: usize, lambda: f64, seed: u64) -> Result<Self> {
        if mode_count == 0 {
            return Err(parameter("noise.k_modes", "must be at least 1"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(parameter("noise.lambda", format!("must be nonnegative, got {lambda}")));
        }
        let w = lambda / (mode_count as f64).sqrt();
        Ok(Self {
            lambda,
            weights: vec![w; mode_count],
            seed,
        })
    }

    pub fn with_weights(weights: Vec<f64>, seed: u64) -> Result<Self> {
        if weights.is_empty() {
            return Err(parameter("noise.k_modes", "must be at least 1"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(parameter("noise.weights", "must be finite"));
        }
        let lambda = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        Ok(Self { lambda, weights, seed })
    }

    pub fn off() -> Self {
        Self {
            lambda: 0.0,
            weights: vec![0.0],
            seed: 0,
        }
    }

    pub fn mode_count(&self) -> usize {
        self.weights.len()
    }

    pub fn is_deterministic(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WienerIncrement {
    pub step_index: u64,
    pub values: Vec<f64>,
}

impl WienerIncrement {
    pub fn zeros(step_index: u64, mode_count: usize) -> Self {
        Self {
            step_index,
            values: vec![0.0; mode_count],
        }
    }

    /// `Σ_k w_k dW_k`: the scalar multiplying `u`.
    pub fn weighted_sum(&self, model: &NoiseModel) -> f64 {
        model.weights.iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }
}

/// Standard normal draw keyed by `(seed, step, k)`.
pub fn keyed_normal(seed: u64, step: u64, k: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng.set_word_pos(k as u128 * WORDS_PER_MODE);
    rng.sample(StandardNormal)
}

/// `K` independent `N(0, dt)` draws for one step.
pub fn sample_increments(model: &NoiseModel, step: u64, dt: f64) -> Result<WienerIncrement> {
    check_dt(dt)?;
    let sd = dt.sqrt();
    let values = (0..model.mode_count())
        .map(|k| sd * keyed_normal(model.seed, step, k))
        .collect();
    Ok(WienerIncrement { step_index: step, values })
}

/// Increment over `[step·dt, (step+1)·dt]` assembled from `substeps` fine
/// increments of length `dt/substeps`. Runs whose `dt·substeps` products
/// agree share a single Brownian path.
pub fn sample_aggregated(model: &NoiseModel, step: u64, dt: f64, substeps: u64) -> Result<WienerIncrement> {
    check_dt(dt)?;
    if substeps == 0 {
        return Err(parameter("noise_substeps", "must be at least 1"));
    }
    let fine = dt / substeps as f64;
    let mut total = WienerIncrement::zeros(step, model.mode_count());
    for s in 0..substeps {
        let inc = sample_increments(model, step * substeps + s, fine)?;
        for (t, v) in total.values.iter_mut().zip(inc.values) {
            *t += v;
        }
    }
    Ok(total)
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(parameter("dt", format!("must be positive, got {dt}")))
    }
}

/// `P(Σ_k w_k u dW_k)`.
pub fn apply_noise(u: &VectorField, model: &NoiseModel, dw: &WienerIncrement) -> VectorField {
    apply_noise_spectral(&u.to_spectral(), model, dw).to_physical()
}

pub fn apply_noise_spectral(u: &SpectralVectorField, model: &NoiseModel, dw: &WienerIncrement) -> SpectralVectorField {
    helmholtz_project(&u.scale(dw.weighted_sum(model)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_weights_carry_lambda() {
        let m = NoiseModel::new(4, 0.6, 1).unwrap();
        let s: f64 = m.weights.iter().map(|w| w * w).sum();
        assert!((s - 0.36).abs() < 1e-15);
        assert!(NoiseModel::new(0, 0.1, 1).is_err());
        assert!(NoiseModel::new(2, -0.1, 1).is_err());
        assert!(NoiseModel::new(3, 0.0, 1).unwrap().is_deterministic());
    }

    #[test]
    fn increments_are_reproducible() {
        let m = NoiseModel::new(5, 1.0, 42).unwrap();
        let a = sample_increments(&m, 17, 0.01).unwrap();
        let b = sample_increments(&m, 17, 0.01).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_increments(&m, 18, 0.01).unwrap());
        assert!(sample_increments(&m, 1, 0.0).is_err());
    }

    #[test]
    fn each_mode_is_keyed_independently() {
        let m = NoiseModel::new(6, 1.0, 3).unwrap();
        let inc = sample_increments(&m, 9, 1.0).unwrap();
        for (k, v) in inc.values.iter().enumerate() {
            assert_eq!(*v, keyed_normal(3, 9, k));
        }
    }

    #[test]
    fn single_substep_matches_plain_increment() {
        let m = NoiseModel::new(3, 1.0, 7).unwrap();
        assert_eq!(sample_aggregated(&m, 4, 0.1, 1).unwrap(), sample_increments(&m, 4, 0.1).unwrap());
    }
}
