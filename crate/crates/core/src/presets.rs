//! Named initial states.

use std::f64::consts::PI;

use crate::error::{parameter, Result};
use crate::model::State;
use crate::spectral::{Field, SpectralGrid, VectorField};

/// Width of the density blob.
pub const BLOB_SIGMA: f64 = 2.0;

/// Wavenumber of the blob's vortex array. Cells of size `π/k ≈ 12.6` keep
/// the strain rate at `k`, so the stirred blob stays resolved at moderate N.
pub const BLOB_FLOW_WAVENUMBER: f64 = 0.25;

/// Gaussian density at the domain centre, a chemical field equal to 1 away
/// from a Gaussian dip at the same place, and a Taylor–Green vortex array
/// with a stagnation point at the centre. All components are dealiased.
/// Intended for `L = 16π` (the default torus) and `N ≥ 128`.
pub fn blob(grid: &SpectralGrid) -> State {
    let half = grid.side_length() / 2.0;
    let sigma = BLOB_SIGMA;
    let r2 = |x: f64, y: f64| (x - half).powi(2) + (y - half).powi(2);
    let n = Field::from_fn(grid, |x, y| (-r2(x, y) / (2.0 * sigma * sigma)).exp());
    let wide = 2.0 * sigma;
    let c = Field::from_fn(grid, |x, y| 1.0 - 0.3 * (-r2(x, y) / (2.0 * wide * wide)).exp());
    State {
        n,
        c,
        u: taylor_green(grid, 1.0, BLOB_FLOW_WAVENUMBER),
    }
    .dealiased()
}

/// `a(−cos kx₁ sin kx₂, sin kx₁ cos kx₂)` with `k = 2πm/L` for the mode `m ≥ 1`
/// closest to the requested wavenumber.
pub fn taylor_green(grid: &SpectralGrid, amplitude: f64, wavenumber: f64) -> VectorField {
    let l = grid.side_length();
    let m = (wavenumber * l / (2.0 * PI)).round().max(1.0);
    let k = 2.0 * PI * m / l;
    VectorField::from_fns(
        grid,
        |x, y| -amplitude * (k * x).cos() * (k * y).sin(),
        |x, y| amplitude * (k * x).sin() * (k * y).cos(),
    )
}

/// Spatially uniform `n` and `c`, fluid at rest.
pub fn uniform(grid: &SpectralGrid, n0: f64, c0: f64) -> Result<State> {
    if n0 < 0.0 || c0 < 0.0 {
        return Err(parameter("initial", "uniform densities must be nonnegative"));
    }
    Ok(State {
        n: Field::constant(grid, n0),
        c: Field::constant(grid, c0),
        u: VectorField::zeros(grid),
    })
}

/// Shear flow `u = (a sin(2πm x₂/L), 0)` with `n = c = 0`.
pub fn single_mode(grid: &SpectralGrid, mode: i64, amplitude: f64) -> Result<State> {
    if mode <= 0 || mode >= grid.n() as i64 / 2 {
        return Err(parameter("initial", format!("mode {mode} is not resolved on this grid")));
    }
    let k = 2.0 * PI * mode as f64 / grid.side_length();
    Ok(State {
        n: Field::zeros(grid),
        c: Field::zeros(grid),
        u: VectorField::from_fns(grid, |_, y| amplitude * (k * y).sin(), |_, _| 0.0),
    })
}

/// Resolves a preset by name.
pub fn by_name(name: &str, grid: &SpectralGrid) -> Result<State> {
    match name {
        "blob" => Ok(blob(grid)),
        "uniform" => uniform(grid, 0.5, 1.0),
        "single-mode" => single_mode(grid, 1, 1.0),
        other => Err(parameter("initial.preset", format!("unknown preset {other:?}"))),
    }
}
