//! Diagonal Fourier multipliers and the differential operators built on them.
//!
//! Operators whose symbol is odd in `ξ` (first derivatives, curl, Leray
//! projection, Biot-Savart) zero the Nyquist row and column: on those lines
//! `−m` aliases back onto `m` and an odd symbol cannot keep the output real.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::field::{Field, SpectralField, SpectralVectorField};
use super::grid::SpectralGrid;
use crate::error::{parameter, Error, Result};

const TWO_PI: f64 = 2.0 * PI;

pub fn to_spectral(f: &Field) -> SpectralField {
    f.to_spectral()
}

pub fn to_physical(f: &SpectralField) -> Field {
    f.to_physical()
}

/// Symbol `(2π|ξ|)^{2α}` of `(−Δ)^α`, zero at `ξ = 0` for every `α`.
pub fn fractional_symbol(radial: f64, alpha: f64) -> f64 {
    if radial == 0.0 {
        0.0
    } else {
        (TWO_PI * radial).powf(2.0 * alpha)
    }
}

/// `(−Δ)^α` applied mode-wise.
pub fn fractional_laplacian(f: &SpectralField, alpha: f64) -> Result<SpectralField> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(parameter("alpha", format!("must be finite and >= 0, got {alpha}")));
    }
    let g = f.grid().clone();
    Ok(f.apply_real_symbol(|i| fractional_symbol(g.radial_wavenumber(i), alpha)))
}

/// Spectral power `(−Δ)^{s}` for any real `s`, dropping the mean mode.
/// Negative powers act as the homogeneous inverse on mean-zero fields.
pub fn homogeneous_power(f: &SpectralField, s: f64) -> SpectralField {
    let g = f.grid().clone();
    f.apply_real_symbol(|i| {
        let r = g.radial_wavenumber(i);
        if r == 0.0 {
            0.0
        } else {
            (TWO_PI * r).powf(2.0 * s)
        }
    })
}

/// Leray projection `(Id − ξξᵀ/|ξ|²)`; the mean mode passes through.
pub fn helmholtz_project(u: &SpectralVectorField) -> SpectralVectorField {
    let g = u.grid().clone();
    let [a, b] = &u.components;
    let mut p1 = Vec::with_capacity(g.len());
    let mut p2 = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let (u1, u2) = (a.coeffs()[i], b.coeffs()[i]);
        if i == 0 {
            p1.push(u1);
            p2.push(u2);
            continue;
        }
        if g.on_nyquist_line(i) {
            p1.push(Complex64::new(0.0, 0.0));
            p2.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let (k1, k2) = g.wavevector(i);
        let k2sum = k1 * k1 + k2 * k2;
        let along = (u1 * k1 + u2 * k2) / k2sum;
        p1.push(u1 - along * k1);
        p2.push(u2 - along * k2);
    }
    SpectralVectorField {
        components: [
            SpectralField::from_coefficients(&g, p1).expect("length preserved"),
            SpectralField::from_coefficients(&g, p2).expect("length preserved"),
        ],
        divergence_free: true,
    }
}

/// Frequency band kept by the Friedrichs truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationBand {
    /// `1/k ≤ |ξ| ≤ k`; removes the mean.
    Annulus,
    /// `|ξ| ≤ k`; keeps the mean.
    LowPass,
}

pub fn truncation_indicator(radial: f64, k: f64, band: TruncationBand) -> bool {
    match band {
        TruncationBand::Annulus => radial >= 1.0 / k && radial <= k,
        TruncationBand::LowPass => radial <= k,
    }
}

/// Sharp Fourier cutoff `J_k`.
pub fn friedrichs_truncate(f: &SpectralField, k: f64, band: TruncationBand) -> Result<SpectralField> {
    if !(k > 0.0) {
        return Err(parameter("k_band", format!("must be positive, got {k}")));
    }
    let g = f.grid().clone();
    Ok(f.apply_real_symbol(|i| {
        if truncation_indicator(g.radial_wavenumber(i), k, band) {
            1.0
        } else {
            0.0
        }
    }))
}

/// Gaussian mollifier symbol `exp(−ε²(2π|ξ|)²)`.
pub fn mollifier_symbol(radial: f64, eps: f64) -> f64 {
    let w = eps * TWO_PI * radial;
    (-w * w).exp()
}

pub fn mollify(f: &SpectralField, eps: f64) -> Result<SpectralField> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(parameter("eps", format!("must be positive, got {eps}")));
    }
    let g = f.grid().clone();
    Ok(f.apply_real_symbol(|i| mollifier_symbol(g.radial_wavenumber(i), eps)))
}

fn derivative_symbol(g: &SpectralGrid, i: usize, axis: usize) -> Complex64 {
    if g.on_nyquist_line(i) {
        return Complex64::new(0.0, 0.0);
    }
    let (k1, k2) = g.wavevector(i);
    let k = if axis == 0 { k1 } else { k2 };
    Complex64::new(0.0, TWO_PI * k)
}

/// `∂_{x_axis}` for `axis ∈ {0, 1}`.
pub fn partial(f: &SpectralField, axis: usize) -> SpectralField {
    let g = f.grid().clone();
    f.apply_symbol(|i| derivative_symbol(&g, i, axis))
}

pub fn grad(f: &SpectralField) -> SpectralVectorField {
    SpectralVectorField {
        components: [partial(f, 0), partial(f, 1)],
        divergence_free: false,
    }
}

pub fn div(u: &SpectralVectorField) -> Result<SpectralField> {
    u.components[0].grid().check_same(u.components[1].grid())?;
    Ok(partial(&u.components[0], 0).zip_coeffs(&partial(&u.components[1], 1), |a, b| a + b))
}

/// Scalar curl `∂₁u₂ − ∂₂u₁`.
pub fn curl2d(u: &SpectralVectorField) -> Result<SpectralField> {
    u.components[0].grid().check_same(u.components[1].grid())?;
    Ok(partial(&u.components[1], 0).zip_coeffs(&partial(&u.components[0], 1), |a, b| a - b))
}

/// `Δ = −(−Δ)^1`.
pub fn laplacian(f: &SpectralField) -> SpectralField {
    let g = f.grid().clone();
    f.apply_real_symbol(|i| -fractional_symbol(g.radial_wavenumber(i), 1.0))
}

/// Velocity with prescribed vorticity: `û = i(ξ₂, −ξ₁) v̂ / (2π|ξ|²)`.
pub fn biot_savart(v: &SpectralField) -> Result<SpectralVectorField> {
    let g = v.grid().clone();
    let mean = v.coeffs()[0];
    let scale = v.coeffs().iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if mean.norm() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Precondition(format!(
            "vorticity must have zero mean on the torus, got mode-0 coefficient {mean}"
        )));
    }
    let mut u1 = Vec::with_capacity(g.len());
    let mut u2 = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        if i == 0 || g.on_nyquist_line(i) {
            u1.push(Complex64::new(0.0, 0.0));
            u2.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let (k1, k2) = g.wavevector(i);
        let denom = TWO_PI * (k1 * k1 + k2 * k2);
        let c = v.coeffs()[i] * Complex64::new(0.0, 1.0) / denom;
        u1.push(c * k2);
        u2.push(-c * k1);
    }
    Ok(SpectralVectorField {
        components: [
            SpectralField::from_coefficients(&g, u1)?,
            SpectralField::from_coefficients(&g, u2)?,
        ],
        divergence_free: true,
    })
}

/// Zeroes every mode outside the dealiasing mask.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let g = f.grid().clone();
    f.apply_real_symbol(|i| if g.dealias_keeps(i) { 1.0 } else { 0.0 })
}

pub fn dealias_vector(u: &SpectralVectorField) -> SpectralVectorField {
    SpectralVectorField {
        components: [dealias(&u.components[0]), dealias(&u.components[1])],
        divergence_free: u.divergence_free,
    }
}

/// Point-wise product formed in physical space, transformed and masked.
pub fn dealiased_product(a: &Field, b: &Field) -> Result<SpectralField> {
    Ok(dealias(&a.mul(b)?.to_spectral()))
}

/// Copies the coefficients of `f` onto another grid with the same side
/// length, dropping modes the target cannot hold and both Nyquist lines.
pub fn resample(f: &SpectralField, target: &SpectralGrid) -> Result<SpectralField> {
    let src = f.grid();
    if src.side_length() != target.side_length() {
        return Err(Error::GridMismatch(format!(
            "resampling needs equal side lengths, got {} and {}",
            src.side_length(),
            target.side_length()
        )));
    }
    let mut out = SpectralField::zeros(target);
    for i in 0..src.len() {
        if src.on_nyquist_line(i) {
            continue;
        }
        let m1 = src.mode(i % src.n());
        let m2 = src.mode(i / src.n());
        if let Some(j) = target.flat_index_of_mode(m1, m2) {
            if !target.on_nyquist_line(j) {
                out.coeffs_mut()[j] = f.coeffs()[i];
            }
        }
    }
    Ok(out)
}
