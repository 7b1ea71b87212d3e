//! Physical and spectral field containers.
//!
//! Coefficients are Fourier-series coefficients: the forward transform
//! divides by `N²`, so mode `m` holds `(1/N²) Σ f(x) e^{−2πi m·x/L}` and a
//! constant field `a` has coefficient `a` at `m = 0`. With that scaling the
//! discrete Parseval identity reads `∫|f|² = L² Σ_m |f̂(m)|²`.

use num_complex::Complex64;

use super::grid::SpectralGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: SpectralGrid,
    samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: SpectralGrid,
    coeffs: Vec<Complex64>,
}

/// Velocity-like pair of physical fields.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub components: [Field; 2],
    pub divergence_free: bool,
}

/// Spectral counterpart of [`VectorField`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVectorField {
    pub components: [SpectralField; 2],
    pub divergence_free: bool,
}

impl Field {
    /// Wraps samples, rejecting wrong lengths and non-finite values.
    pub fn new(grid: &SpectralGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("sample {i} is not finite")));
        }
        Ok(Self::from_raw(grid, samples))
    }

    pub(crate) fn from_raw(grid: &SpectralGrid, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        Self {
            grid: grid.clone(),
            samples,
        }
    }

    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &SpectralGrid, value: f64) -> Self {
        Self::from_raw(grid, vec![value; grid.len()])
    }

    /// Samples `f(x₁, x₂)` at every grid point.
    pub fn from_fn(grid: &SpectralGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut samples = Vec::with_capacity(grid.len());
        for row in 0..n {
            let y = grid.coordinate(row);
            for col in 0..n {
                samples.push(f(grid.coordinate(col), y));
            }
        }
        Self::from_raw(grid, samples)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn to_spectral(&self) -> SpectralField {
        let mut buf: Vec<Complex64> = self
            .samples
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.grid.fft2(&mut buf, false);
        let scale = 1.0 / self.grid.len() as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        SpectralField {
            grid: self.grid.clone(),
            coeffs: buf,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(&self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(Field::from_raw(
            &self.grid,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub(crate) fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Field::from_raw(
            &self.grid,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    /// Point-wise product, without dealiasing.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Riemann-sum integral `Σ f · (L/N)²`.
    pub fn integral(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.grid.len() as f64
    }

    /// `∫ f g dx` by grid quadrature.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_area())
    }

    /// `‖f‖_{L^p}`; `p = ∞` gives the grid max of `|f|`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let sum: f64 = self.samples.iter().map(|v| v.abs().powf(p)).sum();
        (sum * self.grid.cell_area()).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.samples.iter().map(|v| v * v).sum();
        (sum * self.grid.cell_area()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl SpectralField {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coefficients(grid: &SpectralGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of mode `(m₁, m₂)`, zero if the mode is not on the grid.
    pub fn coeff_at_mode(&self, m1: i64, m2: i64) -> Complex64 {
        self.grid
            .flat_index_of_mode(m1, m2)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Real part of the inverse transform.
    pub fn to_physical(&self) -> Field {
        let mut buf = self.coeffs.clone();
        self.grid.fft2(&mut buf, true);
        Field::from_raw(&self.grid, buf.into_iter().map(|c| c.re).collect())
    }

    /// Multiplies every coefficient by `symbol(flat_index)`.
    pub fn apply_real_symbol(&self, symbol: impl Fn(usize) -> f64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c * symbol(i))
                .collect(),
        }
    }

    /// Multiplies every coefficient by a complex `symbol(flat_index)`.
    pub fn apply_symbol(&self, symbol: impl Fn(usize) -> Complex64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c * symbol(i))
                .collect(),
        }
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.grid.check_same(&other.grid)?;
        Ok(self.zip_coeffs(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.grid.check_same(&other.grid)?;
        Ok(self.zip_coeffs(other, |a, b| a - b))
    }

    pub(crate) fn zip_coeffs(
        &self,
        other: &SpectralField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> SpectralField {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        self.apply_real_symbol(|_| s)
    }

    /// `Σ_m |f̂(m)|²`, the mean square of the represented function.
    pub fn mean_square(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `‖f‖_{L²}` over the torus, `L · (Σ |f̂|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.grid.side_length() * self.mean_square().sqrt()
    }

    /// `∫ f ḡ dx` computed from coefficients (real part).
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok(s * self.grid.area())
    }

    /// Largest violation of `f̂(−m) = conj(f̂(m))` relative to the largest
    /// coefficient. Zero for the transform of any real field.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for row in 0..n {
            for col in 0..n {
                let mirror = ((n - row) % n) * n + (n - col) % n;
                let d = (self.coeffs[row * n + col] - self.coeffs[mirror].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }
}

impl VectorField {
    pub fn new(u1: Field, u2: Field) -> Result<Self> {
        u1.grid().check_same(u2.grid())?;
        Ok(Self {
            components: [u1, u2],
            divergence_free: false,
        })
    }

    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            components: [Field::zeros(grid), Field::zeros(grid)],
            divergence_free: true,
        }
    }

    pub fn from_fns(
        grid: &SpectralGrid,
        f1: impl Fn(f64, f64) -> f64,
        f2: impl Fn(f64, f64) -> f64,
    ) -> Self {
        Self {
            components: [Field::from_fn(grid, f1), Field::from_fn(grid, f2)],
            divergence_free: false,
        }
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.components[0].grid()
    }

    pub fn to_spectral(&self) -> SpectralVectorField {
        SpectralVectorField {
            components: [
                self.components[0].to_spectral(),
                self.components[1].to_spectral(),
            ],
            divergence_free: self.divergence_free,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(Field::is_finite)
    }

    /// `∫ u·w dx`.
    pub fn inner(&self, other: &VectorField) -> Result<f64> {
        Ok(self.components[0].inner(&other.components[0])?
            + self.components[1].inner(&other.components[1])?)
    }

    pub fn l2_norm(&self) -> f64 {
        (self.components[0].l2_norm().powi(2) + self.components[1].l2_norm().powi(2)).sqrt()
    }

    /// Point-wise Euclidean magnitude.
    pub fn magnitude(&self) -> Field {
        self.components[0].zip_with(&self.components[1], |a, b| a.hypot(b))
    }

    pub fn scale(&self, s: f64) -> VectorField {
        VectorField {
            components: [self.components[0].scale(s), self.components[1].scale(s)],
            divergence_free: self.divergence_free,
        }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        Ok(VectorField {
            components: [
                self.components[0].add(&other.components[0])?,
                self.components[1].add(&other.components[1])?,
            ],
            divergence_free: self.divergence_free && other.divergence_free,
        })
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        Ok(VectorField {
            components: [
                self.components[0].sub(&other.components[0])?,
                self.components[1].sub(&other.components[1])?,
            ],
            divergence_free: self.divergence_free && other.divergence_free,
        })
    }
}

impl SpectralVectorField {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            components: [SpectralField::zeros(grid), SpectralField::zeros(grid)],
            divergence_free: true,
        }
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.components[0].grid()
    }

    pub fn to_physical(&self) -> VectorField {
        VectorField {
            components: [
                self.components[0].to_physical(),
                self.components[1].to_physical(),
            ],
            divergence_free: self.divergence_free,
        }
    }

    /// Applies the same scalar symbol to both components.
    pub fn apply_real_symbol(&self, symbol: impl Fn(usize) -> f64) -> SpectralVectorField {
        SpectralVectorField {
            components: [
                self.components[0].apply_real_symbol(&symbol),
                self.components[1].apply_real_symbol(&symbol),
            ],
            divergence_free: self.divergence_free,
        }
    }

    pub fn add(&self, other: &SpectralVectorField) -> Result<SpectralVectorField> {
        Ok(SpectralVectorField {
            components: [
                self.components[0].add(&other.components[0])?,
                self.components[1].add(&other.components[1])?,
            ],
            divergence_free: self.divergence_free && other.divergence_free,
        })
    }

    pub fn scale(&self, s: f64) -> SpectralVectorField {
        self.apply_real_symbol(|_| s)
    }

    pub fn inner(&self, other: &SpectralVectorField) -> Result<f64> {
        Ok(self.components[0].inner(&other.components[0])?
            + self.components[1].inner(&other.components[1])?)
    }

    pub fn l2_norm(&self) -> f64 {
        let g = self.grid();
        g.side_length()
            * (self.components[0].mean_square() + self.components[1].mean_square()).sqrt()
    }

    /// Largest `|ξ·û(m)|` relative to the largest `|ξ||û(m)|`.
    pub fn divergence_residual(&self) -> f64 {
        let g = self.grid();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..g.len() {
            let (k1, k2) = g.wavevector(i);
            let a = self.components[0].coeffs()[i];
            let b = self.components[1].coeffs()[i];
            worst = worst.max((a * k1 + b * k2).norm());
            scale = scale.max(g.radial_wavenumber(i) * (a.norm_sqr() + b.norm_sqr()).sqrt());
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}
