//! Periodic square grid and its discrete Fourier tables.
//!
//! Samples and coefficients share one row-major layout: flat index
//! `row * N + col`, where `col` runs along the first coordinate `x₁` and
//! `row` along `x₂`. Sample `(row, col)` sits at `x = (col·L/N, row·L/N)`.
//! Index `i` on either axis carries the integer mode `m = i` for `i < N/2`
//! and `m = i − N` otherwise, so the Nyquist index `N/2` carries `m = −N/2`.
//! The wavenumber of mode `m` is `ξ = m / L` (cycles per unit length).

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{parameter, Error, Result};

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

struct Tables {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// |ξ| for every flat index.
    radial: Vec<f64>,
    keep: Vec<bool>,
}

#[derive(Clone)]
pub struct SpectralGrid {
    n: usize,
    side_length: f64,
    dealias_fraction: f64,
    tables: Arc<Tables>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.n)
            .field("side_length", &self.side_length)
            .field("dealias_fraction", &self.dealias_fraction)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.side_length == other.side_length
            && self.dealias_fraction == other.dealias_fraction
    }
}

impl SpectralGrid {
    pub fn new(n: usize, side_length: f64) -> Result<Self> {
        Self::with_dealias(n, side_length, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(n: usize, side_length: f64, dealias_fraction: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(parameter("points_per_side", format!("must be an even integer >= 4, got {n}")));
        }
        if !(side_length.is_finite() && side_length > 0.0) {
            return Err(parameter("side_length", format!("must be positive, got {side_length}")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(parameter(
                "dealias_fraction",
                format!("must lie in (0, 1], got {dealias_fraction}"),
            ));
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        let cutoff = dealias_fraction * (n / 2) as f64;
        let mut radial = Vec::with_capacity(n * n);
        let mut keep = Vec::with_capacity(n * n);
        for row in 0..n {
            let m2 = mode_of(row, n);
            for col in 0..n {
                let m1 = mode_of(col, n);
                radial.push(((m1 * m1 + m2 * m2) as f64).sqrt() / side_length);
                keep.push((m1.abs() as f64) <= cutoff && (m2.abs() as f64) <= cutoff);
            }
        }

        Ok(Self {
            n,
            side_length,
            dealias_fraction,
            tables: Arc::new(Tables {
                forward,
                inverse,
                radial,
                keep,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Grid spacing `L/N`.
    pub fn spacing(&self) -> f64 {
        self.side_length / self.n as f64
    }

    /// Quadrature weight of one sample, `(L/N)²`.
    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    pub fn area(&self) -> f64 {
        self.side_length * self.side_length
    }

    /// Coordinate of sample index `i` along either axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Integer mode carried by index `i` along either axis.
    pub fn mode(&self, i: usize) -> i64 {
        mode_of(i, self.n)
    }

    /// Inverse of [`mode`](Self::mode) for `m ∈ [−N/2, N/2)`.
    pub fn index_of_mode(&self, m: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if m < -half || m >= half {
            None
        } else if m >= 0 {
            Some(m as usize)
        } else {
            Some((m + self.n as i64) as usize)
        }
    }

    /// Flat index of the mode pair `(m₁, m₂)`.
    pub fn flat_index_of_mode(&self, m1: i64, m2: i64) -> Option<usize> {
        Some(self.index_of_mode(m2)? * self.n + self.index_of_mode(m1)?)
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// True when either axis of the flat index sits on the Nyquist line.
    pub fn on_nyquist_line(&self, flat: usize) -> bool {
        self.is_nyquist(flat / self.n) || self.is_nyquist(flat % self.n)
    }

    /// Wavevector `(ξ₁, ξ₂)` of a flat index.
    pub fn wavevector(&self, flat: usize) -> (f64, f64) {
        let row = flat / self.n;
        let col = flat % self.n;
        (
            self.mode(col) as f64 / self.side_length,
            self.mode(row) as f64 / self.side_length,
        )
    }

    /// `|ξ|` of a flat index.
    pub fn radial_wavenumber(&self, flat: usize) -> f64 {
        self.tables.radial[flat]
    }

    pub fn radial_wavenumbers(&self) -> &[f64] {
        &self.tables.radial
    }

    /// Smallest nonzero `|ξ|`, i.e. `1/L`.
    pub fn min_wavenumber(&self) -> f64 {
        1.0 / self.side_length
    }

    /// Largest `|ξ|` present on the grid (the corner mode).
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::SQRT_2 * (self.n / 2) as f64 / self.side_length
    }

    /// Whether the 2/3-rule (or configured fraction) mask keeps this mode.
    pub fn dealias_keeps(&self, flat: usize) -> bool {
        self.tables.keep[flat]
    }

    pub fn check_same(&self, other: &SpectralGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Unnormalized in-place 2D transform.
    pub(crate) fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(data.len(), self.len());
        let plan = if inverse {
            &self.tables.inverse
        } else {
            &self.tables.forward
        };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, self.n);
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, self.n);
    }
}

fn mode_of(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny_grids() {
        assert!(SpectralGrid::new(7, 1.0).is_err());
        assert!(SpectralGrid::new(2, 1.0).is_err());
        assert!(SpectralGrid::new(8, 0.0).is_err());
        assert!(SpectralGrid::with_dealias(8, 1.0, 1.5).is_err());
    }

    #[test]
    fn mode_table_wraps_at_nyquist() {
        let g = SpectralGrid::new(8, 1.0).unwrap();
        let modes: Vec<i64> = (0..8).map(|i| g.mode(i)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for i in 0..8 {
            assert_eq!(g.index_of_mode(g.mode(i)), Some(i));
        }
        assert_eq!(g.index_of_mode(4), None);
    }

    #[test]
    fn dealias_mask_drops_highest_modes() {
        let g = SpectralGrid::new(16, 1.0).unwrap();
        // cutoff = 2/3 · 8 = 5.33
        assert!(g.dealias_keeps(g.flat_index_of_mode(5, -5).unwrap()));
        assert!(!g.dealias_keeps(g.flat_index_of_mode(6, 0).unwrap()));
        assert!(!g.dealias_keeps(g.flat_index_of_mode(0, -8).unwrap()));
    }

    #[test]
    fn wavevector_uses_cycles_per_length() {
        let g = SpectralGrid::new(8, 2.0).unwrap();
        let flat = g.flat_index_of_mode(1, -2).unwrap();
        assert_eq!(g.wavevector(flat), (0.5, -1.0));
        assert!((g.radial_wavenumber(flat) - (1.25f64).sqrt()).abs() < 1e-15);
    }
}
