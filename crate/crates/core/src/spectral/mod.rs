//! Fourier-space foundation on the periodic square `[0, L]²`.

mod field;
mod grid;
pub mod ops;
pub mod sampling;

pub use field::{Field, SpectralField, SpectralVectorField, VectorField};
pub use grid::{SpectralGrid, DEFAULT_DEALIAS_FRACTION};
pub use ops::{
    biot_savart, curl2d, dealias, dealias_vector, dealiased_product, div, fractional_laplacian,
    friedrichs_truncate, grad, helmholtz_project, laplacian, mollify, partial, resample,
    to_physical, to_spectral, TruncationBand,
};
