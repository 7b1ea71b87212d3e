//! Littlewood-Paley blocks and Besov / Sobolev norms on the torus.
//!
//! # Partition of unity
//!
//! With `step` from [`crate::smooth`], the low-pass profile is
//!
//! ```text
//! ψ(r) = 1 − step((r − 3/4) / (4/3 − 3/4))      (1 on r ≤ 3/4, 0 on r ≥ 4/3)
//! φ(r) = ψ(r/2) − ψ(r)                          (supported in 3/4 < r < 8/3)
//! ```
//!
//! and the block `Δ̇_j` multiplies mode `ξ` by `φ(2^{−j}|ξ|)`. The sum over
//! `j` telescopes to 1 for every `ξ ≠ 0`; blocks `j` and `j'` with
//! `|j − j'| ≥ 2` have disjoint supports.
//!
//! Homogeneous norms sum over the finite range of `j` whose blocks touch
//! the grid; the mean mode never enters a block. `L^p` norms use the
//! equal-weight grid quadrature, `L^∞` the grid maximum.

use crate::error::{parameter, Error, Result};
use crate::smooth::ramp_down;
use crate::spectral::{partial, Field, SpectralField, SpectralGrid, VectorField};

pub fn low_pass_profile(r: f64) -> f64 {
    ramp_down(r, 0.75, 4.0 / 3.0)
}

/// Annular bump `φ(r) = ψ(r/2) − ψ(r)`.
pub fn annulus_bump(r: f64) -> f64 {
    low_pass_profile(r / 2.0) - low_pass_profile(r)
}

/// Weight of block `j` at radial wavenumber `r`.
pub fn block_weight(j: i32, r: f64) -> f64 {
    annulus_bump(r * 2f64.powi(-j))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicRange {
    pub j_min: i32,
    pub j_max: i32,
}

impl DyadicRange {
    /// Tightest range whose blocks cover every nonzero grid mode.
    pub fn for_grid(grid: &SpectralGrid) -> Self {
        let lo = grid.min_wavenumber();
        let hi = grid.max_wavenumber();
        // block j is supported on 3/4·2^j < r < 8/3·2^j
        let j_min = ((lo * 3.0 / 8.0).log2().floor() as i32) + 1;
        let j_max = ((hi * 4.0 / 3.0).log2().ceil() as i32) - 1;
        let touches = |j: i32| {
            grid.radial_wavenumbers()
                .iter()
                .any(|&r| r > 0.0 && block_weight(j, r) > 0.0)
        };
        let mut range = DyadicRange {
            j_min: j_min - 1,
            j_max: j_max + 1,
        };
        while !touches(range.j_min) {
            range.j_min += 1;
        }
        while !touches(range.j_max) {
            range.j_max -= 1;
        }
        range
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    pub fn contains(&self, j: i32) -> bool {
        j >= self.j_min && j <= self.j_max
    }
}

/// `Δ̇_j F`.
pub fn dyadic_block(f: &SpectralField, j: i32) -> SpectralField {
    let g = f.grid().clone();
    f.apply_real_symbol(|i| {
        let r = g.radial_wavenumber(i);
        if r == 0.0 {
            0.0
        } else {
            block_weight(j, r)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub r: f64,
    pub homogeneous: bool,
}

impl BesovIndex {
    pub fn homogeneous(s: f64, p: f64, r: f64) -> Self {
        Self {
            s,
            p,
            r,
            homogeneous: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(parameter("p", format!("must lie in [1, ∞], got {}", self.p)));
        }
        if !(self.r >= 1.0) {
            return Err(parameter("r", format!("must lie in [1, ∞], got {}", self.r)));
        }
        if !self.s.is_finite() {
            return Err(parameter("s", "must be finite"));
        }
        Ok(())
    }
}

fn lr_sum(terms: impl Iterator<Item = f64>, r: f64) -> f64 {
    if r.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// `‖F‖_{L^p}` of a spectral field; `p = 2` is read off the coefficients.
fn lp_of_spectral(f: &SpectralField, p: f64) -> f64 {
    if p == 2.0 {
        f.l2_norm()
    } else {
        f.to_physical().lp_norm(p)
    }
}

fn lp_of_vector(parts: &[SpectralField; 2], p: f64) -> f64 {
    if p == 2.0 {
        let g = parts[0].grid();
        g.side_length() * (parts[0].mean_square() + parts[1].mean_square()).sqrt()
    } else {
        let a = parts[0].to_physical();
        let b = parts[1].to_physical();
        a.zip_with(&b, f64::hypot).lp_norm(p)
    }
}

/// Per-level `L^p` norms of the blocks, `(j, ‖Δ̇_j f‖_{L^p})`. The
/// inhomogeneous variant replaces levels `j < 0` by one low-frequency
/// block `ψ(|ξ|)` reported at `j = −1`, mean included.
fn block_norms(f: &SpectralField, p: f64, homogeneous: bool) -> Vec<(i32, f64)> {
    let range = DyadicRange::for_grid(f.grid());
    let g = f.grid().clone();
    if homogeneous {
        range
            .iter()
            .map(|j| (j, lp_of_spectral(&dyadic_block(f, j), p)))
            .collect()
    } else {
        let low = f.apply_real_symbol(|i| low_pass_profile(g.radial_wavenumber(i)));
        let mut out = vec![(-1, lp_of_spectral(&low, p))];
        out.extend(
            range
                .iter()
                .filter(|&j| j >= 0)
                .map(|j| (j, lp_of_spectral(&dyadic_block(f, j), p))),
        );
        out
    }
}

fn combine(norms: &[(i32, f64)], idx: &BesovIndex) -> f64 {
    lr_sum(
        norms.iter().map(|&(j, n)| 2f64.powf(j as f64 * idx.s) * n),
        idx.r,
    )
}

pub fn besov_norm_spectral(f: &SpectralField, idx: BesovIndex) -> Result<f64> {
    idx.validate()?;
    Ok(combine(&block_norms(f, idx.p, idx.homogeneous), &idx))
}

/// `‖f‖_{B^s_{p,r}}`: `ℓ^r` over `j` of `2^{js} ‖Δ̇_j f‖_{L^p}`.
pub fn besov_norm(f: &Field, idx: BesovIndex) -> Result<f64> {
    besov_norm_spectral(&f.to_spectral(), idx)
}

/// Besov norm of a vector field, block norms taken on the point-wise
/// Euclidean magnitude.
pub fn besov_norm_vector(u: &VectorField, idx: BesovIndex) -> Result<f64> {
    idx.validate()?;
    let parts = [u.components[0].to_spectral(), u.components[1].to_spectral()];
    let range = DyadicRange::for_grid(parts[0].grid());
    let norms: Vec<(i32, f64)> = if idx.homogeneous {
        range
            .iter()
            .map(|j| {
                let b = [dyadic_block(&parts[0], j), dyadic_block(&parts[1], j)];
                (j, lp_of_vector(&b, idx.p))
            })
            .collect()
    } else {
        let g = parts[0].grid().clone();
        let low = |f: &SpectralField| f.apply_real_symbol(|i| low_pass_profile(g.radial_wavenumber(i)));
        let mut out = vec![(-1, lp_of_vector(&[low(&parts[0]), low(&parts[1])], idx.p))];
        for j in range.iter().filter(|&j| j >= 0) {
            let b = [dyadic_block(&parts[0], j), dyadic_block(&parts[1], j)];
            out.push((j, lp_of_vector(&b, idx.p)));
        }
        out
    };
    Ok(combine(&norms, &idx))
}

/// Area-normalized Bessel-potential norm
/// `(Σ_m (1 + (2π|ξ|)²)^s |f̂(m)|²)^{1/2}`; equals `‖f‖_{L²}/L` at `s = 0`.
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    sobolev_norm_spectral(&f.to_spectral(), s)
}

pub fn sobolev_norm_spectral(f: &SpectralField, s: f64) -> f64 {
    let g = f.grid();
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let w = 2.0 * std::f64::consts::PI * g.radial_wavenumber(i);
            (1.0 + w * w).powf(s) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Area-normalized homogeneous norm `(Σ_{m≠0} (2π|ξ|)^{2s} |f̂(m)|²)^{1/2}`.
pub fn homogeneous_sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let g = f.grid();
    f.coeffs()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != 0)
        .map(|(i, c)| (2.0 * std::f64::consts::PI * g.radial_wavenumber(i)).powf(2.0 * s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Which bilinear product estimate to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BilinearForm {
    /// `‖f·∇g‖_{Ḃ^{−α}} ≤ C ‖f‖_{Ḃ^{1−2α+2/p}} ‖g‖_{Ḃ^{α}}`, `α ∈ (1/2, 1]`.
    General { alpha: f64 },
    /// `‖f·∇g‖_{Ḃ^{−3/4}} ≤ C ‖f‖_{Ḃ^{−1/4+2/p}} ‖g‖_{Ḃ^{1/2}}`.
    ThreeQuarter,
    /// `‖f·∇g‖_{Ḃ^{−1/4}} ≤ C ‖∇g‖_{L^∞} ‖f‖_{Ḃ^{3/4}}`.
    GradientSup,
}

/// `f·∇g` formed point-wise from spectral derivatives. No dealiasing: the
/// caller keeps the product inside the grid band.
pub fn advective_product(f: &VectorField, g: &Field) -> Result<Field> {
    f.grid().check_same(g.grid())?;
    let gs = g.to_spectral();
    let d1 = partial(&gs, 0).to_physical();
    let d2 = partial(&gs, 1).to_physical();
    let a = f.components[0].mul(&d1)?;
    let b = f.components[1].mul(&d2)?;
    a.add(&b)
}

/// Ratio of the two sides of a bilinear Besov estimate.
pub fn bilinear_ratio(f: &VectorField, g: &Field, form: BilinearForm, p: f64, r: f64) -> Result<f64> {
    let prod = advective_product(f, g)?;
    let (num_s, f_s) = match form {
        BilinearForm::General { alpha } => {
            if !(alpha > 0.5 && alpha <= 1.0) {
                return Err(parameter("alpha", format!("must lie in (1/2, 1], got {alpha}")));
            }
            (-alpha, 1.0 - 2.0 * alpha + 2.0 / p)
        }
        BilinearForm::ThreeQuarter => (-0.75, -0.25 + 2.0 / p),
        BilinearForm::GradientSup => (-0.25, 0.75),
    };
    let numerator = besov_norm(&prod, BesovIndex::homogeneous(num_s, p, r))?;
    let f_norm = besov_norm_vector(f, BesovIndex::homogeneous(f_s, p, r))?;
    let g_factor = match form {
        BilinearForm::General { alpha } => besov_norm(g, BesovIndex::homogeneous(alpha, p, r))?,
        BilinearForm::ThreeQuarter => besov_norm(g, BesovIndex::homogeneous(0.5, p, r))?,
        BilinearForm::GradientSup => {
            let gs = g.to_spectral();
            VectorField::new(partial(&gs, 0).to_physical(), partial(&gs, 1).to_physical())?
                .magnitude()
                .max_abs()
        }
    };
    let denominator = f_norm * g_factor;
    if numerator == 0.0 {
        return Ok(0.0);
    }
    if !(denominator > 0.0) {
        return Err(Error::UndefinedRatio(format!(
            "bilinear estimate denominator vanished (numerator {numerator})"
        )));
    }
    Ok(numerator / denominator)
}

/// `‖f·∇g‖_{Ḃ^{−α}_{p,r}} / (‖f‖_{Ḃ^{1−2α+2/p}_{p,r}} ‖g‖_{Ḃ^{α}_{p,r}})`.
pub fn verify_bilinear_estimate(f: &VectorField, g: &Field, alpha: f64, p: f64, r: f64) -> Result<f64> {
    bilinear_ratio(f, g, BilinearForm::General { alpha }, p, r)
}

/// `(‖(−Δ)^α f‖_{Ḃ^s} / ‖f‖_{Ḃ^{s+2α}}, reciprocal)`.
pub fn verify_frac_lap_equiv(f: &Field, s: f64, alpha: f64, p: f64, r: f64) -> Result<(f64, f64)> {
    let fs = f.to_spectral();
    let lap = crate::spectral::fractional_laplacian(&fs, alpha)?;
    let top = besov_norm_spectral(&lap, BesovIndex::homogeneous(s, p, r))?;
    let bottom = besov_norm_spectral(&fs, BesovIndex::homogeneous(s + 2.0 * alpha, p, r))?;
    if !(top > 0.0 && bottom > 0.0) {
        return Err(Error::UndefinedRatio(
            "fractional Laplacian equivalence needs a field with nonzero oscillating part".into(),
        ));
    }
    Ok((top / bottom, bottom / top))
}

/// `‖f‖_{Ḃ^{s−1}_{∞,r}} / ‖f‖_{Ḃ^{s}_{2,r}}`, the `(2, ∞)` embedding quotient.
pub fn embedding_ratio(f: &Field, s: f64, r: f64) -> Result<f64> {
    let fs = f.to_spectral();
    let top = besov_norm_spectral(&fs, BesovIndex::homogeneous(s - 1.0, f64::INFINITY, r))?;
    let bottom = besov_norm_spectral(&fs, BesovIndex::homogeneous(s, 2.0, r))?;
    if !(bottom > 0.0) {
        return Err(Error::UndefinedRatio("embedding denominator vanished".into()));
    }
    Ok(top / bottom)
}

/// One row of the block spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockNorm {
    pub j: i32,
    pub l2_norm: f64,
    pub lp_norm: f64,
}

pub fn block_spectrum(f: &Field, p: f64) -> Vec<BlockNorm> {
    let fs = f.to_spectral();
    DyadicRange::for_grid(fs.grid())
        .iter()
        .map(|j| {
            let b = dyadic_block(&fs, j);
            BlockNorm {
                j,
                l2_norm: b.l2_norm(),
                lp_norm: lp_of_spectral(&b, p),
            }
        })
        .collect()
}
