//! Functionals of a state: norms, entropy, √c energies and budget residuals.
//!
//! All integrals are grid quadratures over the torus (exact for band-limited
//! integrands), and all derivatives are spectral.

use std::io::Write;

use crate::error::{Error, Result};
use crate::lp_besov::homogeneous_sobolev_norm;
use crate::model::{Potential, RegularizationParams, State};
use crate::noise::NoiseModel;
use crate::spectral::ops::{fractional_symbol, mollifier_symbol};
use crate::spectral::{
    curl2d, dealiased_product, grad, helmholtz_project, laplacian, Field, SpectralVectorField,
};

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_n: f64,
    pub l2_n: f64,
    pub l3_n3: f64,
    pub h1_n: f64,
    pub entropy: f64,
    pub weighted_moment: f64,
    pub mass_c: f64,
    pub linf_c: f64,
    pub l1_c: f64,
    pub grad_sqrt_c: f64,
    pub lap_sqrt_c: f64,
    pub quartic_c: f64,
    pub l2_u: f64,
    pub l4_u4: f64,
    pub dissipation_u: f64,
    pub l2_v: f64,
    pub l43_v: f64,
    pub halpha_v: f64,
    pub min_n: f64,
    pub min_c: f64,
    pub energy_residual: f64,
    /// Negative samples of `n` and `c` clipped to zero inside `√c` and `n ln n`.
    pub clipped_points: u64,
    pub delta_floor: f64,
}

pub const CSV_COLUMNS: [&str; 24] = [
    "t",
    "mass_n",
    "l2_n",
    "l3_n3",
    "h1_n",
    "entropy",
    "weighted_moment",
    "mass_c",
    "linf_c",
    "l1_c",
    "grad_sqrt_c",
    "lap_sqrt_c",
    "quartic_c",
    "l2_u",
    "l4_u4",
    "dissipation_u",
    "l2_v",
    "l43_v",
    "halpha_v",
    "min_n",
    "min_c",
    "energy_residual",
    "clipped_points",
    "delta_floor",
];

impl DiagnosticsRecord {
    pub fn values(&self) -> [f64; 22] {
        [
            self.t,
            self.mass_n,
            self.l2_n,
            self.l3_n3,
            self.h1_n,
            self.entropy,
            self.weighted_moment,
            self.mass_c,
            self.linf_c,
            self.l1_c,
            self.grad_sqrt_c,
            self.lap_sqrt_c,
            self.quartic_c,
            self.l2_u,
            self.l4_u4,
            self.dissipation_u,
            self.l2_v,
            self.l43_v,
            self.halpha_v,
            self.min_n,
            self.min_c,
            self.energy_residual,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite()) && self.delta_floor.is_finite()
    }

    pub fn csv_row(&self) -> String {
        let mut cells: Vec<String> = self.values().iter().map(|v| format!("{v:?}")).collect();
        cells.push(self.clipped_points.to_string());
        cells.push(format!("{:?}", self.delta_floor));
        cells.join(",")
    }
}

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

pub fn write_csv<W: Write>(records: &[DiagnosticsRecord], mut out: W) -> Result<()> {
    writeln!(out, "{}", csv_header())?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// `δ_floor = 1e−10 · max c₀` (at least `1e−300`).
pub fn default_delta_floor(c0: &Field) -> f64 {
    (1e-10 * c0.max()).max(1e-300)
}

fn sq_l2(f: &Field) -> f64 {
    f.samples().iter().map(|v| v * v).sum::<f64>() * f.grid().cell_area()
}

fn quadrature(f: &Field, g: impl Fn(f64) -> f64) -> f64 {
    f.samples().iter().map(|&v| g(v)).sum::<f64>() * f.grid().cell_area()
}

/// Evaluates every functional; `energy_residual` is left at 0 for the caller.
pub fn compute_record(state: &State, t: f64, alpha: f64, delta_floor: f64) -> DiagnosticsRecord {
    let grid = state.grid();
    let area = grid.area();
    let n = &state.n;
    let c = &state.c;

    let ns = n.to_spectral();
    let grad_n = grad(&ns).to_physical();
    let l2_n = sq_l2(n).sqrt();
    let h1_n = (l2_n * l2_n + sq_l2(&grad_n.components[0]) + sq_l2(&grad_n.components[1])).sqrt();

    let mut clipped = 0u64;
    let entropy = quadrature(n, |v| if v > 1e-300 { v * v.ln() } else { 0.0 });
    clipped += n.samples().iter().filter(|&&v| v < 0.0).count() as u64;
    clipped += c.samples().iter().filter(|&&v| v < 0.0).count() as u64;

    let half = grid.side_length() / 2.0;
    let weighted_moment = {
        let mut acc = 0.0;
        for (flat, &v) in n.samples().iter().enumerate() {
            let (row, col) = (flat / grid.n(), flat % grid.n());
            let dx = grid.coordinate(col) - half;
            let dy = grid.coordinate(row) - half;
            acc += dx.hypot(dy) * v;
        }
        acc * grid.cell_area()
    };

    let sqrt_c = c.map(|v| v.max(0.0).sqrt());
    let sqrt_cs = sqrt_c.to_spectral();
    let grad_sqrt = grad(&sqrt_cs).to_physical();
    let grad_sqrt_sq = grad_sqrt.components[0].zip_with(&grad_sqrt.components[1], |a, b| a * a + b * b);
    let lap_sqrt = laplacian(&sqrt_cs).to_physical();
    let quartic = grad_sqrt_sq
        .zip_with(c, |g2, cv| g2 * g2 / (cv.max(0.0) + delta_floor))
        .integral();

    let us = state.u.to_spectral();
    let speed_sq = state.u.components[0].zip_with(&state.u.components[1], |a, b| a * a + b * b);
    let dissipation_u = us
        .components
        .iter()
        .map(|f| homogeneous_sobolev_norm(f, alpha).powi(2))
        .sum::<f64>()
        * area;
    let vs = curl2d(&us).expect("same grid");
    let v = vs.to_physical();

    DiagnosticsRecord {
        t,
        mass_n: quadrature(n, f64::abs),
        l2_n,
        l3_n3: quadrature(n, |x| x.abs().powi(3)),
        h1_n,
        entropy,
        weighted_moment,
        mass_c: c.integral(),
        linf_c: c.max_abs(),
        l1_c: quadrature(c, f64::abs),
        grad_sqrt_c: grad_sqrt_sq.integral(),
        lap_sqrt_c: sq_l2(&lap_sqrt),
        quartic_c: quartic,
        l2_u: speed_sq.integral().sqrt(),
        l4_u4: quadrature(&speed_sq, |s| s * s),
        dissipation_u,
        l2_v: sq_l2(&v).sqrt(),
        l43_v: quadrature(&v, |x| x.abs().powf(4.0 / 3.0)),
        halpha_v: homogeneous_sobolev_norm(&vs, alpha) * area.sqrt(),
        min_n: n.min(),
        min_c: c.min(),
        energy_residual: 0.0,
        clipped_points: clipped,
        delta_floor,
    }
}

/// Residual of the discrete balance for `½‖u‖²` over one step:
///
/// ```text
/// Δ(½‖u‖²) + ½Σ_ξ (1 − e^{−2μdt})|û|² − dt⟨u, P(n∇φ) ∗ ρ^ε⟩ − ½ Σ_k w_k² ‖u‖² dt
/// ```
///
/// with `μ = (2π|ξ|)^{2α}`, all evaluated on the pre-step state. The second
/// term is the dissipation `dt‖(−Δ)^{α/2}u‖²` integrated exactly over the
/// step, so pure linear decay has zero residual; otherwise the residual is
/// O(dt²). Only `eps` of `params` is used.
pub fn energy_budget_residual(
    prev: &State,
    next: &State,
    dt: f64,
    alpha: f64,
    potential: &Potential,
    params: &RegularizationParams,
    noise: &NoiseModel,
) -> f64 {
    let grid = prev.grid();
    let e0 = sq_l2(&prev.u.components[0]) + sq_l2(&prev.u.components[1]);
    let e1 = sq_l2(&next.u.components[0]) + sq_l2(&next.u.components[1]);
    let us = prev.u.to_spectral();
    let dissipated = us
        .components
        .iter()
        .map(|f| {
            f.coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let mu = fractional_symbol(grid.radial_wavenumber(i), alpha);
                    0.5 * (1.0 - (-2.0 * mu * dt).exp()) * c.norm_sqr()
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        * grid.area();
    let buoyancy = SpectralVectorField {
        components: [
            dealiased_product(&prev.n, &potential.grad_phi.components[0]).expect("same grid"),
            dealiased_product(&prev.n, &potential.grad_phi.components[1]).expect("same grid"),
        ],
        divergence_free: false,
    };
    let buoyancy = match params.eps {
        Some(e) => {
            let g = grid.clone();
            buoyancy.apply_real_symbol(|i| mollifier_symbol(g.radial_wavenumber(i), e))
        }
        None => buoyancy,
    };
    let work = helmholtz_project(&buoyancy).inner(&us).expect("same grid");
    let quadratic_variation: f64 = noise.weights.iter().map(|w| w * w).sum::<f64>() * e0 * dt;
    0.5 * (e1 - e0) + dissipated - dt * work - 0.5 * quadratic_variation
}

/// Relative L² error of `Δc = 2√c Δ√c + 2|∇√c|²`.
pub fn chain_rule_identity_check(c: &Field) -> Result<f64> {
    if c.min() <= 0.0 {
        return Err(Error::Precondition(format!(
            "chain rule check needs c > 0, got min {}",
            c.min()
        )));
    }
    let lhs = laplacian(&c.to_spectral()).to_physical();
    let root = c.map(f64::sqrt);
    let rs = root.to_spectral();
    let lap_root = laplacian(&rs).to_physical();
    let g = grad(&rs).to_physical();
    let g2 = g.components[0].zip_with(&g.components[1], |a, b| a * a + b * b);
    let rhs = root
        .zip_with(&lap_root, |r, l| 2.0 * r * l)
        .zip_with(&g2, |a, b| a + 2.0 * b);
    let scale = lhs.l2_norm();
    let err = lhs.sub(&rhs)?.l2_norm();
    Ok(if scale == 0.0 { err } else { err / scale })
}

/// Tracks the three conditions defining the event set `Ω_N` along a run:
/// `∫₀ᵗ ‖Δ√c‖²`, `∫₀ᵗ ∫|∇√c|⁴/c` and `sup ‖u‖⁴_{L⁴}` all at most `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSetProbe {
    pub n_threshold: f64,
    pub indicator: bool,
    pub lap_integral: f64,
    pub quartic_integral: f64,
    pub sup_l4: f64,
    last: Option<(f64, f64, f64)>,
}

impl EventSetProbe {
    pub fn new(n_threshold: f64) -> Self {
        Self {
            n_threshold,
            indicator: true,
            lap_integral: 0.0,
            quartic_integral: 0.0,
            sup_l4: 0.0,
            last: None,
        }
    }

    /// Feeds the next record; time integrals use the trapezoidal rule.
    pub fn observe(&mut self, r: &DiagnosticsRecord) {
        if let Some((t0, lap0, q0)) = self.last {
            let dt = r.t - t0;
            self.lap_integral += 0.5 * dt * (lap0 + r.lap_sqrt_c);
            self.quartic_integral += 0.5 * dt * (q0 + r.quartic_c);
        }
        self.last = Some((r.t, r.lap_sqrt_c, r.quartic_c));
        self.sup_l4 = self.sup_l4.max(r.l4_u4);
        let within = self.lap_integral <= self.n_threshold
            && self.quartic_integral <= self.n_threshold
            && self.sup_l4 <= self.n_threshold;
        self.indicator = self.indicator && within;
    }
}
