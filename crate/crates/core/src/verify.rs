//! Fast invariant suite behind `chemoflow verify`. Each check runs in well
//! under a second on a desk machine.

use std::f64::consts::{E, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coupling::coupled_run;
use crate::diagnostics::chain_rule_identity_check;
use crate::error::Result;
use crate::integrator::{integrate, run, SolverConfig};
use crate::lp_besov::{dyadic_block, DyadicRange};
use crate::model::{forcing, transport, Potential, RegularizationParams, State};
use crate::noise::{sample_increments, NoiseModel};
use crate::presets;
use crate::snapshot::{read_snapshot, write_snapshot, Snapshot};
use crate::spectral::sampling::{random_solenoidal, random_spectral};
use crate::spectral::{biot_savart, curl2d, fractional_laplacian, helmholtz_project, Field, SpectralGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Measured quantity and the bound it was held to.
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {} ({})", self.name, self.detail)
    }
}

type Check = fn() -> Result<(f64, f64)>;

const CHECKS: &[(&str, Check)] = &[
    ("parseval", parseval),
    ("projection_idempotent", projection_idempotent),
    ("projection_self_adjoint", projection_self_adjoint),
    ("fractional_laplacian_composition", frac_composition),
    ("biot_savart_round_trip", biot_savart_round_trip),
    ("littlewood_paley_reconstruction", lp_reconstruction),
    ("transport_skew_symmetry", transport_skew),
    ("mass_identity", mass_identity),
    ("logistic_ode", logistic_ode),
    ("chemical_decay_ode", chemical_decay_ode),
    ("single_mode_decay", single_mode_decay),
    ("noise_reproducible", noise_reproducible),
    ("chain_rule_identity", chain_rule),
    ("blob_positivity", blob_positivity),
    ("coupling_identical_paths", coupling_identical),
    ("snapshot_round_trip", snapshot_round_trip),
];

/// Runs every check. Errors raised inside a check count as failures.
pub fn run_suite() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, check)| match check() {
            Ok((value, bound)) => CheckResult {
                name,
                passed: value.is_finite() && value <= bound,
                detail: format!("{value:.3e} <= {bound:.0e}"),
            },
            Err(e) => CheckResult {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}

fn grid() -> SpectralGrid {
    SpectralGrid::new(64, 2.0 * PI).expect("valid grid")
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn parseval() -> Result<(f64, f64)> {
    let g = grid();
    let f = random_spectral(&g, &mut rng(1), 20, true);
    let phys = f.to_physical();
    let direct = phys.samples().iter().map(|v| v * v).sum::<f64>() * g.cell_area();
    let spectral = f.mean_square() * g.area();
    Ok(((direct - spectral).abs() / spectral, 1e-10))
}

fn projection_idempotent() -> Result<(f64, f64)> {
    let g = grid();
    let u = crate::spectral::sampling::random_vector(&g, &mut rng(2), 20).to_spectral();
    let p = helmholtz_project(&u);
    let pp = helmholtz_project(&p);
    let diff = pp.to_physical().sub(&p.to_physical())?.l2_norm() / p.l2_norm();
    Ok((diff.max(p.divergence_residual()), 1e-10))
}

fn projection_self_adjoint() -> Result<(f64, f64)> {
    let g = grid();
    let u = crate::spectral::sampling::random_vector(&g, &mut rng(3), 20).to_spectral();
    let w = crate::spectral::sampling::random_vector(&g, &mut rng(4), 20).to_spectral();
    let a = helmholtz_project(&u).inner(&w)?;
    let b = u.inner(&helmholtz_project(&w))?;
    Ok(((a - b).abs() / (u.l2_norm() * w.l2_norm()), 1e-10))
}

fn frac_composition() -> Result<(f64, f64)> {
    let g = grid();
    let f = random_spectral(&g, &mut rng(5), 20, false);
    let twice = fractional_laplacian(&fractional_laplacian(&f, 0.5)?, 0.5)?;
    let once = fractional_laplacian(&f, 1.0)?;
    Ok((twice.sub(&once)?.l2_norm() / once.l2_norm(), 1e-10))
}

fn biot_savart_round_trip() -> Result<(f64, f64)> {
    let g = grid();
    let v = random_spectral(&g, &mut rng(6), 20, false);
    let back = curl2d(&biot_savart(&v)?)?;
    Ok((back.sub(&v)?.l2_norm() / v.l2_norm(), 1e-10))
}

fn lp_reconstruction() -> Result<(f64, f64)> {
    let g = grid();
    let f = random_spectral(&g, &mut rng(7), 31, false);
    let mut sum = crate::spectral::SpectralField::zeros(&g);
    for j in DyadicRange::for_grid(&g).iter() {
        sum = sum.add(&dyadic_block(&f, j))?;
    }
    Ok((sum.sub(&f)?.l2_norm() / f.l2_norm(), 1e-10))
}

fn transport_skew() -> Result<(f64, f64)> {
    let g = grid();
    let u = random_solenoidal(&g, &mut rng(8), 8);
    let f = random_spectral(&g, &mut rng(9), 8, true).to_physical();
    let pairing = transport(&u, &f)?.inner(&f)?;
    let scale = u.l2_norm() * f.l2_norm().powi(2);
    Ok((pairing.abs() / scale, 1e-10))
}

fn mass_identity() -> Result<(f64, f64)> {
    let g = grid();
    let n = random_spectral(&g, &mut rng(10), 6, false).to_physical().map(|v| 1.0 + 0.3 * v);
    let c = random_spectral(&g, &mut rng(11), 6, false).to_physical().map(|v| 1.0 + 0.3 * v);
    let s = State::new(n, c, random_solenoidal(&g, &mut rng(12), 6))?;
    let f = forcing(&s, &RegularizationParams::off(), &Potential::sinusoidal(&g, 1.0))?;
    let expected = s.n.map(|v| v - v * v).integral();
    Ok(((f.dn.integral() - expected).abs() / expected.abs().max(1.0), 1e-12))
}

fn uniform_endpoint(n0: f64, dt: f64) -> Result<State> {
    let g = SpectralGrid::new(4, 1.0)?;
    let s = presets::uniform(&g, n0, 1.0)?;
    integrate(&s, &SolverConfig::new(&g, dt, 1.0, 1.0))
}

fn logistic_ode() -> Result<(f64, f64)> {
    let s = uniform_endpoint(0.5, 1e-3)?;
    Ok(((s.n.samples()[0] - E / (E + 1.0)).abs(), 1e-6))
}

fn chemical_decay_ode() -> Result<(f64, f64)> {
    let s = uniform_endpoint(1.0, 1e-3)?;
    Ok(((s.c.samples()[0] - (-1f64).exp()).abs(), 1e-6))
}

fn single_mode_decay() -> Result<(f64, f64)> {
    let g = SpectralGrid::new(16, 2.0 * PI)?;
    let alpha = 0.75;
    let s = presets::single_mode(&g, 2, 1.0)?;
    let t = 0.5;
    let out = integrate(&s, &SolverConfig::new(&g, 0.01, t, alpha))?;
    let decay = (-(2f64).powf(2.0 * alpha) * t).exp();
    let expected = s.u.scale(decay);
    Ok((out.u.sub(&expected)?.l2_norm() / expected.l2_norm(), 1e-10))
}

fn noise_reproducible() -> Result<(f64, f64)> {
    let m = NoiseModel::new(8, 1.0, 99)?;
    let a = sample_increments(&m, 1234, 0.01)?;
    let b = sample_increments(&m, 1234, 0.01)?;
    let mismatch = a.values.iter().zip(&b.values).filter(|(x, y)| x != y).count();
    Ok((mismatch as f64, 0.0))
}

fn chain_rule() -> Result<(f64, f64)> {
    let g = SpectralGrid::new(128, 16.0 * PI)?;
    let c = presets::blob(&g).c;
    Ok((chain_rule_identity_check(&c)?, 1e-6))
}

fn blob_scenario(t_end: f64) -> Result<(State, SolverConfig)> {
    let g = SpectralGrid::new(64, 8.0 * PI)?;
    let mut cfg = SolverConfig::new(&g, 0.01, t_end, 0.75);
    cfg.noise = NoiseModel::new(4, 0.1, 7)?;
    cfg.potential = Potential::sinusoidal(&g, 1.0);
    Ok((presets::blob(&g), cfg))
}

fn blob_positivity() -> Result<(f64, f64)> {
    let g = SpectralGrid::new(128, 16.0 * PI)?;
    let mut cfg = SolverConfig::new(&g, 2e-3, 0.1, 0.75);
    cfg.noise = NoiseModel::new(4, 0.1, 7)?;
    cfg.potential = Potential::sinusoidal(&g, 1.0);
    cfg.diagnostics_every = 10;
    let s = presets::blob(&g);
    let traj = run(&s, &cfg)?;
    let worst = traj
        .records
        .iter()
        .map(|r| (-r.min_n).max(-r.min_c))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((worst, 1e-8))
}

fn coupling_identical() -> Result<(f64, f64)> {
    let (s, cfg) = blob_scenario(0.05)?;
    let recs = coupled_run(&s, &s, &cfg)?;
    Ok((recs.iter().map(|r| r.e).fold(0.0, f64::max), 1e-12))
}

fn snapshot_round_trip() -> Result<(f64, f64)> {
    let g = SpectralGrid::new(16, 3.0)?;
    let mut state = presets::blob(&g);
    state.c = Field::from_fn(&g, |x, y| (x * y).sin());
    let snap = Snapshot {
        t: 0.3,
        alpha: 0.75,
        state,
    };
    let mut a = Vec::new();
    write_snapshot(&snap, &mut a)?;
    let mut b = Vec::new();
    write_snapshot(&read_snapshot(&a[..])?, &mut b)?;
    Ok(((a != b) as u8 as f64, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        for r in run_suite() {
            assert!(r.passed, "{}", r.line());
        }
    }
}
