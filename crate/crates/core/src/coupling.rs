//! Two solutions driven by one Brownian path, and the difference functionals
//! that control pathwise uniqueness.
//!
//! With `n̄ = n₁ − n₂` and so on, `v̄ = ∇∧ū`:
//!
//! ```text
//! E  = ‖(n̄, c̄, ū, ∇c̄, v̄)‖²
//! Ẽ  = ‖(n̄, c̄, ū, ∇c̄, (−Δ)^{−1/8} v̄)‖²
//! F^α = ‖(∇n̄, ∇c̄, (−Δ)^{α/2} ū, Δc̄, (−Δ)^{α/2} v̄)‖²
//! ```
//!
//! At `α = 1/2` the dissipation uses `(−Δ)^{1/8} v̄` in the last slot. All
//! norms are true `L²` integrals over the torus.

use crate::error::{parameter, Result};
use crate::integrator::{fit_slope, prepare_initial, SolverConfig, Stepper};
use crate::lp_besov::homogeneous_sobolev_norm;
use crate::model::State;
use crate::spectral::{curl2d, grad, laplacian, Field, SpectralField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingRecord {
    pub t: f64,
    pub e: f64,
    pub e_tilde: f64,
    pub f_alpha: f64,
    pub gronwall_h: f64,
}

pub const CSV_COLUMNS: [&str; 5] = ["t", "E", "E_tilde", "F_alpha", "gronwall_H"];

impl CouplingRecord {
    pub fn csv_row(&self) -> String {
        [self.t, self.e, self.e_tilde, self.f_alpha, self.gronwall_h]
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

pub fn write_csv<W: std::io::Write>(records: &[CouplingRecord], mut out: W) -> Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

fn is_half(alpha: f64) -> bool {
    (alpha - 0.5).abs() < 1e-12
}

// ‖(−Δ)^{s/2} f‖² with the mean dropped, as a true integral
fn hdot_sq(f: &SpectralField, s: f64) -> f64 {
    homogeneous_sobolev_norm(f, s).powi(2) * f.grid().area()
}

fn l2_sq(f: &SpectralField) -> f64 {
    f.mean_square() * f.grid().area()
}

/// `(E, Ẽ, F)` for the difference of two states.
pub fn difference_functionals(s1: &State, s2: &State, alpha: f64) -> Result<(f64, f64, f64)> {
    s1.grid().check_same(s2.grid())?;
    let a = s1.to_spectral();
    let b = s2.to_spectral();
    let n = a.n.sub(&b.n)?;
    let c = a.c.sub(&b.c)?;
    let u = [a.u.components[0].sub(&b.u.components[0])?, a.u.components[1].sub(&b.u.components[1])?];
    let ubar = crate::spectral::SpectralVectorField {
        components: u.clone(),
        divergence_free: true,
    };
    let v = curl2d(&ubar)?;

    let base = l2_sq(&n) + l2_sq(&c) + u.iter().map(l2_sq).sum::<f64>() + hdot_sq(&c, 1.0);
    let e = base + l2_sq(&v);
    let e_tilde = base + hdot_sq(&v, -0.25);
    let v_order = if is_half(alpha) { 0.25 } else { alpha };
    let f = hdot_sq(&n, 1.0)
        + hdot_sq(&c, 1.0)
        + u.iter().map(|x| hdot_sq(x, alpha)).sum::<f64>()
        + hdot_sq(&c, 2.0)
        + hdot_sq(&v, v_order);
    Ok((e, e_tilde, f))
}

struct Norms {
    n: f64,
    grad_n: f64,
    c: f64,
    c_inf: f64,
    grad_c: f64,
    lap_c: f64,
    c_h2: f64,
    grad_u: f64,
    v_halpha: f64,
}

fn norms(s: &State, alpha: f64) -> Norms {
    let sp = s.to_spectral();
    let l2 = |f: &Field| (f.samples().iter().map(|v| v * v).sum::<f64>() * f.grid().cell_area()).sqrt();
    let grad_l2 = |f: &SpectralField| {
        let g = grad(f).to_physical();
        (l2(&g.components[0]).powi(2) + l2(&g.components[1]).powi(2)).sqrt()
    };
    let g = s.grid();
    let c_h2 = (sp
        .c
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let w = (2.0 * std::f64::consts::PI * g.radial_wavenumber(i)).powi(2);
            (1.0 + w).powi(2) * z.norm_sqr()
        })
        .sum::<f64>()
        * g.area())
    .sqrt();
    let v = curl2d(&sp.u).expect("same grid");
    Norms {
        n: l2(&s.n),
        grad_n: grad_l2(&sp.n),
        c: l2(&s.c),
        c_inf: s.c.max_abs(),
        grad_c: grad_l2(&sp.c),
        lap_c: l2(&laplacian(&sp.c).to_physical()),
        c_h2,
        grad_u: (grad_l2(&sp.u.components[0]).powi(2) + grad_l2(&sp.u.components[1]).powi(2)).sqrt(),
        v_halpha: homogeneous_sobolev_norm(&v, alpha) * g.area().sqrt(),
    }
}

/// The Gronwall coefficient of the uniqueness estimate: `H(t)` for
/// `α > 1/2` and `G(t)` for `α = 1/2`. Not symmetric in the two states.
pub fn gronwall_coefficient(s1: &State, s2: &State, alpha: f64) -> Result<f64> {
    s1.grid().check_same(s2.grid())?;
    let a = norms(s1, alpha);
    let b = norms(s2, alpha);
    let sq = |x: f64| x * x;
    if is_half(alpha) {
        Ok((a.n * a.grad_n).powf(1.5)
            + sq(b.n * b.grad_n)
            + sq(a.lap_c)
            + (a.grad_c * a.lap_c).powf(1.5)
            + sq(b.grad_u)
            + sq(b.c_inf)
            + sq(a.n * a.grad_n)
            + 1.0)
    } else {
        Ok(1.0
            + sq(a.n * a.grad_n)
            + sq(a.grad_c * a.lap_c)
            + sq(b.n * b.grad_n)
            + a.grad_c * a.lap_c
            + sq(b.c)
            + sq(a.n)
            + sq(b.grad_u)
            + sq(b.c_h2)
            + sq(a.v_halpha)
            + a.grad_u)
    }
}

fn record(t: f64, s1: &State, s2: &State, alpha: f64) -> Result<CouplingRecord> {
    let (e, e_tilde, f_alpha) = difference_functionals(s1, s2, alpha)?;
    Ok(CouplingRecord {
        t,
        e,
        e_tilde,
        f_alpha,
        gronwall_h: gronwall_coefficient(s1, s2, alpha)?,
    })
}

/// Adds the shear `δ (sin(2πm x₂/L), 0)` to the velocity.
pub fn perturb_velocity(state: &State, mode: i64, delta: f64) -> Result<State> {
    let g = state.grid();
    if mode <= 0 || mode >= g.n() as i64 / 2 {
        return Err(parameter("couple.mode", format!("mode {mode} is not resolved on this grid")));
    }
    let k = 2.0 * std::f64::consts::PI * mode as f64 / g.side_length();
    let du = VectorField::from_fns(g, |_, y| delta * (k * y).sin(), |_, _| 0.0);
    State::new(state.n.clone(), state.c.clone(), state.u.add(&du)?)
}

/// Advances both states in lockstep on the same noise path.
pub fn coupled_run(init1: &State, init2: &State, cfg: &SolverConfig) -> Result<Vec<CouplingRecord>> {
    init1.grid().check_same(init2.grid())?;
    let stepper = Stepper::new(init1.grid(), cfg)?;
    let mut a = prepare_initial(init1, &cfg.params)?;
    let mut b = prepare_initial(init2, &cfg.params)?;
    let mut out = vec![record(0.0, &a, &b, cfg.alpha)?];
    let steps = cfg.step_count();
    for k in 0..steps {
        a = stepper.advance(&a, k)?;
        b = stepper.advance(&b, k)?;
        let done = k + 1;
        if done % cfg.diagnostics_every == 0 || done == steps {
            out.push(record(done as f64 * cfg.dt, &a, &b, cfg.alpha)?);
        }
    }
    Ok(out)
}

/// Exponential fit `E(t) ≈ E₀ e^{rate·t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit {
    pub rate: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
    /// Smallest `a` with `E(t) ≤ E(0) e^{a t}` over the fitted window.
    pub envelope_rate: f64,
}

/// Least-squares fit of `ln E` against `t`, ignoring `t < 5dt`.
pub fn fit_envelope(records: &[CouplingRecord], dt: f64, use_tilde: bool) -> Result<EnvelopeFit> {
    let value = |r: &CouplingRecord| if use_tilde { r.e_tilde } else { r.e };
    let e0 = records.first().map(value).unwrap_or(0.0);
    let window: Vec<&CouplingRecord> = records.iter().filter(|r| r.t >= 5.0 * dt).collect();
    if window.len() < 3 || e0 <= 0.0 || window.iter().any(|r| value(r) <= 0.0) {
        return Err(parameter("records", "need at least 3 positive samples after the start-up window"));
    }
    let xs: Vec<f64> = window.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = window.iter().map(|r| value(r).ln()).collect();
    let rate = fit_slope(&xs, &ys);
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let log_prefactor = my - rate * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - log_prefactor - rate * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    let envelope_rate = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - e0.ln()) / x)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(EnvelopeFit {
        rate,
        log_prefactor,
        r_squared,
        envelope_rate,
    })
}
