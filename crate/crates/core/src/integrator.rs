//! Exponential time stepping with Euler–Maruyama noise.
//!
//! The stiff diffusion is integrated exactly through the factor
//! `E = e^{−μ(ξ)dt}`, with `μ = (2π|ξ|)²` for `n, c` and `(2π|ξ|)^{2α}` for
//! `u` (times the `J_k` indicator when truncation is on). The explicit
//! nonlinear and forcing tendency `N̂` enters through a two-stage
//! integrating-factor Heun step and the multiplicative noise through a
//! single Euler–Maruyama increment:
//!
//! ```text
//! û* = E (û + dt·N̂(𝐮))
//! û⁺ = E (û + ½dt·N̂(𝐮) + Ĝ(𝐮)·dW) + ½dt·N̂(𝐮*)
//! ```
//!
//! The cutoff `θ_R` is evaluated once on the pre-step state and reused in
//! both stages. The velocity is projected after every stage.

use rayon::prelude::*;

use crate::diagnostics::{compute_record, default_delta_floor, energy_budget_residual, DiagnosticsRecord};
use crate::error::{parameter, Error, Result};
use crate::lp_besov::sobolev_norm_spectral;
use crate::model::{
    check_alpha, cutoff_factor, linear_symbols, nonlinear_tendency_with_cutoff, Potential, RegularizationParams,
    SpectralTendency, State,
};
use crate::noise::{sample_aggregated, NoiseModel};
use crate::spectral::{helmholtz_project, resample, SpectralField, SpectralGrid, SpectralVectorField};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub alpha: f64,
    pub params: RegularizationParams,
    pub noise: NoiseModel,
    /// Fine Wiener increments summed into each step; see [`sample_aggregated`].
    pub noise_substeps: u64,
    pub potential: Potential,
    /// Keep a snapshot every this many steps; 0 disables snapshots.
    pub snapshot_every: u64,
    /// Emit a diagnostics record every this many steps (at least 1).
    pub diagnostics_every: u64,
}

impl SolverConfig {
    /// Deterministic configuration with every regularization layer off.
    pub fn new(grid: &SpectralGrid, dt: f64, t_end: f64, alpha: f64) -> Self {
        Self {
            dt,
            t_end,
            alpha,
            params: RegularizationParams::off(),
            noise: NoiseModel::off(),
            noise_substeps: 1,
            potential: Potential::zero(grid),
            snapshot_every: 0,
            diagnostics_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(parameter("solver.dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(parameter("solver.t_end", format!("must be nonnegative, got {}", self.t_end)));
        }
        check_alpha(self.alpha)?;
        self.params.validate()?;
        if self.noise_substeps == 0 {
            return Err(parameter("noise_substeps", "must be at least 1"));
        }
        if self.diagnostics_every == 0 {
            return Err(parameter("solver.diagnostics_every", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps needed to reach `t_end`.
    pub fn step_count(&self) -> u64 {
        let ratio = self.t_end / self.dt;
        (ratio - 1e-9).ceil().max(0.0) as u64
    }
}

/// A trajectory sampled on the diagnostics schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(f64, State)>,
    pub final_state: State,
    pub warnings: Vec<String>,
}

/// Precomputed integrating factors for one grid, `dt` and `α`.
#[derive(Debug, Clone)]
pub struct Stepper {
    cfg: SolverConfig,
    decay_scalar: Vec<f64>,
    decay_velocity: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: &SpectralGrid, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        grid.check_same(cfg.potential.phi.grid())?;
        let mut decay_scalar = Vec::with_capacity(grid.len());
        let mut decay_velocity = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let (mn, _, mu) = linear_symbols(grid, i, cfg.alpha, &cfg.params);
            decay_scalar.push((-mn * cfg.dt).exp());
            decay_velocity.push((-mu * cfg.dt).exp());
        }
        Ok(Self {
            cfg: cfg.clone(),
            decay_scalar,
            decay_velocity,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Advances `state` across `[step·dt, (step+1)·dt]`.
    pub fn advance(&self, state: &State, step_index: u64) -> Result<State> {
        let cfg = &self.cfg;
        let diverged = || Error::Divergence {
            step: step_index,
            last_valid_time: step_index as f64 * cfg.dt,
        };
        if !state.is_finite() {
            return Err(diverged());
        }
        let s = state.to_spectral();
        let theta = cutoff_factor(state, &cfg.params);
        let first = nonlinear_tendency_with_cutoff(state, &s, &cfg.params, &cfg.potential, theta);
        let noise_factor = if cfg.noise.is_deterministic() {
            0.0
        } else {
            sample_aggregated(&cfg.noise, step_index, cfg.dt, cfg.noise_substeps)?.weighted_sum(&cfg.noise)
        };

        let dt = cfg.dt;
        // E·((1 + g)·cur + w·tend) + ½dt·extra, coefficient-wise
        let combine = |cur: &SpectralField,
                       tend: &SpectralField,
                       decay: &[f64],
                       g: f64,
                       w: f64,
                       extra: Option<&SpectralField>| {
            let mut coeffs: Vec<_> = cur
                .coeffs()
                .iter()
                .zip(tend.coeffs())
                .zip(decay)
                .map(|((&c, &t), &d)| d * (c * (1.0 + g) + w * t))
                .collect();
            if let Some(e) = extra {
                for (x, &y) in coeffs.iter_mut().zip(e.coeffs()) {
                    *x += 0.5 * dt * y;
                }
            }
            SpectralField::from_coefficients(cur.grid(), coeffs).expect("grid-sized")
        };
        let assemble = |w: f64, g: f64, extra: Option<&SpectralTendency>| {
            let u = SpectralVectorField {
                components: [0, 1].map(|i| {
                    combine(
                        &s.u.components[i],
                        &first.du.components[i],
                        &self.decay_velocity,
                        g,
                        w,
                        extra.map(|e| &e.du.components[i]),
                    )
                }),
                divergence_free: false,
            };
            State {
                n: combine(&s.n, &first.dn, &self.decay_scalar, 0.0, w, extra.map(|e| &e.dn)).to_physical(),
                c: combine(&s.c, &first.dc, &self.decay_scalar, 0.0, w, extra.map(|e| &e.dc)).to_physical(),
                u: helmholtz_project(&u).to_physical(),
            }
        };

        let predictor = assemble(dt, 0.0, None);
        if !predictor.is_finite() {
            return Err(diverged());
        }
        let ps = predictor.to_spectral();
        let second = nonlinear_tendency_with_cutoff(&predictor, &ps, &cfg.params, &cfg.potential, theta);
        let next = assemble(0.5 * dt, noise_factor, Some(&second));
        if next.is_finite() {
            Ok(next)
        } else {
            Err(diverged())
        }
    }
}

/// One step of the scheme (builds the integrating factors on every call).
pub fn step(state: &State, cfg: &SolverConfig, step_index: u64) -> Result<State> {
    Stepper::new(state.grid(), cfg)?.advance(state, step_index)
}

/// `max |u| · dt / Δx`.
pub fn cfl_number(state: &State, dt: f64) -> f64 {
    state.u.magnitude().max_abs() * dt / state.grid().spacing()
}

/// Initial datum of the regularized problem: `J_k(𝐮₀ ∗ ρ^ε)` with the active layers.
pub fn prepare_initial(initial: &State, params: &RegularizationParams) -> Result<State> {
    params.validate()?;
    let s = match params.eps {
        Some(e) => initial.mollified(e)?,
        None => initial.clone(),
    };
    Ok(match params.k_band {
        Some(_) => params.truncate_state(&s),
        None => s,
    })
}

/// Advances `initial` to `t_end`, recording diagnostics and snapshots.
pub fn run(initial: &State, cfg: &SolverConfig) -> Result<Trajectory> {
    run_with(initial, cfg, |_, _, _| Ok(()))
}

/// As [`run`], calling `observe(step_index, before, after)` after every step.
pub fn run_with<F>(initial: &State, cfg: &SolverConfig, mut observe: F) -> Result<Trajectory>
where
    F: FnMut(u64, &State, &State) -> Result<()>,
{
    let stepper = Stepper::new(initial.grid(), cfg)?;
    if !initial.is_finite() {
        return Err(Error::Precondition("initial state has non-finite samples".into()));
    }
    let mut state = prepare_initial(initial, &cfg.params)?;
    let delta_floor = default_delta_floor(&state.c);
    let mut warnings = Vec::new();
    let cfl = cfl_number(&state, cfg.dt);
    if cfl > 1.0 {
        warnings.push(format!("initial CFL number {cfl:.3} exceeds 1"));
    }

    let first = compute_record(&state, 0.0, cfg.alpha, delta_floor);
    let mut times = vec![0.0];
    let mut records = vec![first];
    let mut snapshots = Vec::new();
    if cfg.snapshot_every > 0 {
        snapshots.push((0.0, state.clone()));
    }

    let steps = cfg.step_count();
    for k in 0..steps {
        let next = stepper.advance(&state, k)?;
        observe(k, &state, &next)?;
        let done = k + 1;
        let t = done as f64 * cfg.dt;
        if done % cfg.diagnostics_every == 0 || done == steps {
            let mut rec = compute_record(&next, t, cfg.alpha, delta_floor);
            rec.energy_residual =
                energy_budget_residual(&state, &next, cfg.dt, cfg.alpha, &cfg.potential, &cfg.params, &cfg.noise);
            times.push(t);
            records.push(rec);
        }
        if cfg.snapshot_every > 0 && (done % cfg.snapshot_every == 0 || done == steps) {
            snapshots.push((t, next.clone()));
        }
        state = next;
    }
    Ok(Trajectory {
        times,
        records,
        snapshots,
        final_state: state,
        warnings,
    })
}

/// Advances without recording anything.
pub fn integrate(initial: &State, cfg: &SolverConfig) -> Result<State> {
    let stepper = Stepper::new(initial.grid(), cfg)?;
    let mut state = prepare_initial(initial, &cfg.params)?;
    for k in 0..cfg.step_count() {
        state = stepper.advance(&state, k)?;
    }
    Ok(state)
}

/// Which parameter a refinement study varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineAxis {
    Dt,
    Eps,
    KBand,
    Resolution,
}

impl std::str::FromStr for RefineAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dt" => Ok(Self::Dt),
            "eps" => Ok(Self::Eps),
            "k_band" => Ok(Self::KBand),
            "resolution" => Ok(Self::Resolution),
            other => Err(parameter("axis", format!("unknown refinement axis {other:?}"))),
        }
    }
}

/// Differences between consecutive refinement levels at `t_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementTable {
    pub axis: RefineAxis,
    pub levels: Vec<f64>,
    /// `‖𝐮_i − 𝐮_{i+1}‖_{L²}` for consecutive levels.
    pub l2_differences: Vec<f64>,
    /// Same differences in `H¹`.
    pub h1_differences: Vec<f64>,
    /// For the `eps` and `k_band` axes, `‖𝐮_i − 𝐮_off‖_{L²}` against the run
    /// with that layer switched off.
    pub limit_differences: Option<Vec<f64>>,
    /// Least-squares slope of `log(difference)` against `log(h)`, where
    /// `h` is the level for `dt`/`eps` and its reciprocal for `k_band`/`resolution`.
    pub observed_order: f64,
}

fn state_difference(a: &State, b: &State) -> Result<(f64, f64)> {
    let sa = a.to_spectral();
    let sb = b.to_spectral();
    let area = a.grid().area();
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for (x, y) in [
        (&sa.n, &sb.n),
        (&sa.c, &sb.c),
        (&sa.u.components[0], &sb.u.components[0]),
        (&sa.u.components[1], &sb.u.components[1]),
    ] {
        let d = x.sub(y)?;
        l2 += d.mean_square();
        h1 += sobolev_norm_spectral(&d, 1.0).powi(2);
    }
    Ok(((l2 * area).sqrt(), (h1 * area).sqrt()))
}

fn resample_state(s: &State, target: &SpectralGrid) -> Result<State> {
    let sp = s.to_spectral();
    Ok(State {
        n: resample(&sp.n, target)?.to_physical(),
        c: resample(&sp.c, target)?.to_physical(),
        u: crate::spectral::VectorField::new(
            resample(&sp.u.components[0], target)?.to_physical(),
            resample(&sp.u.components[1], target)?.to_physical(),
        )?,
    })
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs `initial` at each level of `axis` on one shared noise path.
///
/// For the `dt` axis every level must be an integer multiple of the
/// smallest and divide `t_end`; coarser levels sum the matching fine increments. For the
/// `resolution` axis the levels are grid sizes; the potential is resampled
/// and finer results are compared on the coarser grid.
pub fn refine_study(initial: &State, cfg: &SolverConfig, axis: RefineAxis, levels: &[f64]) -> Result<RefinementTable> {
    if levels.len() < 3 {
        return Err(parameter("levels", format!("need at least 3 levels, got {}", levels.len())));
    }
    let finest_dt = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let configs: Vec<Result<(State, SolverConfig)>> = levels
        .iter()
        .map(|&level| {
            let mut c = cfg.clone();
            let mut init = initial.clone();
            match axis {
                RefineAxis::Dt => {
                    let ratio = level / finest_dt;
                    if (ratio - ratio.round()).abs() > 1e-9 {
                        return Err(parameter("levels", "dt levels must be integer multiples of the smallest"));
                    }
                    let steps = cfg.t_end / level;
                    if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                        return Err(parameter("levels", "every dt level must divide t_end"));
                    }
                    c.dt = level;
                    c.noise_substeps = cfg.noise_substeps * ratio.round() as u64;
                }
                RefineAxis::Eps => c.params.eps = Some(level),
                RefineAxis::KBand => c.params.k_band = Some(level),
                RefineAxis::Resolution => {
                    let n = level as usize;
                    if n as f64 != level {
                        return Err(parameter("levels", "resolution levels must be integers"));
                    }
                    let g = SpectralGrid::with_dealias(n, initial.grid().side_length(), initial.grid().dealias_fraction())?;
                    init = resample_state(initial, &g)?;
                    c.potential = Potential::from_phi(resample(&cfg.potential.phi.to_spectral(), &g)?.to_physical())?;
                }
            }
            Ok((init, c))
        })
        .collect();
    let mut configs = configs.into_iter().collect::<Result<Vec<_>>>()?;
    let with_limit = matches!(axis, RefineAxis::Eps | RefineAxis::KBand);
    if with_limit {
        let mut c = cfg.clone();
        match axis {
            RefineAxis::Eps => c.params.eps = None,
            _ => c.params.k_band = None,
        }
        configs.push((initial.clone(), c));
    }
    let mut finals = configs
        .par_iter()
        .map(|(init, c)| integrate(init, c))
        .collect::<Result<Vec<State>>>()?;
    let limit_differences = if with_limit {
        let limit = finals.pop().expect("limit run");
        Some(
            finals
                .iter()
                .map(|f| Ok(state_difference(f, &limit)?.0))
                .collect::<Result<Vec<f64>>>()?,
        )
    } else {
        None
    };

    let mut l2 = Vec::new();
    let mut h1 = Vec::new();
    for w in finals.windows(2) {
        let (a, b) = if w[0].grid().n() <= w[1].grid().n() {
            (w[0].clone(), resample_state(&w[1], w[0].grid())?)
        } else {
            (resample_state(&w[0], w[1].grid())?, w[1].clone())
        };
        let (x, y) = state_difference(&a, &b)?;
        l2.push(x);
        h1.push(y);
    }
    let hs: Vec<f64> = levels[..levels.len() - 1]
        .iter()
        .map(|&l| match axis {
            RefineAxis::Dt | RefineAxis::Eps => l.ln(),
            RefineAxis::KBand | RefineAxis::Resolution => -l.ln(),
        })
        .collect();
    let logs: Vec<f64> = l2.iter().map(|d| d.max(1e-300).ln()).collect();
    Ok(RefinementTable {
        axis,
        levels: levels.to_vec(),
        l2_differences: l2,
        h1_differences: h1,
        limit_differences,
        observed_order: fit_slope(&hs, &logs),
    })
}

/// Mean pathwise error against a reference on the same Brownian path.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongErrorTable {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    pub observed_order: f64,
}

/// Strong error `E‖𝐮_dt(T) − 𝐮_ref(T)‖_{L²}` over `paths` seeds, with the
/// reference run at half the smallest `dt`. Each `dt` must be an integer
/// multiple of the reference step.
pub fn strong_error_study(initial: &State, cfg: &SolverConfig, dts: &[f64], paths: u64) -> Result<StrongErrorTable> {
    if dts.len() < 3 {
        return Err(parameter("levels", format!("need at least 3 levels, got {}", dts.len())));
    }
    if paths == 0 {
        return Err(parameter("paths", "must be at least 1"));
    }
    let dt_ref = dts.iter().cloned().fold(f64::INFINITY, f64::min) / 2.0;
    let mut multiples = Vec::new();
    for &dt in dts {
        let r = dt / dt_ref;
        if (r - r.round()).abs() > 1e-9 {
            return Err(parameter("levels", "dt levels must be integer multiples of the reference step"));
        }
        multiples.push(r.round() as u64);
    }
    let per_path: Vec<Vec<f64>> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut base = cfg.clone();
            base.noise.seed = cfg.noise.seed.wrapping_add(p);
            let mut reference = base.clone();
            reference.dt = dt_ref;
            let truth = integrate(initial, &reference)?;
            multiples
                .iter()
                .zip(dts)
                .map(|(&m, &dt)| {
                    let mut c = base.clone();
                    c.dt = dt;
                    c.noise_substeps = base.noise_substeps * m;
                    Ok(state_difference(&integrate(initial, &c)?, &truth)?.0)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = (0..dts.len())
        .map(|i| per_path.iter().map(|e| e[i]).sum::<f64>() / paths as f64)
        .collect();
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(1e-300).ln()).collect();
    Ok(StrongErrorTable {
        dts: dts.to_vec(),
        observed_order: fit_slope(&xs, &ys),
        errors,
    })
}
