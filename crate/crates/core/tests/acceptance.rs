//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Each criterion also has a wall-clock budget.

use std::f64::consts::{E, PI};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chemoflow::coupling::{coupled_run, fit_envelope, perturb_velocity, CouplingRecord};
use chemoflow::diagnostics::energy_budget_residual;
use chemoflow::integrator::{
    integrate, refine_study, run_with, step, strong_error_study, RefineAxis, SolverConfig,
};
use chemoflow::lp_besov::{bilinear_ratio, dyadic_block, BilinearForm, DyadicRange};
use chemoflow::model::{Potential, State};
use chemoflow::noise::NoiseModel;
use chemoflow::presets;
use chemoflow::spectral::sampling::{random_solenoidal, random_spectral, random_vector};
use chemoflow::spectral::{
    biot_savart, curl2d, fractional_laplacian, helmholtz_project, Field, SpectralField, SpectralGrid, VectorField,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "spectral operator suite", budget: secs(10), check: spectral_suite },
        Criterion { id: 2, name: "Littlewood-Paley suite", budget: secs(60), check: littlewood_paley },
        Criterion { id: 3, name: "ODE oracles", budget: secs(30), check: ode_oracles },
        Criterion { id: 4, name: "SDE oracle and strong order", budget: secs(300), check: sde_oracle },
        Criterion { id: 5, name: "canonical blob run", budget: secs(300), check: blob_run },
        Criterion { id: 6, name: "deterministic energy budget", budget: secs(60), check: energy_budget },
        Criterion { id: 7, name: "coupling suite", budget: secs(600), check: coupling_suite },
        Criterion { id: 8, name: "refinement", budget: secs(600), check: refinement },
        Criterion { id: 9, name: "reproducibility", budget: secs(120), check: reproducibility },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget {:?}", c.budget)),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {} [{:.1}s] {detail}", c.id, c.name, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn require(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(", "))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn spectral_rel(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).expect("same grid").l2_norm() / b.l2_norm()
}

fn spectral_suite() -> Outcome {
    let g = SpectralGrid::new(64, 2.0 * PI * 3.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let mut r = rng(seed);
        let f = random_spectral(&g, &mut r, 31, true);

        // Parseval: quadrature of |f|² against the coefficient sum
        let phys = f.to_physical();
        let quad = phys.samples().iter().map(|v| v * v).sum::<f64>() * g.cell_area();
        let coeff = f.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>() * g.area();
        worst = worst.max(rel(quad, coeff));

        let u = random_vector(&g, &mut r, 31).to_spectral();
        let w = random_vector(&g, &mut r, 31).to_spectral();
        let pu = helmholtz_project(&u);
        let ppu = helmholtz_project(&pu);
        for k in 0..2 {
            worst = worst.max(spectral_rel(&ppu.components[k], &pu.components[k]));
        }
        let lhs = pu.inner(&w).map_err(|e| e.to_string())?;
        let rhs = u.inner(&helmholtz_project(&w)).map_err(|e| e.to_string())?;
        worst = worst.max((lhs - rhs).abs() / (u.l2_norm() * w.l2_norm()));

        let fm = random_spectral(&g, &mut r, 31, false);
        let half_twice = fractional_laplacian(&fractional_laplacian(&fm, 0.5).unwrap(), 0.5).unwrap();
        worst = worst.max(spectral_rel(&half_twice, &fractional_laplacian(&fm, 1.0).unwrap()));

        // Bernstein: a field supported in |ξ| ≤ λ has ‖(−Δ)^α f‖ ≤ (2πλ)^{2α}‖f‖,
        // and on |ξ| ≥ λ' the reverse bound holds with (2πλ')^{2α}
        let lam = 4.0 / g.side_length();
        let low = fm.apply_real_symbol(|i| if g.radial_wavenumber(i) <= lam { 1.0 } else { 0.0 });
        let high = fm.apply_real_symbol(|i| if g.radial_wavenumber(i) >= lam { 1.0 } else { 0.0 });
        for alpha in [0.25, 0.5, 0.75, 1.0] {
            let bound = (2.0 * PI * lam).powf(2.0 * alpha);
            let up = fractional_laplacian(&low, alpha).unwrap().l2_norm() / (bound * low.l2_norm());
            let down = fractional_laplacian(&high, alpha).unwrap().l2_norm() / (bound * high.l2_norm());
            worst = worst.max(up - 1.0).max(1.0 - down);
        }

        let v = random_spectral(&g, &mut r, 31, false);
        let bs = biot_savart(&v).map_err(|e| e.to_string())?;
        worst = worst.max(spectral_rel(&curl2d(&bs).unwrap(), &v));
        worst = worst.max(bs.divergence_residual());
        let sol = random_solenoidal(&g, &mut r, 31).to_spectral();
        let back = biot_savart(&curl2d(&sol).unwrap()).unwrap();
        for k in 0..2 {
            worst = worst.max(spectral_rel(&back.components[k], &sol.components[k]));
        }
    }
    require(worst <= 1e-10, || format!("worst relative defect {worst:.3e} > 1e-10"))?;
    Ok(format!("worst relative defect {worst:.3e}"))
}

fn pair_statistic(n: usize, pairs: u64) -> f64 {
    let g = SpectralGrid::new(n, 2.0 * PI).expect("grid");
    (0..pairs)
        .into_par_iter()
        .map(|seed| {
            let mut r = rng(70_000 + seed);
            let f = VectorField::new(
                random_spectral(&g, &mut r, 6, false).to_physical(),
                random_spectral(&g, &mut r, 6, false).to_physical(),
            )
            .expect("same grid");
            let h = random_spectral(&g, &mut r, 6, false).to_physical();
            bilinear_ratio(&f, &h, BilinearForm::General { alpha: 0.75 }, 2.0, 2.0).expect("ratio")
        })
        .reduce(|| 0.0, f64::max)
}

fn littlewood_paley() -> Outcome {
    let g = SpectralGrid::new(64, 2.0 * PI).map_err(|e| e.to_string())?;
    let range = DyadicRange::for_grid(&g);
    let (mut recon, mut ortho) = (0.0f64, 0.0f64);
    for seed in 0..10 {
        let f = random_spectral(&g, &mut rng(100 + seed), 31, false);
        let blocks: Vec<SpectralField> = range.iter().map(|j| dyadic_block(&f, j)).collect();
        let mut sum = SpectralField::zeros(&g);
        for b in &blocks {
            sum = sum.add(b).unwrap();
        }
        recon = recon.max(spectral_rel(&sum, &f));
        for (a, ba) in blocks.iter().enumerate() {
            for bb in blocks.iter().skip(a + 2) {
                let ip = ba.inner(bb).unwrap().abs() / (ba.l2_norm() * bb.l2_norm()).max(1e-300);
                ortho = ortho.max(ip);
            }
        }
    }
    require(recon <= 1e-10, || format!("reconstruction defect {recon:.3e}"))?;
    require(ortho <= 1e-12, || format!("blocks two apart overlap {ortho:.3e}"))?;
    let coarse = pair_statistic(64, 1000);
    let fine = pair_statistic(128, 1000);
    let drift = fine / coarse - 1.0;
    require(coarse.is_finite() && fine.is_finite() && drift.abs() <= 0.2, || {
        format!("ratio statistic {coarse:.4} at N=64 vs {fine:.4} at N=128")
    })?;
    Ok(format!(
        "reconstruction {recon:.1e}, overlap {ortho:.1e}, ratio statistic {coarse:.4} -> {fine:.4} ({:+.2}%)",
        100.0 * drift
    ))
}

fn ode_oracles() -> Outcome {
    let g = SpectralGrid::new(4, 1.0).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::new(&g, 1e-4, 1.0, 1.0);
    let s = integrate(&presets::uniform(&g, 0.5, 1.0).unwrap(), &cfg).map_err(|e| e.to_string())?;
    let logistic = (s.n.samples()[0] - E / (E + 1.0)).abs();
    let s = integrate(&presets::uniform(&g, 1.0, 1.0).unwrap(), &cfg).map_err(|e| e.to_string())?;
    let decay = (s.c.samples()[0] - (-1f64).exp()).abs();
    require(logistic <= 1e-6, || format!("logistic error {logistic:.3e}"))?;
    require(decay <= 1e-6, || format!("chemical decay error {decay:.3e}"))?;

    let g = SpectralGrid::new(32, 2.0 * PI * 2.0).map_err(|e| e.to_string())?;
    let mut linear = 0.0f64;
    for alpha in [0.5, 0.75, 1.0] {
        for m in [1, 3, 7] {
            let s = presets::single_mode(&g, m, 1.0).unwrap();
            let out = integrate(&s, &SolverConfig::new(&g, 0.01, 1.0, alpha)).unwrap();
            let k = 2.0 * PI * m as f64 / g.side_length();
            let expected = s.u.scale((-k.powf(2.0 * alpha)).exp());
            // the norm identity, and the field itself up to round-off measured against ‖u₀‖
            linear = linear.max(rel(out.u.l2_norm(), expected.l2_norm()));
            linear = linear.max(out.u.sub(&expected).unwrap().l2_norm() / s.u.l2_norm());
        }
    }
    require(linear <= 1e-10, || format!("single-mode decay error {linear:.3e}"))?;
    Ok(format!("logistic {logistic:.2e}, decay {decay:.2e}, single mode {linear:.2e}"))
}

fn sde_oracle() -> Outcome {
    let g = SpectralGrid::new(4, 2.0 * PI).map_err(|e| e.to_string())?;
    let s = presets::single_mode(&g, 1, 1.0).unwrap();
    let (lambda, alpha, t) = (0.5, 0.75, 0.5);
    // ν is the symbol of the single mode |ξ| = 1/L
    let nu = (2.0 * PI / g.side_length()).powf(2.0 * alpha);
    let mut cfg = SolverConfig::new(&g, 0.01, t, alpha);
    cfg.noise = NoiseModel::new(3, lambda, 0).unwrap();
    let paths = 10_000u64;
    let energies: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut c = cfg.clone();
            c.noise.seed = 1000 + p;
            let out = integrate(&s, &c).expect("finite path");
            out.u.l2_norm().powi(2)
        })
        .collect();
    let m = paths as f64;
    let mean = energies.iter().sum::<f64>() / m;
    let var = energies.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let se = (var / m).sqrt();
    let exact = s.u.l2_norm().powi(2) * ((-2.0 * nu + lambda * lambda) * t).exp();
    let z = (mean - exact) / se;
    require(z.abs() <= 3.0, || format!("second moment {mean:.5} vs {exact:.5}, z = {z:.2}"))?;

    let strong = strong_error_study(&s, &cfg, &[0.05, 0.025, 0.0125, 0.00625], 200).map_err(|e| e.to_string())?;
    let order = strong.observed_order;
    require((0.4..=1.1).contains(&order), || format!("strong order {order:.3}"))?;
    Ok(format!("second moment {mean:.5} vs {exact:.5} (z = {z:+.2}), strong order {order:.3}"))
}

fn blob_run() -> Outcome {
    let g = SpectralGrid::new(128, 16.0 * PI).map_err(|e| e.to_string())?;
    let init = presets::blob(&g);
    let mut cfg = SolverConfig::new(&g, 2e-3, 2.0, 0.75);
    cfg.noise = NoiseModel::new(4, 0.1, 7).unwrap();
    cfg.potential = Potential::sinusoidal(&g, 1.0);
    cfg.diagnostics_every = 100;
    let dt = cfg.dt;
    let cell = g.cell_area();
    let l1 = |f: &Field| f.samples().iter().map(|v| v.abs()).sum::<f64>() * cell;
    let (mut min_n, mut min_c) = (init.n.min(), init.c.min());
    let (mut mass_excess, mut max_c_rise, mut l1_c_rise, mut div) = (f64::NEG_INFINITY, 0.0f64, 0.0f64, 0.0f64);
    run_with(&init, &cfg, |_, a, b| {
        min_n = min_n.min(b.n.min());
        min_c = min_c.min(b.c.min());
        let (m0, m1) = (l1(&a.n), l1(&b.n));
        let l2sq = a.n.samples().iter().map(|v| v * v).sum::<f64>() * cell;
        mass_excess = mass_excess.max((m1 - m0 - dt * (m0 - l2sq)) / (dt * dt));
        max_c_rise = max_c_rise.max(b.c.max() / a.c.max() - 1.0);
        l1_c_rise = l1_c_rise.max(l1(&b.c) / l1(&a.c) - 1.0);
        div = div.max(b.u.to_spectral().divergence_residual());
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    require(min_n >= -1e-8 && min_c >= -1e-8, || format!("min n {min_n:.3e}, min c {min_c:.3e}"))?;
    require(max_c_rise <= 1e-6 && l1_c_rise <= 1e-6, || {
        format!("max c rose by {max_c_rise:.3e}, L1 c rose by {l1_c_rise:.3e}")
    })?;
    require(mass_excess <= 10.0, || format!("mass inequality excess {mass_excess:.3} dt^2 > 10 dt^2"))?;
    require(div <= 1e-10, || format!("divergence residual {div:.3e}"))?;
    Ok(format!(
        "min n {min_n:.2e}, min c {min_c:.2e}, max c rise {max_c_rise:.1e}, L1 c rise {l1_c_rise:.1e}, \
         mass excess {mass_excess:.2} dt^2, div {div:.1e}"
    ))
}

fn energy_budget() -> Outcome {
    let g = SpectralGrid::new(32, 2.0 * PI).map_err(|e| e.to_string())?;
    let mut r = rng(1);
    let n = random_spectral(&g, &mut r, 4, false).to_physical().map(|v| 1.0 + 0.3 * v);
    let c = random_spectral(&g, &mut r, 4, false).to_physical().map(|v| 1.0 + 0.3 * v);
    let s = State::new(n, c, random_solenoidal(&g, &mut r, 4)).map_err(|e| e.to_string())?;
    let residual = |dt: f64| {
        let mut cfg = SolverConfig::new(&g, dt, dt, 0.75);
        cfg.potential = Potential::sinusoidal(&g, 1.0);
        let next = step(&s, &cfg, 0).expect("one step");
        energy_budget_residual(&s, &next, dt, 0.75, &cfg.potential, &cfg.params, &cfg.noise).abs()
    };
    let res: Vec<f64> = [1e-2, 5e-3, 2.5e-3].iter().map(|&dt| residual(dt)).collect();
    let ratios = [res[0] / res[1], res[1] / res[2]];
    require(ratios.iter().all(|q| (q - 4.0).abs() <= 1.2), || format!("halving ratios {ratios:?}"))?;
    Ok(format!("residuals {}, halving ratios {:.3} and {:.3}", list(&res), ratios[0], ratios[1]))
}

fn coupling_case(alpha: f64) -> Result<String, String> {
    let g = SpectralGrid::new(64, 8.0 * PI).map_err(|e| e.to_string())?;
    let mut cfg = SolverConfig::new(&g, 0.01, 1.0, alpha);
    cfg.noise = NoiseModel::new(4, 0.1, 11).unwrap();
    cfg.potential = Potential::sinusoidal(&g, 1.0);
    let s = presets::blob(&g);
    let use_tilde = alpha == 0.5;
    let value = |r: &CouplingRecord| if use_tilde { r.e_tilde } else { r.e };

    let same = coupled_run(&s, &s, &cfg).map_err(|e| e.to_string())?;
    let worst_same = same.iter().map(value).fold(0.0, f64::max);
    require(worst_same <= 1e-12, || format!("identical data drifted to {worst_same:.3e}"))?;

    let run = |delta: f64| coupled_run(&s, &perturb_velocity(&s, 2, delta).unwrap(), &cfg).map_err(|e| e.to_string());
    let full = run(1e-6)?;
    let half = run(5e-7)?;
    let fit = fit_envelope(&full, cfg.dt, use_tilde).map_err(|e| e.to_string())?;
    require(fit.r_squared > 0.9, || format!("alpha {alpha}: R^2 {:.4}", fit.r_squared))?;
    let e0 = value(&full[0]);
    let above = full
        .iter()
        .filter(|r| r.t >= 5.0 * cfg.dt)
        .any(|r| value(r) > e0 * (fit.envelope_rate * r.t).exp() * (1.0 + 1e-12));
    require(!above, || format!("alpha {alpha}: envelope violated"))?;
    let worst_scale = full
        .iter()
        .zip(&half)
        .map(|(a, b)| (value(b) / value(a) / 0.25 - 1.0).abs())
        .fold(0.0, f64::max);
    require(worst_scale <= 0.1, || format!("alpha {alpha}: quadratic scaling off by {worst_scale:.3}"))?;
    Ok(format!(
        "alpha {alpha}: R^2 {:.4}, rate {:.3}, scaling defect {worst_scale:.1e}",
        fit.r_squared, fit.envelope_rate
    ))
}

fn coupling_suite() -> Outcome {
    Ok(format!("{}; {}", coupling_case(0.75)?, coupling_case(0.5)?))
}

fn vortex_scenario() -> (State, SolverConfig) {
    let g = SpectralGrid::new(64, 8.0 * PI).expect("grid");
    let half = g.side_length() / 2.0;
    let blob = presets::blob(&g);
    let s2 = 4.0;
    let bump = move |x: f64, y: f64| (-((x - half).powi(2) + (y - half).powi(2)) / (2.0 * s2)).exp() / s2;
    let u = VectorField::from_fns(&g, |x, y| -(y - half) * bump(x, y), |x, y| (x - half) * bump(x, y));
    let s = State::new(blob.n, blob.c, u).expect("same grid").dealiased();
    let mut cfg = SolverConfig::new(&g, 0.01, 0.5, 0.75);
    cfg.potential = Potential::sinusoidal(&g, 1.0);
    (s, cfg)
}

fn decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn refinement() -> Outcome {
    let (s, cfg) = vortex_scenario();

    let mut noisy = cfg.clone();
    noisy.noise = NoiseModel::new(4, 0.3, 5).unwrap();
    noisy.t_end = 0.4;
    let eps = refine_study(&s, &noisy, RefineAxis::Eps, &[0.2, 0.1, 0.05]).map_err(|e| e.to_string())?;
    require(decreasing(&eps.l2_differences), || format!("eps differences {:?}", eps.l2_differences))?;

    let mut det = cfg.clone();
    det.t_end = 0.4;
    let dt = refine_study(&s, &det, RefineAxis::Dt, &[0.04, 0.02, 0.01]).map_err(|e| e.to_string())?;
    require(dt.observed_order >= 1.0, || format!("dt order {:.3}", dt.observed_order))?;

    let k = refine_study(&s, &cfg, RefineAxis::KBand, &[5.0, 10.0, 20.0, 40.0]).map_err(|e| e.to_string())?;
    let to_limit = k.limit_differences.clone().unwrap_or_default();
    require(decreasing(&to_limit), || format!("k_band distances to the untruncated run {to_limit:?}"))?;
    Ok(format!(
        "eps differences {}, dt order {:.3}, k_band distances {}",
        list(&eps.l2_differences),
        dt.observed_order,
        list(&to_limit)
    ))
}

fn snapshot_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .expect("output directory")
        .map(|e| {
            let e = e.expect("entry");
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).expect("file"))
        })
        .collect();
    out.sort();
    out
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out_dir = dir.path().join("out");
    let cfg = dir.path().join("run.cfg");
    let text = format!(
        "grid.n=64\ngrid.l=25.132741228718345\nsolver.dt=0.01\nsolver.t_end=0.2\nsolver.snapshot_every=5\n\
         noise.lambda=0.3\nnoise.seed=2024\noutput.directory={}\n",
        out_dir.display()
    );
    fs::write(&cfg, text).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let _ = fs::remove_dir_all(&out_dir);
        let status = Command::new(env!("CARGO_BIN_EXE_chemoflow"))
            .args(["run", "--config", cfg.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        require(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        outputs.push(snapshot_files(&out_dir));
    }
    require(outputs[0] == outputs[1], || "outputs differ between invocations".into())?;
    let snaps = outputs[0].iter().filter(|(n, _)| n.ends_with(".bin")).count();
    require(snaps > 1, || "no snapshots written".into())?;
    Ok(format!("{} files byte-identical ({snaps} snapshots)", outputs[0].len()))
}
