//! Run configuration: a line-oriented `section.key=value` file.
//!
//! Blank lines and text after `#` are ignored. Every key has a documented
//! default except `solver.dt` and `solver.t_end`. Validation collects every
//! problem before failing, so one pass reports the whole file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{ConfigIssue, Error, Result};
use crate::integrator::{RefineAxis, SolverConfig};
use crate::model::{Potential, RegularizationParams, State};
use crate::noise::NoiseModel;
use crate::spectral::{resample, SpectralGrid};
use crate::{presets, snapshot};

/// `(key, default)`; `None` marks a required key. The order is the order of
/// the canonical echo.
const SCHEMA: &[(&str, Option<&str>)] = &[
    ("grid.n", Some("128")),
    ("grid.l", Some("50.26548245743669")),
    ("grid.dealias_fraction", Some("0.6666666666666666")),
    ("physics.alpha", Some("0.75")),
    ("physics.g", Some("1")),
    ("regularization.eps", Some("off")),
    ("regularization.k_band", Some("off")),
    ("regularization.r_cut", Some("off")),
    ("regularization.strict_annulus", Some("false")),
    ("noise.k_modes", Some("4")),
    ("noise.lambda", Some("0.1")),
    ("noise.seed", Some("0")),
    ("noise.substeps", Some("1")),
    ("solver.dt", None),
    ("solver.t_end", None),
    ("solver.snapshot_every", Some("0")),
    ("solver.diagnostics_every", Some("1")),
    ("initial.preset", Some("blob")),
    ("initial.snapshot", Some("")),
    ("output.directory", Some("out")),
    ("output.prefix", Some("run")),
    ("couple.perturbation", Some("1e-6")),
    ("couple.mode", Some("2")),
    ("refine.axis", Some("dt")),
    ("refine.levels", Some("")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    pub n: usize,
    pub l: f64,
    pub dealias_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsSection {
    pub alpha: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSection {
    pub k_modes: usize,
    pub lambda: f64,
    pub seed: u64,
    pub substeps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_every: u64,
    pub diagnostics_every: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSource {
    Preset(String),
    Snapshot(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupleSection {
    pub perturbation: f64,
    pub mode: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineSection {
    pub axis: RefineAxis,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub regularization: RegularizationParams,
    pub noise: NoiseSection,
    pub solver: SolverSection,
    pub initial: InitialSource,
    pub output: OutputSection,
    pub couple: CoupleSection,
    pub refine: RefineSection,
    canonical: String,
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(vec![ConfigIssue {
            key: path.display().to_string(),
            message: format!("cannot read: {e}"),
        }])
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut issues = Vec::new();
    let mut seen: BTreeMap<String, (String, Vec<usize>)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            issues.push(issue(&format!("line {line_no}"), "expected key=value"));
            continue;
        };
        let key = key.trim();
        if !SCHEMA.iter().any(|(k, _)| *k == key) {
            issues.push(issue(key, &format!("unknown key (line {line_no})")));
            continue;
        }
        let entry = seen.entry(key.to_string()).or_insert_with(|| (value.trim().to_string(), Vec::new()));
        entry.1.push(line_no);
    }
    for (key, (_, lines)) in &seen {
        if lines.len() > 1 {
            let list = lines.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ");
            issues.push(issue(key, &format!("duplicate key on lines {list}")));
        }
    }

    let mut r = Reader {
        values: seen.into_iter().map(|(k, (v, _))| (k, v)).collect(),
        issues,
    };
    let grid = GridSection {
        n: r.parse("grid.n", |v: usize| v >= 4 && v % 2 == 0, "must be an even integer >= 4"),
        l: r.parse("grid.l", |v: f64| v > 0.0 && v.is_finite(), "must be positive"),
        dealias_fraction: r.parse(
            "grid.dealias_fraction",
            |v: f64| v > 0.0 && v <= 1.0,
            "must lie in (0, 1]",
        ),
    };
    let physics = PhysicsSection {
        alpha: r.parse("physics.alpha", |v: f64| (0.5..=1.0).contains(&v), "must lie in [1/2, 1]"),
        g: r.parse("physics.g", |v: f64| v >= 0.0 && v.is_finite(), "must be nonnegative"),
    };
    let regularization = RegularizationParams {
        eps: r.optional("regularization.eps"),
        k_band: r.optional("regularization.k_band"),
        r_cut: r.optional("regularization.r_cut"),
        strict_annulus: r.parse("regularization.strict_annulus", |_: bool| true, ""),
    };
    let noise = NoiseSection {
        k_modes: r.parse("noise.k_modes", |v: usize| v >= 1, "must be at least 1"),
        lambda: r.parse("noise.lambda", |v: f64| v >= 0.0 && v.is_finite(), "must be nonnegative"),
        seed: r.parse("noise.seed", |_: u64| true, ""),
        substeps: r.parse("noise.substeps", |v: u64| v >= 1, "must be at least 1"),
    };
    let solver = SolverSection {
        dt: r.parse("solver.dt", |v: f64| v > 0.0 && v.is_finite(), "must be positive"),
        t_end: r.parse("solver.t_end", |v: f64| v >= 0.0 && v.is_finite(), "must be nonnegative"),
        snapshot_every: r.parse("solver.snapshot_every", |_: u64| true, ""),
        diagnostics_every: r.parse("solver.diagnostics_every", |v: u64| v >= 1, "must be at least 1"),
    };
    let preset = r.text("initial.preset");
    let snapshot_path = r.text("initial.snapshot");
    let initial = if snapshot_path.is_empty() {
        if !["blob", "uniform", "single-mode"].contains(&preset.as_str()) {
            r.fail("initial.preset", "must be one of blob, uniform, single-mode");
        }
        InitialSource::Preset(preset)
    } else {
        if r.values.contains_key("initial.preset") {
            r.fail("initial.snapshot", "conflicts with initial.preset");
        }
        InitialSource::Snapshot(PathBuf::from(snapshot_path))
    };
    let output = OutputSection {
        directory: PathBuf::from(r.text("output.directory")),
        prefix: r.text("output.prefix"),
    };
    if output.prefix.is_empty() || output.prefix.contains(['/', '\\']) {
        r.fail("output.prefix", "must be a nonempty file name prefix");
    }
    let couple = CoupleSection {
        perturbation: r.parse("couple.perturbation", |v: f64| v > 0.0 && v.is_finite(), "must be positive"),
        mode: r.parse("couple.mode", |v: i64| v >= 1, "must be at least 1"),
    };
    let refine = RefineSection {
        axis: {
            let raw = r.text("refine.axis");
            raw.parse().unwrap_or_else(|_| {
                r.fail("refine.axis", &format!("must be one of dt, eps, k_band, resolution, got {raw}"));
                RefineAxis::Dt
            })
        },
        levels: r.list("refine.levels"),
    };

    if grid.n >= 4 && couple.mode >= grid.n as i64 / 2 {
        r.fail("couple.mode", "is not resolved on the grid");
    }
    if r.issues.is_empty() {
        let canonical = r.canonical();
        Ok(RunConfig {
            grid,
            physics,
            regularization,
            noise,
            solver,
            initial,
            output,
            couple,
            refine,
            canonical,
        })
    } else {
        Err(Error::Config(r.issues))
    }
}

fn issue(key: &str, message: &str) -> ConfigIssue {
    ConfigIssue {
        key: key.to_string(),
        message: message.to_string(),
    }
}

struct Reader {
    values: BTreeMap<String, String>,
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn raw(&mut self, key: &str) -> Option<String> {
        if let Some(v) = self.values.get(key) {
            return Some(v.clone());
        }
        match SCHEMA.iter().find(|(k, _)| *k == key).and_then(|(_, d)| *d) {
            Some(d) => Some(d.to_string()),
            None => {
                self.fail(key, "missing required key");
                None
            }
        }
    }

    fn fail(&mut self, key: &str, message: &str) {
        self.issues.push(issue(key, message));
    }

    fn parse<T>(&mut self, key: &str, ok: impl Fn(T) -> bool, range: &str) -> T
    where
        T: std::str::FromStr + Default + Copy,
    {
        let Some(raw) = self.raw(key) else {
            return T::default();
        };
        match raw.parse::<T>() {
            Ok(v) if ok(v) => v,
            Ok(_) => {
                self.fail(key, &format!("{range}, got {raw}"));
                T::default()
            }
            Err(_) => {
                self.fail(key, &format!("cannot parse {raw:?} as {}", std::any::type_name::<T>()));
                T::default()
            }
        }
    }

    fn optional(&mut self, key: &str) -> Option<f64> {
        let raw = self.raw(key)?;
        if raw == "off" {
            return None;
        }
        match raw.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Some(v),
            Ok(_) => {
                self.fail(key, &format!("must be positive or off, got {raw}"));
                None
            }
            Err(_) => {
                self.fail(key, &format!("cannot parse {raw:?} as a number or off"));
                None
            }
        }
    }

    fn text(&mut self, key: &str) -> String {
        self.raw(key).unwrap_or_default()
    }

    fn list(&mut self, key: &str) -> Vec<f64> {
        let raw = self.text(key);
        if raw.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for part in raw.split(',') {
            match part.trim().parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => out.push(v),
                _ => {
                    self.fail(key, &format!("entry {part:?} is not a positive number"));
                    return Vec::new();
                }
            }
        }
        out
    }

    fn canonical(&mut self) -> String {
        let mut out = String::new();
        let from_snapshot = !self.text("initial.snapshot").is_empty();
        for (key, _) in SCHEMA {
            if from_snapshot && *key == "initial.preset" {
                continue;
            }
            let v = self.raw(key).unwrap_or_default();
            out.push_str(&format!("{key}={v}\n"));
        }
        out
    }
}

impl RunConfig {
    /// The effective configuration with every default written out, one key
    /// per line in schema order.
    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    pub fn spectral_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::with_dealias(self.grid.n, self.grid.l, self.grid.dealias_fraction)
    }

    pub fn solver_config(&self, grid: &SpectralGrid) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::new(grid, self.solver.dt, self.solver.t_end, self.physics.alpha);
        cfg.params = self.regularization.clone();
        cfg.noise = NoiseModel::new(self.noise.k_modes, self.noise.lambda, self.noise.seed)?;
        cfg.noise_substeps = self.noise.substeps;
        cfg.potential = Potential::sinusoidal(grid, self.physics.g);
        cfg.snapshot_every = self.solver.snapshot_every;
        cfg.diagnostics_every = self.solver.diagnostics_every;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The initial state, resampled onto the configured grid when it comes
    /// from a snapshot of another resolution.
    pub fn initial_state(&self, grid: &SpectralGrid) -> Result<State> {
        match &self.initial {
            InitialSource::Preset(name) => presets::by_name(name, grid),
            InitialSource::Snapshot(path) => {
                let snap = snapshot::read_snapshot_file(path)?;
                if (snap.state.grid().side_length() - grid.side_length()).abs() > 1e-12 * grid.side_length() {
                    return Err(Error::Config(vec![issue(
                        "initial.snapshot",
                        "snapshot side length differs from grid.l",
                    )]));
                }
                let s = snap.state.to_spectral();
                Ok(State {
                    n: resample(&s.n, grid)?.to_physical(),
                    c: resample(&s.c, grid)?.to_physical(),
                    u: crate::spectral::SpectralVectorField {
                        components: [resample(&s.u.components[0], grid)?, resample(&s.u.components[1], grid)?],
                        divergence_free: s.u.divergence_free,
                    }
                    .to_physical(),
                })
            }
        }
    }
}

impl Default for RunConfig {
    /// Defaults with `solver.dt = 1e-3` and `solver.t_end = 1`.
    fn default() -> Self {
        parse_config_str("solver.dt=1e-3\nsolver.t_end=1\n").expect("defaults are valid")
    }
}
