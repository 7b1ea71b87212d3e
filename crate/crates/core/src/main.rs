use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chemoflow::config::{parse_config, RunConfig};
use chemoflow::coupling::{coupled_run, fit_envelope, perturb_velocity};
use chemoflow::diagnostics::write_csv;
use chemoflow::integrator::{refine_study, run};
use chemoflow::lp_besov::block_spectrum;
use chemoflow::snapshot::{write_snapshot_file, Snapshot};
use chemoflow::{verify, Error};

const THREADS_VAR: &str = "CHEMOFLOW_THREADS";

#[derive(Parser)]
#[command(name = "chemoflow", version, about = "Stochastic chemotaxis-fluid simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory, writing diagnostics and snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the invariant suite, one PASS/FAIL line per invariant.
    Verify,
    /// Integrate a state and a perturbed copy on one noise path.
    Couple {
        #[arg(long)]
        config: PathBuf,
    },
    /// Dyadic block spectrum of the initial state.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
    },
    /// Refinement study along one regularization or discretization axis.
    Refine {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parameter { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| dispatch(cli.command));
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn dispatch(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Verify => Ok(run_verify()),
        Command::Run { config } => run_simulation(&load(&config)?),
        Command::Couple { config } => run_couple(&load(&config)?),
        Command::Spectrum { config } => run_spectrum(&load(&config)?),
        Command::Refine { config } => run_refine(&load(&config)?),
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    Ok(parse_config(path)?)
}

fn run_verify() -> ExitCode {
    let results = verify::run_suite();
    for r in &results {
        println!("{}", r.line());
    }
    if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn output_path(cfg: &RunConfig, suffix: &str) -> PathBuf {
    cfg.output.directory.join(format!("{}_{suffix}", cfg.output.prefix))
}

fn prepare_output(cfg: &RunConfig) -> Result<(), Failure> {
    fs::create_dir_all(&cfg.output.directory)?;
    fs::write(output_path(cfg, "config.cfg"), cfg.canonical())?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Failure> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn run_simulation(cfg: &RunConfig) -> Result<ExitCode, Failure> {
    let grid = cfg.spectral_grid()?;
    let solver = cfg.solver_config(&grid)?;
    let initial = cfg.initial_state(&grid)?;
    prepare_output(cfg)?;
    let traj = run(&initial, &solver)?;
    for w in &traj.warnings {
        eprintln!("warning: {w}");
    }
    let mut out = create(&output_path(cfg, "diagnostics.csv"))?;
    write_csv(&traj.records, &mut out)?;
    out.flush()?;

    let mut snapshots = traj.snapshots.clone();
    if snapshots.is_empty() {
        let t_final = traj.times.last().copied().unwrap_or(0.0);
        snapshots.push((t_final, traj.final_state.clone()));
    }
    for (i, (t, state)) in snapshots.into_iter().enumerate() {
        let snap = Snapshot {
            t,
            alpha: solver.alpha,
            state,
        };
        write_snapshot_file(&snap, &output_path(cfg, &format!("snapshot_{i:05}.bin")))?;
    }
    println!(
        "wrote {} diagnostics records to {}",
        traj.records.len(),
        cfg.output.directory.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_couple(cfg: &RunConfig) -> Result<ExitCode, Failure> {
    let grid = cfg.spectral_grid()?;
    let solver = cfg.solver_config(&grid)?;
    let initial = cfg.initial_state(&grid)?;
    let other = perturb_velocity(&initial, cfg.couple.mode, cfg.couple.perturbation)?;
    prepare_output(cfg)?;
    let records = coupled_run(&initial, &other, &solver)?;
    let mut out = create(&output_path(cfg, "coupling.csv"))?;
    chemoflow::coupling::write_csv(&records, &mut out)?;
    out.flush()?;
    let use_tilde = (solver.alpha - 0.5).abs() < 1e-12;
    match fit_envelope(&records, solver.dt, use_tilde) {
        Ok(fit) => println!(
            "envelope rate {:.6e} (least squares {:.6e}, R^2 {:.4})",
            fit.envelope_rate, fit.rate, fit.r_squared
        ),
        Err(e) => println!("no envelope fit: {e}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_spectrum(cfg: &RunConfig) -> Result<ExitCode, Failure> {
    let grid = cfg.spectral_grid()?;
    let s = cfg.initial_state(&grid)?;
    prepare_output(cfg)?;
    let blocks = [&s.n, &s.c, &s.u.components[0], &s.u.components[1]].map(|f| block_spectrum(f, 2.0));
    let mut out = create(&output_path(cfg, "spectrum.csv"))?;
    writeln!(out, "j,n,c,u1,u2")?;
    for (i, b) in blocks[0].iter().enumerate() {
        let row = blocks.iter().map(|col| format!("{:?}", col[i].l2_norm)).collect::<Vec<_>>();
        writeln!(out, "{},{}", b.j, row.join(","))?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn run_refine(cfg: &RunConfig) -> Result<ExitCode, Failure> {
    if cfg.refine.levels.len() < 3 {
        return Err(Failure::Usage("refine.levels needs at least 3 comma-separated levels".into()));
    }
    let grid = cfg.spectral_grid()?;
    let solver = cfg.solver_config(&grid)?;
    let initial = cfg.initial_state(&grid)?;
    prepare_output(cfg)?;
    let table = refine_study(&initial, &solver, cfg.refine.axis, &cfg.refine.levels)?;
    let mut out = create(&output_path(cfg, "refine.csv"))?;
    writeln!(out, "level,l2_to_next,h1_to_next,distance_to_limit")?;
    let cell = |v: Option<&f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for (i, level) in table.levels.iter().enumerate() {
        let limit = table.limit_differences.as_ref().and_then(|v| v.get(i));
        writeln!(
            out,
            "{level:?},{},{},{}",
            cell(table.l2_differences.get(i)),
            cell(table.h1_differences.get(i)),
            cell(limit)
        )?;
    }
    out.flush()?;
    println!("observed order {:.4}", table.observed_order);
    Ok(ExitCode::SUCCESS)
}
