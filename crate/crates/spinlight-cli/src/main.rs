//! Command-line front end for the spinlight simulator: deterministic
//! covariance evolution, parameter sweeps, Monte Carlo trajectory ensembles
//! and canned reference curves, all emitted as CSV.
//!
//! Exit codes: 0 on success, 2 for usage and configuration problems, 1 for
//! runtime failures (diverged integration, unphysical states, I/O).

mod config;
mod engine;
mod figures;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use spinlight::trajectory::{
    conditioned_covariance, run_ensemble, run_trajectory, trajectory_seed, EnsembleStats,
};

use config::{apply_axis_value, parse_axis, Axis, Reduce, Settings};
use engine::{evolve_series, reduce_series};
use output::{deliver, num, Csv};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameter combinations → exit code 2.
    Usage(String),
    /// Failures while running or writing → exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m.clone(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "spinlight",
    version,
    about = "Gaussian-state simulator for two collectively probed atomic ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic covariance evolution as a CSV time series.
    Evolve(EvolveArgs),
    /// Grid evaluation over one or two parameter axes.
    Sweep(SweepArgs),
    /// Monte Carlo ensemble of measurement trajectories.
    Trajectories(TrajectoriesArgs),
    /// Reference curves regenerated from fixed parameter sets.
    Figure(FigureArgs),
}

/// Flags shared by every physics command; each one overrides the matching
/// config-file key.
#[derive(Args, Clone)]
pub struct CommonArgs {
    /// Flat key=value settings file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Evolution engine: discrete, ode, doubling or analytic.
    #[arg(long, value_name = "NAME")]
    engine: Option<String>,
    /// Master RNG seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Number of Monte Carlo trajectories.
    #[arg(long, value_name = "N")]
    ntraj: Option<usize>,
    /// Resonant optical density α₀ of each ensemble.
    #[arg(long, value_name = "X")]
    alpha0: Option<f64>,
    /// Depumping rate η.
    #[arg(long, value_name = "X")]
    eta: Option<f64>,
    /// Larmor angular frequency ω.
    #[arg(long, value_name = "X")]
    omega: Option<f64>,
    /// Measurement rate κ̃²; overrides the η·α₀ product.
    #[arg(long = "kappa-sq", value_name = "X")]
    kappa_sq: Option<f64>,
    /// Total probe duration.
    #[arg(long = "t-end", value_name = "X")]
    t_end: Option<f64>,
    /// Slice duration for the discrete engine and for trajectories.
    #[arg(long, value_name = "X")]
    tau: Option<f64>,
    /// Linewidth-to-detuning ratio Γ/Δ (default 0.005).
    #[arg(long = "gamma-over-detuning", value_name = "X")]
    gamma_over_detuning: Option<f64>,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sweep axis, name=start:stop:n or name=v1,v2,…; at most two.
    #[arg(long = "axis", value_name = "SPEC")]
    axes: Vec<String>,
    /// How each cell's history collapses to a row: final, peak or death.
    #[arg(long, value_name = "NAME", default_value = "final")]
    reduce: String,
}

#[derive(Args)]
struct TrajectoriesArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also dump every slice of every trajectory to this CSV.
    #[arg(long, value_name = "PATH")]
    records: Option<PathBuf>,
}

#[derive(Args)]
struct FigureArgs {
    /// Preset name: fig2, fig3, fig4 or fig5.
    id: String,
    /// Output CSV path; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Evolve(args) => cmd_evolve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Trajectories(args) => cmd_trajectories(args),
        Command::Figure(args) => deliver(args.out.as_deref(), &figures::figure_csv(&args.id)?),
    }
}

fn cmd_evolve(args: EvolveArgs) -> Result<(), CliError> {
    let settings = Settings::load(&args.common)?;
    let params = settings.resolve_params()?;
    let t_end = settings.require_t_end()?;
    let rows = evolve_series(&params, t_end, settings.engine)?;
    let mut csv = Csv::new(&[
        "t", "kappa_sq_t", "theta", "g11sd", "g22sd", "g33sd", "g44sd", "delta", "geof",
        "logneg",
    ]);
    for r in rows {
        csv.row(&[
            num(r.t),
            num(r.kappa_sq_t),
            num(r.theta),
            num(r.g_sd[0]),
            num(r.g_sd[1]),
            num(r.g_sd[2]),
            num(r.g_sd[3]),
            num(r.delta),
            num(r.geof),
            num(r.logneg),
        ]);
    }
    deliver(settings.out.as_deref(), &csv.into_string())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let base = Settings::load(&args.common)?;
    let reduce = Reduce::parse(&args.reduce)?;
    if args.axes.len() > 2 {
        return Err(CliError::Usage(format!(
            "at most two sweep axes are supported, got {}",
            args.axes.len()
        )));
    }
    let axes: Vec<Axis> = args
        .axes
        .iter()
        .map(|spec| parse_axis(spec))
        .collect::<Result<_, _>>()?;

    // Cell-local settings, resolved up front so usage errors surface before
    // any work starts; evaluation order is row-major and the output order
    // never depends on scheduling.
    struct Cell {
        labels: Vec<f64>,
        params: spinlight::PhysicalParams,
        t_end: f64,
    }
    let mut cells = Vec::new();
    let outer: Vec<Option<f64>> = match axes.first() {
        Some(axis) => axis.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let inner: Vec<Option<f64>> = match axes.get(1) {
        Some(axis) => axis.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    for &a in &outer {
        for &b in &inner {
            let mut s = base.clone();
            let mut labels = Vec::new();
            if let Some(v) = a {
                apply_axis_value(&mut s, &axes[0].key, v);
                labels.push(v);
            }
            if let Some(v) = b {
                apply_axis_value(&mut s, &axes[1].key, v);
                labels.push(v);
            }
            cells.push(Cell {
                labels,
                params: s.resolve_params()?,
                t_end: s.require_t_end()?,
            });
        }
    }

    let engine = base.engine;
    let results: Vec<Result<engine::CellResult, CliError>> = cells
        .par_iter()
        .map(|cell| Ok(reduce_series(&evolve_series(&cell.params, cell.t_end, engine)?, reduce)))
        .collect();

    let mut header: Vec<&str> = axes.iter().map(|a| a.key.as_str()).collect();
    header.extend(["t", "delta", "geof", "logneg"]);
    let mut csv = Csv::new(&header);
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for (cell, result) in cells.iter().zip(results) {
        let r = result?;
        let mut fields: Vec<String> = cell.labels.iter().map(|&v| num(v)).collect();
        fields.extend([opt(r.t), opt(r.delta), opt(r.geof), opt(r.logneg)]);
        csv.row(&fields);
    }
    deliver(base.out.as_deref(), &csv.into_string())
}

fn cmd_trajectories(args: TrajectoriesArgs) -> Result<(), CliError> {
    let settings = Settings::load(&args.common)?;
    let params = settings.resolve_params()?;
    let t_end = settings.require_t_end()?;
    if settings.ntraj == 0 {
        return Err(CliError::Usage("ntraj must be at least 1".into()));
    }
    let runtime = |e: spinlight::Error| CliError::Runtime(e.to_string());

    // The covariance path is shared by all trajectories; gate it once.
    let final_state = conditioned_covariance(&params, t_end).map_err(runtime)?;
    if !final_state.check_physical(1e-6).map_err(runtime)? {
        return Err(CliError::Runtime(
            "conditioned covariance failed the physicality check".into(),
        ));
    }

    let summaries =
        run_ensemble(&params, t_end, settings.ntraj, settings.seed).map_err(runtime)?;
    let mut csv = Csv::new(&[
        "kind",
        "index",
        "seed",
        "x_a1",
        "p_a1",
        "x_a2",
        "p_a2",
        "mean_p",
        "var_mean_p",
        "stderr_var",
        "stderr_mean",
    ]);
    let blank = String::new;
    for (i, s) in summaries.iter().enumerate() {
        csv.row(&[
            "trajectory".into(),
            i.to_string(),
            s.seed.to_string(),
            num(s.final_mean[0]),
            num(s.final_mean[1]),
            num(s.final_mean[2]),
            num(s.final_mean[3]),
            num(s.mean_p()),
            blank(),
            blank(),
            blank(),
        ]);
    }
    let mean_ps: Vec<f64> = summaries.iter().map(|s| s.mean_p()).collect();
    let ensemble_row = if mean_ps.len() >= 2 {
        let stats = EnsembleStats::from_samples(&mean_ps).map_err(runtime)?;
        [
            num(stats.mean_of_mean_p),
            num(stats.var_of_mean_p),
            num(stats.stderr),
            num(stats.stderr_of_mean()),
        ]
    } else {
        [num(mean_ps[0]), blank(), blank(), blank()]
    };
    csv.row(&[
        "ensemble".into(),
        blank(),
        settings.seed.to_string(),
        blank(),
        blank(),
        blank(),
        blank(),
        ensemble_row[0].clone(),
        ensemble_row[1].clone(),
        ensemble_row[2].clone(),
        ensemble_row[3].clone(),
    ]);

    if let Some(path) = &args.records {
        let mut dump = Csv::new(&[
            "index", "seed", "slice", "t", "outcome", "x_a1", "p_a1", "x_a2", "p_a2",
        ]);
        for i in 0..settings.ntraj {
            let seed = trajectory_seed(settings.seed, i as u64);
            let record = run_trajectory(&params, t_end, seed).map_err(runtime)?;
            for k in 0..record.times.len() {
                let m = &record.cond_means[k];
                dump.row(&[
                    i.to_string(),
                    seed.to_string(),
                    k.to_string(),
                    num(record.times[k]),
                    if k == 0 { blank() } else { num(record.outcomes[k]) },
                    num(m[0]),
                    num(m[1]),
                    num(m[2]),
                    num(m[3]),
                ]);
            }
        }
        deliver(Some(path.as_path()), &dump.into_string())?;
    }

    deliver(settings.out.as_deref(), &csv.into_string())
}
