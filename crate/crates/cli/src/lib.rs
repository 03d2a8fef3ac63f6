//! Command-line front end for `dynjsq-core`: experiment configs and presets,
//! trajectory CSVs, JSON summaries and the sim-vs-fluid comparison.

pub mod config;
pub mod output;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dynjsq_core::engine::{run_simulation, SimConfig, Trajectory};
use dynjsq_core::equilibrium::{
    equilibrium_point, mean_response_time, optimal_lower_bound, phase_transition_bounds,
};
use dynjsq_core::fluid::{FluidIntegrator, FluidSolution};
use rayon::prelude::*;
use serde::Serialize;

use config::{parse_distribution, Config};
use output::{compare, fluid_csv, trajectory_csv, Comparison, OccupancyTable, Summary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("mismatched grids: {0}")]
    MismatchedGrids(String),
    #[error(transparent)]
    Core(#[from] dynjsq_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        use dynjsq_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(
                E::StepTooLarge { .. }
                | E::CapTooSmall { .. }
                | E::StateSpaceTooLarge { .. }
                | E::SingularSystem
                | E::EmptyLog
                | E::MalformedLog(_),
            ) => 3,
            CliError::Core(_) => 2,
            CliError::Runtime(_) | CliError::MismatchedGrids(_) | CliError::Io { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dynjsq",
    version,
    about = "JSQ load balancing on dynamic random graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a config; writes a trajectory CSV and a JSON summary.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Integrate the fluid limit matching a config.
    Fluid {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
        /// Start from the equilibrium point instead of the configured state.
        #[arg(long)]
        from_equilibrium: bool,
    },
    /// Equilibrium point, mean response time and bounds.
    Equilibrium {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value = "2:1")]
        dist: String,
        #[arg(long, default_value_t = 10)]
        imax: usize,
    },
    /// Sup distance per level between two trajectory CSVs.
    Compare {
        sim_csv: PathBuf,
        fluid_csv: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        /// Levels that must be within `tol` for a pass.
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Separation diagnostics of a simulated config.
    Diagnostics {
        #[command(flatten)]
        source: Source,
    },
    /// Generalized power-of-(d+1) dispatch without a graph.
    PowerOfD {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        dist: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// `n` independent M/M/1 queues.
    Baseline {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct Source {
    /// JSON config file.
    pub config: Option<PathBuf>,
    /// Built-in preset; keys in the config file override it.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Source {
    pub fn resolve(&self) -> Result<Config, CliError> {
        let mut c = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if self.preset.is_some() {
            c.preset = self.preset.clone();
        }
        if self.seed.is_some() {
            c.seed = self.seed;
        }
        if c.preset.is_none() && self.config.is_none() {
            return Err(CliError::Config("give a config file or --preset".into()));
        }
        c.resolve()
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Trajectory CSV path; the summary goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub replications: u64,
    /// Worker threads for replications; defaults to all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    #[arg(long)]
    pub n: usize,
    /// Total arrival rate.
    #[arg(long, conflicts_with = "load")]
    pub lambda_n: Option<f64>,
    /// Arrival rate per server.
    #[arg(long)]
    pub load: Option<f64>,
    #[arg(long)]
    pub horizon: f64,
    #[arg(long)]
    pub record_grid: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SystemArgs {
    fn config(&self, routing: &str, dist: Option<&str>) -> Config {
        Config {
            n: Some(self.n),
            lambda_n: self.lambda_n,
            load: self.load,
            routing: Some(routing.into()),
            dist: dist.map(Into::into),
            horizon: Some(self.horizon),
            record_grid: self.record_grid,
            seed: Some(self.seed),
            ..Config::default()
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io_err(path))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

/// `out` itself for a single run, otherwise `<stem>_r<k>.<ext>`.
pub fn replication_path(out: &Path, replication: u64, replications: u64) -> PathBuf {
    if replications <= 1 {
        return out.to_path_buf();
    }
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("trajectory");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_r{replication}.{ext}"),
        None => format!("{stem}_r{replication}"),
    };
    out.with_file_name(name)
}

/// Runs one replication of a resolved config.
pub fn simulate(config: &Config, replication: u64) -> Result<Trajectory, CliError> {
    let mut cfg: SimConfig = config.sim_config()?;
    cfg.replication = replication;
    Ok(run_simulation(&cfg)?)
}

/// Fluid trajectory recorded on the config's grid.
pub fn fluid(config: &Config, from_equilibrium: bool) -> Result<FluidSolution, CliError> {
    let (lambda, dist, mut start) = config.fluid_inputs()?;
    if from_equilibrium {
        start = equilibrium_point(lambda, &dist)?.values().clone();
    }
    let h = config.fluid_step.unwrap_or(1e-3);
    let grid = config.record_grid.unwrap_or(h);
    let stride = (grid / h).round();
    if stride < 1.0 || (stride * h - grid).abs() > 1e-9 * grid {
        return Err(CliError::Config(format!(
            "record_grid {grid} is not a multiple of fluid_step {h}"
        )));
    }
    let horizon = config
        .horizon
        .ok_or_else(|| CliError::Config("missing key horizon".into()))?;
    Ok(FluidIntegrator::new(lambda, &dist)
        .step(h)
        .record_stride(stride as usize)
        .run(&start, horizon)?)
}

fn run_replications<W: Write>(
    config: &Config,
    args: &OutputArgs,
    stdout: &mut W,
) -> Result<(), CliError> {
    let levels = config.levels.unwrap_or(4);
    let one = |r: u64| -> Result<Summary, CliError> {
        let tr = simulate(config, r)?;
        let path = replication_path(&args.out, r, args.replications);
        write_file(&path, &trajectory_csv(&tr, levels))?;
        let summary = Summary::new(&tr, config, r);
        let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
        write_file(&path.with_extension("json"), &json)?;
        Ok(summary)
    };
    let summaries: Vec<Summary> = if args.replications <= 1 {
        vec![one(0)?]
    } else {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(j) = args.jobs {
            pool = pool.num_threads(j);
        }
        let pool = pool
            .build()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..args.replications)
                .into_par_iter()
                .map(one)
                .collect::<Result<_, _>>()
        })?
    };
    let averages: Vec<&Vec<f64>> = summaries.iter().map(|s| &s.time_average).collect();
    emit(stdout, &averages)
}

fn emit<W: Write, T: Serialize>(stdout: &mut W, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    match writeln!(stdout, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Runtime(format!("stdout: {e}")))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelBounds {
    pub i: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub lambda: f64,
    pub dist: String,
    /// `q*(1), ..., q*(imax)`.
    pub q_star: Vec<f64>,
    #[serde(rename = "R")]
    pub r: f64,
    /// Geometric or doubly exponential bounds for `i >= 2`.
    pub bounds: Option<Vec<LevelBounds>>,
    /// Lower bound over all laws with the same mean; absent with mass at infinity.
    pub optimal_lower_bound: Option<Vec<f64>>,
}

pub fn equilibrium_report(
    lambda: f64,
    dist_text: &str,
    imax: usize,
) -> Result<EquilibriumReport, CliError> {
    let dist = parse_distribution(dist_text)?;
    let eq = equilibrium_point(lambda, &dist)?;
    let bounds = (2..=imax)
        .map(|i| {
            phase_transition_bounds(lambda, &dist, i).map(|(lower, upper)| LevelBounds {
                i,
                lower,
                upper,
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .ok();
    let optimal = (dist.mass_at_infinity() == 0.0).then(|| {
        (1..=imax)
            .map(|i| optimal_lower_bound(lambda, dist.mean(), i))
            .collect()
    });
    Ok(EquilibriumReport {
        lambda,
        dist: dist_text.to_string(),
        q_star: (1..=imax).map(|i| eq.get(i)).collect(),
        r: mean_response_time(&eq),
        bounds,
        optimal_lower_bound: optimal,
    })
}

pub fn compare_files(a: &Path, b: &Path, tol: f64, levels: usize) -> Result<Comparison, CliError> {
    let a = OccupancyTable::parse(&read_file(a)?)?;
    let b = OccupancyTable::parse(&read_file(b)?)?;
    compare(&a, &b, tol, levels)
}

pub fn run<W: Write>(cli: Cli, stdout: &mut W) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { source, out } => run_replications(&source.resolve()?, &out, stdout),
        Command::Fluid {
            source,
            out,
            from_equilibrium,
        } => {
            let config = source.resolve()?;
            let sol = fluid(&config, from_equilibrium)?;
            write_file(&out, &fluid_csv(&sol, config.levels.unwrap_or(4)))
        }
        Command::Equilibrium { lambda, dist, imax } => {
            emit(stdout, &equilibrium_report(lambda, &dist, imax)?)
        }
        Command::Compare {
            sim_csv,
            fluid_csv,
            tol,
            levels,
        } => emit(stdout, &compare_files(&sim_csv, &fluid_csv, tol, levels)?),
        Command::Diagnostics { source } => {
            let config = source.resolve()?;
            let tr = simulate(&config, 0)?;
            let diag = tr
                .diagnostics
                .as_ref()
                .ok_or_else(|| CliError::Config("diagnostics need graph routing".into()))?;
            emit(stdout, &output::DiagnosticsSummary::from(diag))
        }
        Command::PowerOfD { system, dist, out } => {
            let config = system.config("power_of_d", Some(&dist)).resolve()?;
            run_replications(&config, &out, stdout)
        }
        Command::Baseline { system, out } => {
            let config = system.config("independent", None).resolve()?;
            run_replications(&config, &out, stdout)
        }
    }
}
