//! `posmap`: evaluate moment-based detectors on states and channels.
//!
//! Exit codes: 0 on success, 2 for an invalid configuration, 3 for a
//! numerical failure. Errors are printed to stderr as one line of JSON.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use posmap_core::Subsystem;

use config::{Command, Format, GridDesc, Job, JobConfig, MapDesc, OutputDesc};
use error::CliError;

#[derive(Parser)]
#[command(name = "posmap", version, about = "Moment-based entanglement, Schmidt number and channel detectors")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate detectors on one state
    EvalState(JobArgs),
    /// Sweep a state family over a parameter grid
    ScanState(JobArgs),
    /// Evaluate channel detectors on one channel
    EvalChannel(JobArgs),
    /// Sweep a channel family over a parameter grid
    ScanChannel(JobArgs),
    /// Channel-discrimination witness for a state
    Discriminate(JobArgs),
    /// Locate a detection onset by bisection
    Thresholds(JobArgs),
}

impl Cmd {
    fn split(self) -> (Command, JobArgs) {
        match self {
            Cmd::EvalState(a) => (Command::EvalState, a),
            Cmd::ScanState(a) => (Command::ScanState, a),
            Cmd::EvalChannel(a) => (Command::EvalChannel, a),
            Cmd::ScanChannel(a) => (Command::ScanChannel, a),
            Cmd::Discriminate(a) => (Command::Discriminate, a),
            Cmd::Thresholds(a) => (Command::Thresholds, a),
        }
    }
}

#[derive(Args, Debug, Default)]
struct JobArgs {
    /// JSON job file; flags given on the command line override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// State or channel family (isotropic, dephased_mes, stormer_bound, tiles, npt,
    /// max_entangled, max_mixed, random_schmidt, depolarizing, dephasing)
    #[arg(long)]
    family: Option<String>,
    /// Family parameter
    #[arg(long, allow_hyphen_values = true)]
    param: Option<f64>,
    /// Local dimension
    #[arg(long)]
    d: Option<usize>,
    /// Positive map: reduction, breuer_hall, gen_choi, choi, transpose, identity
    #[arg(long)]
    map: Option<String>,
    /// Reduction parameter (defaults to 1/r)
    #[arg(long)]
    k: Option<f64>,
    /// Shift count of the generalized Choi map
    #[arg(long)]
    kk: Option<usize>,
    /// Schmidt number order r
    #[arg(long)]
    r: Option<usize>,
    /// Hankel order
    #[arg(long)]
    m: Option<usize>,
    /// Number of moments
    #[arg(long)]
    nmax: Option<usize>,
    /// Parameter grid lo:hi:steps (bracket lo:hi for thresholds)
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<GridDesc>,
    /// Comma-separated detectors (T1,T2,T3,T4,T5,P3PPT,HankelPT)
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<String>>,
    /// Subsystem the map acts on
    #[arg(long, value_parser = parse_subsystem)]
    subsystem: Option<Subsystem>,
    /// Bisection tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for random states
    #[arg(long)]
    seed: Option<u64>,
    /// Schmidt rank of random_schmidt states
    #[arg(long)]
    rank: Option<usize>,
    /// Output file (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<Format>,
}

fn parse_subsystem(s: &str) -> Result<Subsystem, String> {
    match s.to_ascii_uppercase().as_str() {
        "A" => Ok(Subsystem::A),
        "B" => Ok(Subsystem::B),
        _ => Err(format!("subsystem must be A or B, got {s:?}")),
    }
}

fn map_from_flags(name: &str, a: &JobArgs) -> Result<MapDesc, CliError> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "reduction" => MapDesc::Reduction { k: a.k, r: None },
        "breuer_hall" | "breuer-hall" | "bh" => MapDesc::BreuerHall { u: None },
        "gen_choi" | "generalized_choi" => MapDesc::GenChoi {
            d: None,
            kk: a.kk.unwrap_or(1),
        },
        "choi" => MapDesc::Choi,
        "transpose" => MapDesc::Transpose,
        "identity" => MapDesc::Identity,
        other => return Err(CliError::Config(format!("unknown map {other:?}"))),
    })
}

fn merge(command: Command, a: JobArgs) -> Result<JobConfig, CliError> {
    let mut cfg = match &a.config {
        Some(path) => JobConfig::load(path)?,
        None => JobConfig::default(),
    };
    if cfg.command.is_some_and(|c| c != command) {
        return Err(CliError::Config(format!(
            "config is for {} but {} was requested",
            cfg.command.map_or("", |c| c.as_str()),
            command.as_str()
        )));
    }
    cfg.command = Some(command);
    if let Some(f) = &a.family {
        cfg.target.family = Some(f.clone());
    }
    cfg.target.param = a.param.or(cfg.target.param);
    cfg.target.d = a.d.or(cfg.target.d);
    cfg.target.rank = a.rank.or(cfg.target.rank);
    if let Some(name) = &a.map {
        cfg.map = Some(map_from_flags(name, &a)?);
    } else if let Some(k) = a.k {
        match &mut cfg.map {
            Some(MapDesc::Reduction { k: kk, .. }) => *kk = Some(k),
            None => cfg.map = Some(MapDesc::Reduction { k: Some(k), r: None }),
            Some(_) => return Err(CliError::Config("--k only applies to the reduction map".into())),
        }
    }
    cfg.r = a.r.or(cfg.r);
    cfg.m = a.m.or(cfg.m);
    cfg.n_max = a.nmax.or(cfg.n_max);
    cfg.grid = a.grid.or(cfg.grid);
    if a.detectors.is_some() {
        cfg.detectors = a.detectors;
    }
    cfg.subsystem = a.subsystem.or(cfg.subsystem);
    cfg.tol = a.tol.or(cfg.tol);
    cfg.seed = a.seed.or(cfg.seed);
    cfg.output = OutputDesc {
        path: a.out.or(cfg.output.path),
        format: a.format.or(cfg.output.format),
    };
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("POSMAP_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("POSMAP_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (command, args) = cli.command.split();
    let job = Job::from_config(merge(command, args)?)?;
    let text = commands::run(&job)?;
    match &job.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Config(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
