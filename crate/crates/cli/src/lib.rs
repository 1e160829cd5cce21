//! `stkg`: configuration, command dispatch and report emission.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{build, RunConfig};
use report::{write_outputs, Report, Status, Timing, SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_HYPOTHESIS: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

const CSV_HELP: &str = "\
Exit status: 0 all checks pass, 1 a hypothesis check failed (report still written),
2 configuration error (nothing computed), 3 internal error.

Files written to --out: report.json (schema_version 1) and, per command,
  spectrum:  eigenvalues.csv  columns index,eigenvalue,residual
             matrix.mtx, weights.csv (index,x0,x1,x2,weight) with spectrum.export_matrix
  complete:  divergence.csv   columns theta,epsilon,log_inv_epsilon,length (kerr charts)
             inward.csv       columns epsilon,distance,quadrature (kerr charts)
  certify:   ladder.csv       columns level,unknowns,smallest_eigenvalue,residual";

#[derive(Debug, Parser)]
#[command(name = "stkg", version, about = "Spatial Klein-Gordon operators on stationary spacetimes", after_help = CSV_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Timelike Killing field, lapse/shift bounds and determinant identities.
    Check(CommonArgs),
    /// Build w^2 and compare it with the 4D wave operator.
    Assemble(CommonArgs),
    /// Azimuthal sector operator of Kerr and its closed-form comparison.
    KerrMode(CommonArgs),
    /// Geodesic, length-divergence and metric-comparison probes.
    Complete(CommonArgs),
    /// Discretize and compute the lowest eigenvalues.
    Spectrum(CommonArgs),
    /// Hypothesis checklist for essential self-adjointness.
    Certify(CommonArgs),
}

#[derive(Debug, Clone, Args)]
#[command(after_help = CSV_HELP)]
pub struct CommonArgs {
    /// TOML config (JSON when the extension is .json).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for report.json and CSV tables; the report goes to stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides grid.cells, e.g. 32x32x1.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<[usize; 3]>,
}

fn parse_grid(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    if parts.len() != 3 {
        return Err(format!("expected NxNxN, got `{s}`"));
    }
    let mut out = [0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| format!("`{p}` is not a cell count"))?;
        if *o == 0 {
            return Err("cell counts must be positive".into());
        }
    }
    Ok(out)
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Assemble(_) => "assemble",
            Command::KerrMode(_) => "kerr-mode",
            Command::Complete(_) => "complete",
            Command::Spectrum(_) => "spectrum",
            Command::Certify(_) => "certify",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Check(a)
            | Command::Assemble(a)
            | Command::KerrMode(a)
            | Command::Complete(a)
            | Command::Spectrum(a)
            | Command::Certify(a) => a,
        }
    }
}

/// Run one command and return the process exit status.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli.command) {
        Ok(passed) => {
            if passed {
                EXIT_PASS
            } else {
                EXIT_HYPOTHESIS
            }
        }
        Err(e) => {
            eprintln!("stkg {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            }
        }
    }
}

fn execute(cmd: &Command) -> Result<bool, CliError> {
    let args = cmd.args();
    let mut cfg = RunConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(cells) = args.grid {
        cfg.grid.cells = cells;
    }
    let model = build(&cfg)?;
    let start = Instant::now();
    let ctx = commands::Context { cfg: &cfg, model: &model };
    let outcome = match cmd {
        Command::Check(_) => commands::check::run(&ctx),
        Command::Assemble(_) => commands::assemble::run(&ctx),
        Command::KerrMode(_) => commands::kerr_mode::run(&ctx),
        Command::Complete(_) => commands::complete::run(&ctx),
        Command::Spectrum(_) => commands::spectrum::run(&ctx),
        Command::Certify(_) => commands::certify::run(&ctx),
    }?;
    let passed = outcome.passed();
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool: "stkg",
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name().into(),
        seed: cfg.seed,
        config: serde_json::to_value(&cfg).map_err(|e| CliError::Internal(e.to_string()))?,
        records: outcome.records.clone(),
        tables: outcome.tables.iter().map(|t| t.file.clone()).collect(),
        verdict: if passed { Status::Pass } else { Status::Fail },
        timing: Timing { seconds: start.elapsed().as_secs_f64() },
    };
    match &args.out {
        Some(dir) => {
            write_outputs(dir, &report, &outcome)?;
            for r in &report.records {
                let mark = match r.verdict {
                    Status::Pass => "pass",
                    Status::Fail => "FAIL",
                    Status::Info => "info",
                };
                println!("{mark:4}  {}", r.name);
            }
        }
        None => println!("{}", report.to_json()),
    }
    Ok(passed)
}
