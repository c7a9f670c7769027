//! `eyetwin` command-line front end.
//!
//! Exit codes: 0 success, 2 config or usage error, 3 runtime error,
//! 4 selftest failure. Failures print one JSON object on stderr.

mod commands;
mod provenance;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eyetwin::Error;
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "eyetwin", version, about = "Digital-twin simulator for eye-tracking camera rigs")]
struct Cli {
    /// Worker threads for rendering and sweeps (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overwrite an existing manifest or provenance record.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Dataset or sweep config, or a run.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render one frame at zero slippage: clean ETLF, PGM and label.
    Render {
        #[command(flatten)]
        io: OutArgs,
        /// Identity id; its eye is generated from the config's identity seed base.
        #[arg(long)]
        identity: Option<u64>,
        /// Gaze target index.
        #[arg(long)]
        target: Option<usize>,
        /// Rig camera (default: the config's camera_id).
        #[arg(long)]
        camera: Option<usize>,
    },
    /// Render, degrade and write a labelled dataset.
    Dataset {
        #[command(flatten)]
        io: OutArgs,
        /// Also write the clean linear render of every frame.
        #[arg(long)]
        clean: bool,
    },
    /// Run a hardware sweep and write its report.
    Sweep {
        #[command(flatten)]
        io: OutArgs,
    },
    /// Merge sweep reports into one CSV and redraw their trend plots.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the sensor model and glint geometry against reference computations.
    Selftest,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
    Selftest(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Core(Error::Config { .. }) => 2,
            Failure::Core(_) => 3,
            Failure::Selftest(_) => 4,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let body = match self {
            Failure::Usage(m) => json!({ "kind": "usage", "message": m }),
            Failure::Core(Error::Config { pointer, message }) => {
                json!({ "kind": "config", "pointer": pointer, "message": message })
            }
            Failure::Core(e) => json!({ "kind": "runtime", "message": e.to_string() }),
            Failure::Selftest(failed) => json!({ "kind": "selftest", "failed": failed }),
        };
        json!({ "error": body })
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let opts = commands::Global { seed: cli.seed, force: cli.force, workers: cli.workers.map(|w| w as usize) };
    eyetwin::par::with_workers(opts.workers, move || match cli.command {
        Command::Render { io, identity, target, camera } => {
            commands::render(&opts, io.config.as_deref(), &io.out, identity, target, camera)
        }
        Command::Dataset { io, clean } => commands::dataset(&opts, io.config.as_deref(), &io.out, clean),
        Command::Sweep { io } => commands::sweep(&opts, io.config.as_deref(), &io.out),
        Command::Report { reports, out } => commands::report(&opts, &reports, &out),
        Command::Selftest => selftest::run(),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = Failure::Usage(e.render().to_string().trim_end().to_string());
            eprintln!("{}", f.to_json());
            return ExitCode::from(f.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code())
        }
    }
}
