use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hmetric::cli_io::{cmd_check, cmd_lift, cmd_tensors, Outcome, Overrides, EXIT_INPUT_ERROR};

#[derive(Parser)]
#[command(
    name = "hmetric",
    version,
    about = "Harmonicity checks for pseudo-Riemannian metrics and their bundle lifts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide on samples whether the hat metric is harmonic with respect to the metric.
    Check(Common),
    /// Emit the lifted pair as a manifest on the bundle chart.
    Lift(Common),
    /// Print metric, inverse, Christoffel symbols and curvature at a point.
    Tensors {
        #[command(flatten)]
        common: Common,
        /// Comma-separated coordinates of the point.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    manifest: PathBuf,
    /// Sample count [default: 64]
    #[arg(long)]
    samples: Option<usize>,
    /// Absolute tolerance on tension components [default: 1e-9]
    #[arg(long)]
    tol: Option<f64>,
    /// Lattice seed [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// none | sasaki-tm | horizontal-tm | complete-tm | sasaki-ctm [default: none]
    #[arg(long)]
    lift: Option<String>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            samples: self.samples,
            tol: self.tol,
            seed: self.seed,
            lift: self.lift.clone(),
        }
    }
}

fn emit(out: Outcome) -> ExitCode {
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    ExitCode::from(out.code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT_ERROR as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let common = match &cli.command {
        Command::Check(c) | Command::Lift(c) => c,
        Command::Tensors { common, .. } => common,
    };
    let source = common.manifest.display().to_string();
    let bytes = match std::fs::read(&common.manifest) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {}: {}", source, e);
            return ExitCode::from(EXIT_INPUT_ERROR as u8);
        }
    };
    let overrides = common.overrides();
    emit(match &cli.command {
        Command::Check(_) => cmd_check(&bytes, &overrides, &source),
        Command::Lift(_) => cmd_lift(&bytes, &overrides, &source),
        Command::Tensors { at, .. } => cmd_tensors(&bytes, &overrides, at, &source),
    })
}
