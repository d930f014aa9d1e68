use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coerce_core::lab::{self, ExperimentConfig, RunManifest};
use coerce_core::Error;

/// Runs coercive-inequality experiments from JSON configs.
///
/// Exit status: 0 when every check passes, 1 when an inequality check fails,
/// 2 on configuration or environment errors.
#[derive(Parser)]
#[command(name = "coerce-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config
    Run {
        config: PathBuf,
        /// Rerun on the refined grid and record the change of every constant
        #[arg(long)]
        refine: bool,
        /// Override the output directory from the config
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every *.json config in a directory; they must share an output directory
    Sweep { dir: PathBuf },
    /// Check the iterated-logarithm lemmas pointwise and print the reports as JSON
    Lemmas {
        #[arg(short, long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 3)]
        jmax: usize,
    },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn finish(manifest: &RunManifest) -> ExitCode {
    for line in lab::summarize(manifest) {
        println!("{line}");
    }
    ExitCode::from(manifest.exit_code() as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, refine, out } => {
            let mut config = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            config.grid.refine |= refine;
            if let Some(dir) = out {
                config.output = dir;
            }
            match lab::run(&config) {
                Ok(manifest) => finish(&manifest),
                Err(e) => fail(&e),
            }
        }
        Command::Sweep { dir } => match lab::load_sweep_dir(&dir).and_then(|configs| lab::sweep(&configs)) {
            Ok(manifest) => finish(&manifest),
            Err(e) => fail(&e),
        },
        Command::Lemmas { p, jmax } => {
            if !(p >= 1.0) || jmax == 0 {
                return fail(&Error::InvalidArgument("need p >= 1 and jmax >= 1".into()));
            }
            let body = lab::lemmas_only(p, jmax);
            println!("{}", serde_json::to_string_pretty(&body).expect("reports serialize"));
            if body["passed"].as_bool() == Some(true) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
