//! `goldbach-experiments <command> [options]`
//!
//! Exit status: 0 when every verdict passes, 1 when any fails, 2 on usage or
//! resource errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use goldbach_core::experiments::{run, Command, ExperimentConfig};
use goldbach_core::report::{Format, Verdict};

/// Environment variable naming the default zero table.
const ZEROS_ENV: &str = "GOLDBACH_ZEROS";

#[derive(Parser, Debug)]
#[command(name = "goldbach-experiments", version, about = "Reproducible Goldbach average experiments")]
struct Cli {
    /// sieve, goldbach, explicit-formula, error-scaling, character-moments or identity-suite
    command: Command,

    /// Sieve capacity; also caps the default N grid.
    #[arg(long)]
    n_max: Option<usize>,

    /// Comma-separated ascending N values (X values for character-moments).
    #[arg(long, value_delimiter = ',')]
    n_grid: Vec<u64>,

    /// Comma-separated moduli.
    #[arg(long, value_delimiter = ',')]
    q_set: Vec<u64>,

    /// Zero table of the zeta function, one ordinate per line.
    #[arg(long, env = ZEROS_ENV)]
    zeros: Option<PathBuf>,

    /// Largest zero ordinate used by explicit-formula.
    #[arg(long)]
    height: Option<f64>,

    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, default_value = "csv")]
    format: Format,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Cli {
    fn into_config(self) -> ExperimentConfig {
        let mut config = ExperimentConfig::new(self.command);
        config.n_max = self.n_max;
        config.n_values = self.n_grid;
        config.q_values = self.q_set;
        config.zero_table_path = self.zeros;
        config.height = self.height;
        config.output_path = self.out;
        config.seed = self.seed;
        config.format = self.format;
        config
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    let config = cli.into_config();
    let start = Instant::now();
    eprintln!("running {} (seed {})", config.command, config.seed);
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = report.render(config.format);
    match &config.output_path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
            eprintln!("wrote {} rows to {}", report.rows().len(), path.display());
        }
        None => print!("{text}"),
    }
    let verdict = report.suite_verdict();
    eprintln!("suite {verdict} in {:.1}s", start.elapsed().as_secs_f64());
    if verdict == Verdict::Fail {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
