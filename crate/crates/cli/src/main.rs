use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qsf_cli::{Overrides, StrategyName};

#[derive(Parser)]
#[command(name = "qsf", version, about = "Quasi-static brittle fracture runs and audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for candidate scoring (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    strategy: Option<Strategy>,
    /// Extra-edge budget for brute force, search depth for greedy.
    #[arg(long, global = true)]
    budget: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Brute,
    Greedy,
}

#[derive(Subcommand)]
enum Command {
    /// Run the evolution and the enabled audits, writing all artifacts.
    Run { config: PathBuf },
    /// Re-check a recorded run directory.
    Audit { config: PathBuf, dir: PathBuf },
    /// Dump the exhaustive candidate table at one load time.
    Oracle {
        config: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("config error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let overrides = Overrides {
        strategy: cli.strategy.map(|s| match s {
            Strategy::Brute => StrategyName::Brute,
            Strategy::Greedy => StrategyName::Greedy,
        }),
        budget: cli.budget,
    };
    let result = match &cli.command {
        Command::Run { config } => qsf_cli::run(config, &overrides),
        Command::Audit { config, dir } => qsf_cli::audit(config, dir, &overrides),
        Command::Oracle { config, time } => qsf_cli::oracle(config, *time, &overrides),
    };
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report);
            if !outcome.report.ends_with('\n') {
                println!();
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
