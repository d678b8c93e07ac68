use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robot_core::problems::{generate_gbm_prices, write_prices_csv};
use robot_harness::summary::{write_summary, write_summary_rows};
use robot_harness::{diversity_by_name, run_config_file, summarize};

#[derive(Parser)]
#[command(name = "robot", version, about = "Run and summarize diverse-solution optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides `seed_base`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `out_dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Best-M-diverse curves of one or more trace files, mean ± stderr.
    Summarize {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        m: usize,
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
        #[arg(long, default_value = "euclidean")]
        diversity: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic price CSV (geometric Brownian motion).
    GenPrices {
        #[arg(long, default_value_t = 252)]
        days: usize,
        #[arg(long, default_value_t = 20)]
        assets: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run { config, seed, out_dir } => {
            let out = run_config_file(&config, seed, out_dir)?;
            for t in &out.traces {
                println!("{}", t.display());
            }
            println!("{}", out.solutions.display());
            println!("{}", out.summary.display());
        }
        Command::Summarize {
            traces,
            m,
            tau,
            diversity,
            out,
        } => {
            let spec = diversity_by_name(&diversity, tau)?;
            let paths: Vec<&std::path::Path> = traces.iter().map(|p| p.as_path()).collect();
            let rows = summarize(&paths, m, &spec)?;
            match out {
                Some(path) => write_summary(&path, &rows)?,
                None => {
                    let mut w = csv::Writer::from_writer(std::io::stdout());
                    write_summary_rows(&mut w, &rows)?;
                    w.flush()?;
                }
            }
        }
        Command::GenPrices { days, assets, seed, out } => {
            let (names, prices) = generate_gbm_prices(days, assets, seed);
            write_prices_csv(&out, &names, &prices)?;
        }
    }
    Ok(())
}
