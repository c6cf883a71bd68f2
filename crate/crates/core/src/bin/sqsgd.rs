use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sqsgd::config::RunConfig;
use sqsgd::runner::{self, SweepAxis};

#[derive(Parser)]
#[command(name = "sqsgd", version, about = "Private, quantized federated SGD simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write metrics.csv, summary.json and resolved.toml.
    Run { config: PathBuf },
    /// Train one run per value of an axis and write a comparison CSV.
    Sweep {
        config: PathBuf,
        /// quantization_bits, epsilon, sampling_ratio or bits-vs-ratio
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated grid, e.g. 1,3,5
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check a configuration and print the resolved mechanism parameters.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> sqsgd::Result<()> {
    match command {
        Command::Run { config } => {
            let config = RunConfig::load(&config)?;
            let out = runner::output_dir(&config);
            let s = runner::run_in(&config, &out)?;
            println!(
                "{} rounds, test accuracy {:.4}, U {} -> {}, {} uplink bits per client; artifacts in {}",
                s.rounds,
                s.final_test_acc,
                s.initial_bound,
                s.final_bound,
                s.uplink_bits_per_client,
                out.display()
            );
        }
        Command::Sweep { config, axis, values, jobs } => {
            let config = RunConfig::load(&config)?;
            let points = runner::sweep(&config, axis, &values, jobs)?;
            println!("{:>12} {:>6} {:>10} {:>8} {:>10}", axis.name(), "K", "r", "d~", "test_acc");
            for p in points {
                println!(
                    "{:>12} {:>6} {:>10.5} {:>8} {:>10.4}",
                    p.value, p.levels, p.sampling_ratio, p.dtilde, p.final_test_acc
                );
            }
        }
        Command::Validate { config } => {
            let config = RunConfig::load(&config)?;
            let prepared = runner::prepare(&config)?;
            print!("{}", runner::resolved_toml(&config, &prepared.resolved)?);
        }
    }
    Ok(())
}
