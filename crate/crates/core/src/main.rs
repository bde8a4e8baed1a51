use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use residue_lab::harness::{self, Format, RunOptions};

#[derive(Parser)]
#[command(
    name = "residue-lab",
    version,
    about = "Verify residue identities on projective space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a scenario file and print a report.
    Verify {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the sample count of every Monte Carlo task.
        #[arg(long)]
        samples: Option<usize>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Also write the JSON report to this path.
        #[arg(long)]
        json_out: Option<PathBuf>,
        /// Print JSON instead of text on stdout.
        #[arg(long)]
        json: bool,
    },
    /// Print the JSON Schema of scenario files.
    Schema,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Schema => {
            println!(
                "{}",
                serde_json::to_string_pretty(&harness::schema()).expect("schema serializes")
            );
            ExitCode::SUCCESS
        }
        Command::Verify {
            scenario,
            seed,
            samples,
            threads,
            json_out,
            json,
        } => {
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = threads {
                pool = pool.num_threads(n.max(1));
            }
            let pool = match pool.build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: cannot start thread pool: {e}");
                    return ExitCode::from(2);
                }
            };
            let opts = RunOptions { seed, samples };
            let report = match pool.install(|| harness::run_scenario(&scenario, opts)) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(path) = json_out {
                if let Err(e) = std::fs::write(&path, harness::emit_report(&report, Format::Json)) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            let format = if json { Format::Json } else { Format::Text };
            print!(
                "{}",
                String::from_utf8_lossy(&harness::emit_report(&report, format))
            );
            ExitCode::from(report.exit_code() as u8)
        }
    }
}
