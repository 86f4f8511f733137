use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use mlz_cli::output::{manifest, write_all};
use mlz_cli::{load, run, Failure};

#[derive(Parser)]
#[command(name = "mlz", version, about = "Run multistate Landau-Zener scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSV and manifest.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Worker threads for sweeps (0: one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Replace a document value, e.g. `config.t_max=500` or `params.g=[1,2]`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check a scenario without computing anything.
    Validate {
        scenario: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn read(path: &PathBuf, overrides: &[String]) -> Result<mlz_cli::Scenario, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    load(&text, overrides, std::env::var("MLZ_DEFAULT_TOL").ok().as_deref()).map_err(Failure::Invalid)
}

fn failed(f: Failure) -> ExitCode {
    println!("{}", f.to_json());
    ExitCode::from(f.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { scenario, overrides } => match read(&scenario, &overrides) {
            Ok(s) => {
                println!("{}", json!({"status": "valid", "kind": s.job.kind(), "name": s.name, "errors": []}));
                ExitCode::SUCCESS
            }
            Err(f) => failed(f),
        },
        Command::Run { scenario, out_dir, threads, overrides } => {
            let s = match read(&scenario, &overrides) {
                Ok(s) => s,
                Err(f) => return failed(f),
            };
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(p) => p,
                Err(e) => return failed(Failure::Io(e.to_string())),
            };
            let start = Instant::now();
            let outcome = match pool.install(|| run(&s)) {
                Ok(o) => o,
                Err(f) => return failed(f),
            };
            let wall = start.elapsed().as_secs_f64();
            let man = manifest(&s, &outcome, &s.output, pool.current_num_threads(), &overrides, wall);
            match write_all(&out_dir, &s, &outcome, &man) {
                Ok((csv, man_path)) => {
                    println!(
                        "{}",
                        json!({"status": "ok", "csv": csv, "manifest": man_path, "converged": outcome.converged(), "wall_time_s": wall})
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => failed(Failure::Io(e.to_string())),
            }
        }
    }
}
