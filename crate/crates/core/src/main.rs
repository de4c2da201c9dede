use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mixed_qaw::cli::{self, RunConfig};
use mixed_qaw::Error;

#[derive(Parser, Debug)]
#[command(name = "mqaw", version)]
#[command(about = "Numerical checks for truncated mixed q-deformed Araki-Woods models")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a model spec or run config
    Validate { spec: PathBuf },

    /// Run the verification suites and emit a JSON report
    Check {
        spec: PathBuf,
        /// Truncation level N
        #[arg(long)]
        level: Option<usize>,
        /// Tolerance for algebraic identities
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report.json and timings.json. Prints the report if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, hide = true)]
        corrupt_twist: bool,
    },

    /// Vacuum moments of coordinate words up to length 2K, as CSV
    Moments {
        spec: PathBuf,
        #[arg(long)]
        max_order: usize,
    },

    /// Minimum eigenvalue of P^(n) over a grid of uniform q, as CSV
    Scan {
        spec: PathBuf,
        /// Grid of q values; defaults to `q_grid` from the config
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        q: Vec<f64>,
        #[arg(long)]
        level: usize,
    },
}

fn load(path: &PathBuf, level: Option<usize>) -> Result<RunConfig, Error> {
    let mut cfg = cli::load_config(path)?;
    if let (Some(n), cli::config::ModelSource::Inline(spec)) = (level, &mut cfg.model) {
        spec.truncation = n;
    }
    Ok(cfg)
}

fn run(args: Args) -> Result<ExitCode, Error> {
    match args.command {
        Command::Validate { spec } => {
            let cfg = load(&spec, None)?;
            cli::cmd_validate(&cfg)?;
            println!("{}: valid", spec.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            spec,
            level,
            tol,
            seed,
            out,
            corrupt_twist,
        } => {
            let mut cfg = load(&spec, level)?;
            if let Some(t) = tol {
                cfg.tolerances.algebraic = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let (report, timings) = cli::cmd_check(&cfg, corrupt_twist)?;
            match out.or(cfg.out_dir.clone()) {
                Some(dir) => cli::write_outputs(&report, &timings, &dir)?,
                None => print!("{}", report.to_json()),
            }
            for s in &report.suites {
                eprintln!("{:<14} {}", s.name, if s.pass { "pass" } else { "FAIL" });
                for r in s.failures() {
                    eprintln!("    {} = {:e} (tol {:?})", r.check, r.value, r.tol);
                }
                if let Some(e) = &s.error {
                    eprintln!("    error: {e}");
                }
            }
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Moments { spec, max_order } => {
            let cfg = load(&spec, None)?;
            print!("{}", cli::cmd_moments(&cfg, max_order)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Scan { spec, q, level } => {
            let cfg = load(&spec, None)?;
            let grid = if q.is_empty() { &cfg.q_grid } else { &q };
            print!("{}", cli::cmd_scan(&cfg, grid, level)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
