//! `entrance-lab`: runs entrance-chain and random-walk experiments from
//! JSON configs and writes JSON reports.
//!
//! Exit codes: 0 when every verdict passes, 1 when a verdict fails, 2 when
//! the config is invalid or the experiment cannot run.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{DensityConfig, DensityKind, Experiment, ExperimentConfig, CATALOG};
use entrance_core::closed_form::{lambda_entr_density, lambda_exit_density, pi_density, pi_minus_density, pi_plus_density};
use entrance_core::error::{LabError, Result};
use entrance_core::increments::IncrementLaw;
use entrance_core::parallel::{thread_count, with_threads};
use report::{to_json, write_file, write_tables, Report};

#[derive(Parser)]
#[command(name = "entrance-lab", version, about = "Entrance/exit chain and level-crossing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: ENTRANCE_LAB_THREADS, else all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Directory for report.json and CSV tables.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the empirical/target CDF tables as CSV.
        #[arg(long)]
        dump: bool,
    },
    /// List experiment kinds and the statements they check.
    List,
    /// Tabulate a closed-form density on a grid as CSV.
    DumpDensity {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every exact identity on seeded random finite chains.
    FiniteSuite {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        chains: u64,
        #[arg(long, default_value_t = 3)]
        min_states: usize,
        #[arg(long, default_value_t = 30)]
        max_states: usize,
        #[arg(long, default_value_t = 12)]
        product_max_states: usize,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Plan<'a> {
    experiment: &'a Experiment,
    seed: u64,
    base: &'a Path,
    threads: Option<usize>,
    out: Option<PathBuf>,
    csv: bool,
}

fn execute(plan: Plan) -> Result<Report> {
    if plan.csv && plan.out.is_none() {
        return Err(LabError::config("--dump", "needs an output directory (--out or output.dir)"));
    }
    let threads = thread_count(plan.threads)?;
    let started = Instant::now();
    let outcome = with_threads(threads, || plan.experiment.run(plan.seed, plan.base))??;
    let report = Report {
        experiment: plan.experiment.kind().into(),
        seed: plan.seed,
        verdicts: outcome.verdicts,
        runtime_ms: started.elapsed().as_millis() as u64,
    };
    let json = to_json(&report);
    print!("{json}");
    if let Some(dir) = &plan.out {
        write_file(&dir.join("report.json"), json.as_bytes())?;
        if plan.csv {
            write_tables(dir, &outcome.cdf_tables)?;
        }
    }
    Ok(report)
}

fn dump_density(config: &Path, out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| LabError::config("--config", format!("cannot read {}: {e}", config.display())))?;
    let cfg = DensityConfig::parse(&text)?;
    let law = IncrementLaw::from_spec(&cfg.law)?;
    let set = || cfg.set.clone().ok_or_else(|| LabError::config("set", "required for lambda_entr and lambda_exit"));
    let density = match cfg.density {
        DensityKind::Pi => pi_density(&law)?,
        DensityKind::PiPlus => pi_plus_density(&law)?,
        DensityKind::PiMinus => pi_minus_density(&law)?,
        DensityKind::LambdaEntr => lambda_entr_density(&law, &set()?)?,
        DensityKind::LambdaExit => lambda_exit_density(&law, &set()?)?,
    };
    let mut buf = Vec::new();
    density.write_csv(&mut buf, &cfg.grid()?)?;
    match out {
        Some(dir) => write_file(&dir.join(format!("{}.csv", cfg.name())), &buf),
        None => {
            print!("{}", String::from_utf8_lossy(&buf));
            Ok(())
        }
    }
}

fn exit_for(result: Result<Report>) -> ExitCode {
    match result {
        Ok(r) if r.ok() => ExitCode::SUCCESS,
        Ok(r) => {
            for v in r.verdicts.iter().filter(|v| !v.ok()) {
                let why = if v.partial { " (step budget exhausted)" } else { "" };
                eprintln!("FAIL {}: {} = {} > {}{why}", v.name, serde_json::json!(v.statistic), v.value, v.threshold);
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, threads, out, dump } => {
            let result = ExperimentConfig::load(&config).and_then(|cfg| {
                let base = config.parent().unwrap_or(Path::new("."));
                execute(Plan {
                    experiment: &cfg.experiment,
                    seed: cfg.seed(seed),
                    base,
                    threads,
                    out: out.or(cfg.output.dir.clone()),
                    csv: dump || cfg.output.csv,
                })
            });
            exit_for(result)
        }
        Command::List => {
            for (kind, reference, what) in CATALOG {
                println!("{kind} ↦ {reference}: {what}");
            }
            ExitCode::SUCCESS
        }
        Command::DumpDensity { config, out } => match dump_density(&config, out.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::FiniteSuite { seed, chains, min_states, max_states, product_max_states, threads, out } => {
            let experiment = Experiment::FiniteSuite { chains, min_states, max_states, product_max_states };
            exit_for(execute(Plan { experiment: &experiment, seed, base: Path::new("."), threads, out, csv: false }))
        }
    }
}
