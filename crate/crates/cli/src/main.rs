use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use indexlab::tolerances::Tolerances;
use indexlab_cli::experiments::{output_dir, run, Context};
use indexlab_cli::suite::{check_suite_name, paper_acceptance_runs, run_suite, summary_line, SuiteOptions};
use indexlab_cli::{CliError, CliResult, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "indexlab", version, about = "Numerical index-theory experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named suite and write report.md and report.json.
    Suite {
        name: String,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Tolerance override `KEY=VAL`; repeatable.
        #[arg(long = "tol", value_name = "KEY=VAL")]
        tol: Vec<String>,
    },
}

fn tolerances(overrides: &[String]) -> CliResult<Tolerances> {
    let mut tol = Tolerances::default();
    for o in overrides {
        tol.apply_override(o).map_err(|e| CliError::config(e.to_string()))?;
    }
    Ok(tol)
}

fn execute(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| output_dir(&cfg));
            let record = run(&cfg, &Context::default(), &dir)?;
            println!(
                "[{}] {} ({}) in {} ms -> {}",
                if record.pass { "PASS" } else { "FAIL" },
                record.experiment,
                record.paper_anchor,
                record.wall_time_ms,
                dir.display()
            );
            for (k, v) in &record.metrics {
                println!("  {k} = {v}");
            }
            Ok(record.pass)
        }
        Command::Suite { name, out, jobs, tol } => {
            check_suite_name(&name)?;
            if jobs == 0 {
                return Err(CliError::config("--jobs must be at least 1"));
            }
            let opts = SuiteOptions {
                out,
                jobs,
                tol: tolerances(&tol)?,
                seed: 0,
            };
            let report = run_suite(&name, &paper_acceptance_runs(), &opts)?;
            for c in report.criteria.iter().chain(&report.supplementary) {
                println!("{}", summary_line(c));
            }
            println!(
                "{}: {} in {:.1} s; report at {}",
                report.suite,
                if report.pass { "PASS" } else { "FAIL" },
                report.total_wall_time_ms as f64 / 1000.0,
                opts.out.join("report.md").display()
            );
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
