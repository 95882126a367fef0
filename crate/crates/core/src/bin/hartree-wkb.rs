use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hartree_wkb::harness::checks::{run_suite, Suite};
use hartree_wkb::harness::report::records_to_csv;
use hartree_wkb::harness::{emit_report, run_case, run_sweep, ReportPaths, SweepConfig, SweepSummary};

#[derive(Parser)]
#[command(version, about = "Multiphase WKB verification for semiclassical Hartree equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one case and compare it with the WKB approximation.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        epsilon: f64,
    },
    /// Run the ε-sweep of a scenario, fit the rate and write the reports.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override the worker count of the scenario file.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a verification suite.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        suite: SuiteArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Kernel,
    Wiener,
    Wkb,
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> hartree_wkb::Result<bool> {
    match cli.command {
        Command::Run { config, epsilon } => {
            let cfg = SweepConfig::load(&config)?;
            let outcome = run_case(&cfg, epsilon)?;
            print!("{}", records_to_csv(&[outcome.record]));
            println!("{}", serde_json::to_string_pretty(&outcome.diagnostics)?);
            let r = outcome.record;
            let bound_ok = r.bound_ratio.is_nan() || r.bound_ratio <= 1.0 + 1e-6;
            Ok(r.l2_drift <= cfg.solver.l2_drift_limit && bound_ok && outcome.diagnostics.mode_mass_drift() <= 1e-10)
        }
        Command::Sweep { config, workers } => {
            let mut cfg = SweepConfig::load(&config)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let report = run_sweep(&cfg)?;
            let paths = ReportPaths::in_dir(&cfg.output_dir, &cfg.name);
            emit_report(&report, &paths)?;
            let summary = SweepSummary::of(&report, "");
            print!("{}", records_to_csv(&report.records));
            match report.fit {
                Some(f) => println!(
                    "beta_hat = {:.4} ± {:.4} (theory {}, used {}, dropped {})",
                    f.beta, f.stderr, report.beta_theory, f.used, f.dropped
                ),
                None => println!("no fit: {}", report.fit_note.as_deref().unwrap_or("")),
            }
            if let Some(note) = summary.note {
                println!("note: {note}");
            }
            println!("flags: {:?}", report.flags);
            println!("wrote {}", paths.csv.display());
            Ok(report.flags.all)
        }
        Command::Check { config, suite } => {
            let cfg = SweepConfig::load(&config)?;
            let suite = match suite {
                SuiteArg::Kernel => Suite::Kernel,
                SuiteArg::Wiener => Suite::Wiener,
                SuiteArg::Wkb => Suite::Wkb,
            };
            let outcomes = run_suite(&cfg, suite)?;
            for c in &outcomes {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(outcomes.iter().all(|c| c.passed))
        }
    }
}
