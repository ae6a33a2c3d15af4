//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
//! `EDGEROM_WORKERS` sets the number of worker threads.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use edgerom::config::{Experiment, RunConfig};
use edgerom::experiments::{plan_change, rerun_after_change, run_experiment, write_rerun, ChangeSet};
use edgerom::mesh::GeometrySpec;
use edgerom::Error;

#[derive(Parser)]
#[command(name = "edgerom", version, about = "Localized reduced-basis experiments for 2D Maxwell problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        /// stability | nwidth | localized-reference | infsup-track | training-benchmark |
        /// training | geochange | solutions-export
        experiment: String,
        #[arg(long)]
        config: PathBuf,
        /// Published resolution (100x100 mesh, 10x10 subdomains, 100 frequencies).
        #[arg(long)]
        full_scale: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute which local spaces a geometry change invalidates.
    PlanChange {
        #[arg(long)]
        old: PathBuf,
        #[arg(long)]
        new: PathBuf,
        /// Run configuration providing mesh, grid, sweep and training settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the change set here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-simulate after a change, reusing stored bases where possible.
    Rerun {
        #[arg(long)]
        changeset: PathBuf,
        #[arg(long)]
        bases: PathBuf,
        #[arg(long, default_value = "rerun-out")]
        out: PathBuf,
    },
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_numerical() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Ok(v) = std::env::var("EDGEROM_WORKERS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size worker pool: {e}");
                }
            }
            _ => {
                eprintln!("error: EDGEROM_WORKERS must be a positive integer, got '{v}'");
                return ExitCode::from(1);
            }
        }
    }
    let result = match cli.command {
        Command::Run { experiment, config, full_scale, seed, out } => (|| {
            let experiment: Experiment = experiment.parse()?;
            let mut cfg = RunConfig::load(&config)?;
            if full_scale {
                cfg.apply_full_scale();
            }
            if let Some(seed) = seed {
                cfg.training.seed = seed;
            }
            let out = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
            let outcome = run_experiment(&cfg, experiment, &out)?;
            for f in &outcome.failures {
                log::warn!("{f}");
            }
            println!("{experiment}: wrote {} files to {}", outcome.files.len(), out.display());
            Ok(())
        })(),
        Command::PlanChange { old, new, config, out } => (|| {
            let cfg = match config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            let cs = plan_change(&cfg, &GeometrySpec::load(&old)?, &GeometrySpec::load(&new)?)?;
            eprintln!(
                "{} changed subdomains, retrain {} volume + {} interface spaces, reuse {}",
                cs.changed_subdomains.len(),
                cs.retrained_volumes(),
                cs.retrained_interfaces(),
                cs.reuse.len()
            );
            match out {
                Some(path) => cs.save(&path),
                None => {
                    println!("{}", serde_json::to_string_pretty(&cs).expect("changeset serializes"));
                    Ok(())
                }
            }
        })(),
        Command::Rerun { changeset, bases, out } => (|| {
            let cs = ChangeSet::load(&changeset)?;
            let report = rerun_after_change(&cs, &bases)?;
            write_rerun(&report, &out)?;
            println!(
                "reused {} spaces, retrained {} ({} hash mismatches); max relative error {:e}",
                report.reused.len(),
                report.retrained.len(),
                report.hash_mismatches.len(),
                report.sweep.max_error()
            );
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_for(&e),
    }
}
