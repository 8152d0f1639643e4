use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use plotbench::modelgw::BackendKind;
use plotbench::runner::{self, ExperimentConfig, RunOptions};
use plotbench::{Error, Result};

#[derive(Parser)]
#[command(name = "plotbench", version, about = "Plot vs text time-series benchmark runner")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true, default_value = "plotbench.toml")]
    config: PathBuf,
    /// Override the backend of every configured model.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the config and list every problem found.
    Validate,
    /// Write task instances as line-delimited JSON archives.
    Generate,
    /// Render every instance to PNG.
    Render,
    /// Run the full matrix and write records plus the report.
    Run {
        /// Keep records from an interrupted run.
        #[arg(long)]
        resume: bool,
    },
    /// Rebuild the report from an existing records.jsonl.
    Report,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(b) = &cli.backend {
        let kind = BackendKind::parse(b)?;
        for m in &mut cfg.models {
            m.backend = kind;
        }
    }
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &cli.out {
        cfg.outdir = o.clone();
    }
    Ok(cfg)
}

fn main_inner(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    match &cli.cmd {
        Cmd::Validate => {
            cfg.validate()?;
            println!("config ok (hash {})", cfg.hash());
        }
        Cmd::Generate => {
            for p in runner::generate(&cfg)? {
                println!("{}", p.display());
            }
        }
        Cmd::Render => {
            let n = runner::render(&cfg)?;
            println!("{n} images under {}", cfg.outdir.join("plots").display());
        }
        Cmd::Run { resume } => {
            let s = runner::run_experiment(&cfg, &RunOptions { resume: *resume })?;
            println!(
                "{} records ({} new, {} failed), {} backend calls, config {}",
                s.records, s.executed, s.failures, s.backend_calls, s.config_hash
            );
            println!("output in {}", s.outdir.display());
        }
        Cmd::Report => {
            cfg.validate()?;
            let hash = cfg.hash();
            runner::claim_outdir(&cfg.outdir, &hash)?;
            let records = runner::read_records(&cfg.outdir.join(runner::RECORDS_FILE))?;
            if records.iter().any(|r| r.config_hash != hash) {
                return Err(Error::Config("records.jsonl was produced by a different config".into()));
            }
            for p in runner::emit_report(&cfg, &records, &cfg.outdir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::ConfigList(errs)) => {
            eprintln!("invalid config:");
            for e in errs {
                eprintln!("  - {e}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
