mod settings;

use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gradmeta::experiment::{
    record_stage, run_bootstrap, run_eval, run_extract, run_report, ExperimentConfig, MemberStatus,
};

use settings::{resolve, Overrides};

/// Gradient-based uncertainty metrics: train a CNN ensemble, extract
/// per-sample features, evaluate meta classifiers, and render reports.
#[derive(Debug, Parser)]
#[command(name = "gradmeta", version, about)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the bootstrap ensemble (members with a checkpoint are skipped)
    Train,
    /// Write per-member feature CSVs under features/
    Extract,
    /// Compute the three experiment tables under tables/
    Eval,
    /// Render tables to text and write distribution CSVs
    Report,
    /// Run train, extract, eval and report in sequence
    Run,
}

fn progress(line: &str) {
    println!("{line}");
}

fn train(cfg: &ExperimentConfig) -> Result<()> {
    if !cfg.data.digits.is_dir() {
        bail!("digit data directory not found: {}", cfg.data.digits.display());
    }
    let report = run_bootstrap(cfg, &progress)?;
    let mut failed = 0;
    for m in &report.members {
        if let MemberStatus::Failed(e) = &m.status {
            eprintln!("member {}: {e}", m.member);
            failed += 1;
        }
    }
    if failed > 0 {
        bail!("{failed} of {} members failed to train", report.members.len());
    }
    record_stage(cfg, "train")?;
    Ok(())
}

fn extract(cfg: &ExperimentConfig) -> Result<()> {
    run_extract(cfg, &progress)?;
    record_stage(cfg, "extract")?;
    Ok(())
}

fn eval(cfg: &ExperimentConfig) -> Result<()> {
    let tables = run_eval(cfg, &progress)?;
    for t in tables.all() {
        println!("wrote {}", cfg.tables_dir().join(format!("{}.csv", t.name)).display());
    }
    record_stage(cfg, "eval")?;
    Ok(())
}

fn report(cfg: &ExperimentConfig) -> Result<()> {
    let out = run_report(cfg)?;
    for p in out.tables.iter().chain(&out.distributions) {
        println!("wrote {}", p.display());
    }
    record_stage(cfg, "report")?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(&cli.overrides).context("invalid configuration")?;
    log::info!("{}", cfg.header());
    match cli.command {
        Command::Train => train(&cfg),
        Command::Extract => extract(&cfg),
        Command::Eval => eval(&cfg),
        Command::Report => report(&cfg),
        Command::Run => {
            train(&cfg)?;
            extract(&cfg)?;
            eval(&cfg)?;
            report(&cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
