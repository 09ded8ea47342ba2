mod config;
mod flowcheck;
mod pipeline;
mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use report::RunReport;

/// Invalid configuration or input files; exits with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Parser)]
#[command(name = "tubes", version, about = "Tube decompositions of free Schrödinger waves and the estimates they support")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for reports and tables.
    #[arg(long, global = true, env = "TUBES_OUT_DIR", default_value = "tubes-out")]
    out_dir: PathBuf,
    /// Replaces the base seed of the configuration.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate, decompose, verify, then run the configured estimates.
    Run,
    /// Calibrate τ and check finite speed for the configured field.
    Calibrate,
    /// Decompose the configured field and export its tubes.
    Decompose,
    /// Decompose and verify domination and efficiency.
    Verify,
    /// Bilinear ratio sweep and optional tube-side sandwich.
    Bilinear,
    /// Multilinear overlap growth over the configured radii.
    Kakeya,
    /// Conservation checks and layered flows for lattice weight files.
    FlowCheck {
        /// Lattice documents `{d, S, denominator, layers}`.
        #[arg(required = true)]
        graphs: Vec<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Calibrate => "calibrate",
            Command::Decompose => "decompose",
            Command::Verify => "verify",
            Command::Bilinear => "bilinear",
            Command::Kakeya => "kakeya",
            Command::FlowCheck { .. } => "flow-check",
        }
    }
}

fn load(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| ConfigError("--config is required for this command".into()))?;
    let mut cfg = ExperimentConfig::load(path).map_err(|e| ConfigError(format!("{e:#}")))?;
    if let Some(seed) = cli.seed_override {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: &Cli, out: &Path, report: &mut RunReport) -> anyhow::Result<()> {
    if let Command::FlowCheck { graphs } = &cli.command {
        return flowcheck::flow_check(graphs, out, report);
    }
    let cfg = load(cli)?;
    report.config_hash = Some(cfg.hash());
    report.seed = Some(cfg.seed);
    match cli.command {
        Command::Bilinear => {
            let tau = match cfg.bilinear.as_ref().and_then(|b| b.sandwich.as_ref()) {
                Some(_) => Some(pipeline::tau(&cfg, report)?),
                None => None,
            };
            return pipeline::bilinear(&cfg, tau, out, report);
        }
        Command::Kakeya => return pipeline::kakeya(&cfg, out, report),
        _ => {}
    }
    let u = pipeline::field(&cfg)?;
    let tau = pipeline::tau(&cfg, report)?;
    if matches!(cli.command, Command::Calibrate) {
        return pipeline::fs_check(&cfg, &u, tau, report);
    }
    let Some(dec) = pipeline::decompose(&cfg, &u, tau, report)? else {
        return Ok(());
    };
    if matches!(cli.command, Command::Decompose) {
        return pipeline::write_tubes(&cfg, &dec, out, report);
    }
    pipeline::verify(&cfg, &u, &dec, report)?;
    if matches!(cli.command, Command::Run) {
        pipeline::write_tubes(&cfg, &dec, out, report)?;
        if cfg.bilinear.is_some() {
            pipeline::bilinear(&cfg, Some(tau), out, report)?;
        }
        if cfg.kakeya.is_some() {
            pipeline::kakeya(&cfg, out, report)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let out = cli.out_dir.clone();
    if let Err(e) = std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display())) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let mut report = RunReport::new(cli.command.name());
    let outcome = execute(&cli, &out, &mut report);
    if let Err(e) = &outcome {
        if e.downcast_ref::<ConfigError>().is_some() {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
        report.check(("cli", "run"), "pipeline", false, format!("{e:#}"), None);
    }
    if let Err(e) = report.write(&out) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    println!("{}", report.summary());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
