//! `pamlab`: batch front-end to the numerical laboratory.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;
use output::{sha256_hex, ArtifactEntry, CheckOutcome, CliResult, PlotSpec, Staging};

/// Runs one experiment and writes its tables, plot specs and manifest into
/// `<out>/<subcommand>/`.
#[derive(Debug, Parser)]
#[command(name = "pamlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat JSON run configuration; defaults apply to absent keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory; falls back to $PAMLAB_OUT, then `pamlab-out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also run the oracle fixtures and fail if any is violated.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Cumulant, scale function and (HK) ratio tables.
    Scale,
    /// Discrete and rescaled principal eigenvalues of sampled potentials.
    Eigen,
    /// Total mass of the solution on a box.
    Evolve,
    /// Feynman-Kac estimates against the ODE solution.
    Fk,
    /// Variational constant, constrained variants and the log-Sobolev suite.
    Chi,
    /// Deterministic cumulant against its large-deviation limit.
    Ldp,
    /// Importance-sampled confinement experiment.
    Confine,
    /// Annealed moments and intermittency ratios.
    Moments,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Scale => "scale",
            Self::Eigen => "eigen",
            Self::Evolve => "evolve",
            Self::Fk => "fk",
            Self::Chi => "chi",
            Self::Ldp => "ldp",
            Self::Confine => "confine",
            Self::Moments => "moments",
        }
    }

    fn run(self, cfg: &RunConfig, st: &mut Staging) -> CliResult<()> {
        match self {
            Self::Scale => commands::scale(cfg, st),
            Self::Eigen => commands::eigen(cfg, st),
            Self::Evolve => commands::evolve_cmd(cfg, st),
            Self::Fk => commands::fk(cfg, st),
            Self::Chi => commands::chi(cfg, st),
            Self::Ldp => commands::ldp(cfg, st),
            Self::Confine => commands::confine(cfg, st),
            Self::Moments => commands::moments(cfg, st),
        }
    }

    fn check(self, st: &mut Staging) -> CliResult<()> {
        match self {
            Self::Scale => commands::check_scale(st),
            Self::Eigen => commands::check_eigen(st),
            Self::Evolve => commands::check_evolve(st),
            Self::Fk => commands::check_fk(st),
            Self::Chi => commands::check_chi(st),
            Self::Ldp => commands::check_ldp(st),
            Self::Confine => commands::check_confine(st),
            Self::Moments => commands::check_moments(st),
        }
    }
}

#[derive(Serialize)]
struct Seeds {
    base: u64,
    /// Every stochastic stream is `derive_seed` of the base seed and indices.
    derivation: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    core_version: &'static str,
    subcommand: &'static str,
    config_file: &'static str,
    config_sha256: String,
    seeds: Seeds,
    threads: Option<usize>,
    checks: &'a [CheckOutcome],
    artifacts: &'a [ArtifactEntry],
}

#[derive(Serialize)]
struct Plots<'a> {
    plots: &'a [PlotSpec],
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("PAMLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("pamlab-out"))
}

fn execute(cli: &Cli) -> CliResult<(PathBuf, bool)> {
    let cfg = load_config(cli)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut st = Staging::new(&out_dir(cli), cli.command.name())?;
    // The emitted config reproduces the run when passed back with --config.
    let mut config_bytes = serde_json::to_vec_pretty(&cfg)?;
    config_bytes.push(b'\n');
    st.bytes("config.json", &config_bytes)?;
    cli.command.run(&cfg, &mut st)?;
    if cli.check {
        cli.command.check(&mut st)?;
    }
    let plots = std::mem::take(&mut st.plots);
    st.json("plots.json", &Plots { plots: &plots })?;
    let checks = std::mem::take(&mut st.checks);
    let artifacts = st.artifacts.clone();
    let manifest = Manifest {
        program: "pamlab",
        version: env!("CARGO_PKG_VERSION"),
        core_version: pamlab_core::VERSION,
        subcommand: cli.command.name(),
        config_file: "config.json",
        config_sha256: sha256_hex(&config_bytes),
        seeds: Seeds { base: cfg.seed, derivation: "derive_seed(base, index)" },
        threads: cli.threads,
        checks: &checks,
        artifacts: &artifacts,
    };
    st.json("manifest.json", &manifest)?;
    for c in &checks {
        eprintln!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok((st.commit()?, all_pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok((dir, true)) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Ok((dir, false)) => {
            eprintln!("oracle check failed; outputs kept in {}", dir.display());
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("pamlab {}: {e}", cli.command.name());
            ExitCode::FAILURE
        }
    }
}
