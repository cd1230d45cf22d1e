use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qae_cli::lab::{default_chain_spec, run_checks, LabOptions};
use qae_cli::{compare, format_table, run, ExperimentConfig, OUTPUT_ENV};
use qae_core::ising::{random_instance, CouplingDistribution};
use qae_core::lab::ChainSpec;

/// Exit code when a lab check is falsified.
const FALSIFIED: u8 = 2;

#[derive(Parser)]
#[command(name = "qae", version, about = "Monte Carlo quantum annealing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        config: PathBuf,
        /// Write SVG plots of every trace.
        #[arg(long)]
        plots: bool,
    },
    /// Run exact-chain checks.
    Lab {
        /// pimc_boltzmann, pimc_tsallis, gfmc_g1 or gfmc_g2.
        #[arg(long)]
        chain: String,
        /// Check names, or "all".
        #[arg(long = "check", default_values_t = vec!["all".to_string()])]
        checks: Vec<String>,
        #[arg(long, default_value_t = 10_000)]
        t_max: u64,
        #[arg(long, default_value_t = 200)]
        blocks: u64,
        /// Chain spec JSON replacing the built-in default for `--chain`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run several configs on a shared instance and seed set and tabulate them.
    Compare {
        #[arg(required = true, num_args = 2..)]
        configs: Vec<PathBuf>,
        /// Field threshold for the closed-form run-length estimates.
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a random fully connected instance as JSON.
    GenInstance {
        #[arg(long)]
        n: usize,
        /// pm_j or gaussian.
        #[arg(long, default_value = "pm_j")]
        dist: String,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, plots } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.output.plots |= plots;
            let out = cfg.output_dir();
            let summary = run(&cfg, &out)?;
            match summary.hit_rate {
                Some(h) => println!("{}: hit rate {h:.3} over {} seeds", summary.schedule_id, summary.results.len()),
                None => println!("{}: {} runs", summary.schedule_id, summary.results.len()),
            }
            for r in &summary.lab_reports {
                println!("{:<16} {}", r.check, if r.pass { "pass" } else { "FAIL" });
            }
            println!("wrote {}", out.display());
            Ok(if summary.falsified() { ExitCode::from(FALSIFIED) } else { ExitCode::SUCCESS })
        }
        Command::Lab { chain, checks, t_max, blocks, config } => {
            let spec: ChainSpec = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    let mut spec: ChainSpec = serde_json::from_str(&text)
                        .with_context(|| format!("parsing chain spec {}", path.display()))?;
                    spec.kind = chain;
                    spec
                }
                None => default_chain_spec(&chain)?,
            };
            let reports = run_checks(&spec, &checks, &LabOptions { t_max, blocks, t_grid: None })?;
            println!("{}", serde_json::to_string_pretty(&reports)?);
            for r in &reports {
                eprintln!("{:<16} {}", r.check, if r.pass { "pass" } else { "FAIL" });
            }
            Ok(if reports.iter().all(|r| r.pass) { ExitCode::SUCCESS } else { ExitCode::from(FALSIFIED) })
        }
        Command::Compare { configs, delta, out } => {
            let cfgs = configs.iter().map(|p| ExperimentConfig::load(p)).collect::<Result<Vec<_>, _>>()?;
            let out = out
                .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("qae_compare"));
            let table = compare(&cfgs, &out, delta)?;
            print!("{}", format_table(&table));
            Ok(ExitCode::SUCCESS)
        }
        Command::GenInstance { n, dist, sigma, seed } => {
            let distribution = match dist.as_str() {
                "pm_j" | "plus_minus_j" => CouplingDistribution::PlusMinusJ,
                "gaussian" => CouplingDistribution::Gaussian { sigma },
                other => anyhow::bail!("unknown distribution '{other}' (known: pm_j, gaussian)"),
            };
            let instance = random_instance(n, distribution, seed)?;
            println!("{}", serde_json::to_string_pretty(&instance)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
