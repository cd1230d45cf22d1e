//! Seed fan-out, artifact writing and the JSON summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use qae_core::ising::{ground_states_bruteforce, DEFAULT_ENUMERATION_CAP};
use qae_core::lab::LabReport;
use qae_core::schedules::ScheduleSpec;
use qae_core::{QaeError, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::engines::{Context, Engine, EngineRegistry, SeedRun};
use crate::plots::render_svg;

pub const SCHEMA_VERSION: &str = "1.0.0";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub seed: u64,
    pub schedule_id: String,
    pub final_best_energy: f64,
    /// Present only when the ground energy is known.
    pub hit: Option<bool>,
    pub steps_to_first_hit: Option<u64>,
    /// Relative to the output directory.
    pub trace_path: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub n_spins: usize,
    pub e_min: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: String,
    pub schedule_id: String,
    pub engine: String,
    pub schedule: ScheduleSpec,
    pub schedule_rate_valid: Option<bool>,
    pub engine_parameters: BTreeMap<String, f64>,
    pub instance: InstanceInfo,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub hit_rate: Option<f64>,
    pub mean_best_energy: Option<f64>,
    pub mean_steps_to_first_hit: Option<f64>,
    pub results: Vec<ResultRecord>,
    pub lab_reports: Vec<LabReport>,
    pub lab_pass: bool,
}

impl Summary {
    /// Whether any lab check was falsified.
    pub fn falsified(&self) -> bool {
        !self.lab_pass
    }
}

pub fn trace_file_name(seed: u64) -> String {
    format!("trace_seed{seed}.csv")
}

pub fn plot_file_name(seed: u64) -> String {
    format!("plot_seed{seed}.svg")
}

/// Resolve the instance, ground energy and engine for a config.
pub fn prepare(config: &ExperimentConfig) -> Result<(Context, Box<dyn Engine>)> {
    let instance = config.instance.resolve()?;
    let e_min = if instance.n_spins() <= DEFAULT_ENUMERATION_CAP {
        Some(ground_states_bruteforce(&instance)?.e_min)
    } else {
        None
    };
    let ctx = Context {
        instance,
        e_min,
        schedule: config.schedule.clone(),
        horizon: config.horizon,
        checkpoint_every: config.checkpoint_every,
    };
    let engine = EngineRegistry::builtin().build(&config.engine, &ctx)?;
    Ok((ctx, engine))
}

/// Run every seed and write traces, plots and `summary.json` into `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<Summary> {
    config.validate()?;
    let (ctx, engine) = prepare(config)?;
    fs::create_dir_all(out_dir)?;
    let schedule_id = config.schedule_id();

    // each seed owns its RNG stream; collect keeps seed order
    let runs: Vec<(u64, Option<SeedRun>)> = config
        .seeds
        .par_iter()
        .map(|&seed| engine.run_seed(seed).map(|r| (seed, r)))
        .collect::<Result<_>>()?;

    let mut results = Vec::new();
    for (seed, run) in &runs {
        let Some(run) = run else { continue };
        let trace_path = trace_file_name(*seed);
        fs::write(out_dir.join(&trace_path), &run.csv)?;
        if config.output.plots {
            let title = format!("{schedule_id} seed {seed}");
            fs::write(out_dir.join(plot_file_name(*seed)), render_svg(&title, &run.series))?;
        }
        results.push(ResultRecord {
            seed: *seed,
            schedule_id: schedule_id.clone(),
            final_best_energy: run.best_energy,
            hit: ctx.e_min.map(|_| run.first_hit_step.is_some()),
            steps_to_first_hit: run.first_hit_step,
            trace_path,
        });
    }

    let lab_reports = engine.lab_reports()?;
    let summary = Summary {
        schema_version: SCHEMA_VERSION.into(),
        schedule_id,
        engine: engine.kind().into(),
        schedule: engine.schedule().spec().clone(),
        schedule_rate_valid: engine.schedule().rate_valid(),
        engine_parameters: engine.describe(),
        instance: InstanceInfo { n_spins: ctx.instance.n_spins(), e_min: ctx.e_min },
        horizon: config.horizon,
        seeds: config.seeds.clone(),
        hit_rate: hit_rate(&results),
        mean_best_energy: mean(results.iter().map(|r| r.final_best_energy)),
        mean_steps_to_first_hit: mean(results.iter().filter_map(|r| r.steps_to_first_hit.map(|s| s as f64))),
        lab_pass: lab_reports.iter().all(|r| r.pass),
        results,
        lab_reports,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(out_dir.join(SUMMARY_FILE), json + "\n")?;
    Ok(summary)
}

pub fn hit_rate(results: &[ResultRecord]) -> Option<f64> {
    let hits: Vec<bool> = results.iter().map(|r| r.hit).collect::<Option<_>>()?;
    if hits.is_empty() {
        return None;
    }
    Some(hits.iter().filter(|h| **h).count() as f64 / hits.len() as f64)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Read a summary written by [`run`].
pub fn read_summary(out_dir: &Path) -> Result<Summary> {
    let text = fs::read_to_string(out_dir.join(SUMMARY_FILE))?;
    serde_json::from_str(&text).map_err(QaeError::from)
}
