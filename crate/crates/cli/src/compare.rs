//! Side-by-side comparison of schedules on a shared instance and seed set.

use std::fmt::Write;
use std::path::Path;

use qae_core::schedules::{time_to_threshold, ThresholdEstimate};
use qae_core::{QaeError, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::runner::{run, Summary, SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub schedule_id: String,
    pub engine: String,
    pub schedule_kind: String,
    pub scale: f64,
    pub hit_rate: Option<f64>,
    pub hits: usize,
    pub runs: usize,
    pub mean_steps_to_first_hit: Option<f64>,
    pub mean_best_energy: Option<f64>,
    /// Order-of-magnitude steps for `Γ` to reach `delta` under the path-integral bound.
    pub t1_estimate: Option<f64>,
    /// Same under the generalized-acceptance bound.
    pub t2_estimate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: String,
    pub delta: f64,
    pub seeds: Vec<u64>,
    pub rows: Vec<ComparisonRow>,
}

fn finite(v: Result<f64>) -> Option<f64> {
    v.ok().filter(|x| x.is_finite())
}

fn row(summary: &Summary, delta: f64) -> ComparisonRow {
    let p = &summary.engine_parameters;
    let t1_estimate = match (p.get("R"), p.get("L1"), p.get("M"), p.get("beta")) {
        (Some(r), Some(l1), Some(m), Some(beta)) if summary.engine == "pimc" => finite(time_to_threshold(
            delta,
            ThresholdEstimate::PimcT1 { r_l1: r * l1, trotter_m: *m as usize, beta: *beta },
        )),
        _ => None,
    };
    let t2_estimate =
        finite(time_to_threshold(delta, ThresholdEstimate::TsallisT2 { n_spins: summary.instance.n_spins }));
    ComparisonRow {
        schedule_id: summary.schedule_id.clone(),
        engine: summary.engine.clone(),
        schedule_kind: summary.schedule.kind.clone(),
        scale: summary.schedule.scale,
        hit_rate: summary.hit_rate,
        hits: summary.results.iter().filter(|r| r.hit == Some(true)).count(),
        runs: summary.results.len(),
        mean_steps_to_first_hit: summary.mean_steps_to_first_hit,
        mean_best_energy: summary.mean_best_energy,
        t1_estimate,
        t2_estimate,
    }
}

/// Check that every config shares the instance and seed set.
pub fn check_compatible(configs: &[ExperimentConfig]) -> Result<()> {
    if configs.len() < 2 {
        return Err(QaeError::InvalidArgument("compare needs at least two configs".into()));
    }
    let first = configs[0].instance.resolve()?;
    let mut seeds = configs[0].seeds.clone();
    seeds.sort_unstable();
    for (k, c) in configs.iter().enumerate().skip(1) {
        if c.instance.resolve()? != first {
            return Err(QaeError::InvalidArgument(format!("config {k} uses a different instance than config 0")));
        }
        let mut s = c.seeds.clone();
        s.sort_unstable();
        if s != seeds {
            return Err(QaeError::InvalidArgument(format!("config {k} uses a different seed set than config 0")));
        }
    }
    Ok(())
}

/// Unique directory names: the schedule id, suffixed with the position when repeated.
fn labels(configs: &[ExperimentConfig]) -> Vec<String> {
    let ids: Vec<String> = configs.iter().map(|c| c.schedule_id()).collect();
    ids.iter()
        .enumerate()
        .map(|(k, id)| {
            let clean: String =
                id.chars().map(|ch| if ch.is_ascii_alphanumeric() || "-_.@".contains(ch) { ch } else { '_' }).collect();
            if ids.iter().filter(|o| *o == id).count() > 1 {
                format!("{k}_{clean}")
            } else {
                clean
            }
        })
        .collect()
}

/// Run each config into its own subdirectory of `out_dir` and tabulate.
pub fn compare(configs: &[ExperimentConfig], out_dir: &Path, delta: f64) -> Result<Comparison> {
    check_compatible(configs)?;
    let mut rows = Vec::with_capacity(configs.len());
    for (config, label) in configs.iter().zip(labels(configs)) {
        let summary = run(config, &out_dir.join(label))?;
        rows.push(row(&summary, delta));
    }
    let mut seeds = configs[0].seeds.clone();
    seeds.sort_unstable();
    let comparison = Comparison { schema_version: SCHEMA_VERSION.into(), delta, seeds, rows };
    std::fs::write(out_dir.join("comparison.json"), serde_json::to_string_pretty(&comparison)? + "\n")?;
    Ok(comparison)
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.abs() >= 1e6 => format!("{x:.3e}"),
        Some(x) => format!("{x:.3}"),
        None => "-".into(),
    }
}

pub fn format_table(c: &Comparison) -> String {
    let header = ["schedule", "engine", "hits", "hit_rate", "steps_to_hit", "best_E", "t1_est", "t2_est"];
    let body: Vec<[String; 8]> = c
        .rows
        .iter()
        .map(|r| {
            [
                r.schedule_id.clone(),
                r.engine.clone(),
                format!("{}/{}", r.hits, r.runs),
                cell(r.hit_rate),
                cell(r.mean_steps_to_first_hit),
                cell(r.mean_best_energy),
                cell(r.t1_estimate),
                cell(r.t2_estimate),
            ]
        })
        .collect();
    let widths: Vec<usize> =
        (0..header.len()).map(|i| body.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0)).collect();
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec(), &mut out);
    for r in &body {
        line(r.iter().map(String::as_str).collect(), &mut out);
    }
    let _ = writeln!(out, "estimates at delta = {}", c.delta);
    out
}
