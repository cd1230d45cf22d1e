//! Numerical checks of the convergence ingredients on exact chains. Each
//! check returns a [`LabReport`]; a failed check carries witnesses.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{QaeError, Result};
use crate::lab::chains::{build_chain, column, diagonal, product_matrix, ChainModel, ChainSpec};
use crate::lab::structure::{structural_constants, StructuralConstants};
use crate::schedules::Direction;

/// Consecutive steps a predicate must hold before its onset counts as located.
pub const LOCATOR_RUN: u64 = 1000;
/// Give up locating an onset after this many steps.
pub const LOCATOR_LIMIT: u64 = 200_000;
pub const STATIONARY_TOL: f64 = 1e-12;
/// Rounding allowance when comparing consecutive stationary weights.
pub const MONOTONE_TOL: f64 = 1e-14;
const MAX_WITNESSES: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: usize,
    pub y: usize,
    pub t: u64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabReport {
    pub check: String,
    pub pass: bool,
    pub worst_slack: f64,
    pub witnesses: Vec<Witness>,
    pub t1_located: Option<u64>,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl LabReport {
    fn new(check: &str) -> Self {
        LabReport {
            check: check.into(),
            pass: true,
            worst_slack: f64::INFINITY,
            witnesses: Vec::new(),
            t1_located: None,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn record(&mut self, x: usize, y: usize, t: u64, value: f64, bound: f64) {
        let slack = value - bound;
        self.worst_slack = self.worst_slack.min(slack);
        if slack < 0.0 {
            self.pass = false;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(Witness { x, y, t, value, bound });
            }
        }
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), value);
    }
}

/// Steps `1..=100` followed by a quarter-decade grid over `10..=10^6`.
pub fn default_t_grid() -> Vec<u64> {
    let mut grid: Vec<u64> = (1..=100).collect();
    for i in 4..=24 {
        grid.push(10f64.powf(i as f64 / 4.0).round() as u64);
    }
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// First `t ≥ start` after which `pred` holds for [`LOCATOR_RUN`] consecutive steps.
pub fn locate_onset(start: u64, limit: u64, mut pred: impl FnMut(u64) -> Result<bool>) -> Result<Option<u64>> {
    let mut run_start = start;
    let mut run = 0;
    let mut t = start;
    while t < limit {
        if pred(t)? {
            if run == 0 {
                run_start = t;
            }
            run += 1;
            if run >= LOCATOR_RUN {
                return Ok(Some(run_start));
            }
        } else {
            run = 0;
        }
        t += 1;
    }
    Ok(None)
}

/// Lower-bound check shared by both transition-probability lemmas: every
/// move entry at every sampled `t`, and the diagonal of `diag_states` for
/// sampled `t` beyond the located onset.
fn verify_bound(
    check: &str,
    model: &dyn ChainModel,
    t_samples: &[u64],
    constants: &StructuralConstants,
    diag_states: &[usize],
    diag_gated: bool,
) -> Result<LabReport> {
    let mut report = LabReport::new(check);
    let bound = |t: u64| -> Result<f64> {
        model
            .step_bound(t, constants)?
            .ok_or_else(|| QaeError::InvalidArgument(format!("chain '{}' has no step bound", model.kind())))
    };
    let minimizer = |x: usize| (model.cost(x) - constants.cost_min).abs() <= 1e-12;
    let mut strict_slack = f64::INFINITY;

    for &t in t_samples {
        let b = bound(t)?;
        for x in 0..model.n_states() {
            for (y, p) in model.off_diagonal(x, t)? {
                report.record(x, y, t, p, b);
                if !minimizer(x) {
                    strict_slack = strict_slack.min(p - b);
                }
            }
        }
    }

    if diag_gated && !diag_states.is_empty() {
        let start = t_samples.iter().copied().min().unwrap_or(1).max(1);
        let t1 = locate_onset(start, LOCATOR_LIMIT, |t| {
            let b = bound(t)?;
            for &x in diag_states {
                if diagonal(model, x, t)? < b {
                    return Ok(false);
                }
            }
            Ok(true)
        })?;
        report.t1_located = t1;
        match t1 {
            Some(t1) => {
                for &t in t_samples.iter().filter(|t| **t >= t1) {
                    let b = bound(t)?;
                    for &x in diag_states {
                        let d = diagonal(model, x, t)?;
                        report.record(x, x, t, d, b);
                        strict_slack = strict_slack.min(d - b);
                    }
                }
            }
            None => {
                report.pass = false;
                report.notes.push(format!("diagonal bound onset not found before t={LOCATOR_LIMIT}"));
            }
        }
    }
    report.metric("worst_slack_nonminimal_sources", strict_slack);
    Ok(report)
}

fn vacuous(check: &str) -> LabReport {
    let mut r = LabReport::new(check);
    r.notes.push("single-state space: nothing to check".into());
    r
}

/// Lower bound `w·g(1)·exp(-L0/T0 - L1/T1(t))` on moves, and on the diagonal
/// outside the local maxima of `F1` for large `t`.
pub fn verify_lemma1_model(model: &dyn ChainModel, t_samples: &[u64], constants: &StructuralConstants) -> Result<LabReport> {
    if model.kind() != "pimc_boltzmann" {
        return Err(QaeError::InvalidArgument(format!("replica bound needs a pimc_boltzmann chain, got '{}'", model.kind())));
    }
    let diag: Vec<usize> = (0..model.n_states()).filter(|x| !constants.s_m.contains(x)).collect();
    let mut report = verify_bound("lemma1", model, t_samples, constants, &diag, true)?;
    report.metric("R", constants.r as f64);
    report.metric("L0", constants.l0);
    report.metric("L1", constants.l1);
    report.metric("w", constants.w_min);
    Ok(report)
}

pub fn verify_lemma1(spec: &ChainSpec, t_samples: &[u64]) -> Result<LabReport> {
    let model = build_chain(spec)?;
    if model.n_states() == 1 {
        return Ok(vacuous("lemma1"));
    }
    let constants = structural_constants(model.as_ref())?;
    verify_lemma1_model(model.as_ref(), t_samples, &constants)
}

/// Lower bound `ΔtΓ/(1 - Δt(E_min - E_T) + NΔtΓ)` on moves and, under a
/// decreasing field, on the diagonal for large `t`. The move bound is attained
/// with equality out of ground states, so the strict margin is reported separately.
pub fn verify_lemma2_model(model: &dyn ChainModel, t_samples: &[u64], constants: &StructuralConstants) -> Result<LabReport> {
    if model.kind() != "gfmc_g1" {
        return Err(QaeError::InvalidArgument(format!("walker bound needs a gfmc_g1 chain, got '{}'", model.kind())));
    }
    let decreasing = model.schedule().direction() == Direction::Decreasing;
    let all: Vec<usize> = (0..model.n_states()).collect();
    let mut report = verify_bound("lemma2", model, t_samples, constants, &all, decreasing)?;
    if !decreasing {
        report.notes.push("diagonal bound not asserted: the field schedule is not decreasing".into());
    }
    report.metric("E_min", constants.cost_min);
    Ok(report)
}

pub fn verify_lemma2(spec: &ChainSpec, t_samples: &[u64]) -> Result<LabReport> {
    let model = build_chain(spec)?;
    if model.n_states() == 1 {
        return Ok(vacuous("lemma2"));
    }
    let constants = structural_constants(model.as_ref())?;
    verify_lemma2_model(model.as_ref(), t_samples, &constants)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityResidual {
    pub t: u64,
    pub residual: f64,
    pub source: String,
    pub asserted: bool,
}

/// `‖G(t) q(t) - q(t)‖₁` for the chain's closed-form stationary candidate.
pub fn stationarity_residual(model: &dyn ChainModel, t: u64) -> Result<StationarityResidual> {
    let guess = model.stationary(t)?;
    let mut out = vec![0.0; model.n_states()];
    for x in 0..model.n_states() {
        for (y, g) in column(model, x, t)?.into_iter().enumerate() {
            out[y] += g * guess.q[x];
        }
    }
    let residual = out.iter().zip(&guess.q).map(|(a, b)| (a - b).abs()).sum();
    Ok(StationarityResidual { t, residual, source: guess.source.into(), asserted: guess.asserted })
}

pub fn stationarity_report(model: &dyn ChainModel, t_samples: &[u64]) -> Result<LabReport> {
    let mut report = LabReport::new("stationarity");
    let mut worst: f64 = 0.0;
    for &t in t_samples {
        let r = stationarity_residual(model, t)?;
        worst = worst.max(r.residual);
        if r.asserted {
            report.record(0, 0, t, STATIONARY_TOL, r.residual);
        } else if report.notes.is_empty() {
            report.notes.push(format!("residual of the {} candidate reported only", r.source));
        }
    }
    if report.worst_slack.is_infinite() {
        report.worst_slack = 0.0;
    }
    report.metric("max_residual", worst);
    Ok(report)
}

/// Stationary weights of the designated states must not decrease at any
/// step; all others must stop increasing from a located `t1` on.
pub fn monotonicity_check(model: &dyn ChainModel, t_start: u64, t_end: u64) -> Result<LabReport> {
    if t_end <= t_start {
        return Err(QaeError::InvalidArgument("empty time range".into()));
    }
    let mut report = LabReport::new("monotonicity");
    let up = model.increasing_states();
    let qs = (t_start..=t_end).map(|t| model.stationary(t).map(|g| g.q)).collect::<Result<Vec<_>>>()?;
    let step = |t: u64| &qs[(t - t_start) as usize];

    for t in t_start..t_end {
        let (a, b) = (step(t), step(t + 1));
        for x in (0..a.len()).filter(|x| up[*x]) {
            report.record(x, x, t, b[x] - a[x] + MONOTONE_TOL, 0.0);
        }
    }
    let others_fall = |t: u64| -> Result<bool> {
        let (a, b) = (step(t), step(t + 1));
        Ok((0..a.len()).filter(|x| !up[*x]).all(|x| b[x] <= a[x] + MONOTONE_TOL))
    };
    let t1 = locate_onset(t_start, t_end, others_fall)?;
    report.t1_located = t1;
    match t1 {
        Some(t1) => {
            for t in t1..t_end {
                let (a, b) = (step(t), step(t + 1));
                for x in (0..a.len()).filter(|x| !up[*x]) {
                    report.record(x, x, t, a[x] - b[x] + MONOTONE_TOL, 0.0);
                }
            }
        }
        None => {
            report.pass = false;
            report.notes.push(format!("no onset of decrease found in [{t_start}, {t_end}]"));
        }
    }
    if report.worst_slack.is_infinite() {
        report.worst_slack = 0.0;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionIii {
    pub horizon: u64,
    pub total: f64,
    pub t1: u64,
    pub bound: f64,
    /// `(t, Σ_{s<t} ‖q(s+1) - q(s)‖₁)` at powers of ten and the horizon.
    pub partial_sums: Vec<(u64, f64)>,
    /// Increase of the partial sum over the last decade of the horizon.
    pub tail_increment: f64,
    pub tail_flat: bool,
    /// Largest `|‖Δq‖₁ - 2 Σ_up Δq|` for `t ≥ t1`.
    pub telescoping_error: f64,
}

/// Summability of `‖q(t+1) - q(t)‖₁` against `2·t1 + 2`, where `t1` comes
/// from [`monotonicity_check`] over `[0, min(horizon, 10^4)]`.
pub fn condition_iii_sum(model: &dyn ChainModel, horizon: u64) -> Result<(ConditionIii, LabReport)> {
    if horizon == 0 {
        return Err(QaeError::InvalidArgument("horizon must be at least 1".into()));
    }
    let window = horizon.min(10_000).max(LOCATOR_RUN + 1);
    let mono = monotonicity_check(model, 0, window)?;
    let mut report = LabReport::new("condition_iii");
    let t1 = match mono.t1_located {
        Some(t1) if mono.pass => t1,
        _ => {
            report.pass = false;
            report.notes.push("monotonicity onset not established".into());
            mono.t1_located.unwrap_or(window)
        }
    };
    let up = model.increasing_states();
    let mut total = 0.0;
    let mut partial_sums = Vec::new();
    let mut telescoping_error: f64 = 0.0;
    let tail_start = horizon - horizon / 10;
    let mut at_tail_start = 0.0;
    let mut prev = model.stationary(0)?.q;
    let mut next_mark = 1;
    for t in 0..horizon {
        if t == tail_start {
            at_tail_start = total;
        }
        let q = model.stationary(t + 1)?.q;
        let norm: f64 = q.iter().zip(&prev).map(|(a, b)| (a - b).abs()).sum();
        if t >= t1 {
            let gain: f64 = (0..q.len()).filter(|x| up[*x]).map(|x| q[x] - prev[x]).sum();
            telescoping_error = telescoping_error.max((norm - 2.0 * gain).abs());
        }
        total += norm;
        if t + 1 == next_mark || t + 1 == horizon {
            partial_sums.push((t + 1, total));
            if t + 1 == next_mark {
                next_mark *= 10;
            }
        }
        prev = q;
    }
    let bound = 2.0 * t1 as f64 + 2.0;
    let tail_increment = total - at_tail_start;
    let result = ConditionIii {
        horizon,
        total,
        t1,
        bound,
        partial_sums,
        tail_increment,
        tail_flat: tail_increment < 1e-10,
        telescoping_error,
    };
    report.t1_located = Some(t1);
    report.worst_slack = bound - total;
    report.pass &= total <= bound && telescoping_error <= 1e-12;
    report.metric("total", total);
    report.metric("bound", bound);
    report.metric("tail_increment", tail_increment);
    report.metric("telescoping_error", telescoping_error);
    if !result.tail_flat {
        report
            .notes
            .push(format!("partial sums still move by {tail_increment:.3e} over the last decade"));
    }
    Ok((result, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRow {
    pub k: u64,
    pub alpha: f64,
    pub one_minus_alpha: f64,
    pub bound: Option<f64>,
    pub partial_sum: f64,
    pub bound_partial_sum: Option<f64>,
    pub tv_diameter_so_far: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakErgodicity {
    pub r: usize,
    pub blocks: Vec<BlockRow>,
    pub bound_violations: Vec<u64>,
    pub submultiplicative_violations: Vec<u64>,
    /// Pearson correlation of the partial sums against `log k`.
    pub log_correlation: f64,
    pub bound_log_correlation: Option<f64>,
    /// Growth of the partial sum over the last half of the blocks.
    pub late_growth: f64,
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Exact `R`-step block products `G^{kR, kR-R}`, their ergodicity
/// coefficients and partial sums, against `b(kR-1)^R` where `b` is the
/// chain's per-step bound.
pub fn weak_ergodicity_diagnostic(model: &dyn ChainModel, blocks: u64) -> Result<(WeakErgodicity, LabReport)> {
    if blocks == 0 {
        return Err(QaeError::InvalidArgument("need at least one block".into()));
    }
    let constants = structural_constants(model)?;
    let r = constants.r as u64;
    let mut rows = Vec::with_capacity(blocks as usize);
    let mut report = LabReport::new("weak_ergodicity");
    let mut bound_violations = Vec::new();
    let mut submultiplicative_violations = Vec::new();
    let (mut sum, mut bound_sum) = (0.0, Some(0.0));
    let mut previous: Option<(crate::lab::TransitionMatrix, f64)> = None;
    let mut running = crate::lab::TransitionMatrix::identity(model.n_states(), 0);
    for k in 1..=blocks {
        let block = product_matrix(model, (k - 1) * r, k * r)?;
        let alpha = block.ergodicity_coefficient();
        let one_minus = 1.0 - alpha;
        let bound = model.step_bound(k * r - 1, &constants)?.map(|b| b.powi(r as i32));
        if let Some(b) = bound {
            if one_minus < b {
                bound_violations.push(k);
            }
            report.record(0, 0, k * r, one_minus, b);
        }
        if let Some((prev_block, prev_alpha)) = &previous {
            let joint = prev_block.then(&block)?.ergodicity_coefficient();
            if joint > prev_alpha * alpha + 1e-12 {
                submultiplicative_violations.push(k);
            }
        }
        running = running.then(&block)?;
        sum += one_minus;
        bound_sum = bound_sum.zip(bound).map(|(s, b)| s + b);
        rows.push(BlockRow {
            k,
            alpha,
            one_minus_alpha: one_minus,
            bound,
            partial_sum: sum,
            bound_partial_sum: bound_sum,
            tv_diameter_so_far: running.tv_diameter(),
        });
        previous = Some((block, alpha));
    }
    let logs: Vec<f64> = rows.iter().map(|b| (b.k as f64).ln()).collect();
    let sums: Vec<f64> = rows.iter().map(|b| b.partial_sum).collect();
    let log_correlation = pearson(&logs, &sums);
    let bound_log_correlation = rows
        .iter()
        .map(|b| b.bound_partial_sum)
        .collect::<Option<Vec<f64>>>()
        .map(|s| pearson(&logs, &s));
    let half = rows[(rows.len() - 1) / 2].partial_sum;
    let late_growth = sum - half;

    report.pass &= submultiplicative_violations.is_empty();
    if report.worst_slack.is_infinite() {
        report.worst_slack = 0.0;
        report.notes.push("no analytic block bound for this chain".into());
    }
    report.metric("R", r as f64);
    report.metric("log_correlation", log_correlation);
    if let Some(c) = bound_log_correlation {
        report.metric("bound_log_correlation", c);
    }
    report.metric("late_growth", late_growth);
    report.metric("final_tv_diameter", rows.last().map_or(0.0, |b| b.tv_diameter_so_far));
    let result = WeakErgodicity {
        r: constants.r,
        blocks: rows,
        bound_violations,
        submultiplicative_violations,
        log_correlation,
        bound_log_correlation,
        late_growth,
    };
    Ok((result, report))
}
