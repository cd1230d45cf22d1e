//! Classical simulated annealing baseline: single-spin-flip chain on the
//! Ising cost alone, driven by a temperature schedule.

use rand::Rng;

use crate::error::{QaeError, Result};
use crate::ising::{energy, IsingInstance, SpinConfig};
use crate::pimc::{chain_rng, Acceptance, ChainStats};
use crate::schedules::{Control, ScaledSchedule};
use crate::trace::AnnealRow;

const HIT_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SaOptions {
    pub checkpoint_every: u64,
    pub target_energy: Option<f64>,
    pub initial: Option<SpinConfig>,
}

impl Default for SaOptions {
    fn default() -> Self {
        SaOptions { checkpoint_every: 1000, target_energy: None, initial: None }
    }
}

#[derive(Clone, Debug)]
pub struct SaTrace {
    pub rows: Vec<AnnealRow>,
    pub best_energy: f64,
    pub best_config: SpinConfig,
    pub first_hit_step: Option<u64>,
    pub stats: ChainStats,
    pub final_config: SpinConfig,
}

/// `horizon` single-flip proposals at temperatures `T(0), T(1), ...`.
pub fn run_sa(
    instance: &IsingInstance,
    acceptance: &Acceptance,
    schedule: &ScaledSchedule,
    horizon: u64,
    seed: u64,
    options: &SaOptions,
) -> Result<SaTrace> {
    if schedule.control() != Control::Temperature {
        return Err(QaeError::Configuration(format!(
            "simulated annealing needs a temperature schedule, got '{}'",
            schedule.kind()
        )));
    }
    if horizon == 0 || options.checkpoint_every == 0 {
        return Err(QaeError::InvalidArgument("horizon and checkpoint_every must be at least 1".into()));
    }
    let n = instance.n_spins();
    let mut rng = chain_rng(seed);
    let mut config = match &options.initial {
        Some(c) => c.clone(),
        None => SpinConfig::new((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())?,
    };
    let mut e = energy(instance, &config)?;
    let mut best = (e, config.clone());
    let hit = |e: f64| options.target_energy.map_or(false, |target| e <= target + HIT_TOL);
    let mut first_hit_step = hit(e).then_some(0);
    let mut stats = ChainStats::default();
    let mut window = stats;
    let mut rows = Vec::new();
    let mut push = |step: u64, temp: f64, e: f64, best: f64, stats: ChainStats, window: &mut ChainStats| {
        let proposals = stats.proposals - window.proposals;
        rows.push(AnnealRow {
            step,
            control_value: temp,
            mean_slice_energy: e,
            best_energy: best,
            acceptance_rate: if proposals > 0 { (stats.accepted - window.accepted) as f64 / proposals as f64 } else { 0.0 },
            clamp_count: stats.clamp_count,
        });
        *window = stats;
    };
    push(0, schedule.value(0)?, e, best.0, stats, &mut window);

    for t in 0..horizon {
        let temp = schedule.eval(t)?;
        let i = rng.gen_range(0..n);
        let d_e = 2.0 * f64::from(config.spins()[i]) * instance.local_field(i, config.spins());
        let decision = acceptance.decide(d_e, 0.0, temp.value, f64::INFINITY);
        let r: f64 = rng.gen();
        stats.proposals += 1;
        stats.clamp_count += u64::from(decision.clamped) + u64::from(temp.clamped);
        if r < decision.probability {
            config.flip(i);
            e += d_e;
            stats.accepted += 1;
            if e < best.0 {
                best = (e, config.clone());
            }
            if first_hit_step.is_none() && hit(e) {
                first_hit_step = Some(t + 1);
            }
        }
        let step = t + 1;
        if step % options.checkpoint_every == 0 || step == horizon {
            push(step, temp.value, e, best.0, stats, &mut window);
        }
    }
    Ok(SaTrace { rows, best_energy: best.0, best_config: best.1, first_hit_step, stats, final_config: config })
}
