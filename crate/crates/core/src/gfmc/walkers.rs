//! Weighted random walkers. Each walker carries a configuration and a
//! multiplicative weight; the weighted histogram `(1/M) Σ_i W_i δ(y, x_i)`
//! estimates the imaginary-time wave function.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{QaeError, Result};
use crate::gfmc::green::{g1_row, g2_flip_probability, g2_weight, weight_w, GfmcParams, PopulationControl, Variant};
use crate::ising::{check_capacity, energy, IsingInstance, SpinConfig, DEFAULT_ENUMERATION_CAP};
use crate::pimc::chain_rng;
use crate::schedules::{Control, ScaledSchedule};
use crate::trace::GfmcRow;

const RESCALE_LOW: f64 = 1e-100;
const RESCALE_HIGH: f64 = 1e100;
const HIT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Walker {
    pub config: SpinConfig,
    pub weight: f64,
    pub energy: f64,
}

/// Walkers plus a shared log scale: true weights are `weight · exp(log_scale)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkerPopulation {
    walkers: Vec<Walker>,
    step: u64,
    log_scale: f64,
}

impl WalkerPopulation {
    pub fn from_configs(instance: &IsingInstance, configs: Vec<SpinConfig>) -> Result<Self> {
        if configs.is_empty() {
            return Err(QaeError::InvalidArgument("population needs at least one walker".into()));
        }
        let walkers = configs
            .into_iter()
            .map(|config| {
                let e = energy(instance, &config)?;
                Ok(Walker { config, weight: 1.0, energy: e })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WalkerPopulation { walkers, step: 0, log_scale: 0.0 })
    }

    /// Walkers at uniformly random configurations with unit weight.
    pub fn uniform<R: Rng + ?Sized>(instance: &IsingInstance, n_walkers: usize, rng: &mut R) -> Result<Self> {
        let n = instance.n_spins();
        let configs = (0..n_walkers)
            .map(|_| SpinConfig::new((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_configs(instance, configs)
    }

    pub fn walkers(&self) -> &[Walker] {
        &self.walkers
    }

    pub fn len(&self) -> usize {
        self.walkers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walkers.is_empty()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Mean of the stored (rescaled) weights.
    pub fn mean_weight(&self) -> f64 {
        self.walkers.iter().map(|w| w.weight).sum::<f64>() / self.walkers.len() as f64
    }

    /// `(Σ W)^2 / Σ W^2`.
    pub fn effective_population(&self) -> f64 {
        let (s, s2) = self
            .walkers
            .iter()
            .fold((0.0, 0.0), |(s, s2), w| (s + w.weight, s2 + w.weight * w.weight));
        if s2 > 0.0 {
            s * s / s2
        } else {
            0.0
        }
    }

    pub fn best_energy(&self) -> f64 {
        self.walkers.iter().map(|w| w.energy).fold(f64::INFINITY, f64::min)
    }

    fn weighted_mass(&self) -> BTreeMap<&[i8], (f64, f64)> {
        let mut mass: BTreeMap<&[i8], (f64, f64)> = BTreeMap::new();
        for w in &self.walkers {
            let entry = mass.entry(w.config.spins()).or_insert((0.0, w.energy));
            entry.0 += w.weight;
        }
        mass
    }

    /// Dense `(1/M) Σ_i W_i δ(y, x_i)` over the canonical state order, in stored units.
    pub fn histogram(&self) -> Result<Vec<f64>> {
        let n = self.walkers[0].config.len();
        check_capacity(n, DEFAULT_ENUMERATION_CAP)?;
        let mut h = vec![0.0; 1usize << n];
        for w in &self.walkers {
            h[w.config.index()] += w.weight;
        }
        let m = self.walkers.len() as f64;
        h.iter_mut().for_each(|v| *v /= m);
        Ok(h)
    }

    /// Shannon entropy (nats) of the normalized weighted histogram.
    pub fn histogram_entropy(&self) -> f64 {
        let mass = self.weighted_mass();
        let total: f64 = mass.values().map(|(m, _)| m).sum();
        if total <= 0.0 {
            return 0.0;
        }
        -mass
            .values()
            .map(|(m, _)| m / total)
            .filter(|p| *p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }

    /// Configuration of largest weighted-histogram mass, and its energy.
    pub fn argmax(&self) -> (SpinConfig, f64) {
        let mass = self.weighted_mass();
        let (spins, (_, e)) = mass
            .into_iter()
            .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then_with(|| b.0.cmp(a.0)))
            .expect("population is never empty");
        (SpinConfig::new(spins.to_vec()).expect("walker spins are ±1"), e)
    }

    fn rescale(&mut self) -> Result<()> {
        let mean = self.mean_weight();
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(QaeError::Model(format!("mean walker weight degenerated to {mean}")));
        }
        if !(RESCALE_LOW..=RESCALE_HIGH).contains(&mean) {
            self.walkers.iter_mut().for_each(|w| w.weight /= mean);
            self.log_scale += mean.ln();
        }
        Ok(())
    }
}

/// Transverse field of a walker schedule at step `t`.
pub fn walker_gamma(schedule: &ScaledSchedule, t: u64) -> Result<f64> {
    if schedule.control() != Control::TransverseField {
        return Err(QaeError::Configuration(format!(
            "Green's-function walkers need a transverse-field schedule, got '{}'",
            schedule.kind()
        )));
    }
    schedule.value(t)
}

fn move_walker<R: Rng + ?Sized>(
    walker: &mut Walker,
    instance: &IsingInstance,
    params: &GfmcParams,
    gamma: f64,
    flip_p: f64,
    rng: &mut R,
) -> Result<()> {
    let n = instance.n_spins();
    let flip = |w: &mut Walker, i: usize| {
        let d = 2.0 * f64::from(w.config.spins()[i]) * instance.local_field(i, w.config.spins());
        w.config.flip(i);
        w.energy += d;
    };
    match params.variant {
        Variant::G1 => {
            let row = g1_row(walker.energy, n, gamma, params)?;
            walker.weight *= weight_w(walker.energy, n, gamma, params);
            let r: f64 = rng.gen();
            if r < n as f64 * row.move_each {
                let i = rng.gen_range(0..n);
                flip(walker, i);
            }
        }
        Variant::G2 => {
            walker.weight *= g2_weight(walker.energy, n, params.dt, gamma);
            for i in 0..n {
                if rng.gen::<f64>() < flip_p {
                    flip(walker, i);
                }
            }
        }
    }
    Ok(())
}

fn split_kill<R: Rng + ?Sized>(pop: &mut WalkerPopulation, split: f64, kill: f64, rng: &mut R) {
    let mean = pop.mean_weight();
    let mut next = Vec::with_capacity(pop.walkers.len());
    let heaviest = pop
        .walkers
        .iter()
        .max_by(|a, b| a.weight.total_cmp(&b.weight))
        .cloned()
        .expect("population is never empty");
    for w in pop.walkers.drain(..) {
        if w.weight > split * mean {
            let copies = (w.weight / mean).floor().max(2.0) as usize;
            let share = w.weight / copies as f64;
            for _ in 0..copies {
                next.push(Walker { weight: share, ..w.clone() });
            }
        } else if w.weight < kill * mean {
            let floor = kill * mean;
            if rng.gen::<f64>() < w.weight / floor {
                next.push(Walker { weight: floor, ..w });
            }
        } else {
            next.push(w);
        }
    }
    if next.is_empty() {
        next.push(heaviest);
    }
    pop.walkers = next;
}

/// Advance every walker by one Green's-function step at time `t = pop.step()`.
pub fn step_population<R: Rng + ?Sized>(
    mut pop: WalkerPopulation,
    instance: &IsingInstance,
    params: &GfmcParams,
    schedule: &ScaledSchedule,
    rng: &mut R,
) -> Result<WalkerPopulation> {
    let gamma = walker_gamma(schedule, pop.step)?;
    let flip_p = g2_flip_probability(params.dt, gamma);
    for walker in &mut pop.walkers {
        move_walker(walker, instance, params, gamma, flip_p, rng)?;
    }
    pop.step += 1;
    pop.rescale()?;
    if let PopulationControl::SplitKill { split, kill } = params.population_control {
        split_kill(&mut pop, split, kill, rng);
    }
    Ok(pop)
}

#[derive(Clone, Debug)]
pub struct GfmcRunOptions {
    pub checkpoint_every: u64,
    pub target_energy: Option<f64>,
}

impl Default for GfmcRunOptions {
    fn default() -> Self {
        GfmcRunOptions { checkpoint_every: 10, target_energy: None }
    }
}

#[derive(Clone, Debug)]
pub struct GfmcTrace {
    pub rows: Vec<GfmcRow>,
    pub best_energy: f64,
    pub first_hit_step: Option<u64>,
    /// Argmax of the final weighted histogram.
    pub answer: SpinConfig,
    pub answer_energy: f64,
    pub final_population: WalkerPopulation,
}

fn row(pop: &WalkerPopulation, gamma: f64, best: f64) -> GfmcRow {
    GfmcRow {
        step: pop.step(),
        gamma,
        mean_weight: pop.mean_weight(),
        effective_population: pop.effective_population(),
        best_energy: best,
        histogram_entropy: pop.histogram_entropy(),
    }
}

/// Run `horizon` population steps from uniformly random walkers.
pub fn run_gfmc(
    instance: &IsingInstance,
    params: &GfmcParams,
    schedule: &ScaledSchedule,
    horizon: u64,
    seed: u64,
    options: &GfmcRunOptions,
) -> Result<GfmcTrace> {
    if horizon == 0 || options.checkpoint_every == 0 {
        return Err(QaeError::InvalidArgument("horizon and checkpoint_every must be at least 1".into()));
    }
    params.validate_for(instance)?;
    let mut rng = chain_rng(seed);
    let mut pop = WalkerPopulation::uniform(instance, params.n_walkers, &mut rng)?;
    let mut best = pop.best_energy();
    let hit = |best: f64| options.target_energy.map_or(false, |e| best <= e + HIT_TOL);
    let mut first_hit_step = if hit(best) { Some(0) } else { None };
    let mut rows = vec![row(&pop, walker_gamma(schedule, 0)?, best)];
    while pop.step() < horizon {
        let gamma = walker_gamma(schedule, pop.step())?;
        pop = step_population(pop, instance, params, schedule, &mut rng)?;
        best = best.min(pop.best_energy());
        if first_hit_step.is_none() && hit(best) {
            first_hit_step = Some(pop.step());
        }
        if pop.step() % options.checkpoint_every == 0 || pop.step() == horizon {
            rows.push(row(&pop, gamma, best));
        }
    }
    let (answer, answer_energy) = pop.argmax();
    Ok(GfmcTrace { rows, best_energy: best, first_hit_step, answer, answer_energy, final_population: pop })
}
