//! Single-spin-flip Metropolis-type chain on the replica system and the
//! annealing driver built on it.
//!
//! One chain step `t` is one proposal: a uniformly chosen `(site, slice)` pair
//! is flipped with probability `g(u)`. A sweep is `N·M` steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::acceptance::{boltzmann_u, tsallis_u, Acceptance, AcceptanceForm, TsallisU};
use super::replica::{replica_f0, replica_f1, ReplicaConfig};
use crate::error::{QaeError, Result};
use crate::ising::{IsingInstance, SpinConfig};
use crate::schedules::{trotter_coupling, Control, ScaledSchedule};
use crate::trace::AnnealRow;

#[derive(Clone, Debug)]
pub struct PimcParams {
    pub beta: f64,
    pub trotter_m: usize,
    pub acceptance: Acceptance,
}

impl PimcParams {
    pub fn new(beta: f64, trotter_m: usize, acceptance: Acceptance) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(QaeError::Configuration(format!("beta must be positive, got {beta}")));
        }
        if trotter_m == 0 {
            return Err(QaeError::Configuration("trotter_M must be at least 1".into()));
        }
        Ok(PimcParams { beta, trotter_m, acceptance })
    }

    /// Temperature of the classical term, `T0 = 1/β`.
    pub fn t0(&self) -> f64 {
        1.0 / self.beta
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticTemperature {
    pub t1: f64,
    pub clamped: bool,
}

/// `T1(t)`, either read directly or as `1/γ(t)` for a transverse-field schedule.
pub fn kinetic_temperature(schedule: &ScaledSchedule, t: u64, beta: f64, trotter_m: usize) -> Result<KineticTemperature> {
    let eval = schedule.eval(t)?;
    match schedule.control() {
        Control::KineticTemperature => Ok(KineticTemperature { t1: eval.value, clamped: eval.clamped }),
        Control::TransverseField => {
            let coupling = trotter_coupling(beta, trotter_m, eval.value)?;
            let t1 = if coupling > 0.0 { 1.0 / coupling } else { f64::INFINITY };
            Ok(KineticTemperature { t1, clamped: eval.clamped })
        }
        Control::Temperature => Err(QaeError::Configuration(format!(
            "schedule '{}' drives a classical temperature and cannot anneal the replica chain",
            schedule.kind()
        ))),
    }
}

fn differences(instance: &IsingInstance, x: &ReplicaConfig, y: &ReplicaConfig) -> Result<(f64, f64)> {
    if x.slices() != y.slices() || x.n_spins() != y.n_spins() {
        return Err(QaeError::InvalidArgument("replica shapes differ".into()));
    }
    let d_f0 = replica_f0(instance, y)? - replica_f0(instance, x)?;
    let d_f1 = replica_f1(y) - replica_f1(x);
    Ok((d_f0, d_f1))
}

/// `q(y;t)/q(x;t)` for the replica Boltzmann weight; the partition function cancels.
pub fn boltzmann_ratio(
    instance: &IsingInstance,
    x: &ReplicaConfig,
    y: &ReplicaConfig,
    t: u64,
    params: &PimcParams,
    schedule: &ScaledSchedule,
) -> Result<f64> {
    let (d_f0, d_f1) = differences(instance, x, y)?;
    let kt = kinetic_temperature(schedule, t, params.beta, params.trotter_m)?;
    Ok(boltzmann_u(d_f0, d_f1, params.t0(), kt.t1).0)
}

/// Generalized acceptance argument between two replica states.
pub fn replica_tsallis_u(
    instance: &IsingInstance,
    x: &ReplicaConfig,
    y: &ReplicaConfig,
    t: u64,
    params: &PimcParams,
    schedule: &ScaledSchedule,
) -> Result<TsallisU> {
    let q = match params.acceptance.form() {
        AcceptanceForm::Tsallis { q } => q,
        AcceptanceForm::Boltzmann => {
            return Err(QaeError::Configuration("acceptance is not of tsallis form".into()))
        }
    };
    let (d_f0, d_f1) = differences(instance, x, y)?;
    let kt = kinetic_temperature(schedule, t, params.beta, params.trotter_m)?;
    tsallis_u(d_f0, d_f1, params.t0(), kt.t1, q)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChainStats {
    pub proposals: u64,
    pub accepted: u64,
    /// Exponent clamps plus schedule floor clamps.
    pub clamp_count: u64,
    pub bracket_rejections: u64,
}

impl ChainStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// The evolving state of one replica chain.
pub struct PimcChain<'a> {
    instance: &'a IsingInstance,
    params: &'a PimcParams,
    schedule: &'a ScaledSchedule,
    state: ReplicaConfig,
    slice_energies: Vec<f64>,
    step: u64,
    stats: ChainStats,
    best_energy: f64,
    best_config: SpinConfig,
    target: Option<f64>,
    first_hit: Option<u64>,
}

/// Energies within this distance of the target count as a hit.
const HIT_TOL: f64 = 1e-9;

impl<'a> PimcChain<'a> {
    pub fn new(
        instance: &'a IsingInstance,
        params: &'a PimcParams,
        schedule: &'a ScaledSchedule,
        initial: ReplicaConfig,
        start_step: u64,
    ) -> Result<Self> {
        if initial.n_spins() != instance.n_spins() || initial.slices() != params.trotter_m {
            return Err(QaeError::InvalidArgument(format!(
                "initial replica is {}x{}, expected {}x{}",
                initial.n_spins(),
                initial.slices(),
                instance.n_spins(),
                params.trotter_m
            )));
        }
        if schedule.control() == Control::Temperature {
            return Err(QaeError::Configuration(format!(
                "schedule '{}' drives a classical temperature",
                schedule.kind()
            )));
        }
        let slice_energies: Vec<f64> =
            (0..initial.slices()).map(|k| instance.energy_of(initial.slice(k))).collect();
        let (best_slice, best_energy) = slice_energies
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, e)| if e < acc.1 { (k, e) } else { acc });
        let best_config = initial.slice_config(best_slice);
        Ok(PimcChain {
            instance,
            params,
            schedule,
            state: initial,
            slice_energies,
            step: start_step,
            stats: ChainStats::default(),
            best_energy,
            best_config,
            target: None,
            first_hit: None,
        })
    }

    /// Record the first step at which a slice reaches `energy`.
    pub fn with_target(mut self, energy: f64) -> Self {
        self.target = Some(energy);
        if self.best_energy <= energy + HIT_TOL {
            self.first_hit = Some(self.step);
        }
        self
    }

    pub fn state(&self) -> &ReplicaConfig {
        &self.state
    }

    pub fn into_state(self) -> ReplicaConfig {
        self.state
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn stats(&self) -> ChainStats {
        self.stats
    }

    pub fn best_energy(&self) -> f64 {
        self.best_energy
    }

    pub fn best_config(&self) -> &SpinConfig {
        &self.best_config
    }

    pub fn first_hit(&self) -> Option<u64> {
        self.first_hit
    }

    pub fn mean_slice_energy(&self) -> f64 {
        self.slice_energies.iter().sum::<f64>() / self.slice_energies.len() as f64
    }

    pub fn control_value(&self) -> Result<f64> {
        self.schedule.value(self.step)
    }

    /// One proposal at the current step; returns whether it was accepted.
    pub fn propose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool> {
        let n = self.instance.n_spins();
        let m = self.params.trotter_m;
        let kt = kinetic_temperature(self.schedule, self.step, self.params.beta, m)?;
        let pick = rng.gen_range(0..n * m);
        let (site, slice) = (pick % n, pick / n);
        let d_energy = self.state.delta_slice_energy(self.instance, site, slice);
        let d_f0 = d_energy / m as f64;
        let d_f1 = self.state.delta_f1(site, slice);
        let decision = self.params.acceptance.decide(d_f0, d_f1, self.params.t0(), kt.t1);
        let r: f64 = rng.gen();

        self.stats.proposals += 1;
        self.stats.clamp_count += u64::from(decision.clamped) + u64::from(kt.clamped);
        self.stats.bracket_rejections += u64::from(decision.bracket_rejected);
        self.step += 1;

        let accepted = r < decision.probability;
        if accepted {
            self.state.flip(site, slice);
            self.stats.accepted += 1;
            let e = self.slice_energies[slice] + d_energy;
            self.slice_energies[slice] = e;
            if e < self.best_energy - HIT_TOL {
                self.best_energy = e;
                self.best_config = self.state.slice_config(slice);
            }
            if let (Some(target), None) = (self.target, self.first_hit) {
                if e <= target + HIT_TOL {
                    self.first_hit = Some(self.step);
                }
            }
        }
        Ok(accepted)
    }

    /// `N·M` proposals.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        for _ in 0..self.instance.n_spins() * self.params.trotter_m {
            self.propose(rng)?;
        }
        Ok(())
    }
}

/// One sweep of `N·M` proposals starting at chain step `t`.
pub fn mc_sweep<R: Rng + ?Sized>(
    instance: &IsingInstance,
    state: ReplicaConfig,
    t: u64,
    params: &PimcParams,
    schedule: &ScaledSchedule,
    rng: &mut R,
) -> Result<(ReplicaConfig, ChainStats)> {
    let mut chain = PimcChain::new(instance, params, schedule, state, t)?;
    chain.sweep(rng)?;
    let stats = chain.stats();
    Ok((chain.into_state(), stats))
}

#[derive(Clone, Debug, Default)]
pub enum InitialState {
    /// Independent random spins on every slice.
    #[default]
    Random,
    AllUp,
    Replicated(SpinConfig),
    Given(ReplicaConfig),
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub checkpoint_every: u64,
    /// Known ground energy, enabling first-hit bookkeeping.
    pub target_energy: Option<f64>,
    /// Keep the replica state at every checkpoint.
    pub record_states: bool,
    pub initial: InitialState,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { checkpoint_every: 1000, target_energy: None, record_states: false, initial: InitialState::Random }
    }
}

#[derive(Clone, Debug)]
pub struct AnnealTrace {
    pub rows: Vec<AnnealRow>,
    pub best_energy: f64,
    pub best_config: SpinConfig,
    pub first_hit_step: Option<u64>,
    pub stats: ChainStats,
    pub final_state: ReplicaConfig,
    pub states: Vec<(u64, ReplicaConfig)>,
}

/// Seeded generator for one chain.
pub fn chain_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Run the inhomogeneous chain for steps `0..horizon`.
pub fn run_annealing(
    instance: &IsingInstance,
    params: &PimcParams,
    schedule: &ScaledSchedule,
    horizon: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<AnnealTrace> {
    if horizon == 0 {
        return Err(QaeError::InvalidArgument("horizon must be at least 1".into()));
    }
    if options.checkpoint_every == 0 {
        return Err(QaeError::InvalidArgument("checkpoint_every must be at least 1".into()));
    }
    let mut rng = chain_rng(seed);
    let n = instance.n_spins();
    let m = params.trotter_m;
    let initial = match &options.initial {
        InitialState::Random => ReplicaConfig::random(n, m, &mut rng),
        InitialState::AllUp => ReplicaConfig::replicated(&SpinConfig::all_up(n), m),
        InitialState::Replicated(c) => ReplicaConfig::replicated(c, m),
        InitialState::Given(r) => r.clone(),
    };
    let mut chain = PimcChain::new(instance, params, schedule, initial, 0)?;
    if let Some(target) = options.target_energy {
        chain = chain.with_target(target);
    }

    let mut rows = Vec::new();
    let mut states = Vec::new();
    let mut window = ChainStats::default();
    let mut checkpoint = |chain: &PimcChain<'_>, window: &mut ChainStats| -> Result<()> {
        let now = chain.stats();
        let rate = if now.proposals > window.proposals {
            (now.accepted - window.accepted) as f64 / (now.proposals - window.proposals) as f64
        } else {
            0.0
        };
        rows.push(AnnealRow {
            step: chain.step(),
            control_value: chain.control_value()?,
            mean_slice_energy: chain.mean_slice_energy(),
            best_energy: chain.best_energy(),
            acceptance_rate: rate,
            clamp_count: now.clamp_count,
        });
        if options.record_states {
            states.push((chain.step(), chain.state().clone()));
        }
        *window = now;
        Ok(())
    };

    checkpoint(&chain, &mut window)?;
    while chain.step() < horizon {
        chain.propose(&mut rng)?;
        if chain.step() % options.checkpoint_every == 0 || chain.step() == horizon {
            checkpoint(&chain, &mut window)?;
        }
    }

    Ok(AnnealTrace {
        rows,
        best_energy: chain.best_energy(),
        best_config: chain.best_config().clone(),
        first_hit_step: chain.first_hit(),
        stats: chain.stats(),
        final_state: chain.state().clone(),
        states,
    })
}
