//! Exact chain models: every annealing chain exposed as an enumerable state
//! space with closed-form transition columns.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{QaeError, Result};
use crate::gfmc::green::{g1_row, g2_transition, stationary_q1, GfmcParams, Variant};
use crate::gfmc::walker_gamma;
use crate::ising::{check_capacity, energy_table, IsingInstance, DEFAULT_ENUMERATION_CAP};
use crate::lab::matrix::{TransitionMatrix, STOCHASTIC_TOL};
use crate::pimc::{kinetic_temperature, replica_f0, replica_f1, Acceptance, AcceptanceSpec, ReplicaConfig};
use crate::schedules::{build_schedule, ScaledSchedule, ScheduleSpec};

/// Largest replica space (`N·M` spins) the lab enumerates.
pub const REPLICA_CAP: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub kind: String,
    pub instance: IsingInstance,
    pub schedule: ScheduleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trotter_m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<AcceptanceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_t: Option<f64>,
}

impl ChainSpec {
    pub fn pimc(instance: IsingInstance, beta: f64, trotter_m: usize, acceptance: AcceptanceSpec, schedule: ScheduleSpec) -> Self {
        let kind = if acceptance.q.is_some() { "pimc_tsallis" } else { "pimc_boltzmann" };
        ChainSpec {
            kind: kind.into(),
            instance,
            schedule,
            beta: Some(beta),
            trotter_m: Some(trotter_m),
            acceptance: Some(acceptance),
            dt: None,
            e_t: None,
        }
    }

    pub fn gfmc(variant: Variant, instance: IsingInstance, dt: f64, e_t: f64, schedule: ScheduleSpec) -> Self {
        let kind = match variant {
            Variant::G1 => "gfmc_g1",
            Variant::G2 => "gfmc_g2",
        };
        ChainSpec {
            kind: kind.into(),
            instance,
            schedule,
            beta: None,
            trotter_m: None,
            acceptance: None,
            dt: Some(dt),
            e_t: Some(e_t),
        }
    }

    fn require<T: Copy>(&self, value: Option<T>, name: &str) -> Result<T> {
        value.ok_or_else(|| QaeError::Configuration(format!("chain '{}' requires '{name}'", self.kind)))
    }
}

/// Closed-form stationary candidate of `G(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryGuess {
    pub q: Vec<f64>,
    pub source: &'static str,
    /// Whether the theory asserts `G(t) q = q` for this chain.
    pub asserted: bool,
}

pub trait ChainModel: Send + Sync + fmt::Debug {
    fn kind(&self) -> &'static str;
    fn n_states(&self) -> usize;
    fn schedule(&self) -> &ScaledSchedule;
    /// Move graph: `(y, P(y,x))` for every `y ≠ x` with `P(y,x) > 0`.
    fn proposals(&self, x: usize) -> Vec<(usize, f64)>;
    /// Off-diagonal entries `(y, G(y,x;t))`; the diagonal is the complement.
    fn off_diagonal(&self, x: usize, t: u64) -> Result<Vec<(usize, f64)>>;
    /// `F0` for replica chains, `E0` for walker chains.
    fn cost(&self, x: usize) -> f64;
    /// `F1`, when the chain has a kinetic term.
    fn kinetic(&self, _x: usize) -> Option<f64> {
        None
    }
    fn stationary(&self, t: u64) -> Result<StationaryGuess>;
    /// States whose stationary weight must grow with `t` for every `t`.
    fn increasing_states(&self) -> Vec<bool>;
    /// Per-step lower bound on transition probabilities along moves, for
    /// chains with such a result.
    fn step_bound(&self, _t: u64, _constants: &super::StructuralConstants) -> Result<Option<f64>> {
        Ok(None)
    }
}

/// Full column of `G(·,x;t)` with the diagonal by complement.
pub fn column(model: &dyn ChainModel, x: usize, t: u64) -> Result<Vec<f64>> {
    let mut col = vec![0.0; model.n_states()];
    let mut off = 0.0;
    for (y, p) in model.off_diagonal(x, t)? {
        col[y] += p;
        off += p;
    }
    let diag = 1.0 - off;
    if diag < -STOCHASTIC_TOL {
        return Err(QaeError::Model(format!("negative diagonal {diag} at state {x}, t={t}")));
    }
    col[x] += diag.max(0.0);
    Ok(col)
}

pub fn diagonal(model: &dyn ChainModel, x: usize, t: u64) -> Result<f64> {
    let off: f64 = model.off_diagonal(x, t)?.iter().map(|(_, p)| p).sum();
    let diag = 1.0 - off;
    if diag < -STOCHASTIC_TOL {
        return Err(QaeError::Model(format!("negative diagonal {diag} at state {x}, t={t}")));
    }
    Ok(diag.max(0.0))
}

/// Exact `G(t)`.
pub fn build_matrix(model: &dyn ChainModel, t: u64) -> Result<TransitionMatrix> {
    let n = model.n_states();
    let columns = (0..n).map(|x| column(model, x, t)).collect::<Result<Vec<_>>>()?;
    TransitionMatrix::from_columns(n, &columns, t)
}

/// `G(t_end - 1) ··· G(t_start)`.
pub fn product_matrix(model: &dyn ChainModel, t_start: u64, t_end: u64) -> Result<TransitionMatrix> {
    let mut acc = TransitionMatrix::identity(model.n_states(), t_start);
    for t in t_start..t_end {
        acc = acc.then(&build_matrix(model, t)?)?;
    }
    Ok(acc)
}

fn normalize_log_weights(log_w: &[f64]) -> Vec<f64> {
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Single-flip Metropolis-type chain on the replica space.
#[derive(Debug)]
pub struct ReplicaChain {
    n_spins: usize,
    trotter_m: usize,
    beta: f64,
    acceptance: Acceptance,
    schedule: ScaledSchedule,
    f0: Vec<f64>,
    f1: Vec<f64>,
    tsallis: bool,
}

impl ReplicaChain {
    pub fn from_spec(spec: &ChainSpec) -> Result<Self> {
        let beta = spec.require(spec.beta, "beta")?;
        let trotter_m = spec.require(spec.trotter_m, "trotter_m")?;
        let acceptance_spec = spec
            .acceptance
            .clone()
            .ok_or_else(|| QaeError::Configuration(format!("chain '{}' requires 'acceptance'", spec.kind)))?;
        let tsallis = spec.kind == "pimc_tsallis";
        if tsallis != acceptance_spec.q.is_some() {
            return Err(QaeError::Configuration(format!(
                "chain '{}' does not match acceptance '{}'",
                spec.kind, acceptance_spec.kind
            )));
        }
        let n = spec.instance.n_spins();
        check_capacity(n * trotter_m, REPLICA_CAP)?;
        let states = 1usize << (n * trotter_m);
        let mut f0 = Vec::with_capacity(states);
        let mut f1 = Vec::with_capacity(states);
        for idx in 0..states {
            let r = ReplicaConfig::from_index(idx, n, trotter_m);
            f0.push(replica_f0(&spec.instance, &r)?);
            f1.push(replica_f1(&r));
        }
        Ok(ReplicaChain {
            n_spins: n,
            trotter_m,
            beta,
            acceptance: Acceptance::from_spec(&acceptance_spec)?,
            schedule: build_schedule(&spec.schedule)?,
            f0,
            f1,
            tsallis,
        })
    }

    pub fn t0(&self) -> f64 {
        1.0 / self.beta
    }

    pub fn t1(&self, t: u64) -> Result<f64> {
        Ok(kinetic_temperature(&self.schedule, t, self.beta, self.trotter_m)?.t1)
    }

    pub fn g_at_one(&self) -> f64 {
        self.acceptance.g_at_one()
    }

    fn sites(&self) -> usize {
        self.n_spins * self.trotter_m
    }
}

impl ChainModel for ReplicaChain {
    fn kind(&self) -> &'static str {
        if self.tsallis {
            "pimc_tsallis"
        } else {
            "pimc_boltzmann"
        }
    }

    fn n_states(&self) -> usize {
        self.f0.len()
    }

    fn schedule(&self) -> &ScaledSchedule {
        &self.schedule
    }

    fn proposals(&self, x: usize) -> Vec<(usize, f64)> {
        let p = 1.0 / self.sites() as f64;
        (0..self.sites()).map(|b| (x ^ (1 << b), p)).collect()
    }

    fn off_diagonal(&self, x: usize, t: u64) -> Result<Vec<(usize, f64)>> {
        let (t0, t1) = (self.t0(), self.t1(t)?);
        let p = 1.0 / self.sites() as f64;
        Ok((0..self.sites())
            .map(|b| {
                let y = x ^ (1 << b);
                let d = self.acceptance.decide(self.f0[y] - self.f0[x], self.f1[y] - self.f1[x], t0, t1);
                (y, p * d.probability)
            })
            .collect())
    }

    fn cost(&self, x: usize) -> f64 {
        self.f0[x]
    }

    fn kinetic(&self, x: usize) -> Option<f64> {
        Some(self.f1[x])
    }

    fn stationary(&self, t: u64) -> Result<StationaryGuess> {
        let (t0, t1) = (self.t0(), self.t1(t)?);
        let log_w: Vec<f64> = self
            .f0
            .iter()
            .zip(&self.f1)
            .map(|(a, b)| -a / t0 - if t1.is_infinite() { 0.0 } else { b / t1 })
            .collect();
        Ok(StationaryGuess { q: normalize_log_weights(&log_w), source: "replica_boltzmann", asserted: !self.tsallis })
    }

    fn increasing_states(&self) -> Vec<bool> {
        let min = self.f1.iter().copied().fold(f64::INFINITY, f64::min);
        self.f1.iter().map(|v| (v - min).abs() < 1e-9).collect()
    }

    fn step_bound(&self, t: u64, c: &super::StructuralConstants) -> Result<Option<f64>> {
        if self.tsallis {
            return Ok(None);
        }
        let t1 = self.t1(t)?;
        let kinetic = if t1.is_infinite() { 0.0 } else { c.l1 / t1 };
        Ok(Some(c.w_min * self.g_at_one() * (-c.l0 / self.t0() - kinetic).exp()))
    }
}

/// Walker chain of the linear or exponential Green's function.
#[derive(Debug)]
pub struct WalkerChain {
    n_spins: usize,
    params: GfmcParams,
    schedule: ScaledSchedule,
    instance: IsingInstance,
    energies: Vec<f64>,
}

impl WalkerChain {
    pub fn from_spec(spec: &ChainSpec, variant: Variant) -> Result<Self> {
        let n = spec.instance.n_spins();
        check_capacity(n, DEFAULT_ENUMERATION_CAP)?;
        let params = GfmcParams::new(spec.require(spec.dt, "dt")?, spec.require(spec.e_t, "e_t")?, 1, variant)?;
        Ok(WalkerChain {
            n_spins: n,
            params,
            schedule: build_schedule(&spec.schedule)?,
            instance: spec.instance.clone(),
            energies: energy_table(&spec.instance)?,
        })
    }

    pub fn params(&self) -> &GfmcParams {
        &self.params
    }

    pub fn gamma(&self, t: u64) -> Result<f64> {
        walker_gamma(&self.schedule, t)
    }
}

impl ChainModel for WalkerChain {
    fn kind(&self) -> &'static str {
        match self.params.variant {
            Variant::G1 => "gfmc_g1",
            Variant::G2 => "gfmc_g2",
        }
    }

    fn n_states(&self) -> usize {
        self.energies.len()
    }

    fn schedule(&self) -> &ScaledSchedule {
        &self.schedule
    }

    /// Single flips for the linear form; every other state for the exponential one.
    fn proposals(&self, x: usize) -> Vec<(usize, f64)> {
        match self.params.variant {
            Variant::G1 => (0..self.n_spins).map(|i| (x ^ (1 << i), 1.0 / self.n_spins as f64)).collect(),
            Variant::G2 => {
                let p = 1.0 / (self.n_states() - 1) as f64;
                (0..self.n_states()).filter(|y| *y != x).map(|y| (y, p)).collect()
            }
        }
    }

    fn off_diagonal(&self, x: usize, t: u64) -> Result<Vec<(usize, f64)>> {
        let gamma = self.gamma(t)?;
        match self.params.variant {
            Variant::G1 => {
                let row = g1_row(self.energies[x], self.n_spins, gamma, &self.params)
                    .map_err(|e| QaeError::Model(e.to_string()))?;
                Ok((0..self.n_spins).map(|i| (x ^ (1 << i), row.move_each)).collect())
            }
            Variant::G2 => Ok((0..self.n_states())
                .filter(|y| *y != x)
                .map(|y| {
                    let d = (x ^ y).count_ones() as usize;
                    (y, g2_transition(d, self.n_spins, self.params.dt, gamma))
                })
                .collect()),
        }
    }

    fn cost(&self, x: usize) -> f64 {
        self.energies[x]
    }

    fn stationary(&self, t: u64) -> Result<StationaryGuess> {
        match self.params.variant {
            Variant::G1 => Ok(StationaryGuess {
                q: stationary_q1(&self.instance, self.gamma(t)?, &self.params)?,
                source: "walker_weight_ratio",
                asserted: true,
            }),
            Variant::G2 => {
                let n = self.n_states();
                Ok(StationaryGuess { q: vec![1.0 / n as f64; n], source: "uniform", asserted: true })
            }
        }
    }

    fn increasing_states(&self) -> Vec<bool> {
        match self.params.variant {
            Variant::G1 => self.energies.iter().map(|e| *e < 0.0).collect(),
            Variant::G2 => vec![false; self.n_states()],
        }
    }

    fn step_bound(&self, t: u64, c: &super::StructuralConstants) -> Result<Option<f64>> {
        if self.params.variant != Variant::G1 {
            return Ok(None);
        }
        let a = self.params.dt * self.gamma(t)?;
        let denom = 1.0 - self.params.dt * (c.cost_min - self.params.e_t) + self.n_spins as f64 * a;
        Ok(Some(a / denom))
    }
}

type Constructor = fn(&ChainSpec) -> Result<Arc<dyn ChainModel>>;

/// Chain kinds by name.
pub struct ChainRegistry {
    constructors: BTreeMap<&'static str, Constructor>,
}

impl ChainRegistry {
    pub fn empty() -> Self {
        ChainRegistry { constructors: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("pimc_boltzmann", |s| Ok(Arc::new(ReplicaChain::from_spec(s)?)));
        reg.register("pimc_tsallis", |s| Ok(Arc::new(ReplicaChain::from_spec(s)?)));
        reg.register("gfmc_g1", |s| Ok(Arc::new(WalkerChain::from_spec(s, Variant::G1)?)));
        reg.register("gfmc_g2", |s| Ok(Arc::new(WalkerChain::from_spec(s, Variant::G2)?)));
        reg
    }

    pub fn register(&mut self, name: &'static str, constructor: Constructor) {
        self.constructors.insert(name, constructor);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.constructors.keys().copied().collect()
    }

    pub fn build(&self, spec: &ChainSpec) -> Result<Arc<dyn ChainModel>> {
        let ctor = self.constructors.get(spec.kind.as_str()).ok_or_else(|| QaeError::UnknownName {
            family: "chain",
            name: spec.kind.clone(),
            known: self.names().join(", "),
        })?;
        ctor(spec)
    }
}

pub fn build_chain(spec: &ChainSpec) -> Result<Arc<dyn ChainModel>> {
    ChainRegistry::builtin().build(spec)
}
