//! Classical Ising cost functions, spin configurations and move sets.
//!
//! The cost of a configuration is
//! `E0(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i`.
//! States of an `n`-spin system are enumerated in binary counting order:
//! state index `k` has spin `i` equal to `+1` when bit `i` of `k` is clear.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{QaeError, Result};

/// Largest spin count the exact routines will enumerate by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Tolerance used to decide that two energies are degenerate.
const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct IsingInstance {
    n_spins: usize,
    couplings: BTreeMap<(usize, usize), f64>,
    fields: Vec<f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

/// On-disk layout: `{"n_spins": n, "couplings": [[i, j, J], ...], "fields": [[i, h], ...]}`.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    n_spins: usize,
    #[serde(default)]
    couplings: Vec<(usize, usize, f64)>,
    #[serde(default)]
    fields: Vec<(usize, f64)>,
}

impl TryFrom<InstanceFile> for IsingInstance {
    type Error = QaeError;

    fn try_from(file: InstanceFile) -> Result<Self> {
        IsingInstance::from_parts(file.n_spins, &file.couplings, &file.fields)
    }
}

impl From<IsingInstance> for InstanceFile {
    fn from(inst: IsingInstance) -> Self {
        InstanceFile {
            n_spins: inst.n_spins,
            couplings: inst.couplings().collect(),
            fields: inst
                .fields
                .iter()
                .enumerate()
                .filter(|(_, h)| **h != 0.0)
                .map(|(i, h)| (i, *h))
                .collect(),
        }
    }
}

impl IsingInstance {
    /// An instance with no couplings and zero fields.
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(QaeError::InvalidArgument("n_spins must be at least 1".into()));
        }
        Ok(IsingInstance {
            n_spins,
            couplings: BTreeMap::new(),
            fields: vec![0.0; n_spins],
            adjacency: vec![Vec::new(); n_spins],
        })
    }

    pub fn from_parts(
        n_spins: usize,
        couplings: &[(usize, usize, f64)],
        fields: &[(usize, f64)],
    ) -> Result<Self> {
        let mut inst = IsingInstance::new(n_spins)?;
        for &(i, j, value) in couplings {
            let key = (i.min(j), i.max(j));
            if inst.couplings.contains_key(&key) {
                return Err(QaeError::InvalidArgument(format!(
                    "coupling ({}, {}) listed twice",
                    key.0, key.1
                )));
            }
            inst.set_coupling(i, j, value)?;
        }
        for &(i, h) in fields {
            inst.set_field(i, h)?;
        }
        Ok(inst)
    }

    /// Every pair coupled with strength `j`.
    pub fn complete(n_spins: usize, j: f64) -> Result<Self> {
        let mut inst = IsingInstance::new(n_spins)?;
        for a in 0..n_spins {
            for b in a + 1..n_spins {
                inst.set_coupling(a, b, j)?;
            }
        }
        Ok(inst)
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i == j {
            return Err(QaeError::InvalidArgument(format!("self-coupling ({i}, {i})")));
        }
        if i >= self.n_spins || j >= self.n_spins {
            return Err(QaeError::InvalidArgument(format!(
                "coupling ({i}, {j}) out of range for {} spins",
                self.n_spins
            )));
        }
        if !value.is_finite() {
            return Err(QaeError::InvalidArgument(format!("coupling ({i}, {j}) is not finite")));
        }
        self.couplings.insert((i.min(j), i.max(j)), value);
        self.rebuild_adjacency();
        Ok(())
    }

    pub fn set_field(&mut self, i: usize, h: f64) -> Result<()> {
        if i >= self.n_spins {
            return Err(QaeError::InvalidArgument(format!(
                "field index {i} out of range for {} spins",
                self.n_spins
            )));
        }
        if !h.is_finite() {
            return Err(QaeError::InvalidArgument(format!("field {i} is not finite")));
        }
        self.fields[i] = h;
        Ok(())
    }

    fn rebuild_adjacency(&mut self) {
        let mut adjacency = vec![Vec::new(); self.n_spins];
        for (&(i, j), &value) in &self.couplings {
            adjacency[i].push((j, value));
            adjacency[j].push((i, value));
        }
        self.adjacency = adjacency;
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// Couplings as `(i, j, J_ij)` with `i < j`.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.couplings.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn has_fields(&self) -> bool {
        self.fields.iter().any(|h| *h != 0.0)
    }

    /// Neighbours of spin `i` in the coupling graph with their strengths.
    pub fn adjacent(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// `E0` of a raw ±1 slice. Length is not checked.
    pub fn energy_of(&self, spins: &[i8]) -> f64 {
        let bonds: f64 = self
            .couplings
            .iter()
            .map(|(&(i, j), &v)| v * f64::from(spins[i] * spins[j]))
            .sum();
        let zeeman: f64 = self
            .fields
            .iter()
            .zip(spins)
            .map(|(h, s)| h * f64::from(*s))
            .sum();
        -bonds - zeeman
    }

    /// `sum_j J_ij s_j + h_i`; flipping spin `i` changes `E0` by `2 s_i` times this.
    pub fn local_field(&self, i: usize, spins: &[i8]) -> f64 {
        self.adjacency[i]
            .iter()
            .map(|&(j, v)| v * f64::from(spins[j]))
            .sum::<f64>()
            + self.fields[i]
    }

    /// Upper bound on `|E0|` from the coupling and field magnitudes.
    pub fn energy_bound(&self) -> f64 {
        self.couplings.values().map(|v| v.abs()).sum::<f64>()
            + self.fields.iter().map(|h| h.abs()).sum::<f64>()
    }

    /// Bound on the energy change of flipping spin `i`.
    pub fn flip_bound(&self, i: usize) -> f64 {
        2.0 * self.adjacency[i].iter().map(|(_, v)| v.abs()).sum::<f64>() + 2.0 * self.fields[i].abs()
    }
}

/// A basis state: one ±1 value per spin.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(QaeError::InvalidArgument("empty spin configuration".into()));
        }
        if let Some(bad) = spins.iter().find(|s| **s != 1 && **s != -1) {
            return Err(QaeError::InvalidArgument(format!("spin value {bad} is not ±1")));
        }
        Ok(SpinConfig(spins))
    }

    pub fn all_up(n: usize) -> Self {
        SpinConfig(vec![1; n])
    }

    /// State number `index` of the canonical binary-counting order.
    pub fn from_index(index: usize, n: usize) -> Self {
        SpinConfig((0..n).map(|i| if index >> i & 1 == 0 { 1 } else { -1 }).collect())
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, s)| if *s < 0 { acc | 1 << i } else { acc })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut spins = self.0.clone();
        spins[i] = -spins[i];
        SpinConfig(spins)
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn hamming(&self, other: &SpinConfig) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn global_flip(&self) -> Self {
        SpinConfig(self.0.iter().map(|s| -s).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveSet {
    SingleSpinFlip,
    AllToAll,
}

impl MoveSet {
    /// `P(y, x)` over configurations of `n` spins given by canonical index.
    pub fn generation_probability(self, y: usize, x: usize, n: usize) -> f64 {
        if x == y {
            return 0.0;
        }
        match self {
            MoveSet::SingleSpinFlip => {
                if (x ^ y).count_ones() == 1 {
                    1.0 / n as f64
                } else {
                    0.0
                }
            }
            MoveSet::AllToAll => 1.0 / ((1usize << n) - 1) as f64,
        }
    }

    /// Canonical indices `y` with `P(y, x) > 0`.
    pub fn neighbor_indices(self, x: usize, n: usize) -> Vec<usize> {
        match self {
            MoveSet::SingleSpinFlip => (0..n).map(|i| x ^ (1 << i)).collect(),
            MoveSet::AllToAll => (0..1usize << n).filter(|y| *y != x).collect(),
        }
    }
}

/// The neighbourhood `{y | P(y, x) > 0}` of a configuration.
pub fn neighbors(config: &SpinConfig, moves: MoveSet) -> Vec<SpinConfig> {
    let n = config.len();
    match moves {
        MoveSet::SingleSpinFlip => (0..n).map(|i| config.flipped(i)).collect(),
        MoveSet::AllToAll => {
            let x = config.index();
            MoveSet::AllToAll
                .neighbor_indices(x, n)
                .into_iter()
                .map(|y| SpinConfig::from_index(y, n))
                .collect()
        }
    }
}

pub fn check_capacity(n: usize, cap: usize) -> Result<()> {
    if n > cap || n >= usize::BITS as usize {
        Err(QaeError::Capacity { n, cap })
    } else {
        Ok(())
    }
}

pub fn enumerate_states(n: usize) -> Result<Vec<SpinConfig>> {
    enumerate_states_with_cap(n, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_states_with_cap(n: usize, cap: usize) -> Result<Vec<SpinConfig>> {
    if n == 0 {
        return Err(QaeError::InvalidArgument("n must be at least 1".into()));
    }
    check_capacity(n, cap)?;
    Ok((0..1usize << n).map(|k| SpinConfig::from_index(k, n)).collect())
}

/// All `E0` values in canonical order.
pub fn energy_table(instance: &IsingInstance) -> Result<Vec<f64>> {
    let n = instance.n_spins();
    check_capacity(n, DEFAULT_ENUMERATION_CAP)?;
    Ok((0..1usize << n)
        .map(|k| instance.energy_of(SpinConfig::from_index(k, n).spins()))
        .collect())
}

pub fn energy(instance: &IsingInstance, config: &SpinConfig) -> Result<f64> {
    if config.len() != instance.n_spins() {
        return Err(QaeError::InvalidArgument(format!(
            "configuration has {} spins, instance has {}",
            config.len(),
            instance.n_spins()
        )));
    }
    Ok(instance.energy_of(config.spins()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundStates {
    pub e_min: f64,
    pub e_max: f64,
    pub minimizers: Vec<SpinConfig>,
}

pub fn ground_states_bruteforce(instance: &IsingInstance) -> Result<GroundStates> {
    let table = energy_table(instance)?;
    let e_min = table.iter().copied().fold(f64::INFINITY, f64::min);
    let e_max = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let minimizers = table
        .iter()
        .enumerate()
        .filter(|(_, e)| **e - e_min <= DEGENERACY_TOL)
        .map(|(k, _)| SpinConfig::from_index(k, instance.n_spins()))
        .collect();
    Ok(GroundStates { e_min, e_max, minimizers })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingDistribution {
    /// `J_ij = ±1` with equal probability.
    PlusMinusJ,
    Gaussian { sigma: f64 },
}

/// A fully connected spin glass with i.i.d. couplings and zero fields.
pub fn random_instance(n: usize, distribution: CouplingDistribution, seed: u64) -> Result<IsingInstance> {
    let mut inst = IsingInstance::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = match distribution {
        CouplingDistribution::Gaussian { sigma } => Some(
            Normal::new(0.0, sigma)
                .map_err(|e| QaeError::InvalidArgument(format!("gaussian sigma {sigma}: {e}")))?,
        ),
        CouplingDistribution::PlusMinusJ => None,
    };
    for i in 0..n {
        for j in i + 1..n {
            let value = match &normal {
                Some(dist) => dist.sample(&mut rng),
                None => {
                    if rng.gen::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            inst.set_coupling(i, j, value)?;
        }
    }
    Ok(inst)
}
