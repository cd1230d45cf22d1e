//! Trotter-replicated spin configurations and the two energy terms of the
//! classical replica system.
//!
//! With `T0 = 1/β` and `T1 = 1/γ`,
//! `F0 = -(1/M) Σ_k [Σ_{i<j} J_ij S_i^k S_j^k + Σ_i h_i S_i^k]` and
//! `F1 = -Σ_k Σ_i S_i^k S_i^{k+1}` (slice index periodic), so that
//! `-F0/T0 - F1/T1` is the exponent of the Suzuki–Trotter weight.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QaeError, Result};
use crate::ising::{IsingInstance, SpinConfig};

/// `N × M` array of ±1 spins stored slice-major: spin `i` of slice `k` at `k·N + i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReplicaConfig {
    n_spins: usize,
    slices: usize,
    spins: Vec<i8>,
}

impl ReplicaConfig {
    pub fn new(n_spins: usize, slices: usize, spins: Vec<i8>) -> Result<Self> {
        if n_spins == 0 || slices == 0 {
            return Err(QaeError::InvalidArgument("replica needs N >= 1 and M >= 1".into()));
        }
        if spins.len() != n_spins * slices {
            return Err(QaeError::InvalidArgument(format!(
                "expected {} replica spins, got {}",
                n_spins * slices,
                spins.len()
            )));
        }
        if spins.iter().any(|s| *s != 1 && *s != -1) {
            return Err(QaeError::InvalidArgument("replica spins must be ±1".into()));
        }
        Ok(ReplicaConfig { n_spins, slices, spins })
    }

    /// Every slice a copy of `config`.
    pub fn replicated(config: &SpinConfig, slices: usize) -> Self {
        let spins = (0..slices).flat_map(|_| config.spins().iter().copied()).collect();
        ReplicaConfig { n_spins: config.len(), slices, spins }
    }

    /// Independent uniformly random spins, the large-Γ equilibrium.
    pub fn random<R: Rng + ?Sized>(n_spins: usize, slices: usize, rng: &mut R) -> Self {
        let spins = (0..n_spins * slices).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        ReplicaConfig { n_spins, slices, spins }
    }

    /// Canonical binary-counting state `index` over all `N·M` spins.
    pub fn from_index(index: usize, n_spins: usize, slices: usize) -> Self {
        let flat = SpinConfig::from_index(index, n_spins * slices);
        ReplicaConfig { n_spins, slices, spins: flat.spins().to_vec() }
    }

    pub fn index(&self) -> usize {
        self.spins
            .iter()
            .enumerate()
            .fold(0, |acc, (b, s)| if *s < 0 { acc | 1 << b } else { acc })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn get(&self, site: usize, slice: usize) -> i8 {
        self.spins[slice * self.n_spins + site]
    }

    pub fn slice(&self, slice: usize) -> &[i8] {
        &self.spins[slice * self.n_spins..(slice + 1) * self.n_spins]
    }

    pub fn flip(&mut self, site: usize, slice: usize) {
        let idx = slice * self.n_spins + site;
        self.spins[idx] = -self.spins[idx];
    }

    pub fn flipped(&self, site: usize, slice: usize) -> Self {
        let mut out = self.clone();
        out.flip(site, slice);
        out
    }

    pub fn slice_config(&self, slice: usize) -> SpinConfig {
        SpinConfig::new(self.slice(slice).to_vec()).expect("replica spins are ±1")
    }

    /// Change of `F1` when spin `(site, slice)` flips.
    pub fn delta_f1(&self, site: usize, slice: usize) -> f64 {
        if self.slices == 1 {
            return 0.0;
        }
        let m = self.slices;
        let s = self.get(site, slice);
        let up = self.get(site, (slice + 1) % m);
        let down = self.get(site, (slice + m - 1) % m);
        2.0 * f64::from(s) * f64::from(up + down)
    }

    /// Change of the slice energy `E0(slice)` when spin `(site, slice)` flips.
    pub fn delta_slice_energy(&self, instance: &IsingInstance, site: usize, slice: usize) -> f64 {
        let s = self.slice(slice);
        2.0 * f64::from(s[site]) * instance.local_field(site, s)
    }
}

fn check_dims(instance: &IsingInstance, config: &ReplicaConfig) -> Result<()> {
    if instance.n_spins() != config.n_spins() {
        return Err(QaeError::InvalidArgument(format!(
            "replica has {} sites, instance has {}",
            config.n_spins(),
            instance.n_spins()
        )));
    }
    Ok(())
}

/// Classical term `F0`: the slice-averaged Ising energy.
pub fn replica_f0(instance: &IsingInstance, config: &ReplicaConfig) -> Result<f64> {
    check_dims(instance, config)?;
    let total: f64 = (0..config.slices()).map(|k| instance.energy_of(config.slice(k))).sum();
    Ok(total / config.slices() as f64)
}

/// Kinetic term `F1 = -Σ_k Σ_i S_i^k S_i^{k+1}` with periodic slices.
/// For `M = 1` every bond is `S·S = 1` and `F1 = -N`.
pub fn replica_f1(config: &ReplicaConfig) -> f64 {
    let m = config.slices();
    let mut total = 0i64;
    for k in 0..m {
        let next = (k + 1) % m;
        for i in 0..config.n_spins() {
            total += i64::from(config.get(i, k) * config.get(i, next));
        }
    }
    -(total as f64)
}

/// Analytic move-graph constants of the single-flip replica chain: the reach
/// radius `R = N·M` (a hypercube of dimension `N·M`) and the maximal kinetic
/// change `L1` (4 for `M ≥ 2`, 0 for a single slice).
pub fn replica_radius_and_l1(n_spins: usize, slices: usize) -> (usize, f64) {
    let l1 = if slices >= 2 { 4.0 } else { 0.0 };
    (n_spins * slices, l1)
}
