//! Suzuki–Trotter and exact partition functions of the transverse-field
//! Ising Hamiltonian `H = E0(σ^z) - Γ Σ_i σ_i^x`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::replica::{replica_f0, replica_f1, ReplicaConfig};
use crate::error::{QaeError, Result};
use crate::ising::{check_capacity, energy_table, IsingInstance, DEFAULT_ENUMERATION_CAP};
use crate::schedules::trotter_coupling;

/// Per-bond prefactor `sqrt(½·sinh(2βΓ/M))` of the Trotter mapping.
fn bond_prefactor(beta: f64, trotter_m: usize, field: f64) -> f64 {
    (0.5 * (2.0 * beta * field / trotter_m as f64).sinh()).sqrt()
}

/// Dense `H` in the canonical σ^z basis.
pub fn tfim_hamiltonian(instance: &IsingInstance, field: f64) -> Result<DMatrix<f64>> {
    let n = instance.n_spins();
    let energies = energy_table(instance)?;
    let dim = 1usize << n;
    let mut h = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        h[(x, x)] = energies[x];
        for i in 0..n {
            h[(x ^ (1 << i), x)] = -field;
        }
    }
    Ok(h)
}

/// `Tr e^{-βH}` from the spectrum of `H`.
pub fn exact_partition_function(instance: &IsingInstance, beta: f64, field: f64) -> Result<f64> {
    let h = tfim_hamiltonian(instance, field)?;
    let eig = SymmetricEigen::new(h);
    Ok(eig.eigenvalues.iter().map(|l| (-beta * l).exp()).sum())
}

/// Trotter approximation `A^{NM} Σ_S exp(-F0/T0 - F1/T1)` evaluated as the
/// trace of the `M`-th power of the slice transfer matrix.
pub fn trotter_partition_function(instance: &IsingInstance, beta: f64, trotter_m: usize, field: f64) -> Result<f64> {
    let n = instance.n_spins();
    check_capacity(n, DEFAULT_ENUMERATION_CAP.min(12))?;
    let coupling = trotter_coupling(beta, trotter_m, field)?;
    let energies = energy_table(instance)?;
    let dim = 1usize << n;
    let slice_weight: Vec<f64> = energies.iter().map(|e| (-beta * e / trotter_m as f64).exp()).collect();
    let transfer = DMatrix::from_fn(dim, dim, |a, b| {
        let overlap = n as i32 - 2 * (a ^ b).count_ones() as i32;
        slice_weight[a] * (coupling * f64::from(overlap)).exp()
    });
    let mut power = DMatrix::identity(dim, dim);
    for _ in 0..trotter_m {
        power = &power * &transfer;
    }
    let prefactor = bond_prefactor(beta, trotter_m, field).powi((n * trotter_m) as i32);
    Ok(prefactor * power.trace())
}

/// The same quantity by summing over all `2^{N·M}` replica states.
pub fn trotter_partition_function_enumerated(
    instance: &IsingInstance,
    beta: f64,
    trotter_m: usize,
    field: f64,
) -> Result<f64> {
    let n = instance.n_spins();
    let bits = n * trotter_m;
    if bits > DEFAULT_ENUMERATION_CAP {
        return Err(QaeError::Capacity { n: bits, cap: DEFAULT_ENUMERATION_CAP });
    }
    let coupling = trotter_coupling(beta, trotter_m, field)?;
    let mut z = 0.0;
    for idx in 0..1usize << bits {
        let r = ReplicaConfig::from_index(idx, n, trotter_m);
        z += (-beta * replica_f0(instance, &r)? - coupling * replica_f1(&r)).exp();
    }
    Ok(bond_prefactor(beta, trotter_m, field).powi(bits as i32) * z)
}
