//! Path-integral Monte Carlo on the Suzuki–Trotter replica system.

pub mod acceptance;
pub mod engine;
pub mod replica;
pub mod trotter;

pub use acceptance::{
    acceptance_g, boltzmann_u, tsallis_u, Acceptance, AcceptanceFn, AcceptanceForm, AcceptanceRegistry,
    AcceptanceSpec, HeatBath, Metropolis,
};
pub use engine::{
    boltzmann_ratio, chain_rng, kinetic_temperature, mc_sweep, replica_tsallis_u, run_annealing, AnnealTrace,
    ChainStats, InitialState, PimcChain, PimcParams, RunOptions,
};
pub use replica::{replica_f0, replica_f1, replica_radius_and_l1, ReplicaConfig};
pub use trotter::{exact_partition_function, trotter_partition_function, trotter_partition_function_enumerated};
