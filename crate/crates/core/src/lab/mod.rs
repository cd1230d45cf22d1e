//! Exact laboratory for small systems: transition matrices, ergodicity
//! coefficients, structural constants and the convergence checks built on them.

pub mod chains;
pub mod checks;
pub mod matrix;
pub mod structure;

pub use chains::{
    build_chain, build_matrix, column, diagonal, product_matrix, ChainModel, ChainRegistry, ChainSpec, ReplicaChain,
    StationaryGuess, WalkerChain, REPLICA_CAP,
};
pub use checks::{
    condition_iii_sum, default_t_grid, locate_onset, monotonicity_check, stationarity_report, stationarity_residual,
    verify_lemma1, verify_lemma1_model, verify_lemma2, verify_lemma2_model, weak_ergodicity_diagnostic, BlockRow,
    ConditionIii, LabReport, StationarityResidual, WeakErgodicity, Witness,
};
pub use matrix::{check_stochastic, ergodicity_coefficient, tv_diameter, TransitionMatrix};
pub use structure::{eccentricity, graph_radius, structural_constants, StructuralConstants};
