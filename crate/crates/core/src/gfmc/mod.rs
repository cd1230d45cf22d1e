//! Green's-function Monte Carlo: weighted walkers under the linear and
//! exponential Green's functions, plus exact propagation for small systems.

pub mod exact;
pub mod green;
pub mod walkers;

pub use exact::{apply_green, iterate_exact, iterate_exact_from, iterate_exact_scaled, ScaledPsi};
pub use green::{
    energy_ceiling, g1_acceptance, g1_hat, g1_row, g1_transition, g2_flip_probability, g2_transition, g2_weight,
    stationary_q1, stationary_q1_forms, weight_of, weight_w, EnergyReference, G1Row, GfmcParams, PopulationControl,
    StationaryQ1, Variant,
};
pub use walkers::{run_gfmc, step_population, walker_gamma, GfmcRunOptions, GfmcTrace, Walker, WalkerPopulation};
