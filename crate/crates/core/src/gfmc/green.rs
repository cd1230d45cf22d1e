//! Matrix elements of the two Green's functions in the σ^z basis, their
//! weights and normalized transition probabilities.
//!
//! Linear form: `Ĝ1 = 1 - Δt(H - E_T)` with diagonal `1 - Δt(E0(x) - E_T)`,
//! `ΔtΓ` between single-flip neighbours and zero otherwise. The walker weight
//! is the column sum `w(x) = 1 - Δt(E0(x) - E_T) + NΔtΓ`.
//!
//! Exponential form: `Ĝ2 = exp(ΔtΓΣσ^x)·exp(-ΔtE0)`, whose normalized
//! transition `{cosh(ΔtΓ)/e^{ΔtΓ}}^N·tanh^δ(ΔtΓ)` depends only on the Hamming
//! distance `δ` and has weight `w2(x) = e^{ΔtNΓ}·e^{-ΔtE0(x)}`.

use serde::{Deserialize, Serialize};

use crate::error::{QaeError, Result};
use crate::ising::{energy_table, ground_states_bruteforce, IsingInstance, SpinConfig, DEFAULT_ENUMERATION_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    G1,
    G2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationControl {
    None,
    /// Split walkers heavier than `split·mean`, stochastically kill those lighter than `kill·mean`.
    SplitKill { split: f64, kill: f64 },
}

impl Default for PopulationControl {
    fn default() -> Self {
        PopulationControl::None
    }
}

/// How the reference energy `E_T` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyReference {
    /// Midpoint of the coupling-sum bounds `±(Σ|J| + Σ|h|)`.
    Midpoint,
    /// Exact ground energy by enumeration.
    GroundState,
    Value(f64),
}

impl EnergyReference {
    pub fn resolve(self, instance: &IsingInstance) -> Result<f64> {
        match self {
            EnergyReference::Midpoint => Ok(0.0),
            EnergyReference::GroundState => Ok(ground_states_bruteforce(instance)?.e_min),
            EnergyReference::Value(v) if v.is_finite() => Ok(v),
            EnergyReference::Value(v) => Err(QaeError::Configuration(format!("reference energy {v} is not finite"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GfmcParams {
    pub dt: f64,
    pub e_t: f64,
    pub n_walkers: usize,
    pub variant: Variant,
    #[serde(default)]
    pub population_control: PopulationControl,
}

/// Largest `E0` over all states: exact when enumerable, else the coupling-sum bound.
pub fn energy_ceiling(instance: &IsingInstance) -> f64 {
    if instance.n_spins() <= DEFAULT_ENUMERATION_CAP {
        if let Ok(gs) = ground_states_bruteforce(instance) {
            return gs.e_max;
        }
    }
    instance.energy_bound()
}

impl GfmcParams {
    pub fn new(dt: f64, e_t: f64, n_walkers: usize, variant: Variant) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(QaeError::Configuration(format!("dt must be positive, got {dt}")));
        }
        if !e_t.is_finite() {
            return Err(QaeError::Configuration("reference energy must be finite".into()));
        }
        if n_walkers == 0 {
            return Err(QaeError::Configuration("n_walkers must be at least 1".into()));
        }
        Ok(GfmcParams { dt, e_t, n_walkers, variant, population_control: PopulationControl::None })
    }

    /// `Δt = 0.5 / (E_max - E_T + N·Γ0)` with `E_max` bounded by `Σ|J| + Σ|h|`.
    pub fn auto(
        instance: &IsingInstance,
        gamma0: f64,
        n_walkers: usize,
        variant: Variant,
        reference: EnergyReference,
    ) -> Result<Self> {
        let bound = instance.energy_bound();
        let e_t = reference.resolve(instance)?;
        let dt = 0.5 / (bound - e_t + instance.n_spins() as f64 * gamma0).max(f64::MIN_POSITIVE);
        GfmcParams::new(dt, e_t, n_walkers, variant)
    }

    pub fn with_population_control(mut self, control: PopulationControl) -> Self {
        self.population_control = control;
        self
    }

    /// Checks `1 - Δt(E0(x) - E_T) ≥ 0` for every state.
    pub fn validate_for(&self, instance: &IsingInstance) -> Result<()> {
        if self.variant == Variant::G1 {
            let e_max = energy_ceiling(instance);
            let diag = 1.0 - self.dt * (e_max - self.e_t);
            if diag < 0.0 {
                return Err(QaeError::Configuration(format!(
                    "dt={} and E_T={} give a negative Green's-function diagonal {diag} at E0={e_max}",
                    self.dt, self.e_t
                )));
            }
        }
        if let PopulationControl::SplitKill { split, kill } = self.population_control {
            if !(split > 1.0 && kill > 0.0 && kill < 1.0) {
                return Err(QaeError::Configuration(format!(
                    "split/kill thresholds need split > 1 and 0 < kill < 1, got {split}/{kill}"
                )));
            }
        }
        Ok(())
    }
}

fn diagonal(params: &GfmcParams, e0: f64) -> f64 {
    1.0 - params.dt * (e0 - params.e_t)
}

/// `Ĝ1(y, x)` at transverse field `gamma`.
pub fn g1_hat(instance: &IsingInstance, y: &SpinConfig, x: &SpinConfig, gamma: f64, params: &GfmcParams) -> Result<f64> {
    let e0 = crate::ising::energy(instance, x)?;
    let diag = diagonal(params, e0);
    if diag < 0.0 {
        return Err(QaeError::Configuration(format!(
            "negative Green's-function diagonal {diag} at state {:?}",
            x.spins()
        )));
    }
    Ok(match y.hamming(x) {
        0 => diag,
        1 => params.dt * gamma,
        _ => 0.0,
    })
}

/// Walker weight `w(x) = 1 - Δt(E0(x) - E_T) + NΔtΓ`.
pub fn weight_w(e0: f64, n_spins: usize, gamma: f64, params: &GfmcParams) -> f64 {
    diagonal(params, e0) + n_spins as f64 * params.dt * gamma
}

pub fn weight_of(instance: &IsingInstance, x: &SpinConfig, gamma: f64, params: &GfmcParams) -> Result<f64> {
    Ok(weight_w(crate::ising::energy(instance, x)?, instance.n_spins(), gamma, params))
}

/// Normalized row of `G1` out of one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct G1Row {
    pub stay: f64,
    /// Probability of moving to each single-flip neighbour.
    pub move_each: f64,
}

pub fn g1_row(e0: f64, n_spins: usize, gamma: f64, params: &GfmcParams) -> Result<G1Row> {
    let w = weight_w(e0, n_spins, gamma, params);
    if !(w > 0.0) {
        return Err(QaeError::Configuration(format!("walker weight {w} is not positive at E0={e0}")));
    }
    let move_each = params.dt * gamma / w;
    let stay = 1.0 - n_spins as f64 * move_each;
    if stay < 0.0 {
        return Err(QaeError::Configuration(format!(
            "stay probability {stay} is negative at E0={e0}; dt too large"
        )));
    }
    Ok(G1Row { stay, move_each })
}

pub fn g1_transition(instance: &IsingInstance, x: &SpinConfig, gamma: f64, params: &GfmcParams) -> Result<G1Row> {
    g1_row(crate::ising::energy(instance, x)?, instance.n_spins(), gamma, params)
}

/// Acceptance probability `NΔtΓ / w(x)` for a proposal drawn with `P = 1/N`.
pub fn g1_acceptance(e0: f64, n_spins: usize, gamma: f64, params: &GfmcParams) -> f64 {
    n_spins as f64 * params.dt * gamma / weight_w(e0, n_spins, gamma, params)
}

/// Stationary distribution of `G1`, evaluated both as `w/Σw` and in the
/// closed form `2^{-N} - ΔtE0(x) / (2^N(1 + ΔtE_T + NΔtΓ))`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryQ1 {
    pub normalized_weights: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub max_difference: f64,
}

pub fn stationary_q1_forms(instance: &IsingInstance, gamma: f64, params: &GfmcParams) -> Result<StationaryQ1> {
    let n = instance.n_spins();
    let energies = energy_table(instance)?;
    let trace: f64 = energies.iter().sum();
    let scale = energies.iter().map(|e| e.abs()).sum::<f64>().max(1.0);
    if trace.abs() > 1e-9 * scale {
        return Err(QaeError::Model(format!("Σ_x E0(x) = {trace} is not zero")));
    }
    let weights: Vec<f64> = energies.iter().map(|e| weight_w(*e, n, gamma, params)).collect();
    let total: f64 = weights.iter().sum();
    let normalized_weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let states = (1usize << n) as f64;
    let denom = states * (1.0 + params.dt * params.e_t + n as f64 * params.dt * gamma);
    let closed_form: Vec<f64> = energies.iter().map(|e| 1.0 / states - params.dt * e / denom).collect();
    let max_difference = normalized_weights
        .iter()
        .zip(&closed_form)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(StationaryQ1 { normalized_weights, closed_form, max_difference })
}

/// Stationary distribution of `G1`; the two closed forms must agree to 1e-12.
pub fn stationary_q1(instance: &IsingInstance, gamma: f64, params: &GfmcParams) -> Result<Vec<f64>> {
    let forms = stationary_q1_forms(instance, gamma, params)?;
    if forms.max_difference > 1e-12 {
        return Err(QaeError::Model(format!(
            "stationary forms disagree by {}",
            forms.max_difference
        )));
    }
    Ok(forms.closed_form)
}

/// Per-spin flip probability of the factorized `G2`: `sinh(a)/e^a = (1 - e^{-2a})/2`, `a = ΔtΓ`.
pub fn g2_flip_probability(dt: f64, gamma: f64) -> f64 {
    -0.5 * (-2.0 * dt * gamma).exp_m1()
}

/// `G2(y, x) = {cosh(a)/e^a}^N · tanh^δ(a)` with `δ` the Hamming distance.
pub fn g2_transition(hamming: usize, n_spins: usize, dt: f64, gamma: f64) -> f64 {
    let a = dt * gamma;
    // cosh(a)/e^a = (1 + e^{-2a})/2
    let stay_factor = 0.5 * (1.0 + (-2.0 * a).exp());
    stay_factor.powi(n_spins as i32) * a.tanh().powi(hamming as i32)
}

/// Weight `w2(x) = e^{ΔtNΓ}·e^{-ΔtE0(x)}`.
pub fn g2_weight(e0: f64, n_spins: usize, dt: f64, gamma: f64) -> f64 {
    (dt * (n_spins as f64 * gamma - e0)).exp()
}
