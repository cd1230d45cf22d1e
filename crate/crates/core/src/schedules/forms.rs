//! Closed-form annealing schedules and the Trotter coupling map.
//!
//! `t` is the Monte Carlo step index starting at 0. Path-integral forms use
//! `t + 2` and Green's-function forms use `t + 1`.

use crate::error::{QaeError, Result};

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(QaeError::Domain(format!("{name} must be positive and finite, got {value}")))
    }
}

/// `x ↦ ½·log(coth x)`. This map is its own inverse on `(0, ∞)`.
fn half_log_coth(x: f64) -> f64 {
    0.5 * (2.0 / (2.0 * x).exp_m1()).ln_1p()
}

/// Inter-slice coupling `γ = ½·log(coth(βΓ/M))`.
pub fn trotter_coupling(beta: f64, trotter_m: usize, gamma_field: f64) -> Result<f64> {
    positive("beta", beta)?;
    positive("transverse field", gamma_field)?;
    if trotter_m == 0 {
        return Err(QaeError::Domain("Trotter number must be at least 1".into()));
    }
    Ok(half_log_coth(beta * gamma_field / trotter_m as f64))
}

/// Transverse field `Γ = (M/β)·artanh(e^{-2γ})` producing coupling `γ`.
pub fn inverse_trotter_coupling(beta: f64, trotter_m: usize, coupling: f64) -> Result<f64> {
    positive("beta", beta)?;
    positive("coupling", coupling)?;
    if trotter_m == 0 {
        return Err(QaeError::Domain("Trotter number must be at least 1".into()));
    }
    Ok(trotter_m as f64 / beta * half_log_coth(coupling))
}

/// Fastest transverse-field decay certified for the path-integral chain:
/// `Γ(t) = (M/β)·artanh((t+2)^{-2/(R·L1)})`.
pub fn corollary1_gamma(t: f64, trotter_m: usize, beta: f64, radius: f64, l1: f64) -> Result<f64> {
    positive("R", radius)?;
    positive("L1", l1)?;
    let coupling = (t + 2.0).ln() / (radius * l1);
    inverse_trotter_coupling(beta, trotter_m, coupling)
}

/// Large-`t` power law `(M/β)·(t+2)^{-2/(R·L1)}`.
pub fn power_gamma(t: f64, trotter_m: usize, beta: f64, radius: f64, l1: f64) -> Result<f64> {
    positive("beta", beta)?;
    positive("R", radius)?;
    positive("L1", l1)?;
    Ok(trotter_m as f64 / beta * (t + 2.0).powf(-2.0 / (radius * l1)))
}

/// Kinetic temperature bound `T1(t) = R·L1 / log(t+2)`.
pub fn theorem3_t1(t: f64, radius: f64, l1: f64) -> Result<f64> {
    positive("R", radius)?;
    positive("L1", l1)?;
    Ok(radius * l1 / (t + 2.0).ln())
}

/// Classical simulated-annealing temperature `N / log(t+1)`, defined for `t ≥ 1`.
pub fn geman_geman_t(t: f64, n_size: f64) -> Result<f64> {
    positive("N", n_size)?;
    if t < 1.0 {
        return Err(QaeError::Domain(format!("log-inverse temperature needs t >= 1, got {t}")));
    }
    Ok(n_size / (t + 1.0).ln())
}

/// Generalized-acceptance kinetic temperature `b / (t+2)^c`.
pub fn tsallis_t1(t: f64, b: f64, c: f64) -> Result<f64> {
    positive("b", b)?;
    positive("c", c)?;
    Ok(b / (t + 2.0).powf(c))
}

/// Transverse field matching [`tsallis_t1`]: `(M/β)·exp(-2(t+2)^c / b)`.
pub fn tsallis_gamma(t: f64, b: f64, c: f64, trotter_m: usize, beta: f64) -> Result<f64> {
    positive("b", b)?;
    positive("c", c)?;
    positive("beta", beta)?;
    Ok(trotter_m as f64 / beta * (-2.0 * (t + 2.0).powf(c) / b).exp())
}

/// Rate condition `0 < c ≤ (q-1)/R` for the generalized acceptance.
pub fn tsallis_rate_valid(c: f64, q: f64, radius: f64) -> bool {
    c > 0.0 && q > 1.0 && c <= (q - 1.0) / radius
}

/// Linear Green's-function bound `Γ(t) = b / (t+1)^c`.
pub fn gfmc_gamma(t: f64, b: f64, c: f64) -> Result<f64> {
    positive("b", b)?;
    positive("c", c)?;
    Ok(b / (t + 1.0).powf(c))
}

pub fn gfmc_rate_valid(c: f64, n_spins: usize) -> bool {
    c > 0.0 && c <= 1.0 / n_spins as f64
}

/// Exponential Green's-function bound `Γ(t) = -(1/2Δt)·log(1 - 2b(t+1)^{-1/N})`.
pub fn gfmc_g2_gamma(t: f64, b: f64, dt: f64, n_spins: usize) -> Result<f64> {
    positive("b", b)?;
    positive("dt", dt)?;
    if n_spins == 0 {
        return Err(QaeError::Domain("N must be at least 1".into()));
    }
    let x = 2.0 * b * (t + 1.0).powf(-1.0 / n_spins as f64);
    if x >= 1.0 {
        return Err(QaeError::Domain(format!(
            "exponential Green's-function schedule undefined at t={t}: 2b(t+1)^(-1/N) = {x} >= 1"
        )));
    }
    Ok(-(-x).ln_1p() / (2.0 * dt))
}

/// Order-of-magnitude run lengths for the transverse field to reach `δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdEstimate {
    /// `t1 ~ exp((R·L1/2)·log(M/(βδ)))`.
    PimcT1 { r_l1: f64, trotter_m: usize, beta: f64 },
    /// `t2 ~ exp(N·log(log(1/δ)))`.
    TsallisT2 { n_spins: usize },
}

pub fn time_to_threshold(delta: f64, estimate: ThresholdEstimate) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(QaeError::Domain(format!("threshold must lie in (0, 1), got {delta}")));
    }
    match estimate {
        ThresholdEstimate::PimcT1 { r_l1, trotter_m, beta } => {
            positive("R*L1", r_l1)?;
            positive("beta", beta)?;
            Ok((0.5 * r_l1 * (trotter_m as f64 / (beta * delta)).ln()).exp())
        }
        ThresholdEstimate::TsallisT2 { n_spins } => {
            Ok((n_spins as f64 * (1.0 / delta).ln().ln()).exp())
        }
    }
}
