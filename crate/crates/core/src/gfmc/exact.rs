//! Exact propagation `ψ_{k+1} = Ĝ(t_k) ψ_k` over the full state space.

use crate::error::{QaeError, Result};
use crate::gfmc::green::{GfmcParams, Variant};
use crate::gfmc::walkers::walker_gamma;
use crate::ising::{check_capacity, energy_table, IsingInstance, DEFAULT_ENUMERATION_CAP};
use crate::schedules::ScaledSchedule;

/// Apply the unnormalized Green's function at field `gamma` to `psi`.
pub fn apply_green(energies: &[f64], n_spins: usize, psi: &[f64], gamma: f64, params: &GfmcParams) -> Result<Vec<f64>> {
    let dt = params.dt;
    match params.variant {
        Variant::G1 => {
            let mut out = vec![0.0; psi.len()];
            for (y, out_y) in out.iter_mut().enumerate() {
                let diag = 1.0 - dt * (energies[y] - params.e_t);
                if diag < 0.0 {
                    return Err(QaeError::Configuration(format!(
                        "negative Green's-function diagonal {diag} at state index {y}"
                    )));
                }
                let hop: f64 = (0..n_spins).map(|i| psi[y ^ (1 << i)]).sum();
                *out_y = diag * psi[y] + dt * gamma * hop;
            }
            Ok(out)
        }
        Variant::G2 => {
            // exp(aσ^x) = cosh(a) + sinh(a)σ^x on each spin, after the diagonal factor.
            let a = dt * gamma;
            let (c, s) = (a.cosh(), a.sinh());
            let mut out: Vec<f64> = psi.iter().zip(energies).map(|(p, e)| p * (-dt * e).exp()).collect();
            for i in 0..n_spins {
                let bit = 1usize << i;
                for x in 0..out.len() {
                    if x & bit == 0 {
                        let (u, v) = (out[x], out[x | bit]);
                        out[x] = c * u + s * v;
                        out[x | bit] = s * u + c * v;
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Wave function stored as a unit-sum vector times `exp(log_norm)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledPsi {
    pub shape: Vec<f64>,
    pub log_norm: f64,
}

/// Like [`iterate_exact_from`] but renormalizes every step, so long runs cannot overflow.
pub fn iterate_exact_scaled(
    instance: &IsingInstance,
    psi0: &[f64],
    schedule: &ScaledSchedule,
    params: &GfmcParams,
    start: u64,
    n_steps: u64,
) -> Result<ScaledPsi> {
    let energies = prepare(instance, psi0)?;
    let n = instance.n_spins();
    let total: f64 = psi0.iter().sum();
    if !(total > 0.0) {
        return Err(QaeError::InvalidArgument("ψ0 must have positive mass".into()));
    }
    let mut shape: Vec<f64> = psi0.iter().map(|v| v / total).collect();
    let mut log_norm = total.ln();
    for k in start..start + n_steps {
        shape = apply_green(&energies, n, &shape, walker_gamma(schedule, k)?, params)?;
        let s: f64 = shape.iter().sum();
        shape.iter_mut().for_each(|v| *v /= s);
        log_norm += s.ln();
    }
    Ok(ScaledPsi { shape, log_norm })
}

fn prepare(instance: &IsingInstance, psi0: &[f64]) -> Result<Vec<f64>> {
    let n = instance.n_spins();
    check_capacity(n, DEFAULT_ENUMERATION_CAP)?;
    if psi0.len() != 1usize << n {
        return Err(QaeError::InvalidArgument(format!("ψ0 has length {}, expected {}", psi0.len(), 1usize << n)));
    }
    if psi0.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(QaeError::InvalidArgument("ψ0 must be finite and non-negative".into()));
    }
    energy_table(instance)
}

/// `n_steps` exact iterations starting from time `start`.
pub fn iterate_exact_from(
    instance: &IsingInstance,
    psi0: &[f64],
    schedule: &ScaledSchedule,
    params: &GfmcParams,
    start: u64,
    n_steps: u64,
) -> Result<Vec<f64>> {
    let n = instance.n_spins();
    let energies = prepare(instance, psi0)?;
    let mut psi = psi0.to_vec();
    for k in start..start + n_steps {
        psi = apply_green(&energies, n, &psi, walker_gamma(schedule, k)?, params)?;
    }
    if psi.iter().any(|v| !v.is_finite()) {
        return Err(QaeError::Domain("exact propagation overflowed; use the rescaled iteration".into()));
    }
    Ok(psi)
}

pub fn iterate_exact(
    instance: &IsingInstance,
    psi0: &[f64],
    schedule: &ScaledSchedule,
    params: &GfmcParams,
    n_steps: u64,
) -> Result<Vec<f64>> {
    iterate_exact_from(instance, psi0, schedule, params, 0, n_steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfmc::green::{g1_hat, g2_transition};
    use crate::ising::SpinConfig;
    use crate::schedules::{build_schedule, ScheduleSpec};

    fn constant_gamma(v: f64) -> ScaledSchedule {
        build_schedule(&ScheduleSpec::new("constant").param("value", v)).unwrap()
    }

    fn dense_apply(inst: &IsingInstance, psi: &[f64], gamma: f64, params: &GfmcParams) -> Vec<f64> {
        let n = inst.n_spins();
        let energies = energy_table(inst).unwrap();
        (0..psi.len())
            .map(|y| {
                let sy = SpinConfig::from_index(y, n);
                (0..psi.len())
                    .map(|x| {
                        let sx = SpinConfig::from_index(x, n);
                        let g = match params.variant {
                            Variant::G1 => g1_hat(inst, &sy, &sx, gamma, params).unwrap(),
                            Variant::G2 => {
                                let a = params.dt * gamma;
                                g2_transition(sy.hamming(&sx), n, params.dt, gamma)
                                    * (n as f64 * a).exp()
                                    * (-params.dt * energies[x]).exp()
                            }
                        };
                        g * psi[x]
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_dense_matrix() {
        let inst = IsingInstance::from_parts(3, &[(0, 1, 0.7), (1, 2, -1.3)], &[(2, 0.4)]).unwrap();
        let psi: Vec<f64> = (0..8).map(|i| 0.1 + i as f64 * 0.05).collect();
        let energies = energy_table(&inst).unwrap();
        for variant in [Variant::G1, Variant::G2] {
            let params = GfmcParams::new(0.2, -0.5, 1, variant).unwrap();
            let fast = apply_green(&energies, 3, &psi, 0.8, &params).unwrap();
            let dense = dense_apply(&inst, &psi, 0.8, &params);
            for (a, b) in fast.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-13, "{variant:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn scaled_iteration_agrees_with_raw() {
        let inst = IsingInstance::complete(3, 1.0).unwrap();
        let params = GfmcParams::new(0.1, 0.0, 1, Variant::G2).unwrap();
        let psi0 = vec![0.125; 8];
        let raw = iterate_exact(&inst, &psi0, &constant_gamma(0.7), &params, 40).unwrap();
        let scaled = iterate_exact_scaled(&inst, &psi0, &constant_gamma(0.7), &params, 0, 40).unwrap();
        for (r, s) in raw.iter().zip(&scaled.shape) {
            assert!((r - s * scaled.log_norm.exp()).abs() < 1e-12 * r);
        }
    }

    #[test]
    fn zero_steps_is_identity() {
        let inst = IsingInstance::complete(2, 1.0).unwrap();
        let params = GfmcParams::new(0.1, 0.0, 1, Variant::G1).unwrap();
        let psi0 = vec![0.1, 0.2, 0.3, 0.4];
        assert_eq!(iterate_exact(&inst, &psi0, &constant_gamma(1.0), &params, 0).unwrap(), psi0);
    }

    #[test]
    fn free_spin_stays_uniform() {
        let inst = IsingInstance::new(1).unwrap();
        let params = GfmcParams::new(0.1, 0.0, 1, Variant::G1).unwrap();
        let psi = iterate_exact(&inst, &[0.5, 0.5], &constant_gamma(1.0), &params, 25).unwrap();
        assert!((psi[0] - psi[1]).abs() <= 1e-12 * psi[0]);
        assert!((psi[0] - 0.5 * 1.1f64.powi(25)).abs() < 1e-10);
    }

    #[test]
    fn slow_schedule_concentrates_on_ground_states() {
        let inst = IsingInstance::complete(2, 1.0).unwrap();
        let params = GfmcParams::new(0.1, 0.0, 1, Variant::G1).unwrap();
        let schedule = build_schedule(&ScheduleSpec::new("gfmc_power").param("N", 2.0).param("b", 1.0)).unwrap();
        let psi = iterate_exact_scaled(&inst, &[0.25; 4], &schedule, &params, 0, 20_000).unwrap();
        let ground = psi.shape[0] + psi.shape[3];
        assert!(ground >= 0.98, "ground-state mass {ground}");
    }

    #[test]
    fn rejects_bad_input() {
        let inst = IsingInstance::complete(2, 1.0).unwrap();
        let params = GfmcParams::new(0.1, 0.0, 1, Variant::G1).unwrap();
        let s = constant_gamma(1.0);
        assert!(iterate_exact(&inst, &[0.25; 3], &s, &params, 1).is_err());
        assert!(iterate_exact(&inst, &[0.25, -0.1, 0.25, 0.25], &s, &params, 1).is_err());
        let t1 = build_schedule(&ScheduleSpec::new("constant_T1").param("value", 1.0)).unwrap();
        assert!(iterate_exact(&inst, &[0.25; 4], &t1, &params, 1).is_err());
    }
}
