//! Named lab checks over exact chains, shared by the `lab` engine and subcommand.

use qae_core::ising::IsingInstance;
use qae_core::lab::{
    build_chain, condition_iii_sum, default_t_grid, monotonicity_check, stationarity_report, structural_constants,
    verify_lemma1_model, verify_lemma2_model, weak_ergodicity_diagnostic, ChainSpec, LabReport,
};
use qae_core::pimc::AcceptanceSpec;
use qae_core::gfmc::Variant;
use qae_core::schedules::ScheduleSpec;
use qae_core::{QaeError, Result};

pub const CHECKS: [&str; 6] = ["lemma1", "lemma2", "stationarity", "monotonicity", "condition_iii", "weak_ergodicity"];

/// Horizon cap for the monotonicity scan; the onset locator stops there.
const MONOTONE_SCAN_CAP: u64 = 10_000;

#[derive(Clone, Debug)]
pub struct LabOptions {
    pub t_max: u64,
    pub blocks: u64,
    pub t_grid: Option<Vec<u64>>,
}

impl Default for LabOptions {
    fn default() -> Self {
        LabOptions { t_max: 10_000, blocks: 200, t_grid: None }
    }
}

impl LabOptions {
    fn grid(&self) -> Vec<u64> {
        if let Some(g) = &self.t_grid {
            return g.clone();
        }
        let grid: Vec<u64> = default_t_grid().into_iter().filter(|t| *t <= self.t_max).collect();
        if grid.is_empty() {
            vec![self.t_max.max(1)]
        } else {
            grid
        }
    }
}

/// Small default chain of each kind.
pub fn default_chain_spec(kind: &str) -> Result<ChainSpec> {
    let free_spin = IsingInstance::from_parts(1, &[], &[(0, 0.5)])?;
    let pair = IsingInstance::complete(2, 1.0)?;
    Ok(match kind {
        "pimc_boltzmann" => ChainSpec::pimc(
            free_spin,
            1.0,
            2,
            AcceptanceSpec::named("heat_bath"),
            ScheduleSpec::new("log_inverse_T").param("R", 2.0).param("L1", 4.0),
        ),
        "pimc_tsallis" => ChainSpec::pimc(
            free_spin,
            1.0,
            2,
            AcceptanceSpec::tsallis(1.5),
            ScheduleSpec::new("tsallis_T1").param("c", 0.25).param("q", 1.5).param("R", 2.0),
        ),
        "gfmc_g1" => ChainSpec::gfmc(Variant::G1, pair, 0.1, 0.0, ScheduleSpec::new("gfmc_power").param("N", 2.0)),
        "gfmc_g2" => ChainSpec::gfmc(
            Variant::G2,
            pair,
            0.1,
            0.0,
            ScheduleSpec::new("gfmc_g2").param("N", 2.0).param("b", 0.25).param("dt", 0.1),
        ),
        other => {
            return Err(QaeError::UnknownName {
                family: "chain",
                name: other.into(),
                known: "gfmc_g1, gfmc_g2, pimc_boltzmann, pimc_tsallis".into(),
            })
        }
    })
}

/// Run each named check in order. `"all"` expands to every check the chain supports.
pub fn run_checks(spec: &ChainSpec, checks: &[String], options: &LabOptions) -> Result<Vec<LabReport>> {
    let model = build_chain(spec)?;
    let expanded: Vec<String> = if checks.iter().any(|c| c == "all") {
        CHECKS
            .iter()
            .filter(|c| match **c {
                "lemma1" => model.kind() == "pimc_boltzmann",
                "lemma2" => model.kind() == "gfmc_g1",
                _ => true,
            })
            .map(|c| c.to_string())
            .collect()
    } else {
        checks.to_vec()
    };
    let grid = options.grid();
    let mut reports = Vec::with_capacity(expanded.len());
    for check in &expanded {
        let report = match check.as_str() {
            "lemma1" => verify_lemma1_model(model.as_ref(), &grid, &structural_constants(model.as_ref())?)?,
            "lemma2" => verify_lemma2_model(model.as_ref(), &grid, &structural_constants(model.as_ref())?)?,
            "stationarity" => stationarity_report(model.as_ref(), &grid)?,
            "monotonicity" => monotonicity_check(model.as_ref(), 0, options.t_max.min(MONOTONE_SCAN_CAP))?,
            "condition_iii" => condition_iii_sum(model.as_ref(), options.t_max)?.1,
            "weak_ergodicity" => weak_ergodicity_diagnostic(model.as_ref(), options.blocks)?.1,
            other => {
                return Err(QaeError::UnknownName {
                    family: "lab check",
                    name: other.into(),
                    known: format!("all, {}", CHECKS.join(", ")),
                })
            }
        };
        reports.push(report);
    }
    Ok(reports)
}
