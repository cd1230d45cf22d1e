//! Engine strategies behind the runner, registered by name.

use std::collections::BTreeMap;
use std::fmt;

use qae_core::gfmc::{run_gfmc, walker_gamma, EnergyReference, GfmcParams, GfmcRunOptions, PopulationControl, Variant};
use qae_core::ising::{IsingInstance, SpinConfig};
use qae_core::lab::{ChainSpec, LabReport};
use qae_core::pimc::{
    replica_radius_and_l1, run_annealing, Acceptance, AcceptanceSpec, InitialState, PimcParams, RunOptions,
};
use qae_core::sa::{run_sa, SaOptions};
use qae_core::schedules::{build_schedule, ScaledSchedule, ScheduleSpec};
use qae_core::trace::{to_csv_bytes, AnnealRow, GfmcRow};
use qae_core::{QaeError, Result};
use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::lab::{run_checks, LabOptions};

/// Everything an engine needs besides its own parameter block.
#[derive(Clone, Debug)]
pub struct Context {
    pub instance: IsingInstance,
    pub e_min: Option<f64>,
    pub schedule: ScheduleSpec,
    pub horizon: u64,
    pub checkpoint_every: Option<u64>,
}

/// Numeric trace columns, `step` first, for plotting.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Series {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct SeedRun {
    pub csv: Vec<u8>,
    pub best_energy: f64,
    pub first_hit_step: Option<u64>,
    pub series: Series,
}

pub trait Engine: Send + Sync + fmt::Debug {
    fn kind(&self) -> &'static str;
    /// The schedule after engine-specific parameter defaults were filled in.
    fn schedule(&self) -> &ScaledSchedule;
    /// One independent trajectory. Engines without trajectories return `None`.
    fn run_seed(&self, seed: u64) -> Result<Option<SeedRun>>;
    fn lab_reports(&self) -> Result<Vec<LabReport>> {
        Ok(Vec::new())
    }
    /// `(label, value)` pairs for schedule-level context such as `M` and `beta`.
    fn describe(&self) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }
}

type Constructor = fn(&EngineConfig, &Context) -> Result<Box<dyn Engine>>;

pub struct EngineRegistry {
    constructors: BTreeMap<&'static str, Constructor>,
}

impl EngineRegistry {
    pub fn empty() -> Self {
        EngineRegistry { constructors: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("pimc", |c, ctx| Ok(Box::new(PimcEngine::new(c.decode()?, ctx)?)));
        reg.register("gfmc", |c, ctx| Ok(Box::new(GfmcEngine::new(c.decode()?, ctx)?)));
        reg.register("sa", |c, ctx| Ok(Box::new(SaEngine::new(c.decode()?, ctx)?)));
        reg.register("lab", |c, ctx| Ok(Box::new(LabEngine::new(c.decode()?, ctx)?)));
        reg
    }

    pub fn register(&mut self, name: &'static str, constructor: Constructor) {
        self.constructors.insert(name, constructor);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.constructors.keys().copied().collect()
    }

    pub fn build(&self, config: &EngineConfig, ctx: &Context) -> Result<Box<dyn Engine>> {
        let ctor = self.constructors.get(config.kind.as_str()).ok_or_else(|| QaeError::UnknownName {
            family: "engine",
            name: config.kind.clone(),
            known: self.names().join(", "),
        })?;
        ctor(config, ctx)
    }
}

/// Fill schedule parameters that follow from the instance and engine.
fn fill_replica(spec: &mut ScheduleSpec, n: usize, m: usize, beta: f64) {
    let (r, l1) = replica_radius_and_l1(n, m);
    spec.default_param("M", m as f64);
    spec.default_param("beta", beta);
    spec.default_param("R", r as f64);
    spec.default_param("L1", l1);
}

fn fill_walker(spec: &mut ScheduleSpec, n: usize, dt: Option<f64>) {
    spec.default_param("N", n as f64);
    if let Some(dt) = dt {
        spec.default_param("dt", dt);
    }
}

fn anneal_series(rows: &[AnnealRow]) -> Series {
    Series {
        columns: vec!["step", "control_value", "mean_slice_energy", "best_energy", "acceptance_rate"],
        rows: rows
            .iter()
            .map(|r| vec![r.step as f64, r.control_value, r.mean_slice_energy, r.best_energy, r.acceptance_rate])
            .collect(),
    }
}

fn gfmc_series(rows: &[GfmcRow]) -> Series {
    Series {
        columns: vec!["step", "gamma", "mean_weight", "effective_population", "best_energy", "histogram_entropy"],
        rows: rows
            .iter()
            .map(|r| {
                vec![r.step as f64, r.gamma, r.mean_weight, r.effective_population, r.best_energy, r.histogram_entropy]
            })
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    #[default]
    Random,
    AllUp,
}

fn default_acceptance() -> AcceptanceSpec {
    AcceptanceSpec::named("metropolis")
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PimcSettings {
    pub beta: f64,
    pub trotter_m: usize,
    #[serde(default = "default_acceptance")]
    pub acceptance: AcceptanceSpec,
    #[serde(default)]
    pub initial: Initial,
}

#[derive(Debug)]
pub struct PimcEngine {
    instance: IsingInstance,
    params: PimcParams,
    schedule: ScaledSchedule,
    horizon: u64,
    options: RunOptions,
}

impl PimcEngine {
    pub fn new(settings: PimcSettings, ctx: &Context) -> Result<Self> {
        let params = PimcParams::new(settings.beta, settings.trotter_m, Acceptance::from_spec(&settings.acceptance)?)?;
        let mut spec = ctx.schedule.clone();
        fill_replica(&mut spec, ctx.instance.n_spins(), settings.trotter_m, settings.beta);
        if let Some(q) = settings.acceptance.q {
            spec.default_param("q", q);
        }
        let options = RunOptions {
            checkpoint_every: ctx.checkpoint_every.unwrap_or(1000),
            target_energy: ctx.e_min,
            record_states: false,
            initial: match settings.initial {
                Initial::Random => InitialState::Random,
                Initial::AllUp => InitialState::AllUp,
            },
        };
        Ok(PimcEngine {
            instance: ctx.instance.clone(),
            params,
            schedule: build_schedule(&spec)?,
            horizon: ctx.horizon,
            options,
        })
    }
}

impl Engine for PimcEngine {
    fn kind(&self) -> &'static str {
        "pimc"
    }

    fn schedule(&self) -> &ScaledSchedule {
        &self.schedule
    }

    fn run_seed(&self, seed: u64) -> Result<Option<SeedRun>> {
        let trace = run_annealing(&self.instance, &self.params, &self.schedule, self.horizon, seed, &self.options)?;
        Ok(Some(SeedRun {
            csv: to_csv_bytes(&trace.rows)?,
            best_energy: trace.best_energy,
            first_hit_step: trace.first_hit_step,
            series: anneal_series(&trace.rows),
        }))
    }

    fn describe(&self) -> BTreeMap<String, f64> {
        let mut d = BTreeMap::new();
        d.insert("beta".into(), self.params.beta);
        d.insert("M".into(), self.params.trotter_m as f64);
        for key in ["R", "L1"] {
            if let Some(v) = self.schedule.spec().params.get(key) {
                d.insert(key.into(), *v);
            }
        }
        d
    }
}

/// A number, or a keyword resolved against the instance.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Choice<K> {
    Value(f64),
    Keyword(K),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtKeyword {
    Auto,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKeyword {
    Midpoint,
    GroundState,
}

fn default_dt() -> Choice<DtKeyword> {
    Choice::Keyword(DtKeyword::Auto)
}

fn default_e_t() -> Choice<EnergyKeyword> {
    Choice::Keyword(EnergyKeyword::Midpoint)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GfmcSettings {
    pub variant: Variant,
    pub n_walkers: usize,
    #[serde(default = "default_dt")]
    pub dt: Choice<DtKeyword>,
    #[serde(default = "default_e_t")]
    pub e_t: Choice<EnergyKeyword>,
    #[serde(default)]
    pub population_control: PopulationControl,
}

impl GfmcSettings {
    fn reference(&self) -> EnergyReference {
        match self.e_t {
            Choice::Value(v) => EnergyReference::Value(v),
            Choice::Keyword(EnergyKeyword::Midpoint) => EnergyReference::Midpoint,
            Choice::Keyword(EnergyKeyword::GroundState) => EnergyReference::GroundState,
        }
    }

    /// Resolve `dt` and `E_T`. An automatic `dt` reads `Γ(0)` from a schedule
    /// built without `dt`, so it is only available for schedules that do not need it.
    pub fn params(&self, instance: &IsingInstance, schedule: &ScheduleSpec) -> Result<GfmcParams> {
        let params = match self.dt {
            Choice::Value(dt) => {
                GfmcParams::new(dt, self.reference().resolve(instance)?, self.n_walkers, self.variant)?
            }
            Choice::Keyword(DtKeyword::Auto) => {
                let mut probe = schedule.clone();
                fill_walker(&mut probe, instance.n_spins(), None);
                let gamma0 = build_schedule(&probe)
                    .and_then(|s| walker_gamma(&s, 0))
                    .map_err(|e| QaeError::Configuration(format!("engine.dt = \"auto\" needs Γ(0): {e}")))?;
                GfmcParams::auto(instance, gamma0, self.n_walkers, self.variant, self.reference())?
            }
        };
        Ok(params.with_population_control(self.population_control))
    }
}

#[derive(Debug)]
pub struct GfmcEngine {
    instance: IsingInstance,
    params: GfmcParams,
    schedule: ScaledSchedule,
    horizon: u64,
    options: GfmcRunOptions,
}

impl GfmcEngine {
    pub fn new(settings: GfmcSettings, ctx: &Context) -> Result<Self> {
        let params = settings.params(&ctx.instance, &ctx.schedule)?;
        params.validate_for(&ctx.instance)?;
        let mut spec = ctx.schedule.clone();
        fill_walker(&mut spec, ctx.instance.n_spins(), Some(params.dt));
        let options = GfmcRunOptions { checkpoint_every: ctx.checkpoint_every.unwrap_or(10), target_energy: ctx.e_min };
        Ok(GfmcEngine {
            instance: ctx.instance.clone(),
            params,
            schedule: build_schedule(&spec)?,
            horizon: ctx.horizon,
            options,
        })
    }
}

impl Engine for GfmcEngine {
    fn kind(&self) -> &'static str {
        "gfmc"
    }

    fn schedule(&self) -> &ScaledSchedule {
        &self.schedule
    }

    fn run_seed(&self, seed: u64) -> Result<Option<SeedRun>> {
        let trace = run_gfmc(&self.instance, &self.params, &self.schedule, self.horizon, seed, &self.options)?;
        Ok(Some(SeedRun {
            csv: to_csv_bytes(&trace.rows)?,
            best_energy: trace.best_energy,
            first_hit_step: trace.first_hit_step,
            series: gfmc_series(&trace.rows),
        }))
    }

    fn describe(&self) -> BTreeMap<String, f64> {
        let mut d = BTreeMap::new();
        d.insert("dt".into(), self.params.dt);
        d.insert("E_T".into(), self.params.e_t);
        d.insert("n_walkers".into(), self.params.n_walkers as f64);
        d
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaSettings {
    #[serde(default = "default_acceptance")]
    pub acceptance: AcceptanceSpec,
}

#[derive(Debug)]
pub struct SaEngine {
    instance: IsingInstance,
    acceptance: Acceptance,
    schedule: ScaledSchedule,
    horizon: u64,
    options: SaOptions,
}

impl SaEngine {
    pub fn new(settings: SaSettings, ctx: &Context) -> Result<Self> {
        let options = SaOptions {
            checkpoint_every: ctx.checkpoint_every.unwrap_or(1000),
            target_energy: ctx.e_min,
            initial: None::<SpinConfig>,
        };
        Ok(SaEngine {
            instance: ctx.instance.clone(),
            acceptance: Acceptance::from_spec(&settings.acceptance)?,
            schedule: build_schedule(&ctx.schedule)?,
            horizon: ctx.horizon,
            options,
        })
    }
}

impl Engine for SaEngine {
    fn kind(&self) -> &'static str {
        "sa"
    }

    fn schedule(&self) -> &ScaledSchedule {
        &self.schedule
    }

    fn run_seed(&self, seed: u64) -> Result<Option<SeedRun>> {
        let trace = run_sa(&self.instance, &self.acceptance, &self.schedule, self.horizon, seed, &self.options)?;
        Ok(Some(SeedRun {
            csv: to_csv_bytes(&trace.rows)?,
            best_energy: trace.best_energy,
            first_hit_step: trace.first_hit_step,
            series: anneal_series(&trace.rows),
        }))
    }
}

fn default_checks() -> Vec<String> {
    vec!["all".into()]
}

fn default_blocks() -> u64 {
    200
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabSettings {
    pub chain: String,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub trotter_m: Option<usize>,
    #[serde(default)]
    pub acceptance: Option<AcceptanceSpec>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub e_t: Option<f64>,
    #[serde(default = "default_blocks")]
    pub blocks: u64,
    #[serde(default)]
    pub t_grid: Option<Vec<u64>>,
}

/// Exact-chain checks; `horizon` bounds the summed and scanned time ranges.
#[derive(Debug)]
pub struct LabEngine {
    spec: ChainSpec,
    schedule: ScaledSchedule,
    checks: Vec<String>,
    options: LabOptions,
}

impl LabEngine {
    pub fn new(settings: LabSettings, ctx: &Context) -> Result<Self> {
        let mut schedule = ctx.schedule.clone();
        let n = ctx.instance.n_spins();
        if settings.chain.starts_with("pimc") {
            let beta = settings.beta.unwrap_or(1.0);
            fill_replica(&mut schedule, n, settings.trotter_m.unwrap_or(2), beta);
            if let Some(q) = settings.acceptance.as_ref().and_then(|a| a.q) {
                schedule.default_param("q", q);
            }
        } else {
            fill_walker(&mut schedule, n, settings.dt);
        }
        let spec = ChainSpec {
            kind: settings.chain.clone(),
            instance: ctx.instance.clone(),
            schedule: schedule.clone(),
            beta: settings.beta.or(Some(1.0)),
            trotter_m: settings.trotter_m.or(Some(2)),
            acceptance: settings.acceptance.clone().or_else(|| Some(AcceptanceSpec::named("heat_bath"))),
            dt: settings.dt,
            e_t: settings.e_t.or(Some(0.0)),
        };
        let options = LabOptions { t_max: ctx.horizon, blocks: settings.blocks, t_grid: settings.t_grid.clone() };
        Ok(LabEngine { spec, schedule: build_schedule(&schedule)?, checks: settings.checks, options })
    }
}

impl Engine for LabEngine {
    fn kind(&self) -> &'static str {
        "lab"
    }

    fn schedule(&self) -> &ScaledSchedule {
        &self.schedule
    }

    fn run_seed(&self, _seed: u64) -> Result<Option<SeedRun>> {
        Ok(None)
    }

    fn lab_reports(&self) -> Result<Vec<LabReport>> {
        run_checks(&self.spec, &self.checks, &self.options)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn ctx(schedule: ScheduleSpec) -> Context {
        Context {
            instance: IsingInstance::complete(2, 1.0).unwrap(),
            e_min: Some(-1.0),
            schedule,
            horizon: 200,
            checkpoint_every: Some(50),
        }
    }

    #[test]
    fn registry_lists_builtin_engines() {
        assert_eq!(EngineRegistry::builtin().names(), vec!["gfmc", "lab", "pimc", "sa"]);
        let err = EngineRegistry::builtin()
            .build(&EngineConfig::new("quantum", json!({})), &ctx(ScheduleSpec::new("corollary1")))
            .unwrap_err();
        assert!(err.to_string().contains("quantum"));
    }

    #[test]
    fn pimc_fills_replica_constants() {
        let cfg = EngineConfig::new("pimc", json!({"beta": 0.5, "trotter_m": 3}));
        let engine = EngineRegistry::builtin().build(&cfg, &ctx(ScheduleSpec::new("corollary1"))).unwrap();
        let params = &engine.schedule().spec().params;
        assert_eq!(params["R"], 6.0);
        assert_eq!(params["L1"], 4.0);
        assert_eq!(params["M"], 3.0);
        let run = engine.run_seed(1).unwrap().unwrap();
        assert_eq!(run.series.rows.len(), 5);
        assert!(run.best_energy >= -1.0);
    }

    #[test]
    fn explicit_schedule_params_win_over_defaults() {
        let cfg = EngineConfig::new("pimc", json!({"beta": 0.5, "trotter_m": 3}));
        let engine = EngineRegistry::builtin()
            .build(&cfg, &ctx(ScheduleSpec::new("corollary1").param("R", 1.0)))
            .unwrap();
        assert_eq!(engine.schedule().spec().params["R"], 1.0);
    }

    #[test]
    fn gfmc_auto_dt_and_keywords() {
        let cfg = EngineConfig::new("gfmc", json!({"variant": "G1", "n_walkers": 50, "e_t": "ground_state"}));
        let engine = EngineRegistry::builtin().build(&cfg, &ctx(ScheduleSpec::new("gfmc_power"))).unwrap();
        let d = engine.describe();
        assert_eq!(d["E_T"], -1.0);
        assert!(d["dt"] > 0.0);
        let run = engine.run_seed(3).unwrap().unwrap();
        assert_eq!(run.first_hit_step, Some(0));
    }

    #[test]
    fn gfmc_g2_gets_dt_in_schedule() {
        let cfg = EngineConfig::new("gfmc", json!({"variant": "G2", "n_walkers": 20, "dt": 0.1, "e_t": 0.0}));
        let engine = EngineRegistry::builtin()
            .build(&cfg, &ctx(ScheduleSpec::new("gfmc_g2").param("b", 0.25)))
            .unwrap();
        assert_eq!(engine.schedule().spec().params["dt"], 0.1);
        assert!(engine.run_seed(0).unwrap().is_some());
    }

    #[test]
    fn bad_engine_key_is_named() {
        let cfg = EngineConfig::new("gfmc", json!({"variant": "G3", "n_walkers": 5}));
        let err = EngineRegistry::builtin().build(&cfg, &ctx(ScheduleSpec::new("gfmc_power"))).unwrap_err();
        assert!(err.to_string().contains("engine.variant"), "{err}");
    }

    #[test]
    fn sa_requires_temperature_schedule() {
        let cfg = EngineConfig::new("sa", json!({}));
        let engine = EngineRegistry::builtin()
            .build(&cfg, &ctx(ScheduleSpec::new("geman_geman").param("N", 2.0)))
            .unwrap();
        assert!(engine.run_seed(0).unwrap().is_some());
        let wrong = EngineRegistry::builtin().build(&cfg, &ctx(ScheduleSpec::new("corollary1").param("M", 2.0)));
        assert!(wrong.is_err() || wrong.unwrap().run_seed(0).is_err());
    }

    #[test]
    fn lab_engine_has_no_trajectories() {
        let cfg = EngineConfig::new("lab", json!({"chain": "gfmc_g1", "dt": 0.1, "checks": ["stationarity"]}));
        let engine = EngineRegistry::builtin().build(&cfg, &ctx(ScheduleSpec::new("gfmc_power"))).unwrap();
        assert!(engine.run_seed(0).unwrap().is_none());
        let reports = engine.lab_reports().unwrap();
        assert_eq!(reports.len(), 1);
        assert!(reports[0].pass);
    }
}
