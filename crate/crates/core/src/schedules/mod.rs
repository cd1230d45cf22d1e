//! Annealing schedules.
//!
//! [`forms`] holds the closed-form expressions. Each is wrapped in a
//! [`Schedule`] trait object and registered by name in a [`ScheduleRegistry`],
//! so engines pick their schedule from configuration at runtime.

pub mod forms;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{QaeError, Result};

pub use forms::*;

/// Values below this are clamped so that `γ(t)` and `1/T` stay finite.
pub const CONTROL_FLOOR: f64 = 1e-300;

/// Which physical parameter a schedule drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    /// Transverse field `Γ(t)`.
    TransverseField,
    /// Kinetic temperature `T1(t)` of the replica system.
    KineticTemperature,
    /// Classical temperature `T(t)` for simulated annealing.
    Temperature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Decreasing,
    Increasing,
    Constant,
}

pub trait Schedule: Send + Sync + fmt::Debug {
    fn kind(&self) -> &'static str;
    fn control(&self) -> Control;
    fn direction(&self) -> Direction;
    fn value(&self, t: u64) -> Result<f64>;
    /// Whether the parameters satisfy the rate condition of the matching
    /// convergence result, when one applies.
    fn rate_valid(&self) -> Option<bool> {
        None
    }
}

/// `{"kind": ..., "params": {...}, "scale": 1.0}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl ScheduleSpec {
    pub fn new(kind: &str) -> Self {
        ScheduleSpec { kind: kind.to_string(), params: BTreeMap::new(), scale: 1.0 }
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    /// Insert `value` for `name` unless already present.
    pub fn default_param(&mut self, name: &str, value: f64) {
        self.params.entry(name.to_string()).or_insert(value);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    pub clamped: bool,
}

/// A registered schedule multiplied by a scale factor and floored at
/// [`CONTROL_FLOOR`].
#[derive(Clone, Debug)]
pub struct ScaledSchedule {
    inner: Arc<dyn Schedule>,
    scale: f64,
    spec: ScheduleSpec,
}

impl ScaledSchedule {
    pub fn eval(&self, t: u64) -> Result<Evaluated> {
        let value = self.scale * self.inner.value(t)?;
        if !value.is_finite() || value < 0.0 {
            return Err(QaeError::Domain(format!(
                "schedule '{}' produced {value} at t={t}",
                self.inner.kind()
            )));
        }
        if value < CONTROL_FLOOR {
            Ok(Evaluated { value: CONTROL_FLOOR, clamped: true })
        } else {
            Ok(Evaluated { value, clamped: false })
        }
    }

    pub fn value(&self, t: u64) -> Result<f64> {
        self.eval(t).map(|e| e.value)
    }

    pub fn kind(&self) -> &'static str {
        self.inner.kind()
    }

    pub fn control(&self) -> Control {
        self.inner.control()
    }

    pub fn direction(&self) -> Direction {
        self.inner.direction()
    }

    pub fn rate_valid(&self) -> Option<bool> {
        self.inner.rate_valid()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn spec(&self) -> &ScheduleSpec {
        &self.spec
    }
}

pub struct ScheduleParams<'a> {
    kind: &'a str,
    map: &'a BTreeMap<String, f64>,
}

impl ScheduleParams<'_> {
    pub fn get(&self, name: &str) -> Result<f64> {
        self.map.get(name).copied().ok_or_else(|| {
            QaeError::Configuration(format!("schedule '{}' requires parameter '{name}'", self.kind))
        })
    }

    pub fn get_or(&self, name: &str, default: f64) -> f64 {
        self.map.get(name).copied().unwrap_or(default)
    }

    pub fn positive(&self, name: &str) -> Result<f64> {
        let v = self.get(name)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(QaeError::Configuration(format!(
                "schedule '{}' parameter '{name}' must be positive, got {v}",
                self.kind
            )))
        }
    }

    pub fn non_negative(&self, name: &str) -> Result<f64> {
        let v = self.get(name)?;
        if v >= 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(QaeError::Configuration(format!(
                "schedule '{}' parameter '{name}' must be non-negative, got {v}",
                self.kind
            )))
        }
    }

    pub fn positive_or(&self, name: &str, default: f64) -> Result<f64> {
        if self.map.contains_key(name) {
            self.positive(name)
        } else {
            Ok(default)
        }
    }

    pub fn count(&self, name: &str) -> Result<usize> {
        let v = self.positive(name)?;
        if v.fract() != 0.0 {
            return Err(QaeError::Configuration(format!(
                "schedule '{}' parameter '{name}' must be an integer, got {v}",
                self.kind
            )));
        }
        Ok(v as usize)
    }
}

#[derive(Debug)]
struct Corollary1 {
    trotter_m: usize,
    beta: f64,
    radius: f64,
    l1: f64,
}

impl Schedule for Corollary1 {
    fn kind(&self) -> &'static str {
        "corollary1"
    }
    fn control(&self) -> Control {
        Control::TransverseField
    }
    fn direction(&self) -> Direction {
        Direction::Decreasing
    }
    fn value(&self, t: u64) -> Result<f64> {
        corollary1_gamma(t as f64, self.trotter_m, self.beta, self.radius, self.l1)
    }
}

#[derive(Debug)]
struct PowerGamma(Corollary1);

impl Schedule for PowerGamma {
    fn kind(&self) -> &'static str {
        "power_gamma"
    }
    fn control(&self) -> Control {
        Control::TransverseField
    }
    fn direction(&self) -> Direction {
        Direction::Decreasing
    }
    fn value(&self, t: u64) -> Result<f64> {
        let p = &self.0;
        power_gamma(t as f64, p.trotter_m, p.beta, p.radius, p.l1)
    }
}

#[derive(Debug)]
struct LogInverseT1 {
    radius: f64,
    l1: f64,
}

impl Schedule for LogInverseT1 {
    fn kind(&self) -> &'static str {
        "log_inverse_T"
    }
    fn control(&self) -> Control {
        Control::KineticTemperature
    }
    fn direction(&self) -> Direction {
        Direction::Decreasing
    }
    fn value(&self, t: u64) -> Result<f64> {
        theorem3_t1(t as f64, self.radius, self.l1)
    }
}

#[derive(Debug)]
struct GemanGeman {
    n_size: f64,
}

impl Schedule for GemanGeman {
    fn kind(&self) -> &'static str {
        "geman_geman"
    }
    fn control(&self) -> Control {
        Control::Temperature
    }
    fn direction(&self) -> Direction {
        Direction::Decreasing
    }
    fn value(&self, t: u64) -> Result<f64> {
        // step 0 shares the value of step 1 so the schedule is defined from t = 0
        geman_geman_t(t.max(1) as f64, self.n_size)
    }
}

#[derive(Debug)]
struct TsallisT1 {
    b: f64,
    c: f64,
    q_and_radius: Option<(f64, f64)>,
}

impl Schedule for TsallisT1 {
    fn kind(&self) -> &'static str {
        "tsallis_T1"
    }
    fn control(&self) -> Control {
        Control::KineticTemperature
    }
    fn direction(&self) -> Direction {
        Direction::Decreasing
    }
    fn value(&self, t: u64) -> Result<f64> {
        tsallis_t1(t as f64, self.b, self.c)
    }
    fn rate_valid(&self) -> Option<bool> {
        self.q_and_radius.map(|(q, r)| tsallis_rate_valid(self.c, q, r))
    }
}

#[derive(Debug)]
struct TsallisGamma {
    b: f64,
    c: f64,
    trotter_m: usize,
    beta: f64,
}

impl Schedule for TsallisGamma {
    fn kind(&self) -> &'static str {
        "tsallis_gamma"
    }
    fn control(&self) -> Control {
        Control::TransverseField
    }
    fn direction(&self) -> Direction {
        Direction::Decreasing
    }
    fn value(&self, t: u64) -> Result<f64> {
        tsallis_gamma(t as f64, self.b, self.c, self.trotter_m, self.beta)
    }
}

#[derive(Debug)]
struct GfmcPower {
    b: f64,
    c: f64,
    n_spins: usize,
}

impl Schedule for GfmcPower {
    fn kind(&self) -> &'static str {
        "gfmc_power"
    }
    fn control(&self) -> Control {
        Control::TransverseField
    }
    fn direction(&self) -> Direction {
        Direction::Decreasing
    }
    fn value(&self, t: u64) -> Result<f64> {
        gfmc_gamma(t as f64, self.b, self.c)
    }
    fn rate_valid(&self) -> Option<bool> {
        Some(gfmc_rate_valid(self.c, self.n_spins))
    }
}

#[derive(Debug)]
struct GfmcG2 {
    b: f64,
    dt: f64,
    n_spins: usize,
}

impl Schedule for GfmcG2 {
    fn kind(&self) -> &'static str {
        "gfmc_g2"
    }
    fn control(&self) -> Control {
        Control::TransverseField
    }
    fn direction(&self) -> Direction {
        Direction::Decreasing
    }
    fn value(&self, t: u64) -> Result<f64> {
        gfmc_g2_gamma(t as f64, self.b, self.dt, self.n_spins)
    }
}

#[derive(Debug)]
struct Constant {
    value: f64,
    control: Control,
}

impl Schedule for Constant {
    fn kind(&self) -> &'static str {
        match self.control {
            Control::TransverseField => "constant",
            Control::KineticTemperature => "constant_T1",
            Control::Temperature => "constant_T",
        }
    }
    fn control(&self) -> Control {
        self.control
    }
    fn direction(&self) -> Direction {
        Direction::Constant
    }
    fn value(&self, _t: u64) -> Result<f64> {
        Ok(self.value)
    }
}

/// `T1(t) = b·e^{-c·t}`; decays far faster than any certified schedule.
#[derive(Debug)]
struct ExponentialT1 {
    b: f64,
    c: f64,
}

impl Schedule for ExponentialT1 {
    fn kind(&self) -> &'static str {
        "exponential_T1"
    }
    fn control(&self) -> Control {
        Control::KineticTemperature
    }
    fn direction(&self) -> Direction {
        if self.c > 0.0 {
            Direction::Decreasing
        } else if self.c < 0.0 {
            Direction::Increasing
        } else {
            Direction::Constant
        }
    }
    fn value(&self, t: u64) -> Result<f64> {
        Ok(self.b * (-self.c * t as f64).exp())
    }
}

type Constructor = fn(&ScheduleParams<'_>) -> Result<Arc<dyn Schedule>>;

fn corollary_parts(p: &ScheduleParams<'_>) -> Result<Corollary1> {
    Ok(Corollary1 {
        trotter_m: p.count("M")?,
        beta: p.positive("beta")?,
        radius: p.positive("R")?,
        l1: p.positive("L1")?,
    })
}

/// Name → constructor table for schedules.
pub struct ScheduleRegistry {
    constructors: HashMap<&'static str, Constructor>,
}

impl ScheduleRegistry {
    pub fn empty() -> Self {
        ScheduleRegistry { constructors: HashMap::new() }
    }

    pub fn builtin() -> Self {
        let mut reg = ScheduleRegistry::empty();
        reg.register("corollary1", |p| Ok(Arc::new(corollary_parts(p)?)));
        reg.register("power_gamma", |p| Ok(Arc::new(PowerGamma(corollary_parts(p)?))));
        reg.register("log_inverse_T", |p| {
            Ok(Arc::new(LogInverseT1 { radius: p.positive("R")?, l1: p.positive("L1")? }))
        });
        reg.register("geman_geman", |p| Ok(Arc::new(GemanGeman { n_size: p.positive("N")? })));
        reg.register("tsallis_T1", |p| {
            let q_and_radius = match (p.map.get("q"), p.map.get("R")) {
                (Some(q), Some(r)) => Some((*q, *r)),
                _ => None,
            };
            Ok(Arc::new(TsallisT1 { b: p.positive_or("b", 1.0)?, c: p.positive("c")?, q_and_radius }))
        });
        reg.register("tsallis_gamma", |p| {
            Ok(Arc::new(TsallisGamma {
                b: p.positive_or("b", 1.0)?,
                c: p.positive("c")?,
                trotter_m: p.count("M")?,
                beta: p.positive("beta")?,
            }))
        });
        reg.register("gfmc_power", |p| {
            let n_spins = p.count("N")?;
            Ok(Arc::new(GfmcPower {
                b: p.positive_or("b", 1.0)?,
                c: p.positive_or("c", 1.0 / n_spins as f64)?,
                n_spins,
            }))
        });
        reg.register("gfmc_g2", |p| {
            Ok(Arc::new(GfmcG2 { b: p.positive_or("b", 1.0)?, dt: p.positive("dt")?, n_spins: p.count("N")? }))
        });
        reg.register("constant", |p| {
            Ok(Arc::new(Constant { value: p.non_negative("value")?, control: Control::TransverseField }))
        });
        reg.register("constant_T1", |p| {
            Ok(Arc::new(Constant { value: p.positive("value")?, control: Control::KineticTemperature }))
        });
        reg.register("constant_T", |p| {
            Ok(Arc::new(Constant { value: p.positive("value")?, control: Control::Temperature }))
        });
        reg.register("exponential_T1", |p| {
            Ok(Arc::new(ExponentialT1 { b: p.positive_or("b", 1.0)?, c: p.get_or("c", 1.0) }))
        });
        reg
    }

    pub fn register(&mut self, name: &'static str, constructor: Constructor) {
        self.constructors.insert(name, constructor);
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut names: Vec<_> = self.constructors.keys().copied().collect();
        names.sort_unstable();
        names
    }

    pub fn build(&self, spec: &ScheduleSpec) -> Result<ScaledSchedule> {
        let constructor = self.constructors.get(spec.kind.as_str()).ok_or_else(|| QaeError::UnknownName {
            family: "schedule",
            name: spec.kind.clone(),
            known: self.names().join(", "),
        })?;
        if !(spec.scale > 0.0 && spec.scale.is_finite()) {
            return Err(QaeError::Configuration(format!("schedule scale must be positive, got {}", spec.scale)));
        }
        let inner = constructor(&ScheduleParams { kind: &spec.kind, map: &spec.params })?;
        Ok(ScaledSchedule { inner, scale: spec.scale, spec: spec.clone() })
    }
}

/// Build from the builtin registry.
pub fn build_schedule(spec: &ScheduleSpec) -> Result<ScaledSchedule> {
    ScheduleRegistry::builtin().build(spec)
}
