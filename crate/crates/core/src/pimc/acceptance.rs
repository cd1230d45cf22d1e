//! Acceptance functions `g(u)` and the two forms of the argument `u`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{QaeError, Result};

/// Exponents are clamped to `±EXPONENT_CLAMP` before exponentiation.
pub const EXPONENT_CLAMP: f64 = 700.0;

/// A monotone map `g: [0, ∞) → [0, 1]` with `g(1/u) = g(u)/u`.
pub trait AcceptanceFn: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn g(&self, u: f64) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct HeatBath;

impl AcceptanceFn for HeatBath {
    fn name(&self) -> &'static str {
        "heat_bath"
    }
    fn g(&self, u: f64) -> f64 {
        if u.is_infinite() {
            1.0
        } else {
            u / (1.0 + u)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Metropolis;

impl AcceptanceFn for Metropolis {
    fn name(&self) -> &'static str {
        "metropolis"
    }
    fn g(&self, u: f64) -> f64 {
        u.min(1.0)
    }
}

type Constructor = fn() -> Arc<dyn AcceptanceFn>;

pub struct AcceptanceRegistry {
    constructors: HashMap<&'static str, Constructor>,
}

impl AcceptanceRegistry {
    pub fn builtin() -> Self {
        let mut reg = AcceptanceRegistry { constructors: HashMap::new() };
        reg.register("heat_bath", || Arc::new(HeatBath));
        reg.register("metropolis", || Arc::new(Metropolis));
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

    pub fn get(&self, name: &str) -> Result<Arc<dyn AcceptanceFn>> {
        self.constructors.get(name).map(|c| c()).ok_or_else(|| QaeError::UnknownName {
            family: "acceptance function",
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }
}

/// Evaluate a registered acceptance function by name.
pub fn acceptance_g(kind: &str, u: f64) -> Result<f64> {
    if u.is_nan() || u < 0.0 {
        return Err(QaeError::Domain(format!("acceptance argument must be non-negative, got {u}")));
    }
    Ok(AcceptanceRegistry::builtin().get(kind)?.g(u))
}

/// `exp(x)` with `x` clamped to `±EXPONENT_CLAMP`; the flag reports a clamp.
pub fn clamped_exp(x: f64) -> (f64, bool) {
    if x > EXPONENT_CLAMP {
        (EXPONENT_CLAMP.exp(), true)
    } else if x < -EXPONENT_CLAMP {
        ((-EXPONENT_CLAMP).exp(), true)
    } else {
        (x.exp(), false)
    }
}

/// Change in `-F0/T0 - F1/T1`; an infinite `T1` removes the kinetic term.
fn kinetic_term(d_f1: f64, t1: f64) -> f64 {
    if t1.is_infinite() || d_f1 == 0.0 {
        0.0
    } else {
        d_f1 / t1
    }
}

/// Boltzmann ratio `q(y)/q(x) = exp(-ΔF0/T0 - ΔF1/T1)`.
pub fn boltzmann_u(d_f0: f64, d_f1: f64, t0: f64, t1: f64) -> (f64, bool) {
    clamped_exp(-d_f0 / t0 - kinetic_term(d_f1, t1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TsallisU {
    pub u: f64,
    pub clamped: bool,
    /// The bracket `1 + (q-1)ΔF1/T1` was not positive and the move is rejected.
    pub bracket_rejected: bool,
}

/// Generalized argument
/// `u = e^{-ΔF0/T0}·{1 + (q-1)·ΔF1/T1}^{1/(1-q)}`, zero when the bracket is not positive.
pub fn tsallis_u(d_f0: f64, d_f1: f64, t0: f64, t1: f64, q: f64) -> Result<TsallisU> {
    if !(q > 1.0) {
        return Err(QaeError::Configuration(format!("generalized acceptance needs q > 1, got {q}")));
    }
    let bracket = 1.0 + (q - 1.0) * kinetic_term(d_f1, t1);
    if bracket <= 0.0 {
        return Ok(TsallisU { u: 0.0, clamped: false, bracket_rejected: true });
    }
    let (u, clamped) = clamped_exp(-d_f0 / t0 + bracket.ln() / (1.0 - q));
    Ok(TsallisU { u, clamped, bracket_rejected: false })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceForm {
    Boltzmann,
    Tsallis { q: f64 },
}

/// Config block `{"kind": "heat_bath" | "metropolis" | "tsallis", "q": ..., "g": ...}`.
/// For `tsallis`, `g` names the acceptance function applied to `u` (default metropolis).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
}

impl AcceptanceSpec {
    pub fn named(kind: &str) -> Self {
        AcceptanceSpec { kind: kind.to_string(), q: None, g: None }
    }

    pub fn tsallis(q: f64) -> Self {
        AcceptanceSpec { kind: "tsallis".into(), q: Some(q), g: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub probability: f64,
    pub clamped: bool,
    pub bracket_rejected: bool,
}

/// A complete acceptance rule: an acceptance function and the form of its argument.
#[derive(Clone, Debug)]
pub struct Acceptance {
    g: Arc<dyn AcceptanceFn>,
    form: AcceptanceForm,
}

impl Acceptance {
    pub fn from_spec(spec: &AcceptanceSpec) -> Result<Self> {
        let reg = AcceptanceRegistry::builtin();
        match spec.kind.as_str() {
            "tsallis" => {
                let q = spec.q.ok_or_else(|| {
                    QaeError::Configuration("tsallis acceptance requires 'q'".into())
                })?;
                if !(q > 1.0) {
                    return Err(QaeError::Configuration(format!("tsallis acceptance needs q > 1, got {q}")));
                }
                let g = reg.get(spec.g.as_deref().unwrap_or("metropolis"))?;
                Ok(Acceptance { g, form: AcceptanceForm::Tsallis { q } })
            }
            name => Ok(Acceptance { g: reg.get(name)?, form: AcceptanceForm::Boltzmann }),
        }
    }

    pub fn boltzmann(g: Arc<dyn AcceptanceFn>) -> Self {
        Acceptance { g, form: AcceptanceForm::Boltzmann }
    }

    pub fn heat_bath() -> Self {
        Acceptance::boltzmann(Arc::new(HeatBath))
    }

    pub fn metropolis() -> Self {
        Acceptance::boltzmann(Arc::new(Metropolis))
    }

    pub fn function(&self) -> &dyn AcceptanceFn {
        self.g.as_ref()
    }

    pub fn form(&self) -> AcceptanceForm {
        self.form
    }

    pub fn g_at_one(&self) -> f64 {
        self.g.g(1.0)
    }

    pub fn label(&self) -> String {
        match self.form {
            AcceptanceForm::Boltzmann => self.g.name().to_string(),
            AcceptanceForm::Tsallis { q } => format!("tsallis(q={q},g={})", self.g.name()),
        }
    }

    /// Probability of accepting a move that changes `F0` by `d_f0` and `F1` by `d_f1`.
    pub fn decide(&self, d_f0: f64, d_f1: f64, t0: f64, t1: f64) -> Decision {
        match self.form {
            AcceptanceForm::Boltzmann => {
                let (u, clamped) = boltzmann_u(d_f0, d_f1, t0, t1);
                Decision { probability: self.g.g(u), clamped, bracket_rejected: false }
            }
            AcceptanceForm::Tsallis { q } => {
                // q > 1 is enforced at construction
                let tu = tsallis_u(d_f0, d_f1, t0, t1, q).expect("validated q");
                Decision {
                    probability: self.g.g(tu.u),
                    clamped: tu.clamped,
                    bracket_rejected: tu.bracket_rejected,
                }
            }
        }
    }
}
