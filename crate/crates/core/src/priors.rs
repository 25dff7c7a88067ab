//! Objective priors for the Stacy family.
//!
//! Every catalog prior factorizes as `π(φ) · α^q · μ^{-1}`. The φ-factors
//! are evaluated in log space from algebraically rearranged radicands; the
//! textbook forms lose all precision to cancellation near φ → 0⁺ and φ → ∞.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::specfun::{
    digamma_unchecked, phi_trigamma_minus_one, trigamma_excess, trigamma_unchecked,
};
use crate::stacy::{alpha_information_factor, ParamVector};

/// Radicands below this are treated as an accuracy bug, not rounding noise.
pub const RADICAND_FLOOR: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PriorId {
    J1,
    J3,
    J4a,
    J4b,
    J5,
    J6,
    R7,
    R8,
    R9,
    R10,
    Custom,
}

impl PriorId {
    pub const CATALOG: [PriorId; 10] = [
        Self::J1,
        Self::J3,
        Self::J4a,
        Self::J4b,
        Self::J5,
        Self::J6,
        Self::R7,
        Self::R8,
        Self::R9,
        Self::R10,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::J1 => "J1",
            Self::J3 => "J3",
            Self::J4a => "J4a",
            Self::J4b => "J4b",
            Self::J5 => "J5",
            Self::J6 => "J6",
            Self::R7 => "R7",
            Self::R8 => "R8",
            Self::R9 => "R9",
            Self::R10 => "R10",
            Self::Custom => "custom",
        }
    }

    /// Human-readable φ-factor, as it would be written by hand.
    pub fn formula(&self) -> &'static str {
        match self {
            Self::J1 => "1/phi",
            Self::J3 => "sqrt(phi^2 psi'(phi)^2 - psi'(phi) - 1)",
            Self::J4a => "sqrt(phi psi'(phi) - 1)",
            Self::J4b => "sqrt(phi psi'(phi) (1 + 2 psi(phi) + phi psi'(phi) + phi psi(phi)^2))",
            Self::J5 => "sqrt((phi psi'(phi) - 1) (1 + 2 psi(phi) + phi psi'(phi) + phi psi(phi)^2))",
            Self::J6 => "sqrt(psi'(phi) (phi^2 psi'(phi) + phi - 1))",
            Self::R7 => "sqrt((phi psi'(phi) - 1) / phi)",
            Self::R8 => "sqrt(psi'(phi))",
            Self::R9 => {
                "sqrt(psi'(phi) - psi(phi)^2 / (1 + 2 psi(phi) + phi psi'(phi) + phi psi(phi)^2))"
            }
            Self::R10 => "sqrt((phi^2 psi'(phi)^2 - psi'(phi) - 1) / (phi^2 psi'(phi) + phi - 1))",
            Self::Custom => "user supplied",
        }
    }

    /// Which construction produced the prior.
    pub fn origin(&self) -> &'static str {
        match self {
            Self::J1 => "Jeffreys first rule",
            Self::J3 => "Jeffreys prior, all parameters unknown",
            Self::J4a => "Jeffreys prior, alpha known",
            Self::J4b => "independence Jeffreys prior",
            Self::J5 => "partition ((phi, mu), alpha) Jeffreys prior",
            Self::J6 => "partition ((alpha, mu), phi) Jeffreys prior",
            Self::R7 => "(alpha, phi, mu) reference prior",
            Self::R8 => {
                "(alpha, mu, phi) reference prior; (mu, phi) reference prior when alpha is known"
            }
            Self::R9 => "(mu, phi, alpha) reference prior",
            Self::R10 => "(phi, alpha, mu) reference prior",
            Self::Custom => "user supplied",
        }
    }

    /// Power of α in the joint prior when α is a free parameter.
    pub fn alpha_exponent(&self) -> Option<f64> {
        match self {
            Self::J1 | Self::R7 | Self::R8 | Self::R9 | Self::R10 => Some(-1.0),
            Self::J3 | Self::J4b | Self::J5 | Self::J6 => Some(0.0),
            Self::J4a | Self::Custom => None,
        }
    }

    pub fn supports(&self, scope: ScopeKind) -> bool {
        use PriorId::*;
        match scope {
            ScopeKind::General => !matches!(self, J4a),
            ScopeKind::AlphaKnown => matches!(self, J1 | J4a | R8 | Custom),
            ScopeKind::PhiKnown => matches!(self, J1 | R7 | R8 | R9 | R10 | Custom),
        }
    }
}

impl fmt::Display for PriorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Self::CATALOG
            .iter()
            .copied()
            .chain([Self::Custom])
            .find(|id| id.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::Prior {
                prior: t.to_string(),
                reason: "unknown prior id".into(),
            })
    }
}

/// Which parameters are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeKind {
    General,
    AlphaKnown,
    PhiKnown,
}

impl ScopeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::General => "general",
            Self::AlphaKnown => "alpha-known",
            Self::PhiKnown => "phi-known",
        }
    }
}

impl fmt::Display for ScopeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A scope together with the value of the known parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Scope {
    General,
    AlphaKnown(f64),
    PhiKnown(f64),
}

impl Scope {
    pub fn kind(&self) -> ScopeKind {
        match self {
            Self::General => ScopeKind::General,
            Self::AlphaKnown(_) => ScopeKind::AlphaKnown,
            Self::PhiKnown(_) => ScopeKind::PhiKnown,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::AlphaKnown(v) | Self::PhiKnown(v) if !(v.is_finite() && v > 0.0) => Err(
                Error::InvalidParams(format!("known {} value {v} must be positive", self.kind())),
            ),
            _ => Ok(()),
        }
    }
}

/// Whether declared exponents are two-sided (∝) or one-sided bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `π ∝ x^e`: both bounds hold.
    #[default]
    TwoSided,
    /// `π ≲ x^e` only.
    Upper,
    /// `π ≳ x^e` only.
    Lower,
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "two-sided" | "twosided" | "both" => Ok(Self::TwoSided),
            "upper" | "one-sided-upper" => Ok(Self::Upper),
            "lower" | "one-sided-lower" => Ok(Self::Lower),
            other => Err(Error::Config(format!("unknown bound kind `{other}`"))),
        }
    }
}

/// `(k, q0, q∞, r0, r∞)`: signed power-law exponents of π(μ) globally, and of
/// π(α), π(φ) at 0⁺ and ∞. `None` marks an entry that is unknown or not
/// applicable in the scope.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AsymptoticExponents {
    pub k: Option<f64>,
    pub q0: Option<f64>,
    pub q_inf: Option<f64>,
    pub r0: Option<f64>,
    pub r_inf: Option<f64>,
    #[serde(default)]
    pub bound: BoundKind,
}

impl AsymptoticExponents {
    pub fn new(
        k: Option<f64>,
        q0: Option<f64>,
        q_inf: Option<f64>,
        r0: Option<f64>,
        r_inf: Option<f64>,
    ) -> Result<Self> {
        let e = Self {
            k,
            q0,
            q_inf,
            r0,
            r_inf,
            bound: BoundKind::TwoSided,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn with_bound(mut self, bound: BoundKind) -> Self {
        self.bound = bound;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.entries() {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::Prior {
                        prior: "exponents".into(),
                        reason: format!("{name} = {v} is not finite"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> [(&'static str, Option<f64>); 5] {
        [
            ("k", self.k),
            ("q0", self.q0),
            ("q_inf", self.q_inf),
            ("r0", self.r0),
            ("r_inf", self.r_inf),
        ]
    }

    /// Clears the entries that are not parameters in `scope`.
    pub fn restrict(mut self, scope: ScopeKind) -> Self {
        match scope {
            ScopeKind::General => {}
            ScopeKind::AlphaKnown => {
                self.q0 = None;
                self.q_inf = None;
            }
            ScopeKind::PhiKnown => {
                self.r0 = None;
                self.r_inf = None;
            }
        }
        self
    }
}

/// One multiplicative factor of a prior, as a function of a single positive
/// parameter.
#[derive(Clone)]
pub enum Factor {
    Power(f64),
    /// `x^zero` on `(0, 1)` and `x^inf` on `[1, ∞)`.
    BrokenPower { zero: f64, inf: f64 },
    Catalog(PriorId),
    /// Must return a finite, non-negative value.
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power(e) => write!(f, "Power({e})"),
            Self::BrokenPower { zero, inf } => write!(f, "BrokenPower({zero}, {inf})"),
            Self::Catalog(id) => write!(f, "Catalog({id})"),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Factor {
    pub fn ln_eval(&self, x: f64) -> Result<f64> {
        match self {
            Self::Power(e) => Ok(e * x.ln()),
            Self::BrokenPower { zero, inf } => Ok(if x < 1.0 { zero } else { inf } * x.ln()),
            Self::Catalog(id) => ln_phi_factor(*id, x),
            Self::Function(f) => {
                let v = f(x);
                if v.is_finite() && v >= 0.0 {
                    Ok(v.ln())
                } else {
                    Err(Error::Prior {
                        prior: "custom".into(),
                        reason: format!("factor returned {v} at {x}"),
                    })
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.ln_eval(x).map(f64::exp)
    }
}

/// A prior restricted to a scope: `π(φ) · π(α) · μ^k` with the factor of
/// the known parameter dropped.
#[derive(Debug, Clone)]
pub struct PriorSpec {
    id: PriorId,
    scope: ScopeKind,
    phi_factor: Option<Factor>,
    alpha_factor: Option<Factor>,
    mu_exponent: Option<f64>,
    declared: Option<AsymptoticExponents>,
}

impl PriorSpec {
    /// A catalog prior in a scope it is defined for.
    pub fn catalog(id: PriorId, scope: ScopeKind) -> Result<Self> {
        if id == PriorId::Custom {
            return Err(Error::Prior {
                prior: id.to_string(),
                reason: "use PriorSpec::custom".into(),
            });
        }
        if !id.supports(scope) {
            return Err(Error::Prior {
                prior: id.to_string(),
                reason: format!("not defined in the {scope} scope"),
            });
        }
        let phi_factor = (scope != ScopeKind::PhiKnown).then_some(Factor::Catalog(id));
        let alpha_factor = match scope {
            ScopeKind::AlphaKnown => None,
            _ => Some(Factor::Power(id.alpha_exponent().unwrap_or(-1.0))),
        };
        Ok(Self {
            id,
            scope,
            phi_factor,
            alpha_factor,
            mu_exponent: Some(-1.0),
            declared: None,
        })
    }

    /// A user prior described by its exponents. Missing factors default to
    /// broken power laws built from the exponents, when those are present.
    pub fn custom(
        scope: ScopeKind,
        exponents: AsymptoticExponents,
        phi_factor: Option<Factor>,
        alpha_factor: Option<Factor>,
    ) -> Result<Self> {
        exponents.validate()?;
        let exponents = exponents.restrict(scope);
        let broken = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(zero), Some(inf)) => Some(Factor::BrokenPower { zero, inf }),
            _ => None,
        };
        let phi_factor = match scope {
            ScopeKind::PhiKnown => None,
            _ => phi_factor.or_else(|| broken(exponents.r0, exponents.r_inf)),
        };
        let alpha_factor = match scope {
            ScopeKind::AlphaKnown => None,
            _ => alpha_factor.or_else(|| broken(exponents.q0, exponents.q_inf)),
        };
        Ok(Self {
            id: PriorId::Custom,
            scope,
            phi_factor,
            alpha_factor,
            mu_exponent: exponents.k,
            declared: Some(exponents),
        })
    }

    pub fn id(&self) -> PriorId {
        self.id
    }

    pub fn scope(&self) -> ScopeKind {
        self.scope
    }

    pub fn phi_factor(&self) -> Option<&Factor> {
        self.phi_factor.as_ref()
    }

    pub fn alpha_factor(&self) -> Option<&Factor> {
        self.alpha_factor.as_ref()
    }

    pub fn mu_exponent(&self) -> Option<f64> {
        self.mu_exponent
    }

    /// Power of α, when the α-factor is a pure power.
    pub fn alpha_exponent(&self) -> Option<f64> {
        match self.alpha_factor {
            Some(Factor::Power(e)) => Some(e),
            _ => None,
        }
    }

    /// Exponents supplied by the user for a custom prior.
    pub fn declared_exponents(&self) -> Option<&AsymptoticExponents> {
        self.declared.as_ref()
    }
}

fn radicand_root_ln(id: PriorId, phi: f64, radicand: f64) -> Result<f64> {
    if radicand.is_nan() || radicand < RADICAND_FLOOR {
        return Err(Error::NegativeRadicand {
            prior: id.to_string(),
            phi,
            value: radicand,
        });
    }
    if radicand <= 0.0 {
        log::warn!("{id}: radicand {radicand:e} at phi = {phi:e} clamped to the smallest positive double");
        return Ok(0.5 * f64::MIN_POSITIVE.ln());
    }
    Ok(0.5 * radicand.ln())
}

/// `φ²ψ'² − ψ' − 1` via `v = φψ' − 1 − 1/(2φ)` and `w = φψ' − 1`.
fn jeffreys_radicand(phi: f64) -> f64 {
    let v = trigamma_excess(phi);
    let w = phi_trigamma_minus_one(phi);
    2.0 * v + w * (v - 0.5 / phi)
}

/// `φ²ψ'(φ) + φ − 1 = φ(1 + φψ'(φ+1))`.
fn partition_denominator(phi: f64) -> f64 {
    phi * (1.0 + phi * trigamma_unchecked(phi + 1.0))
}

/// `ψ'(φ)·B − ψ(φ)²` with `B = 1 + 2ψ + φψ' + φψ²`.
fn reference_mu_first_numerator(phi: f64) -> f64 {
    if phi >= 2.0 {
        let psi = digamma_unchecked(phi);
        let tri = trigamma_unchecked(phi);
        tri * (1.0 + 2.0 * psi + phi * tri) + psi * psi * phi_trigamma_minus_one(phi)
    } else {
        let d1 = digamma_unchecked(phi + 1.0);
        let t1 = trigamma_unchecked(phi + 1.0);
        let b = alpha_information_factor(phi);
        t1 * b + (d1 * d1 + t1 + 2.0 * d1) / phi - d1 * d1
    }
}

/// Log of the φ-factor of a catalog prior.
pub fn ln_phi_factor(id: PriorId, phi: f64) -> Result<f64> {
    if !(phi.is_finite() && phi > 0.0) {
        return Err(Error::Domain {
            func: "phi_factor",
            arg: phi,
            reason: "phi must be positive and finite",
        });
    }
    let rad = match id {
        PriorId::J1 => return Ok(-phi.ln()),
        PriorId::R8 => return Ok(0.5 * trigamma_unchecked(phi).ln()),
        PriorId::J3 => jeffreys_radicand(phi),
        PriorId::J4a => phi_trigamma_minus_one(phi),
        PriorId::J4b => phi * trigamma_unchecked(phi) * alpha_information_factor(phi),
        PriorId::J5 => phi_trigamma_minus_one(phi) * alpha_information_factor(phi),
        PriorId::J6 => trigamma_unchecked(phi) * partition_denominator(phi),
        PriorId::R7 => phi_trigamma_minus_one(phi) / phi,
        PriorId::R9 => reference_mu_first_numerator(phi) / alpha_information_factor(phi),
        PriorId::R10 => jeffreys_radicand(phi) / partition_denominator(phi),
        PriorId::Custom => {
            return Err(Error::Prior {
                prior: id.to_string(),
                reason: "custom priors have no catalog factor".into(),
            })
        }
    };
    radicand_root_ln(id, phi, rad)
}

/// The φ-factor of a catalog prior.
pub fn phi_factor(id: PriorId, phi: f64) -> Result<f64> {
    ln_phi_factor(id, phi).map(f64::exp)
}

/// `ln π(θ)` up to an additive constant.
pub fn ln_prior(spec: &PriorSpec, theta: &ParamVector) -> Result<f64> {
    let missing = |what: &str| Error::Prior {
        prior: spec.id.to_string(),
        reason: format!("no {what} factor available in the {} scope", spec.scope),
    };
    let k = spec.mu_exponent.ok_or_else(|| missing("mu"))?;
    let mut total = k * theta.mu().ln();
    if spec.scope != ScopeKind::PhiKnown {
        let f = spec.phi_factor.as_ref().ok_or_else(|| missing("phi"))?;
        total += f.ln_eval(theta.phi())?;
    }
    if spec.scope != ScopeKind::AlphaKnown {
        let f = spec.alpha_factor.as_ref().ok_or_else(|| missing("alpha"))?;
        total += f.ln_eval(theta.alpha())?;
    }
    Ok(total)
}

/// Unnormalized prior density at `theta`.
pub fn eval_prior(spec: &PriorSpec, theta: &ParamVector) -> Result<f64> {
    ln_prior(spec, theta).map(f64::exp)
}

/// Exponents of a catalog prior as established analytically.
///
/// Entries the analysis leaves open are `None`: the large-φ behavior of the
/// independence and partition Jeffreys priors, the large-φ behavior of R7,
/// and the small-φ behavior of R9 (whose −1 exponent sits at ∞).
pub fn analytic_exponents(spec: &PriorSpec) -> Result<AsymptoticExponents> {
    use PriorId::*;
    const H: f64 = 0.5;
    let tuple = |k, q0, qi, r0, ri| AsymptoticExponents {
        k: Some(k),
        q0,
        q_inf: qi,
        r0,
        r_inf: ri,
        bound: BoundKind::TwoSided,
    };
    let e = match spec.id {
        J1 => tuple(-1.0, Some(-1.0), Some(-1.0), Some(-1.0), Some(-1.0)),
        J3 => tuple(-1.0, Some(0.0), Some(0.0), Some(0.0), Some(-1.0)),
        J4a => tuple(-1.0, None, None, Some(-H), Some(-H)),
        J4b | J5 | J6 => tuple(-1.0, Some(0.0), Some(0.0), Some(-H), None),
        R7 => tuple(-1.0, Some(-1.0), Some(-1.0), Some(-1.0), None),
        R8 => tuple(-1.0, Some(-1.0), Some(-1.0), Some(-1.0), Some(-H)),
        R9 => tuple(-1.0, Some(-1.0), Some(-1.0), None, Some(-1.0)),
        R10 => tuple(-1.0, Some(-1.0), Some(-1.0), Some(-H), Some(-1.5)),
        Custom => {
            return Err(Error::Prior {
                prior: "custom".into(),
                reason: "custom priors have no analytic exponents; estimate or declare them".into(),
            })
        }
    };
    Ok(e.restrict(spec.scope))
}

/// The catalog as a JSON document shared by the CLI and the docs.
pub fn catalog_json() -> Value {
    let entries: Vec<Value> = PriorId::CATALOG
        .iter()
        .map(|id| {
            let scopes: Vec<Value> = [ScopeKind::General, ScopeKind::AlphaKnown, ScopeKind::PhiKnown]
                .into_iter()
                .filter(|s| id.supports(*s))
                .map(|s| {
                    let spec = PriorSpec::catalog(*id, s).expect("supported scope");
                    let e = analytic_exponents(&spec).expect("catalog id");
                    json!({ "scope": s.as_str(), "exponents": e })
                })
                .collect();
            json!({
                "id": id.as_str(),
                "origin": id.origin(),
                "phi_factor": id.formula(),
                "alpha_exponent": id.alpha_exponent(),
                "mu_exponent": -1.0,
                "scopes": scopes,
            })
        })
        .collect();
    json!({ "priors": entries })
}
