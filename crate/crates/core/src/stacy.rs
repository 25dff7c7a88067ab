//! The Stacy (generalized gamma) family
//!
//! ```text
//! f(x | φ, μ, α) = α μ^{αφ} x^{αφ−1} exp(−(μx)^α) / Γ(φ),   x > 0
//! ```
//!
//! with shape `φ`, rate `μ` and power `α`. If `G ~ Gamma(φ, 1)` then
//! `G^{1/α} / μ` has this density, which is how [`sample`] draws.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{digamma_unchecked, ln_gamma_unchecked, trigamma_unchecked};

/// θ = (φ, μ, α), all strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    phi: f64,
    mu: f64,
    alpha: f64,
}

impl ParamVector {
    pub fn new(phi: f64, mu: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [("phi", phi), ("mu", mu), ("alpha", alpha)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} = {v} must be positive and finite"
                )));
            }
        }
        Ok(Self { phi, mu, alpha })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl fmt::Display for ParamVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(phi={}, mu={}, alpha={})", self.phi, self.mu, self.alpha)
    }
}

/// Positive observations with the summary statistics the posterior needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    log_sum: f64,
    min: f64,
    max: f64,
    /// `ln xᵢ − mean(ln x)`; p(α) is evaluated from these.
    centered_logs: Vec<f64>,
    degenerate: bool,
}

impl Dataset {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidData("no observations".into()));
        }
        let bad: Vec<String> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| !(v.is_finite() && **v > 0.0))
            .map(|(i, v)| format!("#{} = {v}", i + 1))
            .collect();
        if !bad.is_empty() {
            return Err(Error::InvalidData(format!(
                "observations must be positive and finite: {}",
                bad.join(", ")
            )));
        }
        let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let log_sum: f64 = logs.iter().sum();
        let mean_log = log_sum / values.len() as f64;
        let centered_logs = logs.iter().map(|l| l - mean_log).collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            degenerate: min == max,
            values,
            log_sum,
            min,
            max,
            centered_logs,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn log_sum(&self) -> f64 {
        self.log_sum
    }

    pub fn mean_log(&self) -> f64 {
        self.log_sum / self.n() as f64
    }

    pub fn geometric_mean(&self) -> f64 {
        self.mean_log().exp()
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn centered_logs(&self) -> &[f64] {
        &self.centered_logs
    }

    /// True when every observation is equal.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// `ln f(x | θ)`.
pub fn log_pdf(x: f64, theta: &ParamVector) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain {
            func: "pdf",
            arg: x,
            reason: "x must be positive and finite",
        });
    }
    let ParamVector { phi, mu, alpha } = *theta;
    let log_mux = mu.ln() + x.ln();
    Ok(alpha.ln() + alpha * phi * log_mux - x.ln() - (alpha * log_mux).exp() - ln_gamma_unchecked(phi))
}

/// Density of the Stacy family.
pub fn pdf(x: f64, theta: &ParamVector) -> Result<f64> {
    log_pdf(x, theta).map(f64::exp)
}

/// Log-likelihood of `data` under `theta`.
pub fn log_likelihood(data: &Dataset, theta: &ParamVector) -> Result<f64> {
    let ParamVector { phi, mu, alpha } = *theta;
    let n = data.n() as f64;
    let ln_mu = mu.ln();
    let power_sum: f64 = data
        .values()
        .iter()
        .map(|x| (alpha * (ln_mu + x.ln())).exp())
        .sum();
    Ok(n * alpha.ln() - n * ln_gamma_unchecked(phi)
        + (alpha * phi - 1.0) * data.log_sum()
        + n * alpha * phi * ln_mu
        - power_sum)
}

/// `ln G` for `G ~ Gamma(shape, 1)` by the Marsaglia–Tsang squeeze method.
///
/// Shapes below one use `G = G' U^{1/shape}` with `G' ~ Gamma(shape + 1)`,
/// accumulated in logs so tiny shapes do not underflow.
pub(crate) fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.random();
        return ln_gamma_variate(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}

/// Draws `count` observations from the Stacy distribution, deterministically
/// for a given `seed`.
pub fn sample(theta: &ParamVector, count: usize, seed: u64) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::InvalidData("sample count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ln_mu = theta.mu.ln();
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let ln_g = ln_gamma_variate(theta.phi, &mut rng);
        let x = (ln_g / theta.alpha - ln_mu).exp();
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::InvalidParams(format!(
                "draw under {theta} is not representable as a positive double"
            )));
        }
        values.push(x);
    }
    Dataset::new(values)
}

/// Row/column index of α in [`FisherInfo`].
pub const IDX_ALPHA: usize = 0;
/// Row/column index of μ in [`FisherInfo`].
pub const IDX_MU: usize = 1;
/// Row/column index of φ in [`FisherInfo`].
pub const IDX_PHI: usize = 2;

/// Expected Fisher information per observation, ordered (α, μ, φ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherInfo {
    pub matrix: [[f64; 3]; 3],
}

impl FisherInfo {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i][j]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// `1 + 2ψ(φ) + φψ'(φ) + φψ(φ)²`, rewritten with the unit-shift recurrences
/// as `1 + φ(ψ(φ+1)² + ψ'(φ+1))` so it stays accurate as φ → 0⁺.
pub(crate) fn alpha_information_factor(phi: f64) -> f64 {
    let d1 = digamma_unchecked(phi + 1.0);
    1.0 + phi * (d1 * d1 + trigamma_unchecked(phi + 1.0))
}

/// Fisher information of one observation under the rate parameterization.
///
/// The off-diagonal entries are those of the score covariance for the
/// density above: `I_αμ = (1 + φψ(φ))/μ`, `I_αφ = −ψ(φ)/α`, `I_μφ = −α/μ`.
pub fn fisher_info(theta: &ParamVector) -> Result<FisherInfo> {
    let ParamVector { phi, mu, alpha } = *theta;
    let psi = digamma_unchecked(phi);
    let aa = alpha_information_factor(phi) / (alpha * alpha);
    let am = (1.0 + phi * psi) / mu;
    let ap = -psi / alpha;
    let mm = phi * alpha * alpha / (mu * mu);
    let mp = -alpha / mu;
    let pp = trigamma_unchecked(phi);
    Ok(FisherInfo {
        matrix: [[aa, am, ap], [am, mm, mp], [ap, mp, pp]],
    })
}

/// Named members of the Stacy family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubfamilyName {
    Exponential,
    Rayleigh,
    HalfNormal,
    MaxwellBoltzmann,
    ScaledChiSquare,
    ChiSquare,
    Weibull,
    GeneralizedHalfNormal,
    Gamma,
    Erlang,
    Nakagami,
    WilsonHilferty,
    FullStacy,
}

impl SubfamilyName {
    pub const ALL: [SubfamilyName; 13] = [
        Self::Exponential,
        Self::Rayleigh,
        Self::HalfNormal,
        Self::MaxwellBoltzmann,
        Self::ScaledChiSquare,
        Self::ChiSquare,
        Self::Weibull,
        Self::GeneralizedHalfNormal,
        Self::Gamma,
        Self::Erlang,
        Self::Nakagami,
        Self::WilsonHilferty,
        Self::FullStacy,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Exponential => "exponential",
            Self::Rayleigh => "rayleigh",
            Self::HalfNormal => "half-normal",
            Self::MaxwellBoltzmann => "maxwell-boltzmann",
            Self::ScaledChiSquare => "scaled-chi-square",
            Self::ChiSquare => "chi-square",
            Self::Weibull => "weibull",
            Self::GeneralizedHalfNormal => "generalized-half-normal",
            Self::Gamma => "gamma",
            Self::Erlang => "erlang",
            Self::Nakagami => "nakagami",
            Self::WilsonHilferty => "wilson-hilferty",
            Self::FullStacy => "full-stacy",
        }
    }

    /// Pins in (φ, μ, α) order.
    pub fn subfamily(&self) -> Subfamily {
        use Pin::*;
        let (phi, mu, alpha) = match self {
            Self::Exponential => (Value(1.0), Free, Value(1.0)),
            Self::Rayleigh => (Value(1.0), Free, Value(2.0)),
            Self::HalfNormal => (Value(0.5), Free, Value(2.0)),
            Self::MaxwellBoltzmann => (Value(1.5), Free, Value(2.0)),
            Self::ScaledChiSquare => (HalfDegrees, Free, Value(1.0)),
            // Rate 1/2, i.e. scale 2.
            Self::ChiSquare => (HalfDegrees, Value(0.5), Value(1.0)),
            Self::Weibull => (Value(1.0), Free, Free),
            Self::GeneralizedHalfNormal => (Value(0.5), Free, Free),
            Self::Gamma => (Free, Free, Value(1.0)),
            Self::Erlang => (Degrees, Free, Free),
            Self::Nakagami => (Free, Free, Value(2.0)),
            Self::WilsonHilferty => (Free, Free, Value(3.0)),
            Self::FullStacy => (Free, Free, Free),
        };
        Subfamily {
            name: *self,
            phi,
            mu,
            alpha,
        }
    }
}

impl fmt::Display for SubfamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubfamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        Self::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == key)
            .ok_or_else(|| Error::Subfamily {
                family: s.to_string(),
                reason: "unknown subfamily".into(),
            })
    }
}

/// How one component of θ is determined inside a subfamily.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pin {
    Free,
    Value(f64),
    /// `n / 2` for an integer `n ≥ 1`.
    HalfDegrees,
    /// An integer `n ≥ 1`.
    Degrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Subfamily {
    pub name: SubfamilyName,
    pub phi: Pin,
    pub mu: Pin,
    pub alpha: Pin,
}

/// Caller-supplied values for the free entries of a subfamily.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FreeParams {
    pub phi: Option<f64>,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    /// Integer `n` for the Erlang and chi-square rows.
    pub degrees: Option<u32>,
}

/// Pins the remaining components of θ for a named subfamily.
pub fn resolve_subfamily(name: SubfamilyName, free: FreeParams) -> Result<ParamVector> {
    let family = name.subfamily();
    let err = |reason: String| Error::Subfamily {
        family: name.to_string(),
        reason,
    };
    let needs_degrees = [family.phi, family.mu, family.alpha]
        .iter()
        .any(|p| matches!(p, Pin::HalfDegrees | Pin::Degrees));
    match (needs_degrees, free.degrees) {
        (true, None) => return Err(err("integer degrees n must be supplied".into())),
        (true, Some(0)) => return Err(err("degrees n must be >= 1".into())),
        (false, Some(_)) => return Err(err("degrees n is not a parameter of this family".into())),
        _ => {}
    }
    let degrees = free.degrees.unwrap_or(0) as f64;

    let resolve = |label: &str, pin: Pin, supplied: Option<f64>| -> Result<f64> {
        match (pin, supplied) {
            (Pin::Free, Some(v)) => Ok(v),
            (Pin::Free, None) => Err(err(format!("{label} is free and must be supplied"))),
            (_, Some(_)) => Err(err(format!("{label} is pinned and cannot be supplied"))),
            (Pin::Value(v), None) => Ok(v),
            (Pin::HalfDegrees, None) => Ok(0.5 * degrees),
            (Pin::Degrees, None) => Ok(degrees),
        }
    };
    let phi = resolve("phi", family.phi, free.phi)?;
    let mu = resolve("mu", family.mu, free.mu)?;
    let alpha = resolve("alpha", family.alpha, free.alpha)?;
    ParamVector::new(phi, mu, alpha)
}
