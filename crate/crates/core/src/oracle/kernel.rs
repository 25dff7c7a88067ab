//! Unnormalized log posteriors.
//!
//! With `π(μ) = μ^k` the μ-integral is closed form:
//!
//! ```text
//! ∫₀^∞ μ^{nαφ+k} exp(−μ^α S) dμ = Γ(a) / (α S^a),   a = nφ + (k+1)/α,  S = Σ xᵢ^α
//! ```
//!
//! and writing `ln S = q(α) + α·mean(ln x)` keeps the remaining (φ, α)
//! integrand free of large cancelling terms.

use crate::asymptotics::p_unchecked;
use crate::error::{Error, Result};
use crate::priors::{PriorSpec, Scope, ScopeKind};
use crate::specfun::{incomplete_gamma_pair, ln_gamma_unchecked, log_gamma_ratio_unchecked, Accuracy};
use crate::stacy::{log_likelihood, Dataset, ParamVector};

pub(crate) struct Kernel<'a> {
    data: &'a Dataset,
    spec: &'a PriorSpec,
    scope: Scope,
    n: u64,
    k: f64,
    ln_n: f64,
    mean_log: f64,
}

/// α-dependent pieces, shared by every φ at the same α.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AlphaTerms {
    alpha: f64,
    q: f64,
    ln_prior: f64,
}

impl<'a> Kernel<'a> {
    pub fn new(data: &'a Dataset, spec: &'a PriorSpec, scope: Scope) -> Result<Self> {
        scope.validate()?;
        if spec.scope() != scope.kind() {
            return Err(Error::Config(format!(
                "prior is set up for the {} scope, integration requested in the {} scope",
                spec.scope(),
                scope.kind()
            )));
        }
        if data.n() >= 2 && data.is_degenerate() {
            return Err(Error::DegenerateData {
                n: data.n(),
                value: data.values()[0],
            });
        }
        let k = spec.mu_exponent().ok_or_else(|| Error::Prior {
            prior: spec.id().to_string(),
            reason: "the mu exponent k is required".into(),
        })?;
        Ok(Self {
            data,
            spec,
            scope,
            n: data.n() as u64,
            k,
            ln_n: (data.n() as f64).ln(),
            mean_log: data.mean_log(),
        })
    }

    pub fn mu_exponent(&self) -> f64 {
        self.k
    }

    pub fn alpha_terms(&self, alpha: f64) -> Result<AlphaTerms> {
        let ln_prior = match self.scope.kind() {
            ScopeKind::AlphaKnown => 0.0,
            _ => self.alpha_factor()?.ln_eval(alpha)?,
        };
        Ok(AlphaTerms {
            alpha,
            q: p_unchecked(self.data, alpha) + self.ln_n,
            ln_prior,
        })
    }

    fn alpha_factor(&self) -> Result<&crate::priors::Factor> {
        self.spec.alpha_factor().ok_or_else(|| Error::Prior {
            prior: self.spec.id().to_string(),
            reason: "no alpha factor".into(),
        })
    }

    fn ln_phi_prior(&self, phi: f64) -> Result<f64> {
        match self.scope.kind() {
            ScopeKind::PhiKnown => Ok(0.0),
            _ => self
                .spec
                .phi_factor()
                .ok_or_else(|| Error::Prior {
                    prior: self.spec.id().to_string(),
                    reason: "no phi factor".into(),
                })?
                .ln_eval(phi),
        }
    }

    /// `ln ∫ L(θ) π(θ) dμ` at (φ, α); `+∞` when the μ-integral diverges.
    pub fn reduced(&self, phi: f64, at: &AlphaTerms) -> Result<f64> {
        let n = self.n as f64;
        let alpha = at.alpha;
        let c = (self.k + 1.0) / alpha;
        let gamma_part = if c == 0.0 {
            log_gamma_ratio_unchecked(phi, self.n)
        } else {
            let a = n * phi + c;
            if a <= 0.0 {
                return Ok(f64::INFINITY);
            }
            ln_gamma_unchecked(a) - n * ln_gamma_unchecked(phi)
        };
        Ok(self.ln_phi_prior(phi)? + at.ln_prior + (n - 1.0) * alpha.ln() - self.data.log_sum()
            + gamma_part
            - n * phi * at.q
            - c * (at.q + alpha * self.mean_log))
    }

    /// Like [`Kernel::reduced`], with μ restricted to `[mu_lo, mu_hi]`.
    pub fn reduced_truncated(&self, phi: f64, at: &AlphaTerms, mu_lo: f64, mu_hi: f64) -> Result<f64> {
        let n = self.n as f64;
        let alpha = at.alpha;
        let a = n * phi + (self.k + 1.0) / alpha;
        if a <= 0.0 {
            return Err(Error::Quadrature("truncated mu-integral needs a > 0".into()));
        }
        let ln_s = at.q + alpha * self.mean_log;
        let x_lo = (alpha * mu_lo.ln() + ln_s).exp();
        let x_hi = (alpha * mu_hi.ln() + ln_s).exp();
        let acc = Accuracy::default();
        let (p_lo, q_lo) = incomplete_gamma_pair(a, x_lo, acc)?;
        let (p_hi, q_hi) = incomplete_gamma_pair(a, x_hi, acc)?;
        let mass = if x_lo >= a { q_lo - q_hi } else { p_hi - p_lo };
        Ok(self.reduced(phi, at)? + mass.ln())
    }

    /// `ln L(θ) + ln π(θ)`.
    pub fn full(&self, theta: &ParamVector) -> Result<f64> {
        let ll = log_likelihood(self.data, theta)?;
        let lp = crate::priors::ln_prior(self.spec, theta)?;
        Ok(ll + lp)
    }

    /// Fills in the known component of θ for the scope.
    pub fn theta(&self, phi: f64, mu: f64, alpha: f64) -> Result<ParamVector> {
        match self.scope {
            Scope::General => ParamVector::new(phi, mu, alpha),
            Scope::AlphaKnown(a) => ParamVector::new(phi, mu, a),
            Scope::PhiKnown(p) => ParamVector::new(p, mu, alpha),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::quadrature::{integrate, Tolerance};
    use crate::priors::{PriorId, PriorSpec};

    #[test]
    fn reduced_matches_numeric_mu_integral() {
        let data = Dataset::new(vec![0.4, 1.3, 2.2]).unwrap();
        let spec = PriorSpec::catalog(PriorId::R10, ScopeKind::General).unwrap();
        let kern = Kernel::new(&data, &spec, Scope::General).unwrap();
        for (phi, alpha) in [(0.7, 1.4), (2.0, 0.6), (5.0, 3.0)] {
            let at = kern.alpha_terms(alpha).unwrap();
            let want = kern.reduced(phi, &at).unwrap();
            let shift = want;
            let f = |v: f64| {
                let th = ParamVector::new(phi, v.exp(), alpha)?;
                Ok((kern.full(&th)? + v - shift).exp())
            };
            let tol = Tolerance {
                rel: 1e-12,
                ..Default::default()
            };
            let r = integrate(&f, -40.0, 15.0, &tol).unwrap();
            assert!((r.value.ln()).abs() < 1e-9, "phi={phi} alpha={alpha}: {}", r.value);
        }
    }

    #[test]
    fn divergent_mu_integral_is_infinite() {
        let data = Dataset::new(vec![0.4, 1.3]).unwrap();
        let e = crate::priors::AsymptoticExponents::new(Some(-3.0), Some(-1.0), Some(-1.0), Some(-1.0), Some(-1.0))
            .unwrap();
        let spec = PriorSpec::custom(ScopeKind::General, e, None, None).unwrap();
        let kern = Kernel::new(&data, &spec, Scope::General).unwrap();
        let at = kern.alpha_terms(1.0).unwrap();
        assert_eq!(kern.reduced(0.5, &at).unwrap(), f64::INFINITY);
        assert!(kern.reduced(5.0, &at).unwrap().is_finite());
    }

    #[test]
    fn degenerate_data_is_refused() {
        let data = Dataset::new(vec![2.0, 2.0]).unwrap();
        let spec = PriorSpec::catalog(PriorId::R10, ScopeKind::General).unwrap();
        assert!(Kernel::new(&data, &spec, Scope::General).is_err());
        let one = Dataset::new(vec![2.0]).unwrap();
        assert!(Kernel::new(&one, &spec, Scope::General).is_ok());
    }

    #[test]
    fn scope_mismatch_is_refused() {
        let data = Dataset::new(vec![0.4, 1.3]).unwrap();
        let spec = PriorSpec::catalog(PriorId::R10, ScopeKind::General).unwrap();
        assert!(Kernel::new(&data, &spec, Scope::PhiKnown(1.0)).is_err());
    }
}
