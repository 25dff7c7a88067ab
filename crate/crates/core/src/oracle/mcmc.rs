//! Component-wise random-walk Metropolis on log parameters.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::priors::{analytic_exponents, PriorId, PriorSpec, Scope, ScopeKind};
use crate::propriety::{decide, ProprietyVerdict, Status};
use crate::stacy::{Dataset, ParamVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Draws kept after burn-in.
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Initial proposal scale per free coordinate; 0.5 each when absent.
    pub step_sizes: Option<Vec<f64>>,
    /// Adaptation window during burn-in.
    pub adapt_every: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            steps: 20_000,
            burn_in: 5_000,
            seed: 1,
            step_sizes: None,
            adapt_every: 50,
        }
    }
}

/// Acceptance band targeted while adapting.
const TARGET_LOW: f64 = 0.25;
const TARGET_HIGH: f64 = 0.45;

/// Output of [`metropolis`]: kept states and their log targets.
#[derive(Debug, Clone, PartialEq)]
pub struct RawChain {
    pub samples: Vec<Vec<f64>>,
    pub log_target: Vec<f64>,
    /// Post burn-in acceptance rate of each coordinate.
    pub acceptance: Vec<f64>,
    /// Proposal scales after adaptation.
    pub step_sizes: Vec<f64>,
}

/// Samples from `exp(log_target)` on ℝᵈ, updating one coordinate at a time.
pub fn metropolis<F>(log_target: F, init: Vec<f64>, cfg: &ChainConfig) -> Result<RawChain>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let d = init.len();
    if d == 0 || cfg.steps == 0 {
        return Err(Error::Config("chain needs at least one coordinate and one step".into()));
    }
    let mut scale = cfg.step_sizes.clone().unwrap_or_else(|| vec![0.5; d]);
    if scale.len() != d || scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Config(format!("need {d} positive step sizes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = init;
    let mut lp = log_target(&x)?;
    if !lp.is_finite() {
        return Err(Error::Config(format!("log target is {lp} at the initial state")));
    }
    let adapt_every = cfg.adapt_every.max(1);
    let mut window_acc = vec![0usize; d];
    let mut kept_acc = vec![0usize; d];
    let mut samples = Vec::with_capacity(cfg.steps);
    let mut log_target_out = Vec::with_capacity(cfg.steps);

    for it in 0..cfg.burn_in + cfg.steps {
        for i in 0..d {
            let old = x[i];
            let z: f64 = rng.sample(StandardNormal);
            x[i] = old + scale[i] * z;
            let cand = log_target(&x)?;
            let u: f64 = rng.random();
            if cand.is_finite() && u.ln() < cand - lp {
                lp = cand;
                if it < cfg.burn_in {
                    window_acc[i] += 1;
                } else {
                    kept_acc[i] += 1;
                }
            } else {
                x[i] = old;
            }
        }
        if it < cfg.burn_in && (it + 1) % adapt_every == 0 {
            for i in 0..d {
                let rate = window_acc[i] as f64 / adapt_every as f64;
                if rate < TARGET_LOW {
                    scale[i] *= 0.7;
                } else if rate > TARGET_HIGH {
                    scale[i] *= 1.4;
                }
                window_acc[i] = 0;
            }
        }
        if it >= cfg.burn_in {
            samples.push(x.clone());
            log_target_out.push(lp);
        }
    }
    Ok(RawChain {
        samples,
        log_target: log_target_out,
        acceptance: kept_acc
            .iter()
            .map(|a| *a as f64 / cfg.steps as f64)
            .collect(),
        step_sizes: scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub step: usize,
    pub theta: ParamVector,
    pub log_post: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub draws: usize,
    /// Posterior means of (φ, μ, α).
    pub mean: [f64; 3],
    pub sd: [f64; 3],
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub rows: Vec<ChainRow>,
    /// Post burn-in acceptance per free coordinate.
    pub acceptance: Vec<f64>,
    pub step_sizes: Vec<f64>,
    /// The verdict that allowed sampling.
    pub verdict: ProprietyVerdict,
}

impl Chain {
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance.iter().sum::<f64>() / self.acceptance.len() as f64
    }

    pub fn summary(&self) -> ChainSummary {
        let n = self.rows.len() as f64;
        let get = |r: &ChainRow, i: usize| match i {
            0 => r.theta.phi(),
            1 => r.theta.mu(),
            _ => r.theta.alpha(),
        };
        let mut mean = [0.0; 3];
        let mut sd = [0.0; 3];
        for i in 0..3 {
            mean[i] = self.rows.iter().map(|r| get(r, i)).sum::<f64>() / n;
            let var = self.rows.iter().map(|r| (get(r, i) - mean[i]).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            sd[i] = var.sqrt();
        }
        ChainSummary {
            draws: self.rows.len(),
            mean,
            sd,
            acceptance_rate: self.acceptance_rate(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "phi", "mu", "alpha", "log_post"])?;
        for r in &self.rows {
            w.write_record([
                r.step.to_string(),
                format!("{:.12e}", r.theta.phi()),
                format!("{:.12e}", r.theta.mu()),
                format!("{:.12e}", r.theta.alpha()),
                format!("{:.12e}", r.log_post),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// The engine verdict for `spec` at sample size `n`, from its analytic or
/// declared exponents.
pub fn gate_verdict(spec: &PriorSpec, n: u64) -> Result<ProprietyVerdict> {
    let e = match spec.id() {
        PriorId::Custom => *spec.declared_exponents().ok_or_else(|| Error::Prior {
            prior: "custom".into(),
            reason: "no declared exponents".into(),
        })?,
        _ => analytic_exponents(spec)?,
    };
    Ok(decide(spec.scope(), &e, n))
}

/// Positions of ln φ, ln μ, ln α inside the free coordinate vector.
fn layout(scope: ScopeKind) -> [Option<usize>; 3] {
    match scope {
        ScopeKind::General => [Some(0), Some(1), Some(2)],
        ScopeKind::AlphaKnown => [Some(0), Some(1), None],
        ScopeKind::PhiKnown => [None, Some(0), Some(1)],
    }
}

/// Draws from the posterior of `spec` given `data`, after checking with the
/// decision engine that the posterior is proper.
pub fn mcmc_sample(data: &Dataset, spec: &PriorSpec, scope: Scope, cfg: &ChainConfig) -> Result<Chain> {
    let verdict = gate_verdict(spec, data.n() as u64)?;
    if verdict.status != Status::Proper {
        return Err(Error::PriorGate(format!(
            "posterior for {} in the {} scope with n = {} is {} ({})",
            spec.id(),
            scope.kind(),
            data.n(),
            verdict.status,
            verdict.rule
        )));
    }
    let kern = Kernel::new(data, spec, scope)?;
    let lay = layout(scope.kind());
    let unpack = |z: &[f64]| -> (f64, f64, f64) {
        let pick = |slot: Option<usize>| slot.map(|i| z[i].exp()).unwrap_or(1.0);
        (pick(lay[0]), pick(lay[1]), pick(lay[2]))
    };
    let target = |z: &[f64]| -> Result<f64> {
        let (phi, mu, alpha) = unpack(z);
        match kern.theta(phi, mu, alpha) {
            Ok(th) => Ok(kern.full(&th)? + z.iter().sum::<f64>()),
            Err(Error::InvalidParams(_)) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    };
    let init = initial_state(&kern, data, scope, &lay, &target)?;
    let raw = metropolis(target, init, cfg)?;
    let rows = raw
        .samples
        .iter()
        .zip(&raw.log_target)
        .enumerate()
        .map(|(i, (z, lp))| {
            let (phi, mu, alpha) = unpack(z);
            Ok(ChainRow {
                step: i,
                theta: kern.theta(phi, mu, alpha)?,
                log_post: *lp,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Chain {
        rows,
        acceptance: raw.acceptance,
        step_sizes: raw.step_sizes,
        verdict,
    })
}

/// Best point of a coarse grid over the shape coordinates, with μ at its
/// conditional mode.
fn initial_state<F>(
    kern: &Kernel<'_>,
    data: &Dataset,
    scope: Scope,
    lay: &[Option<usize>; 3],
    target: &F,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let grid: Vec<f64> = (-12..=12).map(|i| i as f64 * 0.25).collect();
    let (phis, alphas): (Vec<f64>, Vec<f64>) = match scope {
        Scope::General => (grid.clone(), grid),
        Scope::AlphaKnown(a) => (grid, vec![a.ln()]),
        Scope::PhiKnown(p) => (vec![p.ln()], grid),
    };
    let n = data.n() as f64;
    let k = kern.mu_exponent();
    let dim = lay.iter().flatten().count();
    let mut best = (f64::NEG_INFINITY, vec![0.0; dim]);
    for &t in &phis {
        for &u in &alphas {
            let (phi, alpha) = (t.exp(), u.exp());
            let ln_s = {
                let at = data.values().iter().map(|x| (alpha * x.ln()).exp()).sum::<f64>();
                at.ln()
            };
            // Mode of μ^{nαφ+k+1} exp(−μ^α S) on the log scale.
            let shape = n * alpha * phi + k + 1.0;
            let mode_ln_mu = if shape > 0.0 {
                ((shape / alpha).ln() - ln_s) / alpha
            } else {
                -data.mean_log()
            };
            let mut z = vec![0.0; dim];
            if let Some(i) = lay[0] {
                z[i] = t;
            }
            if let Some(i) = lay[1] {
                z[i] = mode_ln_mu;
            }
            if let Some(i) = lay[2] {
                z[i] = u;
            }
            let v = target(&z)?;
            if v > best.0 {
                best = (v, z);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Config("no finite starting point for the chain".into()));
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_target() {
        let cfg = ChainConfig {
            steps: 40_000,
            burn_in: 2_000,
            seed: 11,
            ..Default::default()
        };
        let raw = metropolis(|z| Ok(-0.5 * z[0] * z[0]), vec![3.0], &cfg).unwrap();
        let n = raw.samples.len() as f64;
        let mean = raw.samples.iter().map(|z| z[0]).sum::<f64>() / n;
        let var = raw.samples.iter().map(|z| (z[0] - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.06, "{mean}");
        assert!((var - 1.0).abs() < 0.08, "{var}");
        assert!(raw.acceptance[0] > 0.2 && raw.acceptance[0] < 0.5, "{:?}", raw.acceptance);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = ChainConfig {
            steps: 500,
            burn_in: 100,
            seed: 3,
            ..Default::default()
        };
        let f = |z: &[f64]| Ok(-(z[0] * z[0] + (z[1] - 1.0).powi(2)));
        let a = metropolis(f, vec![0.0, 0.0], &cfg).unwrap();
        let b = metropolis(f, vec![0.0, 0.0], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_configs() {
        let cfg = ChainConfig {
            step_sizes: Some(vec![0.0]),
            ..Default::default()
        };
        assert!(metropolis(|_| Ok(0.0), vec![0.0], &cfg).is_err());
        assert!(metropolis(|_| Ok(f64::NEG_INFINITY), vec![0.0], &ChainConfig::default()).is_err());
    }
}
