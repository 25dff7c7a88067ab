//! Truncation ladders for the posterior normalizing constant.
//!
//! Level `i` integrates over `[1/T_i, T_i]` in every numerically integrated
//! coordinate, with `T_i = 2^{e_i}`. Levels are accumulated as nested shells,
//! so the values are non-decreasing by construction. Each shell piece is
//! integrated with its own log-scale shift, which keeps the far tails of
//! divergent integrands representable.

use std::cell::Cell;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use super::quadrature::{integrate, Tolerance};
use crate::error::{Error, Result};
use crate::priors::{PriorSpec, Scope};
use crate::stacy::{Dataset, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisConfig {
    /// Converging needs the last relative increment below this.
    pub converge_increment: f64,
    /// Diverging needs the tail slope at or above this.
    pub diverge_slope: f64,
    /// Number of trailing levels used for the tail slope.
    pub window: usize,
    /// A steep tail whose last log-increment fell below this fraction of the
    /// one `window - 1` levels earlier is saturating, not diverging.
    pub saturation_ratio: f64,
}

impl Default for DiagnosisConfig {
    fn default() -> Self {
        Self {
            converge_increment: 1e-3,
            diverge_slope: 0.05,
            window: 4,
            saturation_ratio: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderConfig {
    /// `T` of the first level is `2^first_exp`.
    pub first_exp: u32,
    /// Levels up to `2^last_exp` are always computed.
    pub last_exp: u32,
    /// While the diagnosis is inconclusive, levels are added up to `2^extend_to_exp`.
    pub extend_to_exp: u32,
    /// Relative tolerance of each shell integral.
    pub rel_tol: f64,
    pub max_intervals: usize,
    pub diagnosis: DiagnosisConfig,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            first_exp: 4,
            last_exp: 14,
            extend_to_exp: 24,
            rel_tol: 1e-8,
            max_intervals: 2000,
            diagnosis: DiagnosisConfig::default(),
        }
    }
}

impl LadderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.first_exp == 0 || self.last_exp < self.first_exp + 4 || self.extend_to_exp < self.last_exp {
            return Err(Error::Config(format!(
                "ladder exponents must satisfy 1 <= first, first + 4 <= last <= extend_to (got {}, {}, {})",
                self.first_exp, self.last_exp, self.extend_to_exp
            )));
        }
        let d = &self.diagnosis;
        if d.window < 3 || !(d.saturation_ratio > 0.0 && d.saturation_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "diagnosis window {} must be at least 3 and saturation ratio {} in (0, 1]",
                d.window, d.saturation_ratio
            )));
        }
        if self.extend_to_exp > 40 {
            return Err(Error::Config("ladder exponent above 40".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 0.1) {
            return Err(Error::Config(format!("rel_tol {} outside (0, 0.1)", self.rel_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationLadder {
    /// Number of numerically integrated coordinates.
    pub dim: usize,
    /// Truncation `T` of each level.
    pub levels: Vec<f64>,
    /// `ln` of the integral at each level.
    pub log_values: Vec<f64>,
    /// Relative quadrature error estimate at each level.
    pub rel_err: Vec<f64>,
}

impl TruncationLadder {
    /// A ladder built from given values with `T = 2^{first_exp + i}`.
    pub fn from_log_values(first_exp: u32, log_values: Vec<f64>) -> Self {
        Self {
            dim: 0,
            levels: (0..log_values.len())
                .map(|i| 2f64.powi((first_exp + i as u32) as i32))
                .collect(),
            rel_err: vec![0.0; log_values.len()],
            log_values,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["T", "log_value", "rel_err"])?;
        for ((t, v), e) in self.levels.iter().zip(&self.log_values).zip(&self.rel_err) {
            w.write_record([format!("{t}"), format!("{v:.12e}"), format!("{e:.3e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosisStatus {
    Converging,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub status: DiagnosisStatus,
    /// Least-squares slope of ln(value) against ln(T) over the trailing window.
    pub tail_slope: f64,
    /// Relative increment of the last level over the one before.
    pub last_increment: f64,
    pub levels: usize,
}

/// Classifies a ladder with the default thresholds.
pub fn diagnose(ladder: &TruncationLadder) -> Diagnosis {
    diagnose_with(ladder, &DiagnosisConfig::default())
}

pub fn diagnose_with(ladder: &TruncationLadder, cfg: &DiagnosisConfig) -> Diagnosis {
    let v = &ladder.log_values;
    let m = v.len();
    let inconclusive = |slope, inc| Diagnosis {
        status: DiagnosisStatus::Inconclusive,
        tail_slope: slope,
        last_increment: inc,
        levels: m,
    };
    if m < 5 || m < cfg.window + 1 {
        return inconclusive(f64::NAN, f64::NAN);
    }
    if v.iter().any(|x| *x == f64::INFINITY) {
        return Diagnosis {
            status: DiagnosisStatus::Diverging,
            tail_slope: f64::INFINITY,
            last_increment: f64::INFINITY,
            levels: m,
        };
    }
    let incs: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).exp_m1()).collect();
    let last = incs[incs.len() - 1];
    let xs: Vec<f64> = ladder.levels[m - cfg.window..].iter().map(|t| t.ln()).collect();
    let (slope, _) = crate::asymptotics::least_squares(&xs, &v[m - cfg.window..]);

    // Power-law divergence keeps its log-increments constant and logarithmic
    // divergence shrinks them slowly; a proper posterior whose mass sits far
    // out shows a steep run that then collapses.
    let steps: Vec<f64> = v[m - cfg.window..].windows(2).map(|w| w[1] - w[0]).collect();
    let saturating = steps[steps.len() - 1] < cfg.saturation_ratio * steps[0];
    if slope >= cfg.diverge_slope && !saturating {
        return Diagnosis {
            status: DiagnosisStatus::Diverging,
            tail_slope: slope,
            last_increment: last,
            levels: m,
        };
    }
    let tail = &incs[incs.len() - 3..];
    // Increments under 1e-12 are quadrature noise; their order is meaningless.
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0] || w[1] < 1e-12);
    if last < cfg.converge_increment && decreasing {
        return Diagnosis {
            status: DiagnosisStatus::Converging,
            tail_slope: slope,
            last_increment: last,
            levels: m,
        };
    }
    inconclusive(slope, last)
}

/// Axis-aligned box in log coordinates. In one dimension only `t` is used.
#[derive(Debug, Clone, Copy)]
struct Piece {
    t: (f64, f64),
    u: (f64, f64),
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    if m == f64::INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn coarse_nodes(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Log integrand over the log coordinates of the free shape parameters.
enum Integrand<'a> {
    Phi(&'a Kernel<'a>, super::kernel::AlphaTerms),
    Alpha(&'a Kernel<'a>, f64),
    Both(&'a Kernel<'a>),
}

impl Integrand<'_> {
    fn dim(&self) -> usize {
        match self {
            Self::Both(_) => 2,
            _ => 1,
        }
    }

    fn eval1(&self, x: f64) -> Result<f64> {
        match self {
            Self::Phi(k, at) => Ok(k.reduced(x.exp(), at)? + x),
            Self::Alpha(k, phi) => {
                let at = k.alpha_terms(x.exp())?;
                Ok(k.reduced(*phi, &at)? + x)
            }
            Self::Both(_) => unreachable!("two-dimensional integrand"),
        }
    }

    /// Max of the log integrand over a coarse grid of the piece.
    fn shift(&self, p: &Piece) -> Result<f64> {
        const STEP: f64 = 0.1;
        let mut best = f64::NEG_INFINITY;
        match self {
            Self::Both(k) => {
                let ts = coarse_nodes(p.t.0, p.t.1, STEP * 2.0);
                for u in coarse_nodes(p.u.0, p.u.1, STEP * 2.0) {
                    let at = k.alpha_terms(u.exp())?;
                    for &t in &ts {
                        best = best.max(k.reduced(t.exp(), &at)? + t + u);
                    }
                }
            }
            _ => {
                for t in coarse_nodes(p.t.0, p.t.1, STEP) {
                    best = best.max(self.eval1(t)?);
                }
            }
        }
        Ok(best)
    }

    /// `(ln ∫ e^h, ln err)` over the piece.
    fn integrate_piece(&self, p: &Piece, rel: f64, abs_ln: f64, max_intervals: usize) -> Result<(f64, f64)> {
        let s = self.shift(p)?;
        if s == f64::INFINITY {
            return Ok((f64::INFINITY, f64::INFINITY));
        }
        if s == f64::NEG_INFINITY {
            return Ok((f64::NEG_INFINITY, f64::NEG_INFINITY));
        }
        let tol = Tolerance {
            abs: (abs_ln - s).exp(),
            rel,
            max_intervals,
            initial_width: 0.5,
        };
        let r = match self {
            Self::Both(k) => {
                let inner_err = Cell::new(0.0f64);
                let u_width = (p.u.1 - p.u.0).max(f64::MIN_POSITIVE);
                let inner_tol = Tolerance {
                    abs: tol.abs / u_width * 0.1,
                    rel: rel * 0.1,
                    ..tol
                };
                let outer = |u: f64| -> Result<f64> {
                    let at = k.alpha_terms(u.exp())?;
                    let g = |t: f64| -> Result<f64> { Ok((k.reduced(t.exp(), &at)? + t + u - s).exp()) };
                    let r = integrate(&g, p.t.0, p.t.1, &inner_tol)?;
                    inner_err.set(inner_err.get().max(r.abs_err));
                    Ok(r.value)
                };
                let mut r = integrate(&outer, p.u.0, p.u.1, &tol)?;
                r.abs_err += inner_err.get() * u_width;
                r
            }
            _ => {
                let f = |t: f64| -> Result<f64> { Ok((self.eval1(t)? - s).exp()) };
                integrate(&f, p.t.0, p.t.1, &tol)?
            }
        };
        if r.value == f64::INFINITY {
            return Ok((f64::INFINITY, f64::INFINITY));
        }
        Ok((s + r.value.ln(), s + r.abs_err.ln()))
    }
}

fn shell_pieces(dim: usize, inner: f64, outer: f64) -> Vec<Piece> {
    if dim == 1 {
        return vec![
            Piece {
                t: (-outer, -inner),
                u: (0.0, 0.0),
            },
            Piece {
                t: (inner, outer),
                u: (0.0, 0.0),
            },
        ];
    }
    vec![
        Piece {
            t: (-outer, outer),
            u: (-outer, -inner),
        },
        Piece {
            t: (-outer, outer),
            u: (inner, outer),
        },
        Piece {
            t: (-outer, -inner),
            u: (-inner, inner),
        },
        Piece {
            t: (inner, outer),
            u: (-inner, inner),
        },
    ]
}

fn core_piece(half: f64) -> Piece {
    Piece {
        t: (-half, half),
        u: (-half, half),
    }
}

/// Truncated normalizing constants of the posterior, level by level.
///
/// μ is integrated in closed form. In the general scope the remaining
/// integral is over (ln φ, ln α); with α known over ln φ; with φ known over
/// ln α.
pub fn integrate_norm_const(
    data: &Dataset,
    spec: &PriorSpec,
    scope: Scope,
    cfg: &LadderConfig,
) -> Result<TruncationLadder> {
    cfg.validate()?;
    let kern = Kernel::new(data, spec, scope)?;
    let alpha_terms;
    let integrand = match scope {
        Scope::General => Integrand::Both(&kern),
        Scope::AlphaKnown(a) => {
            alpha_terms = kern.alpha_terms(a)?;
            Integrand::Phi(&kern, alpha_terms)
        }
        Scope::PhiKnown(phi) => Integrand::Alpha(&kern, phi),
    };
    let dim = integrand.dim();
    let half = |e: u32| e as f64 * std::f64::consts::LN_2;

    let (core, core_err) = integrand.integrate_piece(
        &core_piece(half(cfg.first_exp)),
        cfg.rel_tol,
        f64::NEG_INFINITY,
        cfg.max_intervals,
    )?;
    let abs_ln = core + cfg.rel_tol.ln();

    let shells: Vec<(f64, f64)> = ((cfg.first_exp + 1)..=cfg.last_exp)
        .into_par_iter()
        .map(|e| {
            let mut acc = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for p in shell_pieces(dim, half(e - 1), half(e)) {
                let (v, err) = integrand.integrate_piece(&p, cfg.rel_tol, abs_ln, cfg.max_intervals)?;
                acc = (log_add(acc.0, v), log_add(acc.1, err));
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut ladder = TruncationLadder {
        dim,
        levels: vec![2f64.powi(cfg.first_exp as i32)],
        log_values: vec![core],
        rel_err: vec![(core_err - core).exp()],
    };
    let mut err_ln = core_err;
    let mut push = |ladder: &mut TruncationLadder, e: u32, (v, err): (f64, f64)| -> Result<()> {
        let value = log_add(*ladder.log_values.last().expect("core level"), v);
        err_ln = log_add(err_ln, err);
        let rel = if value.is_finite() { (err_ln - value).exp() } else { 0.0 };
        if rel > 0.1 {
            return Err(Error::Quadrature(format!(
                "error estimate {rel:.2e} exceeds 10% of the value at T = 2^{e}"
            )));
        }
        ladder.levels.push(2f64.powi(e as i32));
        ladder.log_values.push(value);
        ladder.rel_err.push(rel);
        Ok(())
    };
    for (i, shell) in shells.into_iter().enumerate() {
        push(&mut ladder, cfg.first_exp + 1 + i as u32, shell)?;
    }
    let mut e = cfg.last_exp;
    while e < cfg.extend_to_exp
        && diagnose_with(&ladder, &cfg.diagnosis).status == DiagnosisStatus::Inconclusive
    {
        e += 1;
        let mut acc = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in shell_pieces(dim, half(e - 1), half(e)) {
            let (v, err) = integrand.integrate_piece(&p, cfg.rel_tol, abs_ln, cfg.max_intervals)?;
            acc = (log_add(acc.0, v), log_add(acc.1, err));
        }
        push(&mut ladder, e, acc)?;
    }
    Ok(ladder)
}

/// A box `[lo, hi]` in the natural (not log) coordinates.
pub type Interval = (f64, f64);

/// `ln ∫∫∫ L π dφ dμ dα` over a box with every coordinate integrated
/// numerically. General scope only; used to cross-check the closed-form
/// μ-reduction.
pub fn box_integral_full(
    data: &Dataset,
    spec: &PriorSpec,
    phi: Interval,
    mu: Interval,
    alpha: Interval,
    rel_tol: f64,
) -> Result<f64> {
    let kern = Kernel::new(data, spec, Scope::General)?;
    let ln = |i: Interval| (i.0.ln(), i.1.ln());
    let (tp, vm, ua) = (ln(phi), ln(mu), ln(alpha));
    let h = |t: f64, v: f64, u: f64| -> Result<f64> {
        let th = ParamVector::new(t.exp(), v.exp(), u.exp())?;
        Ok(kern.full(&th)? + t + v + u)
    };
    let mut s = f64::NEG_INFINITY;
    for u in coarse_nodes(ua.0, ua.1, 0.1) {
        for t in coarse_nodes(tp.0, tp.1, 0.1) {
            for v in coarse_nodes(vm.0, vm.1, 0.1) {
                s = s.max(h(t, v, u)?);
            }
        }
    }
    let tol = |rel: f64| Tolerance {
        abs: 0.0,
        rel,
        max_intervals: 4000,
        initial_width: 0.25,
    };
    let inner_tol = tol(rel_tol * 0.01);
    let mid_tol = tol(rel_tol * 0.1);
    let outer = |u: f64| -> Result<f64> {
        let mid = |t: f64| -> Result<f64> {
            let g = |v: f64| -> Result<f64> { Ok((h(t, v, u)? - s).exp()) };
            Ok(integrate(&g, vm.0, vm.1, &inner_tol)?.value)
        };
        Ok(integrate(&mid, tp.0, tp.1, &mid_tol)?.value)
    };
    let r = integrate(&outer, ua.0, ua.1, &tol(rel_tol))?;
    Ok(s + r.value.ln())
}

/// Same box as [`box_integral_full`], with μ handled by the closed form
/// truncated through the regularized incomplete gamma function.
pub fn box_integral_reduced(
    data: &Dataset,
    spec: &PriorSpec,
    phi: Interval,
    mu: Interval,
    alpha: Interval,
    rel_tol: f64,
) -> Result<f64> {
    let kern = Kernel::new(data, spec, Scope::General)?;
    let (tp, ua) = ((phi.0.ln(), phi.1.ln()), (alpha.0.ln(), alpha.1.ln()));
    let h = |t: f64, at: &super::kernel::AlphaTerms, u: f64| -> Result<f64> {
        Ok(kern.reduced_truncated(t.exp(), at, mu.0, mu.1)? + t + u)
    };
    let mut s = f64::NEG_INFINITY;
    for u in coarse_nodes(ua.0, ua.1, 0.1) {
        let at = kern.alpha_terms(u.exp())?;
        for t in coarse_nodes(tp.0, tp.1, 0.1) {
            s = s.max(h(t, &at, u)?);
        }
    }
    let tol = |rel: f64| Tolerance {
        abs: 0.0,
        rel,
        max_intervals: 4000,
        initial_width: 0.25,
    };
    let inner_tol = tol(rel_tol * 0.1);
    let outer = |u: f64| -> Result<f64> {
        let at = kern.alpha_terms(u.exp())?;
        let g = |t: f64| -> Result<f64> { Ok((h(t, &at, u)? - s).exp()) };
        Ok(integrate(&g, tp.0, tp.1, &inner_tol)?.value)
    };
    let r = integrate(&outer, ua.0, ua.1, &tol(rel_tol))?;
    Ok(s + r.value.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ladder(values: &[f64]) -> TruncationLadder {
        TruncationLadder::from_log_values(4, values.to_vec())
    }

    #[test]
    fn geometric_saturation_converges() {
        let d = diagnose(&ladder(&[0.0, 0.40, 0.44, 0.441, 0.4411, 0.44111]));
        assert_eq!(d.status, DiagnosisStatus::Converging);
    }

    #[test]
    fn linear_log_growth_diverges() {
        let v: Vec<f64> = (0..8).map(|i| i as f64 * std::f64::consts::LN_2).collect();
        let d = diagnose(&ladder(&v));
        assert_eq!(d.status, DiagnosisStatus::Diverging);
        assert!((d.tail_slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collapsing_steep_tail_is_not_diverging() {
        let d = diagnose(&ladder(&[0.5, 1.2, 1.9, 2.6, 3.3, 3.9, 4.5, 5.1, 5.5, 5.7, 5.8]));
        assert!(d.tail_slope > 0.05);
        assert_eq!(d.status, DiagnosisStatus::Inconclusive);
    }

    #[test]
    fn alternating_increments_are_inconclusive() {
        let d = diagnose(&ladder(&[0.0, 0.01, 0.015, 0.025, 0.03, 0.04, 0.045]));
        assert_eq!(d.status, DiagnosisStatus::Inconclusive);
    }

    #[test]
    fn short_ladders_are_inconclusive() {
        assert_eq!(diagnose(&ladder(&[0.0, 0.0, 0.0, 0.0])).status, DiagnosisStatus::Inconclusive);
    }

    #[test]
    fn infinite_level_diverges() {
        let d = diagnose(&ladder(&[0.0, 0.1, 0.2, f64::INFINITY, f64::INFINITY]));
        assert_eq!(d.status, DiagnosisStatus::Diverging);
    }

    #[test]
    fn config_validation() {
        assert!(LadderConfig::default().validate().is_ok());
        let bad = LadderConfig {
            last_exp: 6,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        ladder(&[0.0, 0.5]).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("T,log_value,rel_err\n16,"), "{text}");
    }
}
