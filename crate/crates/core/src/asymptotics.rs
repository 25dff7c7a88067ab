//! Power-law exponents at 0⁺ and ∞, and the sample kernels p(α), q(α), k(x).

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stacy::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Endpoint {
    ZeroPlus,
    Infinity,
}

impl Endpoint {
    /// Default fitting window.
    pub fn default_grid(&self) -> Grid {
        match self {
            Self::ZeroPlus => Grid {
                lo: 1e-7,
                hi: 1e-4,
                points: 40,
            },
            Self::Infinity => Grid {
                lo: 1e4,
                hi: 1e7,
                points: 40,
            },
        }
    }
}

/// A geometric grid `lo = x₀ < … < x_{points−1} = hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn decades(&self) -> f64 {
        (self.hi / self.lo).log10()
    }

    pub fn nodes(&self) -> Vec<f64> {
        geometric_grid(self.lo, self.hi, self.points)
    }
}

/// `count` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let last = (count.max(2) - 1) as f64;
    (0..count)
        .map(|i| match i {
            0 => lo,
            i if i + 1 == count => hi,
            i => (a + (b - a) * i as f64 / last).exp(),
        })
        .collect()
}

/// Exponents the engine recognizes exactly.
pub const SNAP_TARGETS: [f64; 7] = [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5];
/// Snap tolerance for clean power laws.
pub const SNAP_TOL: f64 = 0.02;
/// Snap tolerance where logarithmic corrections are known to be present.
pub const SNAP_TOL_LOG: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub endpoint: Endpoint,
    pub exponent: f64,
    /// RMS residual of the log-log fit.
    pub stderr: f64,
    pub decades: f64,
    /// Nearest element of [`SNAP_TARGETS`] within tolerance, if any.
    pub snapped: Option<f64>,
}

impl ExponentEstimate {
    pub fn unsnapped(&self) -> bool {
        self.snapped.is_none()
    }

    /// The snapped exponent if available, the raw slope otherwise.
    pub fn value(&self) -> f64 {
        self.snapped.unwrap_or(self.exponent)
    }

    /// Re-snaps with a different tolerance.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.snapped = snap(self.exponent, tol);
        self
    }
}

/// Nearest target exponent within `tol`.
pub fn snap(exponent: f64, tol: f64) -> Option<f64> {
    SNAP_TARGETS
        .iter()
        .copied()
        .find(|t| (exponent - t).abs() <= tol)
}

/// Log-log slope of `f` at `endpoint` over its default grid.
pub fn estimate_exponent<F>(f: F, endpoint: Endpoint) -> Result<ExponentEstimate>
where
    F: Fn(f64) -> f64,
{
    estimate_log_exponent(|x| Ok(f(x).ln()), endpoint, endpoint.default_grid())
}

/// Like [`estimate_exponent`], but `ln_f` returns `ln f(x)` directly and the
/// grid is explicit. Preferred when `f` under- or overflows on the grid.
pub fn estimate_log_exponent<F>(ln_f: F, endpoint: Endpoint, grid: Grid) -> Result<ExponentEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(grid.lo > 0.0 && grid.hi > grid.lo && grid.points >= 3) {
        return Err(Error::ExponentFit(format!("bad grid {grid:?}")));
    }
    if grid.decades() < 3.0 - 1e-9 {
        return Err(Error::ExponentFit(format!(
            "grid spans {:.2} decades, need at least 3",
            grid.decades()
        )));
    }
    let mut xs = Vec::with_capacity(grid.points);
    let mut ys = Vec::with_capacity(grid.points);
    for x in grid.nodes() {
        let y = ln_f(x)?;
        if !y.is_finite() {
            return Err(Error::ExponentFit(format!("non-finite value {y} at x = {x:e}")));
        }
        xs.push(x.ln());
        ys.push(y);
    }
    let (slope, rms) = least_squares(&xs, &ys);
    Ok(ExponentEstimate {
        endpoint,
        exponent: slope,
        stderr: rms,
        decades: grid.decades(),
        snapped: snap(slope, SNAP_TOL),
    })
}

/// Slope and RMS residual of the ordinary least-squares line through (xs, ys).
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - my - slope * (x - mx);
            r * r
        })
        .sum();
    (slope, (ss / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub alpha: f64,
    pub p_value: f64,
    pub q_value: f64,
}

/// `eˣ − 1 − x`, accurate for small `x`.
fn expm1_minus_x(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        x2 * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x * (1.0 / 120.0 + x / 720.0))))
    } else {
        x.exp_m1() - x
    }
}

/// `p(α) = ln(mean xᵢ^α) − ln(geomean xᵢ^α)`; needs α > 0.
///
/// Works on the centered logs `cᵢ`, where `p(α) = ln mean exp(α cᵢ)`. Small
/// `α·max|cᵢ|` goes through `ln_1p` of the second-order remainder so that the
/// `α²` behavior near zero is resolved; otherwise log-sum-exp.
pub(crate) fn p_unchecked(data: &Dataset, alpha: f64) -> f64 {
    let c = data.centered_logs();
    let n = c.len() as f64;
    let span = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if alpha * span < 0.5 {
        let rem: f64 = c.iter().map(|ci| expm1_minus_x(alpha * ci)).sum::<f64>() / n;
        let drift = alpha * c.iter().sum::<f64>() / n;
        (rem + drift).ln_1p()
    } else {
        let m = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = c.iter().map(|ci| (alpha * (ci - m)).exp()).sum::<f64>() / n;
        alpha * m + s.ln()
    }
}

/// p(α) and q(α) = p(α) + ln n.
pub fn sample_stats(data: &Dataset, alpha: f64) -> Result<SampleStats> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain {
            func: "sample_stats",
            arg: alpha,
            reason: "alpha must be positive and finite",
        });
    }
    if data.is_degenerate() {
        return Err(Error::DegenerateData {
            n: data.n(),
            value: data.values()[0],
        });
    }
    let p = p_unchecked(data, alpha);
    Ok(SampleStats {
        alpha,
        p_value: p,
        q_value: p + (data.n() as f64).ln(),
    })
}

/// `k(x) = ln max xᵢ − mean ln xᵢ`, the large-α slope of p(α).
pub fn k_statistic(data: &Dataset) -> f64 {
    if data.is_degenerate() {
        return 0.0;
    }
    data.centered_logs()
        .iter()
        .copied()
        .fold(0.0f64, f64::max)
}

/// Writes `(x, f_of_x)` pairs as CSV.
pub fn write_loglog_csv(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "f_of_x"])?;
    for (x, y) in points {
        w.write_record([format!("{x:e}"), format!("{y:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Same as [`write_loglog_csv`] but to any writer.
pub fn write_loglog<W: Write>(out: W, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "f_of_x"])?;
    for (x, y) in points {
        w.write_record([format!("{x:e}"), format!("{y:e}")])?;
    }
    w.flush()?;
    Ok(())
}
