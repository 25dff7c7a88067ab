//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the abscissae `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Cap on the number of subintervals kept by the adaptive loop.
    pub max_intervals: usize,
    /// Initial pieces are no wider than this.
    pub initial_width: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 0.0,
            rel: 1e-9,
            max_intervals: 4000,
            initial_width: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    e
}

/// One 15-point Kronrod panel with its embedded 7-point Gauss error estimate.
pub fn gk15<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = fc.abs() * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    if !value.is_finite() {
        return Ok((value, f64::INFINITY));
    }
    let err = rescale_error((res_k - res_g) * half, res_abs * half.abs(), res_asc * half.abs());
    Ok((value, err))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates `f` over `[a, b]`, bisecting the panel with the largest error
/// until the total error meets `tol`. Returns the best estimate when the
/// interval budget runs out; callers judge the reported error.
///
/// A non-finite panel value short-circuits to `+∞` (the integrand is
/// non-negative everywhere it is used).
pub fn integrate<F>(f: &F, a: f64, b: f64, tol: &Tolerance) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Quadrature(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_err: 0.0,
            evals: 0,
        });
    }
    let pieces = ((b - a) / tol.initial_width).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    let mut heap = BinaryHeap::with_capacity(pieces * 4);
    let (mut total, mut total_err) = (0.0, 0.0);
    let mut evals = 0;
    for i in 0..pieces {
        let lo = a + h * i as f64;
        let hi = if i + 1 == pieces { b } else { lo + h };
        let (value, err) = gk15(f, lo, hi)?;
        evals += 15;
        if value.is_nan() {
            return Err(Error::Quadrature(format!("NaN integrand on [{lo}, {hi}]")));
        }
        if value.is_infinite() {
            return Ok(QuadResult {
                value: f64::INFINITY,
                abs_err: f64::INFINITY,
                evals,
            });
        }
        total += value;
        total_err += err;
        heap.push(Panel {
            a: lo,
            b: hi,
            value,
            err,
        });
    }
    while total_err > tol.abs.max(tol.rel * total.abs()) && heap.len() < tol.max_intervals {
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(f, worst.a, mid)?;
        let (v2, e2) = gk15(f, mid, worst.b)?;
        evals += 30;
        if !(v1.is_finite() && v2.is_finite()) {
            return Ok(QuadResult {
                value: f64::INFINITY,
                abs_err: f64::INFINITY,
                evals,
            });
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
    }
    // Re-sum to shed drift from the running updates.
    let (value, abs_err) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err));
    Ok(QuadResult {
        value,
        abs_err,
        evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact_on_one_panel() {
        let f = |x: f64| Ok(3.0 * x.powi(5) - x * x + 1.0);
        let (v, _) = gk15(&f, -1.0, 2.0).unwrap();
        let exact = 0.5 * (64.0 - 1.0) - (8.0 + 1.0) / 3.0 + 3.0;
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn gaussian_integral() {
        let f = |x: f64| Ok((-0.5 * x * x).exp());
        let r = integrate(&f, -12.0, 12.0, &Tolerance::default()).unwrap();
        assert!((r.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!(r.abs_err < 1e-8);
    }

    #[test]
    fn peaked_integrand_adapts() {
        let w = 1e-3;
        let f = |x: f64| Ok(w / ((x - 0.3).powi(2) + w * w));
        let tol = Tolerance {
            rel: 1e-10,
            ..Default::default()
        };
        let r = integrate(&f, 0.0, 1.0, &tol).unwrap();
        let exact = (0.7f64 / w).atan() + (0.3f64 / w).atan();
        assert!((r.value - exact).abs() < 1e-8 * exact, "{} vs {exact}", r.value);
    }

    #[test]
    fn infinite_integrand_short_circuits() {
        let f = |x: f64| Ok(if x > 0.5 { f64::INFINITY } else { 1.0 });
        assert_eq!(integrate(&f, 0.0, 1.0, &Tolerance::default()).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn errors_propagate() {
        let f = |x: f64| {
            if x > 0.5 {
                Err(Error::Quadrature("boom".into()))
            } else {
                Ok(x)
            }
        };
        assert!(integrate(&f, 0.0, 1.0, &Tolerance::default()).is_err());
    }
}
