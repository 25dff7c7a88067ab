//! Stacy density, likelihood, sampler and Fisher information.

use std::path::PathBuf;

use nalgebra::{Matrix3, SymmetricEigen};
use objprior::oracle::quadrature::{integrate, Tolerance};
use objprior::stacy::{fisher_info, log_likelihood, pdf, sample, Dataset, ParamVector};
use proptest::prelude::*;
use serde_json::Value;

fn scalar(key: &str) -> f64 {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/oracle_values.json");
    let o: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    o["scalars"][key].as_f64().unwrap()
}

#[test]
fn likelihood_matches_density_product() {
    let data = Dataset::new(vec![1.0, 2.0]).unwrap();
    let th = ParamVector::new(2.0, 0.5, 1.0).unwrap();
    let ll = log_likelihood(&data, &th).unwrap();
    assert!((ll - scalar("loglik_12")).abs() < 1e-13);
    let direct = (pdf(1.0, &th).unwrap() * pdf(2.0, &th).unwrap()).ln();
    assert!((ll - direct).abs() < 1e-13);
}

#[test]
fn exponential_member() {
    let th = ParamVector::new(1.0, 2.0, 1.0).unwrap();
    let want = 2.0 * (-1.0f64).exp();
    assert!((pdf(0.5, &th).unwrap() - want).abs() < 1e-14);
    assert!((want - 0.735759).abs() < 1e-6);
}

#[test]
fn mean_by_quadrature() {
    let th = ParamVector::new(2.0, 1.3, 1.7).unwrap();
    let f = |t: f64| {
        let x = t.exp();
        Ok(x * x * pdf(x, &th)?)
    };
    let tol = Tolerance {
        rel: 1e-13,
        ..Default::default()
    };
    let m = integrate(&f, -40.0, 6.0, &tol).unwrap().value;
    assert!((m - scalar("mean_quad_2_1p3_1p7")).abs() < 1e-10);
}

#[test]
fn samples_repeat_with_seed() {
    let th = ParamVector::new(0.4, 3.0, 0.7).unwrap();
    let a = sample(&th, 1000, 5).unwrap();
    let b = sample(&th, 1000, 5).unwrap();
    let c = sample(&th, 1000, 6).unwrap();
    assert_eq!(a.values(), b.values());
    assert_ne!(a.values(), c.values());
}

fn eigenvalues(theta: &ParamVector) -> [f64; 3] {
    let m = fisher_info(theta).unwrap().matrix;
    let mat = Matrix3::from_fn(|i, j| m[i][j]);
    let e = SymmetricEigen::new(mat).eigenvalues;
    [e[0], e[1], e[2]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fisher_positive_definite(lp in -3.0f64..3.0, lm in -3.0f64..3.0, la in -2.0f64..2.0) {
        let th = ParamVector::new(lp.exp(), lm.exp(), la.exp()).unwrap();
        let fi = fisher_info(&th).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(fi.get(i, j), fi.get(j, i));
            }
        }
        let ev = eigenvalues(&th);
        // Large phi with small alpha is badly conditioned (ratio near 1e-11),
        // so the floor is the rounding noise of the eigen solver.
        let top = ev.iter().cloned().fold(0.0, f64::max);
        for e in ev {
            prop_assert!(e > 64.0 * f64::EPSILON * top, "eigenvalues {:?} at {}", ev, th);
        }
        let m = fi.matrix;
        prop_assert!(Matrix3::from_fn(|i, j| m[i][j]).cholesky().is_some());
        prop_assert!(fi.determinant() > 0.0);
    }

    #[test]
    fn density_integrates_to_one(lp in -1.5f64..2.5, lm in -2.0f64..2.0, la in -1.0f64..1.5) {
        let th = ParamVector::new(lp.exp(), lm.exp(), la.exp()).unwrap();
        let center = objprior::specfun::digamma(th.phi()).unwrap() / th.alpha() - th.mu().ln();
        let w = 60.0 / th.alpha() + 60.0;
        let f = |t: f64| Ok(t.exp() * pdf(t.exp(), &th)?);
        let tol = Tolerance { rel: 1e-12, ..Default::default() };
        let v = integrate(&f, center - w, center + w, &tol).unwrap().value;
        prop_assert!((v - 1.0).abs() < 1e-8, "{} at {}", v, th);
    }
}
