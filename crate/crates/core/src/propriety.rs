//! Posterior propriety and moment finiteness from power-law exponents.
//!
//! Each `decide_*` function is total: it returns a verdict for every input,
//! falling back to `Undetermined` when the exponents it needs are missing.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::{AsymptoticExponents, BoundKind, ScopeKind};

/// Exponents closer than this to −1 count as exactly −1.
const EXACT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Proper,
    Improper,
    Undetermined,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Proper => "Proper",
            Self::Improper => "Improper",
            Self::Undetermined => "Undetermined",
        })
    }
}

/// Finite posterior moments of a proper posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scope")]
pub enum MomentReport {
    /// `(q, r, j)` with `E[α^q φ^r μ^j]` finite; `j` is always 0.
    General { finite: Vec<[u32; 3]> },
    AlphaKnown { all_finite: bool },
    PhiKnown {
        alpha_moments_finite: bool,
        mu_mean_finite: bool,
    },
    /// The posterior is not known to be proper.
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProprietyVerdict {
    pub status: Status,
    pub scope: ScopeKind,
    pub n: u64,
    /// The rule that decided the verdict.
    #[serde(rename = "theorem")]
    pub rule: String,
    /// Smallest sample size with a proper posterior, when one exists and is
    /// determined by the exponents.
    pub min_n: Option<u64>,
    pub moments: MomentReport,
    /// Where each exponent came from (analytic, estimated, declared).
    pub exponent_provenance: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

impl ProprietyVerdict {
    fn new(status: Status, scope: ScopeKind, n: u64, rule: impl Into<String>, min_n: Option<u64>) -> Self {
        Self {
            status,
            scope,
            n,
            rule: rule.into(),
            min_n,
            moments: MomentReport::Undefined,
            exponent_provenance: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_provenance(mut self, provenance: BTreeMap<String, String>) -> Self {
        self.exponent_provenance = provenance;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("verdict serializes")
    }
}

/// Smallest positive integer `n` with `n > x`.
pub fn min_n_above(x: f64) -> u64 {
    if x < 1.0 {
        1
    } else {
        x.floor() as u64 + 1
    }
}

fn is_minus_one(k: f64) -> bool {
    (k + 1.0).abs() <= EXACT
}

/// One-sided bounds can only certify in their own direction.
fn apply_bound(mut v: ProprietyVerdict, bound: BoundKind) -> ProprietyVerdict {
    let downgrade = match (bound, v.status) {
        (BoundKind::Upper, Status::Improper) => {
            Some("upper bounds alone cannot establish impropriety")
        }
        (BoundKind::Lower, Status::Proper) => Some("lower bounds alone cannot establish propriety"),
        _ => None,
    };
    if let Some(why) = downgrade {
        v.notes
            .push(format!("{} verdict withheld: {why}", v.status));
        v.status = Status::Undetermined;
        v.moments = MomentReport::Undefined;
        if bound == BoundKind::Lower {
            v.min_n = None;
        }
    }
    v
}

fn missing(scope: ScopeKind, n: u64, what: &str) -> ProprietyVerdict {
    ProprietyVerdict::new(
        Status::Undetermined,
        scope,
        n,
        format!("{scope}: exponents {what} required"),
        None,
    )
}

/// μ and φ unknown, α known.
pub fn decide_alpha_known(e: &AsymptoticExponents, n: u64) -> ProprietyVerdict {
    let s = ScopeKind::AlphaKnown;
    let v = match (e.k, e.r0) {
        (Some(k), _) if k < -1.0 - EXACT => ProprietyVerdict::new(
            Status::Improper,
            s,
            n,
            "alpha known, improper: k < -1",
            None,
        ),
        (Some(k), Some(r0)) => {
            let (threshold, rule) = if is_minus_one(k) {
                (-r0, "k = -1 with n > -r0")
            } else {
                (-r0 - 1.0, "k > -1 with n > -r0 - 1")
            };
            let min_n = Some(min_n_above(threshold));
            if (n as f64) > threshold {
                let mut v = ProprietyVerdict::new(
                    Status::Proper,
                    s,
                    n,
                    format!("alpha known, proper: {rule}; all moments finite"),
                    min_n,
                );
                v.moments = MomentReport::AlphaKnown { all_finite: true };
                v
            } else {
                ProprietyVerdict::new(
                    Status::Improper,
                    s,
                    n,
                    format!("alpha known, improper: {rule} fails"),
                    min_n,
                )
            }
        }
        _ => missing(s, n, "k and r0"),
    };
    apply_bound(v, e.bound)
}

/// μ and α unknown, φ known.
pub fn decide_phi_known(e: &AsymptoticExponents, n: u64) -> ProprietyVerdict {
    let s = ScopeKind::PhiKnown;
    let v = match (e.k, e.q0) {
        (Some(k), _) if k < -1.0 - EXACT => {
            ProprietyVerdict::new(Status::Improper, s, n, "phi known, improper: k < -1", None)
        }
        (Some(k), Some(_)) if k > -1.0 + EXACT => {
            ProprietyVerdict::new(Status::Improper, s, n, "phi known, improper: k > -1", None)
        }
        (Some(_), Some(q0)) => {
            let min_n = Some(min_n_above(-q0));
            if (n as f64) > -q0 {
                let mut v = ProprietyVerdict::new(
                    Status::Proper,
                    s,
                    n,
                    "phi known, proper: k = -1 with n > -q0; alpha moments finite, posterior mean of mu infinite",
                    min_n,
                );
                v.moments = MomentReport::PhiKnown {
                    alpha_moments_finite: true,
                    mu_mean_finite: false,
                };
                v
            } else {
                ProprietyVerdict::new(
                    Status::Improper,
                    s,
                    n,
                    "phi known, improper: k = -1 with n <= -q0",
                    min_n,
                )
            }
        }
        _ => missing(s, n, "k and q0"),
    };
    apply_bound(v, e.bound)
}

/// All three parameters unknown.
///
/// With the full tuple this is an equivalence. With entries missing, the
/// impropriety rules that only involve a pair of exponents, (r0, q∞) or
/// (q0, r∞), are still applied.
pub fn decide_general(e: &AsymptoticExponents, n: u64) -> ProprietyVerdict {
    let s = ScopeKind::General;
    let nf = n as f64;
    let improper = |rule: &str, min_n| ProprietyVerdict::new(Status::Improper, s, n, rule, min_n);
    let v = 'decide: {
        let Some(k) = e.k else {
            break 'decide missing(s, n, "k");
        };
        if k < -1.0 - EXACT {
            break 'decide improper("general, improper: k < -1", None);
        }
        if k > -1.0 + EXACT {
            if e.q0.is_some() {
                break 'decide improper("general, improper: k > -1", None);
            }
            break 'decide missing(s, n, "q0");
        }
        if let (Some(r0), Some(qi)) = (e.r0, e.q_inf) {
            if qi >= r0 {
                break 'decide improper("general, improper: k = -1 and q_inf >= r0", None);
            }
        }
        if let (Some(q0), Some(ri)) = (e.q0, e.r_inf) {
            if 2.0 * ri + 1.0 >= q0 {
                break 'decide improper("general, improper: k = -1 and 2 r_inf + 1 >= q0", None);
            }
        }
        let (Some(q0), Some(qi), Some(r0), Some(ri)) = (e.q0, e.q_inf, e.r0, e.r_inf) else {
            if let Some(r0) = e.r0 {
                if nf <= -r0 {
                    break 'decide improper("general, improper: k = -1 and n <= -r0", None);
                }
            }
            if let Some(q0) = e.q0 {
                if nf <= -q0 {
                    break 'decide improper("general, improper: k = -1 and n <= -q0", None);
                }
            }
            break 'decide missing(s, n, "k, q0, q_inf, r0, r_inf");
        };
        let min_n = Some(min_n_above(-q0).max(min_n_above(-r0)));
        if nf > -q0 && nf > -r0 {
            let mut v = ProprietyVerdict::new(
                Status::Proper,
                s,
                n,
                "general, proper: k = -1, q_inf < r0, 2 r_inf + 1 < q0, n > -q0, n > -r0",
                min_n,
            );
            v.moments = MomentReport::General {
                finite: finite_moment_triples(q0, qi, r0, ri),
            };
            v
        } else {
            improper("general, improper: k = -1 with n <= -q0 or n <= -r0", min_n)
        }
    };
    apply_bound(v, e.bound)
}

/// Dispatches on the scope.
pub fn decide(scope: ScopeKind, e: &AsymptoticExponents, n: u64) -> ProprietyVerdict {
    match scope {
        ScopeKind::General => decide_general(e, n),
        ScopeKind::AlphaKnown => decide_alpha_known(e, n),
        ScopeKind::PhiKnown => decide_phi_known(e, n),
    }
}

fn moment_window(q0: f64, qi: f64, r0: f64, ri: f64, r: f64) -> (f64, f64) {
    (2.0 * (r + ri) + 1.0 - q0, r + r0 - qi)
}

fn finite_moment_triples(q0: f64, qi: f64, r0: f64, ri: f64) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for r in 0..=1000u32 {
        let (lo, hi) = moment_window(q0, qi, r0, ri, r as f64);
        // hi − lo shrinks by one per unit of r
        if lo >= hi {
            break;
        }
        let first = if lo < 0.0 { 0 } else { lo.floor() as u32 + 1 };
        let mut q = first;
        while (q as f64) < hi {
            out.push([q, r, 0]);
            q += 1;
        }
    }
    out
}

/// Whether `E[α^q φ^r μ^j]` is finite under a proper general-scope posterior.
pub fn moment_finite_general(e: &AsymptoticExponents, n: u64, q: u32, r: u32, j: u32) -> Result<bool> {
    let v = decide_general(e, n);
    if v.status != Status::Proper {
        return Err(Error::NotProper(format!(
            "posterior is {} for n = {n} ({})",
            v.status, v.rule
        )));
    }
    let (q0, qi, r0, ri) = (
        e.q0.expect("proper implies present"),
        e.q_inf.expect("proper implies present"),
        e.r0.expect("proper implies present"),
        e.r_inf.expect("proper implies present"),
    );
    let (lo, hi) = moment_window(q0, qi, r0, ri, r as f64);
    let q = q as f64;
    Ok(j == 0 && lo < q && q < hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex(k: f64, q0: f64, qi: f64, r0: f64, ri: f64) -> AsymptoticExponents {
        AsymptoticExponents::new(Some(k), Some(q0), Some(qi), Some(r0), Some(ri)).unwrap()
    }

    fn ak(k: f64, r0: f64) -> AsymptoticExponents {
        AsymptoticExponents::new(Some(k), None, None, Some(r0), None).unwrap()
    }

    fn pk(k: f64, q0: f64) -> AsymptoticExponents {
        AsymptoticExponents::new(Some(k), Some(q0), None, None, None).unwrap()
    }

    #[test]
    fn alpha_known_examples() {
        let v = decide_alpha_known(&ak(-1.0, -1.0), 2);
        assert_eq!(v.status, Status::Proper);
        assert_eq!(v.moments, MomentReport::AlphaKnown { all_finite: true });
        assert_eq!(v.min_n, Some(2));
        assert_eq!(decide_alpha_known(&ak(-1.0, -1.0), 1).status, Status::Improper);
        assert_eq!(decide_alpha_known(&ak(-2.0, 5.0), 100).status, Status::Improper);
        assert_eq!(decide_alpha_known(&ak(0.0, -3.0), 2).status, Status::Improper);
        assert_eq!(decide_alpha_known(&ak(0.0, -3.0), 3).status, Status::Proper);
        let none = AsymptoticExponents::new(Some(-1.0), None, None, None, None).unwrap();
        assert_eq!(decide_alpha_known(&none, 5).status, Status::Undetermined);
    }

    #[test]
    fn phi_known_examples() {
        let v = decide_phi_known(&pk(-1.0, -1.0), 2);
        assert_eq!(v.status, Status::Proper);
        assert_eq!(
            v.moments,
            MomentReport::PhiKnown {
                alpha_moments_finite: true,
                mu_mean_finite: false
            }
        );
        assert_eq!(decide_phi_known(&pk(0.0, -1.0), 100).status, Status::Improper);
        assert_eq!(decide_phi_known(&pk(-1.0, -2.0), 2).status, Status::Improper);
        assert_eq!(decide_phi_known(&pk(-1.0, -2.0), 3).status, Status::Proper);
    }

    #[test]
    fn general_examples() {
        let r10 = ex(-1.0, -1.0, -1.0, -0.5, -1.5);
        let v = decide_general(&r10, 2);
        assert_eq!(v.status, Status::Proper);
        assert_eq!(v.min_n, Some(2));
        assert_eq!(v.moments, MomentReport::General { finite: vec![[0, 0, 0]] });
        let v1 = decide_general(&r10, 1);
        assert_eq!(v1.status, Status::Improper);
        assert_eq!(v1.min_n, Some(2));
        let j1 = ex(-1.0, -1.0, -1.0, -1.0, -1.0);
        for n in 1..20 {
            let v = decide_general(&j1, n);
            assert_eq!(v.status, Status::Improper);
            assert_eq!(v.min_n, None);
        }
    }

    #[test]
    fn general_moments() {
        let r10 = ex(-1.0, -1.0, -1.0, -0.5, -1.5);
        assert!(moment_finite_general(&r10, 2, 0, 0, 0).unwrap());
        assert!(!moment_finite_general(&r10, 2, 1, 0, 0).unwrap());
        assert!(!moment_finite_general(&r10, 2, 0, 0, 1).unwrap());
        assert!(moment_finite_general(&r10, 1, 0, 0, 0).is_err());
        let roomy = ex(-1.0, -1.0, -3.0, 0.0, -4.0);
        let v = decide_general(&roomy, 3);
        let MomentReport::General { finite } = v.moments else {
            panic!("expected general moments")
        };
        for &[q, r, j] in &finite {
            assert!(moment_finite_general(&roomy, 3, q, r, j).unwrap());
        }
        assert!(finite.contains(&[2, 0, 0]) && finite.contains(&[3, 1, 0]));
    }

    #[test]
    fn partial_tuples_still_decide_impropriety() {
        let j4b = AsymptoticExponents::new(Some(-1.0), Some(0.0), Some(0.0), Some(-0.5), None).unwrap();
        assert_eq!(decide_general(&j4b, 4).status, Status::Improper);
        let r9 = AsymptoticExponents::new(Some(-1.0), Some(-1.0), Some(-1.0), None, Some(-1.0)).unwrap();
        assert_eq!(decide_general(&r9, 4).status, Status::Improper);
        let open = AsymptoticExponents::new(Some(-1.0), Some(-1.0), Some(-1.0), Some(-0.5), None).unwrap();
        assert_eq!(decide_general(&open, 4).status, Status::Undetermined);
        assert_eq!(decide_general(&open, 1).status, Status::Improper);
    }

    #[test]
    fn one_sided_bounds() {
        let r10 = ex(-1.0, -1.0, -1.0, -0.5, -1.5);
        let upper = r10.with_bound(BoundKind::Upper);
        let lower = r10.with_bound(BoundKind::Lower);
        assert_eq!(decide_general(&upper, 2).status, Status::Proper);
        assert_eq!(decide_general(&upper, 1).status, Status::Undetermined);
        assert_eq!(decide_general(&lower, 2).status, Status::Undetermined);
        assert_eq!(decide_general(&lower, 1).status, Status::Improper);
    }

    #[test]
    fn verdict_json_shape() {
        let v = decide_general(&ex(-1.0, -1.0, -1.0, -0.5, -1.5), 2);
        let j = v.to_json();
        for key in ["status", "theorem", "min_n", "moments", "exponent_provenance"] {
            assert!(j.get(key).is_some(), "missing {key}");
        }
        assert_eq!(j["status"], "Proper");
    }

    #[test]
    fn min_n_strictness() {
        assert_eq!(min_n_above(1.0), 2);
        assert_eq!(min_n_above(0.5), 1);
        assert_eq!(min_n_above(1.5), 2);
        assert_eq!(min_n_above(-3.0), 1);
    }

    const GRID: [f64; 5] = [-2.0, -1.5, -1.0, -0.5, 0.0];

    fn grid_value() -> impl Strategy<Value = f64> {
        prop::sample::select(GRID.to_vec())
    }

    #[test]
    fn exhaustive_on_the_half_integer_grid() {
        for k in GRID {
            for q0 in GRID {
                for qi in GRID {
                    for r0 in GRID {
                        for ri in GRID {
                            let e = ex(k, q0, qi, r0, ri);
                            for n in 1..=5 {
                                for s in [ScopeKind::General, ScopeKind::AlphaKnown, ScopeKind::PhiKnown] {
                                    let v = decide(s, &e.restrict(s), n);
                                    assert_ne!(v.status, Status::Undetermined, "{s} {e:?} n={n}");
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn proper_is_monotone_in_n(
            k in grid_value(), q0 in grid_value(), qi in grid_value(),
            r0 in grid_value(), ri in grid_value(), n in 1u64..8,
        ) {
            let e = ex(k, q0, qi, r0, ri);
            for s in [ScopeKind::General, ScopeKind::AlphaKnown, ScopeKind::PhiKnown] {
                let e = e.restrict(s);
                if decide(s, &e, n).status == Status::Proper {
                    prop_assert_eq!(decide(s, &e, n + 1).status, Status::Proper);
                }
            }
        }

        #[test]
        fn min_n_is_the_threshold(
            q0 in -4.0f64..0.5, qi in -4.0f64..0.0, r0 in -4.0f64..0.5, ri in -4.0f64..0.0,
        ) {
            let e = ex(-1.0, q0, qi, r0, ri);
            let v = decide_general(&e, 1);
            if let Some(m) = v.min_n {
                prop_assert_eq!(decide_general(&e, m).status, Status::Proper);
                if m > 1 {
                    prop_assert_eq!(decide_general(&e, m - 1).status, Status::Improper);
                }
            }
        }

        #[test]
        fn moment_report_matches_literal_check(
            q0 in -3.0f64..0.0, qi in -3.0f64..-0.5, ri in -3.0f64..-1.0,
        ) {
            let r0 = qi + 1.0;
            let e = ex(-1.0, q0, qi, r0, ri);
            let n = min_n_above(-q0).max(min_n_above(-r0));
            let v = decide_general(&e, n);
            if let MomentReport::General { finite } = &v.moments {
                for q in 0..8u32 {
                    for r in 0..8u32 {
                        let listed = finite.contains(&[q, r, 0]);
                        prop_assert_eq!(listed, moment_finite_general(&e, n, q, r, 0).unwrap());
                        prop_assert!(!moment_finite_general(&e, n, q, r, 1).unwrap());
                    }
                }
            }
        }
    }
}
