//! Preference oracles: the weak order as an executable trichotomous comparator.
//!
//! Oracles are black boxes behind a function contract so that externally
//! supplied, possibly axiom-violating comparators can be fed to the checkers.
//! Utility-backed oracles additionally carry their utility as a hint, which
//! the falsifiers use to build targeted counterexample sequences.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VnmError};
use crate::lottery::SimpleLottery;
use crate::space::OutcomeSpace;
use crate::utility::{expectation, UtilityFunction, UtilitySpec};

/// Trichotomous comparison verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    FirstStrict,
    SecondStrict,
    Indifferent,
}

impl Verdict {
    /// Verdict with the arguments swapped.
    pub fn flipped(self) -> Verdict {
        match self {
            Verdict::FirstStrict => Verdict::SecondStrict,
            Verdict::SecondStrict => Verdict::FirstStrict,
            Verdict::Indifferent => Verdict::Indifferent,
        }
    }

    /// True when the first argument is at least as good (weak preference).
    pub fn first_weak(self) -> bool {
        matches!(self, Verdict::FirstStrict | Verdict::Indifferent)
    }
}

type CompareFn = dyn Fn(&SimpleLottery, &SimpleLottery) -> Result<Verdict> + Send + Sync;

/// A weak order on simple lotteries, exposed as a pure comparator.
///
/// Comparators must be pure (same inputs, same verdict) and safe to call
/// concurrently; the axiom checkers rely on this to parallelize trials.
#[derive(Clone)]
pub struct PreferenceOracle {
    label: String,
    scope: OutcomeSpace,
    approximate: bool,
    utility: Option<UtilityFunction>,
    cmp: Arc<CompareFn>,
}

impl PreferenceOracle {
    /// Expected-utility oracle with exact comparison of computed doubles.
    pub fn from_utility(u: UtilityFunction) -> PreferenceOracle {
        Self::from_utility_with_eps(u, 0.0)
    }

    /// Expected-utility oracle that reports indifference for |dE| <= eps.
    /// A positive eps breaks transitivity, so the oracle is flagged approximate.
    pub fn from_utility_with_eps(u: UtilityFunction, eps: f64) -> PreferenceOracle {
        let label = if eps > 0.0 {
            format!("eu[{}] (approximate, eps={eps})", u.label())
        } else {
            format!("eu[{}]", u.label())
        };
        let scope = *u.domain();
        let cmp_u = u.clone();
        let cmp: Arc<CompareFn> = Arc::new(move |p, q| {
            let ep = expectation(p, &cmp_u)?;
            let eq = expectation(q, &cmp_u)?;
            let d = ep - eq;
            Ok(if d.abs() <= eps {
                Verdict::Indifferent
            } else if d > 0.0 {
                Verdict::FirstStrict
            } else {
                Verdict::SecondStrict
            })
        });
        PreferenceOracle {
            label,
            scope,
            approximate: eps > 0.0,
            utility: Some(u),
            cmp,
        }
    }

    /// Black-box oracle from an arbitrary comparator.
    pub fn from_fn<F>(label: impl Into<String>, scope: OutcomeSpace, f: F) -> PreferenceOracle
    where
        F: Fn(&SimpleLottery, &SimpleLottery) -> Result<Verdict> + Send + Sync + 'static,
    {
        PreferenceOracle {
            label: label.into(),
            scope,
            approximate: false,
            utility: None,
            cmp: Arc::new(f),
        }
    }

    /// Rank-dependent comparator with probability weighting `w(p) = p^gamma`.
    /// Violates independence for `gamma != 1`; used as the adversarial oracle.
    pub fn rank_dependent(u: UtilityFunction, gamma: f64) -> Result<PreferenceOracle> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(VnmError::Domain(format!(
                "weighting exponent must be positive, got {gamma}"
            )));
        }
        let scope = *u.domain();
        let label = format!("rdu[{}, w(p)=p^{gamma}]", u.label());
        let cmp: Arc<CompareFn> = Arc::new(move |p, q| {
            let vp = rank_dependent_value(p, &u, gamma)?;
            let vq = rank_dependent_value(q, &u, gamma)?;
            Ok(if vp == vq {
                Verdict::Indifferent
            } else if vp > vq {
                Verdict::FirstStrict
            } else {
                Verdict::SecondStrict
            })
        });
        Ok(PreferenceOracle {
            label,
            scope,
            approximate: false,
            utility: None,
            cmp,
        })
    }

    /// Compare by primary expected utility, breaking exact ties with a second
    /// utility. The tie-break destroys segmental continuity.
    pub fn lexicographic(primary: UtilityFunction, tiebreak: UtilityFunction) -> Result<PreferenceOracle> {
        let scope = match primary.domain().intersect(tiebreak.domain()) {
            Some(s) => s,
            None => {
                return Err(VnmError::Domain(
                    "lexicographic utilities have disjoint domains".into(),
                ))
            }
        };
        let label = format!("lex[{}; {}]", primary.label(), tiebreak.label());
        let cmp: Arc<CompareFn> = Arc::new(move |p, q| {
            let ep = expectation(p, &primary)?;
            let eq = expectation(q, &primary)?;
            if ep != eq {
                return Ok(if ep > eq {
                    Verdict::FirstStrict
                } else {
                    Verdict::SecondStrict
                });
            }
            let tp = expectation(p, &tiebreak)?;
            let tq = expectation(q, &tiebreak)?;
            Ok(if tp == tq {
                Verdict::Indifferent
            } else if tp > tq {
                Verdict::FirstStrict
            } else {
                Verdict::SecondStrict
            })
        });
        Ok(PreferenceOracle {
            label,
            scope,
            approximate: false,
            utility: None,
            cmp,
        })
    }

    /// Trichotomous comparison. Both lotteries must be supported in the scope;
    /// an atom escaping the scope is a membership error, not a preference.
    pub fn compare(&self, p: &SimpleLottery, q: &SimpleLottery) -> Result<Verdict> {
        for lottery in [p, q] {
            if let Some(out) = lottery.escaping_atom(&self.scope) {
                return Err(VnmError::Scope {
                    outcome: out.to_string(),
                });
            }
        }
        (self.cmp)(p, q)
    }

    /// Restriction to lotteries supported in a subinterval of the scope.
    pub fn restrict(&self, sub: OutcomeSpace) -> Result<PreferenceOracle> {
        if !sub.subset_of(&self.scope) {
            return Err(VnmError::Domain(format!(
                "{sub} is not a subinterval of the oracle scope {}",
                self.scope
            )));
        }
        let utility = match &self.utility {
            Some(u) => Some(u.with_domain(sub)?),
            None => None,
        };
        Ok(PreferenceOracle {
            label: self.label.clone(),
            scope: sub,
            approximate: self.approximate,
            utility,
            cmp: Arc::clone(&self.cmp),
        })
    }

    pub fn scope(&self) -> &OutcomeSpace {
        &self.scope
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    /// The backing utility, when the oracle was built from one (restricted to
    /// the current scope). Falsifiers use this to target their constructions.
    pub fn utility_hint(&self) -> Option<&UtilityFunction> {
        self.utility.as_ref()
    }
}

impl std::fmt::Debug for PreferenceOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PreferenceOracle({} on {})", self.label, self.scope)
    }
}

/// Rank-dependent functional: outcomes sorted best-first, decision weights
/// from successive differences of the weighted cumulative.
fn rank_dependent_value(p: &SimpleLottery, u: &UtilityFunction, gamma: f64) -> Result<f64> {
    use num::ToPrimitive;
    let mut entries: Vec<(f64, f64)> = Vec::with_capacity(p.len());
    for (x, w) in p.atoms() {
        entries.push((u.eval(x)?, w.to_f64().expect("weight converts")));
    }
    entries.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("utilities are not NaN"));
    let mut cum = 0.0;
    let mut prev_w = 0.0;
    let mut total = 0.0;
    for (v, w) in entries {
        cum += w;
        let cw = cum.powf(gamma);
        total += (cw - prev_w) * v;
        prev_w = cw;
    }
    Ok(total)
}

/// JSON spec for oracle construction. The plain form `{"utility": "log"}`
/// yields an expected-utility oracle; `{"oracle": "rdu", ...}` selects the
/// rank-dependent adversary.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
    pub utility: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<Box<UtilitySpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl OracleSpec {
    pub fn utility_spec(&self) -> UtilitySpec {
        UtilitySpec {
            utility: self.utility.clone(),
            theta: self.theta,
            p: self.p,
            value: self.value,
            threshold: self.threshold,
            low: self.low,
            high: self.high,
            a: self.a,
            b: self.b,
            inner: self.inner.clone(),
            domain: self.domain,
        }
    }

    pub fn build(&self) -> Result<PreferenceOracle> {
        let u = self.utility_spec().build()?;
        match self.oracle.as_deref() {
            None | Some("eu") => Ok(PreferenceOracle::from_utility_with_eps(
                u,
                self.eps.unwrap_or(0.0),
            )),
            Some("rdu") => PreferenceOracle::rank_dependent(u, self.gamma.unwrap_or(2.0)),
            Some(other) => Err(VnmError::Config(format!("unknown oracle kind {other:?}"))),
        }
    }
}
