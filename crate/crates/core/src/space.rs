//! Outcome spaces (intervals of the real line) and outcome coordinates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VnmError};
use crate::real::ExtReal;

/// A point of an outcome space.
///
/// Coordinates use the extended-range scalar so counterexample nets can place
/// atoms far beyond the `f64` range; ordinary coordinates built from `f64`
/// keep exact identity, which is what atom merging relies on.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Outcome(ExtReal);

impl Outcome {
    /// Build from a finite coordinate. NaN and infinities are rejected.
    pub fn new(value: f64) -> Result<Outcome> {
        ExtReal::from_f64(value)
            .map(Outcome)
            .ok_or_else(|| VnmError::Domain(format!("non-finite outcome coordinate {value}")))
    }

    pub fn from_ext(value: ExtReal) -> Outcome {
        Outcome(value)
    }

    /// Saturating `f64` readout (`±inf` beyond range).
    pub fn value(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn ext(&self) -> ExtReal {
        self.0
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Outcome({})", self.0)
    }
}

/// An interval of the real line, with independently open or closed endpoints.
/// Infinite endpoints are always open.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpace {
    lower: f64,
    upper: f64,
    lower_closed: bool,
    upper_closed: bool,
}

impl OutcomeSpace {
    pub fn new(lower: f64, upper: f64, lower_closed: bool, upper_closed: bool) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() {
            return Err(VnmError::Domain("NaN interval endpoint".into()));
        }
        if !(lower < upper) {
            return Err(VnmError::Domain(format!(
                "empty or inverted interval [{lower}, {upper}]"
            )));
        }
        if (lower.is_infinite() && lower_closed) || (upper.is_infinite() && upper_closed) {
            return Err(VnmError::Domain("infinite endpoints must be open".into()));
        }
        Ok(OutcomeSpace {
            lower,
            upper,
            lower_closed,
            upper_closed,
        })
    }

    /// The whole real line.
    pub fn real_line() -> Self {
        OutcomeSpace {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            lower_closed: false,
            upper_closed: false,
        }
    }

    /// The open positive half-line.
    pub fn positive_half_line() -> Self {
        OutcomeSpace {
            lower: 0.0,
            upper: f64::INFINITY,
            lower_closed: false,
            upper_closed: false,
        }
    }

    /// `[0, +inf[`, the natural domain of the square root.
    pub fn nonnegative_half_line() -> Self {
        OutcomeSpace {
            lower: 0.0,
            upper: f64::INFINITY,
            lower_closed: true,
            upper_closed: false,
        }
    }

    pub fn closed_interval(a: f64, b: f64) -> Result<Self> {
        if a.is_infinite() || b.is_infinite() {
            return Err(VnmError::Domain(
                "closed interval endpoints must be finite".into(),
            ));
        }
        Self::new(a, b, true, true)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn lower_closed(&self) -> bool {
        self.lower_closed
    }

    pub fn upper_closed(&self) -> bool {
        self.upper_closed
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    /// Compact means a closed bounded interval.
    pub fn is_compact(&self) -> bool {
        self.is_bounded() && self.lower_closed && self.upper_closed
    }

    pub fn contains_value(&self, x: f64) -> bool {
        if x.is_nan() {
            return false;
        }
        let above = if self.lower_closed {
            x >= self.lower
        } else {
            x > self.lower
        };
        let below = if self.upper_closed {
            x <= self.upper
        } else {
            x < self.upper
        };
        above && below
    }

    pub fn contains(&self, x: &Outcome) -> bool {
        let e = x.ext();
        let above = match ExtReal::from_f64(self.lower) {
            Some(lo) => {
                if self.lower_closed {
                    e >= lo
                } else {
                    e > lo
                }
            }
            None => true, // -inf bound
        };
        let below = match ExtReal::from_f64(self.upper) {
            Some(hi) => {
                if self.upper_closed {
                    e <= hi
                } else {
                    e < hi
                }
            }
            None => true, // +inf bound
        };
        above && below
    }

    /// Membership-checked outcome constructor.
    pub fn outcome(&self, value: f64) -> Result<Outcome> {
        let x = Outcome::new(value)?;
        if self.contains(&x) {
            Ok(x)
        } else {
            Err(VnmError::Domain(format!(
                "coordinate {value} lies outside the outcome space {self}"
            )))
        }
    }

    pub fn subset_of(&self, other: &OutcomeSpace) -> bool {
        let lower_ok = if self.lower > other.lower {
            true
        } else if self.lower == other.lower {
            other.lower_closed || !self.lower_closed
        } else {
            false
        };
        let upper_ok = if self.upper < other.upper {
            true
        } else if self.upper == other.upper {
            other.upper_closed || !self.upper_closed
        } else {
            false
        };
        lower_ok && upper_ok
    }

    pub fn intersect(&self, other: &OutcomeSpace) -> Option<OutcomeSpace> {
        let (lower, lower_closed) = if self.lower > other.lower {
            (self.lower, self.lower_closed)
        } else if self.lower < other.lower {
            (other.lower, other.lower_closed)
        } else {
            (self.lower, self.lower_closed && other.lower_closed)
        };
        let (upper, upper_closed) = if self.upper < other.upper {
            (self.upper, self.upper_closed)
        } else if self.upper > other.upper {
            (other.upper, other.upper_closed)
        } else {
            (self.upper, self.upper_closed && other.upper_closed)
        };
        OutcomeSpace::new(lower, upper, lower_closed, upper_closed).ok()
    }
}

impl fmt::Display for OutcomeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = if self.lower_closed { '[' } else { ']' };
        let hi = if self.upper_closed { ']' } else { '[' };
        write!(f, "{lo}{}, {}{hi}", self.lower, self.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_line_membership() {
        let x = OutcomeSpace::positive_half_line();
        assert!(x.contains_value(1e-300));
        assert!(x.contains_value(1e300));
        assert!(!x.contains_value(0.0));
        assert!(!x.contains_value(-1.0));
        assert!(x.outcome(0.0).is_err());
    }

    #[test]
    fn closed_interval_honors_endpoints() {
        let y = OutcomeSpace::closed_interval(1.0, std::f64::consts::E).unwrap();
        assert!(y.contains_value(1.0));
        assert!(y.contains_value(std::f64::consts::E));
        assert!(!y.contains_value(0.5));
        assert!(!y.contains_value(3.0));
    }

    #[test]
    fn degenerate_interval_rejected() {
        assert!(OutcomeSpace::new(2.0, 2.0, true, true).is_err());
        assert!(OutcomeSpace::new(3.0, 2.0, true, true).is_err());
        assert!(OutcomeSpace::new(f64::NEG_INFINITY, 1.0, true, false).is_err());
    }

    #[test]
    fn huge_outcomes_stay_inside_unbounded_spaces() {
        let x = OutcomeSpace::positive_half_line();
        let huge = Outcome::from_ext(crate::real::ExtReal::exp(2f64.powi(30)).unwrap());
        assert!(x.contains(&huge));
        let bounded = OutcomeSpace::closed_interval(0.5, 20.0).unwrap();
        assert!(!bounded.contains(&huge));
    }

    #[test]
    fn subset_respects_endpoint_openness() {
        let open = OutcomeSpace::positive_half_line();
        let closed_sub = OutcomeSpace::closed_interval(1.0, 2.0).unwrap();
        assert!(closed_sub.subset_of(&open));
        let touching = OutcomeSpace::new(0.0, 2.0, true, true).unwrap();
        assert!(!touching.subset_of(&open));
        assert!(open.subset_of(&OutcomeSpace::real_line()));
    }
}
