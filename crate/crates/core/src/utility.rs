//! Utility function catalog and expectation operators.
//!
//! Probabilities stay exact rationals; utility values and expectations are
//! double precision. Isoelastic utility with coefficient one dispatches to the
//! logarithm exactly; nearby coefficients use the power formula.

use std::fmt;

use num::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VnmError};
use crate::lottery::{DensityMeasure, SimpleLottery};
use crate::real::ExtReal;
use crate::space::{Outcome, OutcomeSpace};

/// Catalog of evaluatable utility functions.
#[derive(Clone, Debug, PartialEq)]
pub enum UtilityKind {
    /// Isoelastic: `(x^(1-theta) - 1) / (1-theta)`, log at `theta = 1`.
    Crra { theta: f64 },
    Log,
    Sqrt,
    /// Identity `x`.
    Linear,
    /// `1 / (1 + e^-x)`: bounded and continuous on the whole line.
    Logistic,
    /// `x^p` for `p > 0` on the nonnegative half-line.
    Power { p: f64 },
    Constant { value: f64 },
    /// Jump at `threshold`: `low` at and below the threshold, `high` above it.
    Step { threshold: f64, low: f64, high: f64 },
    /// `a * inner(x) + b`. Order-preserving only when `a > 0`.
    Affine {
        a: f64,
        b: f64,
        inner: Box<UtilityFunction>,
    },
    /// Piecewise-linear interpolation through `(grid[i], values[i])`.
    Table { grid: Vec<f64>, values: Vec<f64> },
}

/// An evaluatable real function on an interval outcome space.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityFunction {
    kind: UtilityKind,
    domain: OutcomeSpace,
}

/// Discontinuity metadata for catalog members that fail semicontinuity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpInfo {
    /// Coordinate of the jump.
    pub at: f64,
    /// Value taken at the jump point itself.
    pub value_at: f64,
    /// One-sided limit from above.
    pub limit_above: f64,
}

impl UtilityFunction {
    pub fn log() -> Self {
        UtilityFunction {
            kind: UtilityKind::Log,
            domain: OutcomeSpace::positive_half_line(),
        }
    }

    pub fn crra(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(VnmError::Domain(format!(
                "isoelastic coefficient must be positive, got {theta}"
            )));
        }
        Ok(UtilityFunction {
            kind: UtilityKind::Crra { theta },
            domain: OutcomeSpace::positive_half_line(),
        })
    }

    pub fn sqrt() -> Self {
        UtilityFunction {
            kind: UtilityKind::Sqrt,
            domain: OutcomeSpace::nonnegative_half_line(),
        }
    }

    pub fn linear() -> Self {
        UtilityFunction {
            kind: UtilityKind::Linear,
            domain: OutcomeSpace::real_line(),
        }
    }

    pub fn logistic() -> Self {
        UtilityFunction {
            kind: UtilityKind::Logistic,
            domain: OutcomeSpace::real_line(),
        }
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(VnmError::Domain(format!(
                "power exponent must be positive, got {p}"
            )));
        }
        Ok(UtilityFunction {
            kind: UtilityKind::Power { p },
            domain: OutcomeSpace::nonnegative_half_line(),
        })
    }

    pub fn constant(value: f64) -> Self {
        UtilityFunction {
            kind: UtilityKind::Constant { value },
            domain: OutcomeSpace::real_line(),
        }
    }

    pub fn step(threshold: f64, low: f64, high: f64) -> Result<Self> {
        if !(threshold.is_finite() && low.is_finite() && high.is_finite()) {
            return Err(VnmError::Domain("step parameters must be finite".into()));
        }
        if high <= low {
            return Err(VnmError::Domain("step must jump upward".into()));
        }
        Ok(UtilityFunction {
            kind: UtilityKind::Step {
                threshold,
                low,
                high,
            },
            domain: OutcomeSpace::real_line(),
        })
    }

    /// Order-preserving affine transform `a*u + b` with `a > 0`.
    pub fn affine(a: f64, b: f64, inner: UtilityFunction) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) || !b.is_finite() {
            return Err(VnmError::Domain(format!(
                "affine transform needs finite a > 0, got a={a}, b={b}"
            )));
        }
        let domain = inner.domain;
        Ok(UtilityFunction {
            kind: UtilityKind::Affine {
                a,
                b,
                inner: Box::new(inner),
            },
            domain,
        })
    }

    /// General rescaling `a*u + b` with any nonzero `a`. Not order-preserving
    /// when `a < 0`; useful for building decreasing comparators.
    pub fn scaled(a: f64, b: f64, inner: UtilityFunction) -> Result<Self> {
        if !(a.is_finite() && a != 0.0) || !b.is_finite() {
            return Err(VnmError::Domain(format!(
                "rescaling needs finite a != 0, got a={a}, b={b}"
            )));
        }
        let domain = inner.domain;
        Ok(UtilityFunction {
            kind: UtilityKind::Affine {
                a,
                b,
                inner: Box::new(inner),
            },
            domain,
        })
    }

    /// Piecewise-linear table through strictly increasing grid points.
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(VnmError::Domain("table needs at least two points".into()));
        }
        let mut grid = Vec::with_capacity(points.len());
        let mut values = Vec::with_capacity(points.len());
        for (x, v) in points {
            if !x.is_finite() || !v.is_finite() {
                return Err(VnmError::Domain("table entries must be finite".into()));
            }
            if let Some(last) = grid.last() {
                if x <= *last {
                    return Err(VnmError::Domain(
                        "table grid must be strictly increasing".into(),
                    ));
                }
            }
            grid.push(x);
            values.push(v);
        }
        let domain = OutcomeSpace::closed_interval(grid[0], *grid.last().unwrap())?;
        Ok(UtilityFunction {
            kind: UtilityKind::Table { grid, values },
            domain,
        })
    }

    /// Restrict to a subinterval of the current domain.
    pub fn with_domain(&self, domain: OutcomeSpace) -> Result<Self> {
        if !domain.subset_of(&self.domain) {
            return Err(VnmError::Domain(format!(
                "{domain} is not a subinterval of the domain {}",
                self.domain
            )));
        }
        Ok(UtilityFunction {
            kind: self.kind.clone(),
            domain,
        })
    }

    pub fn kind(&self) -> &UtilityKind {
        &self.kind
    }

    pub fn domain(&self) -> &OutcomeSpace {
        &self.domain
    }

    /// Short catalog label for reports.
    pub fn label(&self) -> String {
        match &self.kind {
            UtilityKind::Crra { theta } => format!("crra({theta})"),
            UtilityKind::Log => "log".into(),
            UtilityKind::Sqrt => "sqrt".into(),
            UtilityKind::Linear => "linear".into(),
            UtilityKind::Logistic => "logistic".into(),
            UtilityKind::Power { p } => format!("power({p})"),
            UtilityKind::Constant { value } => format!("constant({value})"),
            UtilityKind::Step { threshold, .. } => format!("step({threshold})"),
            UtilityKind::Affine { a, b, inner } => format!("{a}*{} + {b}", inner.label()),
            UtilityKind::Table { grid, .. } => format!("table[{} pts]", grid.len()),
        }
    }

    /// Evaluate at a point of the domain.
    pub fn eval(&self, x: &Outcome) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(VnmError::Domain(format!(
                "outcome {x} lies outside the utility domain {}",
                self.domain
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluate at a plain coordinate.
    pub fn eval_value(&self, x: f64) -> Result<f64> {
        self.eval(&Outcome::new(x)?)
    }

    fn eval_unchecked(&self, x: &Outcome) -> f64 {
        let e = x.ext();
        match &self.kind {
            UtilityKind::Log => e.ln().expect("domain guarantees positivity"),
            UtilityKind::Crra { theta } => {
                if *theta == 1.0 {
                    e.ln().expect("domain guarantees positivity")
                } else {
                    let one_minus = 1.0 - theta;
                    let powered = match e.to_finite_f64() {
                        Some(v) if v > 0.0 => v.powf(one_minus),
                        _ => {
                            let ln_x = e.ln().expect("domain guarantees positivity");
                            (one_minus * ln_x).exp()
                        }
                    };
                    (powered - 1.0) / one_minus
                }
            }
            UtilityKind::Sqrt => e.to_f64().sqrt(),
            UtilityKind::Linear => e.to_f64(),
            UtilityKind::Logistic => {
                let v = e.to_f64();
                1.0 / (1.0 + (-v).exp())
            }
            UtilityKind::Power { p } => match e.to_finite_f64() {
                Some(v) => v.powf(*p),
                None if e.is_zero() => 0.0,
                None => (p * e.ln().expect("positive")).exp(),
            },
            UtilityKind::Constant { value } => *value,
            UtilityKind::Step {
                threshold,
                low,
                high,
            } => {
                let t = ExtReal::from_f64(*threshold).expect("finite");
                if e > t {
                    *high
                } else {
                    *low
                }
            }
            UtilityKind::Affine { a, b, inner } => a * inner.eval_unchecked(x) + b,
            UtilityKind::Table { grid, values } => {
                let v = e.to_f64();
                match grid.binary_search_by(|g| g.partial_cmp(&v).unwrap()) {
                    Ok(i) => values[i],
                    Err(i) => {
                        // domain check guarantees 0 < i < grid.len()
                        let (x0, x1) = (grid[i - 1], grid[i]);
                        let (y0, y1) = (values[i - 1], values[i]);
                        y0 + (y1 - y0) * (v - x0) / (x1 - x0)
                    }
                }
            }
        }
    }

    pub fn is_continuous(&self) -> bool {
        match &self.kind {
            UtilityKind::Step { .. } => false,
            UtilityKind::Affine { inner, .. } => inner.is_continuous(),
            _ => true,
        }
    }

    /// Monotonicity direction over the domain: `1` increasing, `-1` decreasing,
    /// `0` constant, `None` for non-monotone or unclassified members.
    pub fn monotone_direction(&self) -> Option<i8> {
        match &self.kind {
            UtilityKind::Log
            | UtilityKind::Crra { .. }
            | UtilityKind::Sqrt
            | UtilityKind::Linear
            | UtilityKind::Logistic
            | UtilityKind::Power { .. } => Some(1),
            UtilityKind::Constant { .. } => Some(0),
            UtilityKind::Step { .. } => None,
            UtilityKind::Affine { a, inner, .. } => {
                let d = inner.monotone_direction()?;
                Some(if *a >= 0.0 { d } else { -d })
            }
            UtilityKind::Table { values, .. } => {
                let inc = values.windows(2).all(|w| w[0] < w[1]);
                let dec = values.windows(2).all(|w| w[0] > w[1]);
                let flat = values.windows(2).all(|w| w[0] == w[1]);
                if flat {
                    Some(0)
                } else if inc {
                    Some(1)
                } else if dec {
                    Some(-1)
                } else {
                    None
                }
            }
        }
    }

    /// `(inf, sup)` of the value range over the domain, each possibly infinite,
    /// together with attainment flags.
    pub fn range_bounds(&self) -> RangeBounds {
        match &self.kind {
            UtilityKind::Constant { value } => RangeBounds {
                inf: *value,
                sup: *value,
                inf_attained: true,
                sup_attained: true,
            },
            UtilityKind::Step {
                threshold,
                low,
                high,
            } => {
                let has_above = self.domain.upper() > *threshold;
                let has_at_or_below = self.domain.lower() < *threshold
                    || (self.domain.lower() == *threshold && self.domain.lower_closed())
                    || self.domain.contains_value(*threshold);
                match (has_at_or_below, has_above) {
                    (true, true) => RangeBounds {
                        inf: *low,
                        sup: *high,
                        inf_attained: true,
                        sup_attained: true,
                    },
                    (true, false) => RangeBounds {
                        inf: *low,
                        sup: *low,
                        inf_attained: true,
                        sup_attained: true,
                    },
                    (false, _) => RangeBounds {
                        inf: *high,
                        sup: *high,
                        inf_attained: true,
                        sup_attained: true,
                    },
                }
            }
            UtilityKind::Table { values, .. } => {
                let inf = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let sup = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                RangeBounds {
                    inf,
                    sup,
                    inf_attained: true,
                    sup_attained: true,
                }
            }
            UtilityKind::Affine { a, b, inner } => {
                let r = inner.range_bounds();
                let lo = a * (if *a >= 0.0 { r.inf } else { r.sup }) + b;
                let hi = a * (if *a >= 0.0 { r.sup } else { r.inf }) + b;
                let (lo_att, hi_att) = if *a >= 0.0 {
                    (r.inf_attained, r.sup_attained)
                } else {
                    (r.sup_attained, r.inf_attained)
                };
                RangeBounds {
                    inf: lo,
                    sup: hi,
                    inf_attained: lo_att,
                    sup_attained: hi_att,
                }
            }
            // remaining members are continuous and increasing
            _ => {
                let inf = self.limit_at(self.domain.lower(), true);
                let sup = self.limit_at(self.domain.upper(), false);
                RangeBounds {
                    inf,
                    sup,
                    inf_attained: self.domain.lower_closed() && inf.is_finite(),
                    sup_attained: self.domain.upper_closed() && sup.is_finite(),
                }
            }
        }
    }

    /// One-sided limit of an increasing catalog member at a domain endpoint.
    fn limit_at(&self, endpoint: f64, from_below_end: bool) -> f64 {
        match &self.kind {
            UtilityKind::Log => {
                if endpoint == 0.0 && from_below_end {
                    f64::NEG_INFINITY
                } else if endpoint.is_infinite() {
                    f64::INFINITY
                } else {
                    endpoint.ln()
                }
            }
            UtilityKind::Crra { theta } => {
                let theta = *theta;
                if theta == 1.0 {
                    return UtilityFunction::log().limit_at(endpoint, from_below_end);
                }
                let one_minus = 1.0 - theta;
                if endpoint == 0.0 && from_below_end {
                    if theta < 1.0 {
                        -1.0 / one_minus
                    } else {
                        f64::NEG_INFINITY
                    }
                } else if endpoint.is_infinite() {
                    if theta < 1.0 {
                        f64::INFINITY
                    } else {
                        -1.0 / one_minus
                    }
                } else {
                    (endpoint.powf(one_minus) - 1.0) / one_minus
                }
            }
            UtilityKind::Sqrt => endpoint.sqrt(),
            UtilityKind::Linear => endpoint,
            UtilityKind::Logistic => {
                if endpoint == f64::NEG_INFINITY {
                    0.0
                } else if endpoint == f64::INFINITY {
                    1.0
                } else {
                    1.0 / (1.0 + (-endpoint).exp())
                }
            }
            UtilityKind::Power { p } => {
                if endpoint.is_infinite() {
                    f64::INFINITY
                } else {
                    endpoint.powf(*p)
                }
            }
            _ => unreachable!("limit_at is only called for increasing catalog members"),
        }
    }

    pub fn bounded_above(&self) -> bool {
        self.range_bounds().sup.is_finite()
    }

    pub fn bounded_below(&self) -> bool {
        self.range_bounds().inf.is_finite()
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded_above() && self.bounded_below()
    }

    /// Solve `u(x) = y` for strictly monotone catalog members.
    /// The result may exceed the `f64` range; it is not clipped to the domain.
    pub fn invert(&self, y: f64) -> Result<ExtReal> {
        if !y.is_finite() {
            return Err(VnmError::Domain("cannot invert at a non-finite value".into()));
        }
        match &self.kind {
            UtilityKind::Log => ExtReal::exp(y),
            UtilityKind::Crra { theta } => {
                if *theta == 1.0 {
                    return ExtReal::exp(y);
                }
                let one_minus = 1.0 - theta;
                let base = 1.0 + one_minus * y;
                if base <= 0.0 {
                    return Err(VnmError::Domain(format!(
                        "{y} lies outside the range of {}",
                        self.label()
                    )));
                }
                ExtReal::exp(base.ln() / one_minus)
            }
            UtilityKind::Sqrt => {
                if y < 0.0 {
                    return Err(VnmError::Domain(format!(
                        "{y} lies outside the range of sqrt"
                    )));
                }
                if y == 0.0 {
                    Ok(ExtReal::ZERO)
                } else {
                    ExtReal::exp(2.0 * y.ln())
                }
            }
            UtilityKind::Linear => Ok(ExtReal::from_f64(y).expect("finite")),
            UtilityKind::Logistic => {
                if y <= 0.0 || y >= 1.0 {
                    return Err(VnmError::Domain(format!(
                        "{y} lies outside the open range of the logistic"
                    )));
                }
                Ok(ExtReal::from_f64((y / (1.0 - y)).ln()).expect("finite"))
            }
            UtilityKind::Power { p } => {
                if y < 0.0 {
                    return Err(VnmError::Domain(format!(
                        "{y} lies outside the range of x^{p}"
                    )));
                }
                if y == 0.0 {
                    Ok(ExtReal::ZERO)
                } else {
                    ExtReal::exp(y.ln() / p)
                }
            }
            UtilityKind::Affine { a, b, inner } => inner.invert((y - b) / a),
            UtilityKind::Constant { .. } | UtilityKind::Step { .. } | UtilityKind::Table { .. } => {
                Err(VnmError::Inapplicable(format!(
                    "{} has no catalog inverse",
                    self.label()
                )))
            }
        }
    }

    /// Jump metadata for members that fail upper semicontinuity.
    pub fn jump(&self) -> Option<JumpInfo> {
        match &self.kind {
            UtilityKind::Step {
                threshold,
                low,
                high,
            } => Some(JumpInfo {
                at: *threshold,
                value_at: *low,
                limit_above: *high,
            }),
            UtilityKind::Affine { a, b, inner } => inner.jump().map(|j| JumpInfo {
                at: j.at,
                value_at: a * j.value_at + b,
                limit_above: a * j.limit_above + b,
            }),
            _ => None,
        }
    }
}

/// Range of a utility over its domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeBounds {
    pub inf: f64,
    pub sup: f64,
    pub inf_attained: bool,
    pub sup_attained: bool,
}

/// Expected utility of a simple lottery: the exact weighted sum of atom
/// utilities, with rational weights converted to doubles last.
pub fn expectation(p: &SimpleLottery, u: &UtilityFunction) -> Result<f64> {
    let mut sum = 0.0;
    for (x, w) in p.atoms() {
        let v = u.eval(x)?;
        sum += w.to_f64().expect("rational weight converts") * v;
    }
    Ok(sum)
}

/// Expected utility of a density measure by quadrature over the carrier.
pub fn expectation_density(m: &DensityMeasure, u: &UtilityFunction) -> Result<f64> {
    let (a, b) = m.carrier();
    if !(u.domain().contains_value(a) && u.domain().contains_value(b)) {
        return Err(VnmError::Domain(format!(
            "carrier [{a}, {b}] escapes the utility domain {}",
            u.domain()
        )));
    }
    Ok(m.quadrature(|x| u.eval_value(x).expect("carrier inside domain")))
}

/// Spec for utility construction from JSON configs, e.g.
/// `{"utility": "crra", "theta": 2}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySpec {
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
    /// Optional closed-interval domain restriction `[lo, hi]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
}

impl UtilitySpec {
    pub fn named(utility: &str) -> Self {
        UtilitySpec {
            utility: utility.into(),
            theta: None,
            p: None,
            value: None,
            threshold: None,
            low: None,
            high: None,
            a: None,
            b: None,
            inner: None,
            domain: None,
        }
    }

    pub fn build(&self) -> Result<UtilityFunction> {
        let base = match self.utility.as_str() {
            "log" => UtilityFunction::log(),
            "sqrt" => UtilityFunction::sqrt(),
            "linear" => UtilityFunction::linear(),
            "logistic" => UtilityFunction::logistic(),
            "crra" => {
                let theta = self
                    .theta
                    .ok_or_else(|| VnmError::Config("crra requires \"theta\"".into()))?;
                UtilityFunction::crra(theta)?
            }
            "power" => {
                let p = self
                    .p
                    .ok_or_else(|| VnmError::Config("power requires \"p\"".into()))?;
                UtilityFunction::power(p)?
            }
            "constant" => UtilityFunction::constant(self.value.unwrap_or(0.0)),
            "step" => UtilityFunction::step(
                self.threshold.unwrap_or(0.0),
                self.low.unwrap_or(0.0),
                self.high.unwrap_or(1.0),
            )?,
            "affine" => {
                let inner = self
                    .inner
                    .as_ref()
                    .ok_or_else(|| VnmError::Config("affine requires \"inner\"".into()))?
                    .build()?;
                UtilityFunction::affine(self.a.unwrap_or(1.0), self.b.unwrap_or(0.0), inner)?
            }
            other => {
                return Err(VnmError::Config(format!("unknown utility {other:?}")));
            }
        };
        match self.domain {
            Some([lo, hi]) => base.with_domain(OutcomeSpace::closed_interval(lo, hi)?),
            None => Ok(base),
        }
    }
}

impl fmt::Display for UtilityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {}", self.label(), self.domain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lottery::ratio;

    fn out(v: f64) -> Outcome {
        Outcome::new(v).unwrap()
    }

    #[test]
    fn crra_matches_direct_substitution() {
        let u2 = UtilityFunction::crra(2.0).unwrap();
        assert!((u2.eval_value(2.0).unwrap() - 0.5).abs() < 1e-15);
        let u1 = UtilityFunction::crra(1.0).unwrap();
        assert!((u1.eval_value(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        let uh = UtilityFunction::crra(0.5).unwrap();
        assert!((uh.eval_value(4.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn crra_approaches_log_near_one() {
        let grid = [0.2, 0.5, 1.0, 2.0, 5.0, 9.0];
        for eps in [1e-6, -1e-6] {
            let u = UtilityFunction::crra(1.0 + eps).unwrap();
            for &x in &grid {
                let diff = (u.eval_value(x).unwrap() - x.ln()).abs();
                assert!(diff < 1e-4, "theta=1+{eps} at {x}: diff {diff}");
            }
        }
    }

    #[test]
    fn domain_violation_is_an_error() {
        let u = UtilityFunction::log();
        assert!(u.eval_value(-1.0).is_err());
        assert!(u.eval_value(0.0).is_err());
        assert!(u.eval_value(1.0).is_ok());
    }

    #[test]
    fn expectation_weights_convert_last() {
        let p =
            SimpleLottery::from_atoms([(out(1.0), ratio(1, 2)), (out(3.0), ratio(1, 2))]).unwrap();
        let sq = UtilityFunction::power(2.0).unwrap();
        assert_eq!(expectation(&p, &sq).unwrap(), 5.0);

        let q =
            SimpleLottery::from_atoms([(out(1.0), ratio(1, 2)), (out(4.0), ratio(1, 2))]).unwrap();
        assert_eq!(expectation(&q, &UtilityFunction::sqrt()).unwrap(), 1.5);
    }

    #[test]
    fn dirac_expectation_is_pointwise_value() {
        let u = UtilityFunction::log();
        for x in [0.5, 1.0, 2.0, 7.5] {
            let d = SimpleLottery::dirac(out(x));
            assert_eq!(expectation(&d, &u).unwrap(), u.eval_value(x).unwrap());
        }
    }

    #[test]
    fn expectation_rejects_escaping_support() {
        let p =
            SimpleLottery::from_atoms([(out(-1.0), ratio(1, 2)), (out(3.0), ratio(1, 2))]).unwrap();
        assert!(expectation(&p, &UtilityFunction::log()).is_err());
    }

    #[test]
    fn density_expectations_match_closed_forms() {
        let space = OutcomeSpace::real_line();
        let m = DensityMeasure::uniform(&space, 0.0, 1.0).unwrap();
        let mean = expectation_density(&m, &UtilityFunction::linear()).unwrap();
        assert!((mean - 0.5).abs() < 1e-8);

        // oracle: integral of x^2 over [0,1] is 1/3
        let second = expectation_density(&m, &UtilityFunction::power(2.0).unwrap()).unwrap();
        assert!((second - 1.0 / 3.0).abs() < 1e-6);

        // oracle: integral of log over [1, e] is (x ln x - x) evaluated there = 1
        let e = std::f64::consts::E;
        let m = DensityMeasure::uniform(&space, 1.0, e).unwrap();
        let v = expectation_density(&m, &UtilityFunction::log()).unwrap();
        assert!((v - 1.0 / (e - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn affine_transform_evaluates_and_shifts_expectation() {
        let u = UtilityFunction::crra(2.0).unwrap();
        let v = UtilityFunction::affine(2.0, 3.0, u.clone()).unwrap();
        assert!((v.eval_value(2.0).unwrap() - 4.0).abs() < 1e-12);

        let grid: Vec<f64> = (1..=100).map(|i| 0.1 * i as f64).collect();
        let id = UtilityFunction::affine(1.0, 0.0, u.clone()).unwrap();
        for &x in &grid {
            assert_eq!(id.eval_value(x).unwrap(), u.eval_value(x).unwrap());
        }

        let p =
            SimpleLottery::from_atoms([(out(0.5), ratio(1, 3)), (out(4.0), ratio(2, 3))]).unwrap();
        let w = UtilityFunction::affine(2.0, 3.0, UtilityFunction::log()).unwrap();
        let lhs = expectation(&p, &w).unwrap();
        let rhs = 2.0 * expectation(&p, &UtilityFunction::log()).unwrap() + 3.0;
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn affine_requires_positive_slope() {
        assert!(UtilityFunction::affine(0.0, 1.0, UtilityFunction::log()).is_err());
        assert!(UtilityFunction::affine(-1.0, 1.0, UtilityFunction::log()).is_err());
        assert!(UtilityFunction::scaled(-1.0, 0.0, UtilityFunction::linear()).is_ok());
    }

    #[test]
    fn boundedness_tracks_the_domain() {
        let log = UtilityFunction::log();
        assert!(!log.bounded_above());
        assert!(!log.bounded_below());
        let restricted = log
            .with_domain(OutcomeSpace::closed_interval(0.5, 20.0).unwrap())
            .unwrap();
        assert!(restricted.is_bounded());
        assert!(UtilityFunction::logistic().is_bounded());
        assert!(!UtilityFunction::sqrt().bounded_above());
        assert!(UtilityFunction::sqrt().bounded_below());
        // theta > 1 is bounded above but not below on the open half-line
        let u = UtilityFunction::crra(2.0).unwrap();
        assert!(u.bounded_above());
        assert!(!u.bounded_below());
    }

    #[test]
    fn inversion_round_trips() {
        for u in [
            UtilityFunction::log(),
            UtilityFunction::sqrt(),
            UtilityFunction::linear(),
            UtilityFunction::logistic(),
            UtilityFunction::crra(0.5).unwrap(),
            UtilityFunction::crra(2.0).unwrap(),
        ] {
            for y in [-0.4f64, 0.3, 0.9] {
                // keep targets inside every catalog range
                let y = if matches!(u.kind(), UtilityKind::Logistic) {
                    0.5 + 0.3 * y
                } else if matches!(u.kind(), UtilityKind::Sqrt) {
                    y.abs()
                } else {
                    y
                };
                let x = u.invert(y).unwrap();
                let back = u.eval(&Outcome::from_ext(x)).unwrap();
                assert!((back - y).abs() < 1e-9, "{}: invert({y}) -> {back}", u.label());
            }
        }
    }

    #[test]
    fn inversion_reaches_beyond_f64() {
        let log = UtilityFunction::log();
        let target = 2f64.powi(30) + 1.0;
        let x = log.invert(target).unwrap();
        let v = log.eval(&Outcome::from_ext(x)).unwrap();
        assert!((v - target).abs() < 1e-6 * target);
    }

    #[test]
    fn step_jump_metadata() {
        let s = UtilityFunction::step(0.0, 0.0, 1.0).unwrap();
        let j = s.jump().unwrap();
        assert_eq!(j.at, 0.0);
        assert_eq!(j.value_at, 0.0);
        assert_eq!(j.limit_above, 1.0);
        assert_eq!(s.eval_value(0.0).unwrap(), 0.0);
        assert_eq!(s.eval_value(1e-9).unwrap(), 1.0);
        assert!(UtilityFunction::log().jump().is_none());
    }

    #[test]
    fn table_interpolates_and_rejects_outside() {
        let t = UtilityFunction::table(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 4.0)]).unwrap();
        assert_eq!(t.eval_value(0.5).unwrap(), 1.0);
        assert_eq!(t.eval_value(1.0).unwrap(), 2.0);
        assert_eq!(t.eval_value(2.0).unwrap(), 3.0);
        assert!(t.eval_value(3.5).is_err());
    }

    #[test]
    fn utility_spec_builds_catalog_members() {
        let spec: UtilitySpec = serde_json::from_str(r#"{"utility":"crra","theta":2}"#).unwrap();
        let u = spec.build().unwrap();
        assert_eq!(u.label(), "crra(2)");
        let bad: std::result::Result<UtilitySpec, _> =
            serde_json::from_str(r#"{"utility":"log","unknown":1}"#);
        assert!(bad.is_err());
    }
}
