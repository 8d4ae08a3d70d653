//! Standard-gamble calibration: recover a utility table from a preference
//! oracle by bisecting mixture weights between two anchor point masses, with
//! the two extrapolation cases for points beyond the anchors.
//!
//! Bisection midpoints are exact rationals, so every probe lottery is exact;
//! only the returned utility values are doubles.

use std::collections::BTreeMap;

use num::{BigRational, One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VnmError};
use crate::lottery::SimpleLottery;
use crate::preference::{PreferenceOracle, Verdict};
use crate::space::Outcome;
use crate::utility::UtilityFunction;

/// Iteration cap for a single bisection.
pub const MAX_BISECTION_ITERATIONS: u32 = 64;

/// Default interval tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Anchor pair with the first strictly preferred, or the constant marker when
/// every candidate pair compared indifferent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Anchors {
    Pair { x_star: Outcome, y_star: Outcome },
    Constant,
}

/// Which branch of the standard gamble produced a point estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GambleCase {
    /// Anchors bracket the point: direct mixture weight in [0, 1].
    Interior,
    /// Point beats the upper anchor: dilute the point, value `1/s > 1`.
    AboveUpper,
    /// Lower anchor beats the point: balance against the upper anchor,
    /// value `-r/(1-r) < 0`.
    BelowLower,
}

/// A single calibrated value.
#[derive(Clone, Copy, Debug)]
pub struct PointEstimate {
    pub value: f64,
    pub iterations: u32,
    pub case: GambleCase,
    /// True when the oracle itself reported indifference at an exact weight.
    pub exact: bool,
}

/// Calibrated utility table over a grid.
#[derive(Clone, Debug)]
pub struct CalibrationResult {
    pub anchors: Anchors,
    pub table: BTreeMap<Outcome, f64>,
    pub tolerance: f64,
    pub iterations_used: BTreeMap<Outcome, u32>,
}

impl CalibrationResult {
    pub fn is_constant(&self) -> bool {
        matches!(self.anchors, Anchors::Constant)
    }

    /// Wrap the table as a piecewise-linear utility.
    pub fn table_utility(&self) -> Result<UtilityFunction> {
        if self.table.len() < 2 {
            return Err(VnmError::Inapplicable(
                "table needs at least two calibrated points".into(),
            ));
        }
        UtilityFunction::table(
            self.table
                .iter()
                .map(|(x, v)| (x.value(), *v))
                .collect::<Vec<_>>(),
        )
    }
}

/// Scan candidates for a strictly ordered anchor pair: the best and worst
/// candidates under the oracle's Dirac comparisons, first encountered wins
/// ties. Returns the constant marker when best and worst are indifferent.
pub fn pick_anchors(o: &PreferenceOracle, candidates: &[Outcome]) -> Result<Anchors> {
    let first = *candidates
        .first()
        .ok_or_else(|| VnmError::Domain("anchor candidates must be nonempty".into()))?;
    let mut best = first;
    let mut worst = first;
    for &c in &candidates[1..] {
        let d = SimpleLottery::dirac(c);
        if o.compare(&d, &SimpleLottery::dirac(best))? == Verdict::FirstStrict {
            best = c;
        }
        if o.compare(&SimpleLottery::dirac(worst), &d)? == Verdict::FirstStrict {
            worst = c;
        }
    }
    let v = o.compare(&SimpleLottery::dirac(best), &SimpleLottery::dirac(worst))?;
    match v {
        Verdict::FirstStrict => Ok(Anchors::Pair {
            x_star: best,
            y_star: worst,
        }),
        _ => Ok(Anchors::Constant),
    }
}

/// Direction feedback from a probe verdict.
enum Move {
    Up,
    Down,
    Hit,
}

/// Bisect the weight interval [0, 1] until it is shorter than `tol`, probing
/// with exact rational midpoints. `probe` maps a weight to a direction:
/// `Up` moves the lower end, `Down` the upper end, `Hit` stops exactly.
fn bisect<F>(tol: f64, mut probe: F) -> Result<(BigRational, u32, bool)>
where
    F: FnMut(&BigRational) -> Result<Move>,
{
    if !(tol > 0.0) {
        return Err(VnmError::Domain(format!("tolerance {tol} must be positive")));
    }
    let tol_r = BigRational::from_float(tol).expect("positive finite tolerance");
    let mut lo = BigRational::zero();
    let mut hi = BigRational::one();
    let mut iterations = 0u32;
    while &hi - &lo >= tol_r {
        if iterations >= MAX_BISECTION_ITERATIONS {
            return Err(VnmError::Calibration(format!(
                "no indifference point within {MAX_BISECTION_ITERATIONS} bisection steps; \
                 the oracle may violate independence or segmental continuity"
            )));
        }
        let mid = (&lo + &hi) / BigRational::from_integer(2.into());
        match probe(&mid)? {
            Move::Up => lo = mid,
            Move::Down => hi = mid,
            Move::Hit => return Ok((mid, iterations + 1, true)),
        }
        iterations += 1;
    }
    let mid = (&lo + &hi) / BigRational::from_integer(2.into());
    Ok((mid, iterations, false))
}

/// Calibrate one point against anchors `x*` (value 1) and `y*` (value 0).
///
/// Case selection by two comparisons: interior points bisect the blend weight
/// directly; a point above the upper anchor is diluted into the blend until
/// the upper anchor is matched; a point below the lower anchor is balanced
/// with upper-anchor weight until the lower anchor is matched.
pub fn calibrate_point(
    o: &PreferenceOracle,
    x: Outcome,
    x_star: Outcome,
    y_star: Outcome,
    tol: f64,
) -> Result<PointEstimate> {
    let dx = SimpleLottery::dirac(x);
    let d_star = SimpleLottery::dirac(x_star);
    let d_base = SimpleLottery::dirac(y_star);

    if o.compare(&d_star, &d_base)? != Verdict::FirstStrict {
        return Err(VnmError::Domain(
            "anchors must satisfy x* strictly preferred to y*".into(),
        ));
    }

    let vs_star = o.compare(&dx, &d_star)?;
    let vs_base = o.compare(&dx, &d_base)?;

    if vs_star == Verdict::FirstStrict {
        // u(x) > 1: find s with x* ~ s*x + (1-s)*y*, return 1/s
        let (s, iterations, exact) = bisect(tol, |s| {
            let blend = SimpleLottery::mix(s, &dx, &d_base)?;
            Ok(match o.compare(&d_star, &blend)? {
                Verdict::FirstStrict => Move::Up,
                Verdict::SecondStrict => Move::Down,
                Verdict::Indifferent => Move::Hit,
            })
        })?;
        let s = s.to_f64().expect("weight converts");
        if s <= 0.0 {
            return Err(VnmError::Calibration(
                "dilution weight collapsed to zero".into(),
            ));
        }
        return Ok(PointEstimate {
            value: 1.0 / s,
            iterations,
            case: GambleCase::AboveUpper,
            exact,
        });
    }

    if vs_base == Verdict::SecondStrict {
        // u(x) < 0: find r with y* ~ r*x* + (1-r)*x, return -r/(1-r)
        let (r, iterations, exact) = bisect(tol, |r| {
            let blend = SimpleLottery::mix(r, &d_star, &dx)?;
            Ok(match o.compare(&d_base, &blend)? {
                Verdict::FirstStrict => Move::Up,
                Verdict::SecondStrict => Move::Down,
                Verdict::Indifferent => Move::Hit,
            })
        })?;
        let r = r.to_f64().expect("weight converts");
        if r >= 1.0 {
            return Err(VnmError::Calibration(
                "balance weight collapsed to one".into(),
            ));
        }
        return Ok(PointEstimate {
            value: -r / (1.0 - r),
            iterations,
            case: GambleCase::BelowLower,
            exact,
        });
    }

    // anchors bracket the point: x ~ t*x* + (1-t)*y*, return t
    if vs_star == Verdict::Indifferent {
        return Ok(PointEstimate {
            value: 1.0,
            iterations: 0,
            case: GambleCase::Interior,
            exact: true,
        });
    }
    if vs_base == Verdict::Indifferent {
        return Ok(PointEstimate {
            value: 0.0,
            iterations: 0,
            case: GambleCase::Interior,
            exact: true,
        });
    }
    let (t, iterations, exact) = bisect(tol, |t| {
        let blend = SimpleLottery::mix(t, &d_star, &d_base)?;
        Ok(match o.compare(&dx, &blend)? {
            Verdict::FirstStrict => Move::Up,
            Verdict::SecondStrict => Move::Down,
            Verdict::Indifferent => Move::Hit,
        })
    })?;
    Ok(PointEstimate {
        value: t.to_f64().expect("weight converts"),
        iterations,
        case: GambleCase::Interior,
        exact,
    })
}

/// Calibrate a whole grid: anchors picked from the grid itself, then one
/// standard gamble per point. Grid points are evaluated concurrently; oracle
/// purity makes the result deterministic regardless of schedule.
pub fn calibrate(o: &PreferenceOracle, grid: &[Outcome], tol: f64) -> Result<CalibrationResult> {
    let anchors = pick_anchors(o, grid)?;
    let (x_star, y_star) = match anchors {
        Anchors::Constant => {
            return Ok(CalibrationResult {
                anchors,
                table: BTreeMap::new(),
                tolerance: tol,
                iterations_used: BTreeMap::new(),
            })
        }
        Anchors::Pair { x_star, y_star } => (x_star, y_star),
    };
    let estimates: Vec<(Outcome, PointEstimate)> = grid
        .par_iter()
        .map(|&x| calibrate_point(o, x, x_star, y_star, tol).map(|e| (x, e)))
        .collect::<Result<_>>()?;
    let mut table = BTreeMap::new();
    let mut iterations_used = BTreeMap::new();
    for (x, e) in estimates {
        table.insert(x, e.value);
        iterations_used.insert(x, e.iterations);
    }
    Ok(CalibrationResult {
        anchors,
        table,
        tolerance: tol,
        iterations_used,
    })
}

/// Least-squares affine fit `u1 ~= a*u2 + b` over a grid, with the maximum
/// absolute deviation as the residual.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AffineFit {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
}

pub fn affine_match(
    u1: &UtilityFunction,
    u2: &UtilityFunction,
    grid: &[Outcome],
) -> Result<AffineFit> {
    if grid.len() < 3 {
        return Err(VnmError::Domain(
            "affine matching needs at least three grid points".into(),
        ));
    }
    let v1: Vec<f64> = grid.iter().map(|x| u1.eval(x)).collect::<Result<_>>()?;
    let v2: Vec<f64> = grid.iter().map(|x| u2.eval(x)).collect::<Result<_>>()?;
    affine_fit_values(&v1, &v2)
}

/// Fit on precomputed values (used when one side is a calibration table).
pub fn affine_fit_values(v1: &[f64], v2: &[f64]) -> Result<AffineFit> {
    let n = v1.len() as f64;
    let m1 = v1.iter().sum::<f64>() / n;
    let m2 = v2.iter().sum::<f64>() / n;
    let var2: f64 = v2.iter().map(|v| (v - m2) * (v - m2)).sum();
    let var1: f64 = v1.iter().map(|v| (v - m1) * (v - m1)).sum();
    if var2 == 0.0 {
        if var1 == 0.0 {
            return Ok(AffineFit {
                a: 1.0,
                b: m1 - m2,
                residual: 0.0,
            });
        }
        return Err(VnmError::NoFit(
            "reference values are constant on the grid while the target varies".into(),
        ));
    }
    let cov: f64 = v1
        .iter()
        .zip(v2.iter())
        .map(|(a, b)| (a - m1) * (b - m2))
        .sum();
    let a = cov / var2;
    let b = m1 - a * m2;
    let residual = v1
        .iter()
        .zip(v2.iter())
        .map(|(x1, x2)| (x1 - (a * x2 + b)).abs())
        .fold(0.0, f64::max);
    Ok(AffineFit { a, b, residual })
}

/// Fit a calibration table against a catalog utility on the table's own grid.
pub fn affine_match_table(
    result: &CalibrationResult,
    reference: &UtilityFunction,
) -> Result<AffineFit> {
    if result.is_constant() {
        return Err(VnmError::NoFit("calibration reported a constant order".into()));
    }
    let mut v1 = Vec::with_capacity(result.table.len());
    let mut v2 = Vec::with_capacity(result.table.len());
    for (x, u_hat) in &result.table {
        v1.push(*u_hat);
        v2.push(reference.eval(x)?);
    }
    affine_fit_values(&v1, &v2)
}

#[derive(Serialize, Deserialize)]
struct AnchorsRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    x_star: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y_star: Option<Outcome>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    constant: bool,
}

#[derive(Serialize, Deserialize)]
struct TablePoint {
    x: Outcome,
    u: f64,
}

#[derive(Serialize, Deserialize)]
struct CalibrationRecord {
    anchors: AnchorsRecord,
    points: Vec<TablePoint>,
}

impl Serialize for CalibrationResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let anchors = match self.anchors {
            Anchors::Pair { x_star, y_star } => AnchorsRecord {
                x_star: Some(x_star),
                y_star: Some(y_star),
                constant: false,
            },
            Anchors::Constant => AnchorsRecord {
                x_star: None,
                y_star: None,
                constant: true,
            },
        };
        CalibrationRecord {
            anchors,
            points: self
                .table
                .iter()
                .map(|(x, u)| TablePoint { x: *x, u: *u })
                .collect(),
        }
        .serialize(serializer)
    }
}
