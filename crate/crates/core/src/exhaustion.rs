//! Nested closed exhaustions of an outcome space: construction from utility
//! preimage bands, structural verification, and the compact-cover index.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VnmError};
use crate::lottery::{DensityMeasure, SimpleLottery};
use crate::real::ExtReal;
use crate::space::{Outcome, OutcomeSpace};
use crate::utility::UtilityFunction;

/// One end of an interval piece.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LevelBound {
    NegInf,
    Val { at: ExtReal, closed: bool },
    PosInf,
}

/// A nonempty interval inside the outcome space. Endpoint semantics are
/// relative to the space's subspace topology: an open endpoint that falls on
/// an open boundary of the space itself does not break closedness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalPiece {
    pub lo: LevelBound,
    pub hi: LevelBound,
}

impl IntervalPiece {
    pub fn contains(&self, x: &Outcome) -> bool {
        let e = x.ext();
        let above = match self.lo {
            LevelBound::NegInf => true,
            LevelBound::PosInf => false,
            LevelBound::Val { at, closed } => {
                if closed {
                    e >= at
                } else {
                    e > at
                }
            }
        };
        let below = match self.hi {
            LevelBound::NegInf => false,
            LevelBound::PosInf => true,
            LevelBound::Val { at, closed } => {
                if closed {
                    e <= at
                } else {
                    e < at
                }
            }
        };
        above && below
    }

    /// Containment of a whole interval piece (connectedness matters: a piece
    /// spanning a hole of a union is not covered by endpoint checks alone).
    fn covers_piece(&self, other: &IntervalPiece) -> bool {
        let lo_ok = match (self.lo, other.lo) {
            (LevelBound::NegInf, _) => true,
            (_, LevelBound::NegInf) => false,
            (LevelBound::PosInf, _) => false,
            (_, LevelBound::PosInf) => true,
            (
                LevelBound::Val {
                    at: a,
                    closed: ca,
                },
                LevelBound::Val {
                    at: b,
                    closed: cb,
                },
            ) => a < b || (a == b && (ca || !cb)),
        };
        let hi_ok = match (self.hi, other.hi) {
            (LevelBound::PosInf, _) => true,
            (_, LevelBound::PosInf) => false,
            (LevelBound::NegInf, _) => false,
            (_, LevelBound::NegInf) => true,
            (
                LevelBound::Val {
                    at: a,
                    closed: ca,
                },
                LevelBound::Val {
                    at: b,
                    closed: cb,
                },
            ) => a > b || (a == b && (ca || !cb)),
        };
        lo_ok && hi_ok
    }
}

/// A finite union of interval pieces; the empty union is the empty set.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct LevelSet {
    pieces: Vec<IntervalPiece>,
}

impl LevelSet {
    pub fn empty() -> Self {
        LevelSet { pieces: Vec::new() }
    }

    pub fn from_pieces(pieces: Vec<IntervalPiece>) -> Self {
        LevelSet { pieces }
    }

    /// The whole space as a single piece.
    pub fn whole(space: &OutcomeSpace) -> Self {
        let lo = match ExtReal::from_f64(space.lower()) {
            Some(at) => LevelBound::Val {
                at,
                closed: space.lower_closed(),
            },
            None => LevelBound::NegInf,
        };
        let hi = match ExtReal::from_f64(space.upper()) {
            Some(at) => LevelBound::Val {
                at,
                closed: space.upper_closed(),
            },
            None => LevelBound::PosInf,
        };
        LevelSet {
            pieces: vec![IntervalPiece { lo, hi }],
        }
    }

    pub fn pieces(&self) -> &[IntervalPiece] {
        &self.pieces
    }

    pub fn is_empty_set(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains(&self, x: &Outcome) -> bool {
        self.pieces.iter().any(|p| p.contains(x))
    }

    /// Every piece of `self` sits inside a single piece of `other`.
    pub fn subset_of(&self, other: &LevelSet) -> bool {
        self.pieces
            .iter()
            .all(|p| other.pieces.iter().any(|q| q.covers_piece(p)))
    }

    /// An interval `[a, b]` is covered iff one piece contains it entirely.
    pub fn contains_interval(&self, a: &Outcome, b: &Outcome) -> bool {
        let probe = IntervalPiece {
            lo: LevelBound::Val {
                at: a.ext(),
                closed: true,
            },
            hi: LevelBound::Val {
                at: b.ext(),
                closed: true,
            },
        };
        self.pieces.iter().any(|q| q.covers_piece(&probe))
    }

    /// Closed in the subspace topology: every finite open endpoint must fall
    /// outside the space (on an open space boundary), otherwise the endpoint
    /// is a missing limit point.
    pub fn closed_in(&self, space: &OutcomeSpace) -> ClosednessCheck {
        for p in &self.pieces {
            for b in [p.lo, p.hi] {
                if let LevelBound::Val { at, closed } = b {
                    if !closed {
                        let x = Outcome::from_ext(at);
                        if space.contains(&x) {
                            return ClosednessCheck::OpenAt(x);
                        }
                    }
                }
            }
        }
        ClosednessCheck::Closed
    }

    /// Open in the subspace topology: every finite closed endpoint must
    /// coincide with a boundary value of the space itself.
    pub fn open_in(&self, space: &OutcomeSpace) -> ClosednessCheck {
        for p in &self.pieces {
            for b in [p.lo, p.hi] {
                if let LevelBound::Val { at, closed } = b {
                    if closed {
                        let v = at.to_f64();
                        let on_boundary = v == space.lower() || v == space.upper();
                        if !on_boundary {
                            return ClosednessCheck::OpenAt(Outcome::from_ext(at));
                        }
                    }
                }
            }
        }
        ClosednessCheck::Closed
    }
}

/// Result of a relative-topology endpoint scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClosednessCheck {
    Closed,
    /// Witness endpoint that breaks the required property.
    OpenAt(Outcome),
}

impl ClosednessCheck {
    pub fn ok(&self) -> bool {
        matches!(self, ClosednessCheck::Closed)
    }
}

/// A sequence of closed levels, each nested in the next through a stored
/// open interior, intended to cover the space.
#[derive(Clone, Debug)]
pub struct Exhaustion {
    space: OutcomeSpace,
    levels: Vec<LevelSet>,
    interiors: Vec<LevelSet>,
}

impl Exhaustion {
    /// Assemble from explicit levels and interiors (used for adversarial
    /// structures in tests; no invariants are enforced here, `verify` is the
    /// judge).
    pub fn from_levels(
        space: OutcomeSpace,
        levels: Vec<LevelSet>,
        interiors: Vec<LevelSet>,
    ) -> Result<Exhaustion> {
        if levels.len() != interiors.len() {
            return Err(VnmError::Validation(
                "levels and interiors must have equal length".into(),
            ));
        }
        if levels.is_empty() {
            return Err(VnmError::Validation("need at least one level".into()));
        }
        Ok(Exhaustion {
            space,
            levels,
            interiors,
        })
    }

    /// The trivial exhaustion: every level is the whole (clopen) space.
    pub fn trivial(space: OutcomeSpace, len: usize) -> Result<Exhaustion> {
        if len == 0 {
            return Err(VnmError::Validation("need at least one level".into()));
        }
        let whole = LevelSet::whole(&space);
        Ok(Exhaustion {
            space,
            levels: vec![whole.clone(); len],
            interiors: vec![whole; len],
        })
    }

    /// Preimage-band exhaustion for a continuous monotone catalog utility:
    /// level `n` is the preimage of `[-n, n]`, its stored interior the
    /// preimage of `]-n-1/2, n+1/2[`.
    pub fn utility_bands(u: &UtilityFunction, n_max: u32) -> Result<Exhaustion> {
        if !u.is_continuous() {
            return Err(VnmError::Inapplicable(format!(
                "{} is not continuous",
                u.label()
            )));
        }
        let dir = u.monotone_direction().ok_or_else(|| {
            VnmError::Inapplicable(format!("{} is not a monotone catalog member", u.label()))
        })?;
        if dir == 0 {
            return Err(VnmError::Inapplicable(
                "constant utilities have no preimage bands".into(),
            ));
        }
        let space = *u.domain();
        let mut levels = Vec::with_capacity(n_max as usize + 1);
        let mut interiors = Vec::with_capacity(n_max as usize + 1);
        for n in 0..=n_max {
            let n = n as f64;
            levels.push(preimage_band(u, dir, -n, n, true, &space)?);
            interiors.push(preimage_band(u, dir, -n - 0.5, n + 0.5, false, &space)?);
        }
        Ok(Exhaustion {
            space,
            levels,
            interiors,
        })
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, n: usize) -> &LevelSet {
        &self.levels[n]
    }

    pub fn interior(&self, n: usize) -> &LevelSet {
        &self.interiors[n]
    }

    /// Structural verification: each level closed in the space, each interior
    /// open, `X_n` inside `Y_n` inside `X_{n+1}`, and every probe covered by
    /// some level. Coverage over a probe grid is a sampled check, not a proof.
    pub fn verify(&self, space: &OutcomeSpace, probes: &[Outcome]) -> ExhaustionReport {
        if *space != self.space {
            return ExhaustionReport::failed(
                ExhaustionCondition::Closedness,
                "verification space differs from the construction space".into(),
            );
        }
        for (n, level) in self.levels.iter().enumerate() {
            if let ClosednessCheck::OpenAt(x) = level.closed_in(space) {
                return ExhaustionReport::failed(
                    ExhaustionCondition::Closedness,
                    format!("level {n} is not closed in the space: witness endpoint {x}"),
                );
            }
        }
        for (n, interior) in self.interiors.iter().enumerate() {
            if let ClosednessCheck::OpenAt(x) = interior.open_in(space) {
                return ExhaustionReport::failed(
                    ExhaustionCondition::Nesting,
                    format!("stored interior {n} is not open in the space: witness endpoint {x}"),
                );
            }
        }
        for n in 0..self.levels.len() {
            if !self.levels[n].subset_of(&self.interiors[n]) {
                return ExhaustionReport::failed(
                    ExhaustionCondition::Nesting,
                    format!("level {n} is not contained in its stored interior"),
                );
            }
            if n + 1 < self.levels.len() && !self.interiors[n].subset_of(&self.levels[n + 1]) {
                return ExhaustionReport::failed(
                    ExhaustionCondition::Nesting,
                    format!("interior {n} is not contained in level {}", n + 1),
                );
            }
        }
        for x in probes {
            if !space.contains(x) {
                return ExhaustionReport::failed(
                    ExhaustionCondition::Coverage,
                    format!("probe {x} lies outside the space"),
                );
            }
            if !self.levels.iter().any(|l| l.contains(x)) {
                return ExhaustionReport::failed(
                    ExhaustionCondition::Coverage,
                    format!("probe {x} is not covered by any level"),
                );
            }
        }
        ExhaustionReport {
            passed: true,
            failure: None,
            detail: format!(
                "levels: {}, probes: {} (coverage sampled)",
                self.levels.len(),
                probes.len()
            ),
        }
    }

    /// Least level whose stored interior contains the measure's support;
    /// exists for every compact support once the prefix is long enough.
    pub fn cover_index_points(&self, support: &[Outcome]) -> Result<u32> {
        for x in support {
            if !self.space.contains(x) {
                return Err(VnmError::Domain(format!(
                    "support point {x} lies outside the space"
                )));
            }
        }
        'levels: for (n, interior) in self.interiors.iter().enumerate() {
            for x in support {
                if !interior.contains(x) {
                    continue 'levels;
                }
            }
            return Ok(n as u32);
        }
        let uncovered = support
            .iter()
            .find(|x| !self.interiors.last().map(|l| l.contains(x)).unwrap_or(false));
        Err(VnmError::Budget(format!(
            "no stored interior among {} levels covers the support{}",
            self.levels.len(),
            uncovered
                .map(|x| format!("; uncovered outcome {x}"))
                .unwrap_or_default()
        )))
    }

    pub fn cover_index(&self, p: &SimpleLottery) -> Result<u32> {
        self.cover_index_points(&p.support())
    }

    /// Cover index of a density measure: the carrier interval must sit inside
    /// a single piece of the interior.
    pub fn cover_index_density(&self, m: &DensityMeasure) -> Result<u32> {
        let (a, b) = m.carrier();
        let (a, b) = (Outcome::new(a)?, Outcome::new(b)?);
        for (n, interior) in self.interiors.iter().enumerate() {
            if interior.contains_interval(&a, &b) {
                return Ok(n as u32);
            }
        }
        Err(VnmError::Budget(format!(
            "no stored interior among {} levels covers the carrier [{a}, {b}]",
            self.levels.len()
        )))
    }

    /// Interval levels convert to restriction scopes for per-level checks.
    pub fn level_as_space(&self, n: usize) -> Result<Option<OutcomeSpace>> {
        let level = &self.levels[n];
        if level.is_empty_set() {
            return Ok(None);
        }
        if level.pieces().len() != 1 {
            return Err(VnmError::Inapplicable(format!(
                "level {n} is a union of {} pieces, not an interval",
                level.pieces().len()
            )));
        }
        let p = level.pieces()[0];
        let readout = |b: LevelBound, infinite: f64| -> Result<(f64, bool)> {
            match b {
                LevelBound::NegInf | LevelBound::PosInf => Ok((infinite, false)),
                LevelBound::Val { at, closed } => {
                    if at.is_zero() {
                        return Ok((0.0, closed));
                    }
                    match at.to_finite_f64() {
                        Some(v) => Ok((v, closed)),
                        None => Err(VnmError::Overflow {
                            msg: format!("level {n} bound escapes the f64 range"),
                            largest_feasible: None,
                        }),
                    }
                }
            }
        };
        let (lo, lo_closed) = readout(p.lo, f64::NEG_INFINITY)?;
        let (hi, hi_closed) = readout(p.hi, f64::INFINITY)?;
        if lo >= hi {
            // singleton level: only one lottery is supported there, nothing
            // to falsify, so callers skip it like an empty level
            return Ok(None);
        }
        Ok(Some(OutcomeSpace::new(lo, hi, lo_closed, hi_closed)?))
    }
}

/// Which structural condition failed first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExhaustionCondition {
    Closedness,
    Nesting,
    Coverage,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExhaustionReport {
    pub passed: bool,
    pub failure: Option<ExhaustionCondition>,
    pub detail: String,
}

impl ExhaustionReport {
    fn failed(condition: ExhaustionCondition, detail: String) -> Self {
        ExhaustionReport {
            passed: false,
            failure: Some(condition),
            detail,
        }
    }
}

/// Preimage of a band `[lo_t, hi_t]` (or the open band) under a strictly
/// monotone continuous utility, clipped to the space.
fn preimage_band(
    u: &UtilityFunction,
    dir: i8,
    lo_t: f64,
    hi_t: f64,
    closed: bool,
    space: &OutcomeSpace,
) -> Result<LevelSet> {
    let range = u.range_bounds();
    // band entirely below or above the value range: empty level
    let below_all = hi_t < range.inf
        || (hi_t == range.inf && !(closed && range.inf_attained));
    let above_all = lo_t > range.sup
        || (lo_t == range.sup && !(closed && range.sup_attained));
    if below_all || above_all {
        return Ok(LevelSet::empty());
    }

    // preimage endpoints in value order, then swapped for decreasing u
    let lo_bound = if lo_t <= range.inf {
        None // runs to the domain edge
    } else {
        Some(LevelBound::Val {
            at: u.invert(lo_t)?,
            closed,
        })
    };
    let hi_bound = if hi_t >= range.sup {
        None
    } else {
        Some(LevelBound::Val {
            at: u.invert(hi_t)?,
            closed,
        })
    };

    let space_lo = match ExtReal::from_f64(space.lower()) {
        Some(at) => LevelBound::Val {
            at,
            closed: space.lower_closed(),
        },
        None => LevelBound::NegInf,
    };
    let space_hi = match ExtReal::from_f64(space.upper()) {
        Some(at) => LevelBound::Val {
            at,
            closed: space.upper_closed(),
        },
        None => LevelBound::PosInf,
    };

    let (lo, hi) = if dir > 0 {
        (
            lo_bound.unwrap_or(space_lo),
            hi_bound.unwrap_or(space_hi),
        )
    } else {
        // decreasing: the preimage of a high value sits at low coordinates
        (
            hi_bound.unwrap_or(space_lo),
            lo_bound.unwrap_or(space_hi),
        )
    };
    Ok(LevelSet::from_pieces(vec![IntervalPiece { lo, hi }]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lottery::ratio;

    fn out(v: f64) -> Outcome {
        Outcome::new(v).unwrap()
    }

    fn probes_log(n: usize, lo: f64, hi: f64) -> Vec<Outcome> {
        (0..n)
            .map(|i| out((lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()))
            .collect()
    }

    #[test]
    fn log_bands_are_symmetric_exponential_intervals() {
        let ex = Exhaustion::utility_bands(&UtilityFunction::log(), 5).unwrap();
        // oracle: invert log on [-n, n] gives [e^-n, e^n]
        for n in 1..=5usize {
            let level = ex.level(n);
            assert!(level.contains(&out((-(n as f64)).exp() + 1e-12)));
            assert!(level.contains(&out((n as f64).exp() - 1e-6)));
            assert!(!level.contains(&out((n as f64 + 0.1).exp())));
            assert!(!level.contains(&out((-(n as f64) - 0.1).exp())));
        }
    }

    #[test]
    fn linear_bands_are_plain_intervals() {
        let ex = Exhaustion::utility_bands(&UtilityFunction::linear(), 3).unwrap();
        assert!(ex.level(2).contains(&out(-2.0)));
        assert!(ex.level(2).contains(&out(2.0)));
        assert!(!ex.level(2).contains(&out(2.5)));
    }

    #[test]
    fn bounded_utility_saturates_to_the_whole_space() {
        let ex = Exhaustion::utility_bands(&UtilityFunction::logistic(), 2).unwrap();
        // range ]0,1[ sits inside [-1, 1]
        let whole = LevelSet::whole(&OutcomeSpace::real_line());
        assert_eq!(ex.level(1), &whole);
        // and the preimage of [0,0] misses the open range entirely
        assert!(ex.level(0).is_empty_set());
    }

    #[test]
    fn log_exhaustion_verifies_on_probe_grid() {
        let ex = Exhaustion::utility_bands(&UtilityFunction::log(), 10).unwrap();
        let probes = probes_log(10_000, -9.0, 9.0);
        let rep = ex.verify(&OutcomeSpace::positive_half_line(), &probes);
        assert!(rep.passed, "{}", rep.detail);
    }

    #[test]
    fn trivial_exhaustion_passes_as_clopen() {
        let space = OutcomeSpace::positive_half_line();
        let ex = Exhaustion::trivial(space, 3).unwrap();
        let probes = probes_log(100, -3.0, 3.0);
        let rep = ex.verify(&space, &probes);
        assert!(rep.passed, "{}", rep.detail);
    }

    #[test]
    fn nesting_violation_is_witnessed() {
        // X_0 = X_1 = [0, 1] but the stored interior of level 0 is ]0, 1[,
        // which does not contain the closed level
        let space = OutcomeSpace::real_line();
        let closed = LevelSet::from_pieces(vec![IntervalPiece {
            lo: LevelBound::Val {
                at: ExtReal::from_f64(0.0).unwrap(),
                closed: true,
            },
            hi: LevelBound::Val {
                at: ExtReal::from_f64(1.0).unwrap(),
                closed: true,
            },
        }]);
        let open = LevelSet::from_pieces(vec![IntervalPiece {
            lo: LevelBound::Val {
                at: ExtReal::from_f64(0.0).unwrap(),
                closed: false,
            },
            hi: LevelBound::Val {
                at: ExtReal::from_f64(1.0).unwrap(),
                closed: false,
            },
        }]);
        let ex = Exhaustion::from_levels(
            space,
            vec![closed.clone(), closed.clone()],
            vec![open.clone(), open],
        )
        .unwrap();
        let rep = ex.verify(&space, &[out(0.5)]);
        assert!(!rep.passed);
        assert_eq!(rep.failure, Some(ExhaustionCondition::Nesting));
    }

    #[test]
    fn half_open_level_is_closed_relative_to_the_half_line() {
        // ]0, 1] is closed inside ]0, +inf[ because 0 is not in the space
        let space = OutcomeSpace::positive_half_line();
        let set = LevelSet::from_pieces(vec![IntervalPiece {
            lo: LevelBound::Val {
                at: ExtReal::from_f64(0.0).unwrap(),
                closed: false,
            },
            hi: LevelBound::Val {
                at: ExtReal::from_f64(1.0).unwrap(),
                closed: true,
            },
        }]);
        assert!(set.closed_in(&space).ok());
        assert!(!set.closed_in(&OutcomeSpace::real_line()).ok());
    }

    #[test]
    fn cover_index_matches_interval_arithmetic() {
        let ex = Exhaustion::utility_bands(&UtilityFunction::log(), 10).unwrap();
        // oracle: log-range [0, 2.5] needs 2.5 < n + 1/2, least n = 3
        let p = SimpleLottery::from_atoms([
            (out(1.0), ratio(1, 2)),
            (out((2.5f64).exp()), ratio(1, 2)),
        ])
        .unwrap();
        assert_eq!(ex.cover_index(&p).unwrap(), 3);
        // log 1 = 0 sits inside ]-1/2, 1/2[
        assert_eq!(ex.cover_index(&SimpleLottery::dirac(out(1.0))).unwrap(), 0);
    }

    #[test]
    fn cover_index_of_a_density_carrier() {
        let ex = Exhaustion::utility_bands(&UtilityFunction::log(), 10).unwrap();
        let space = OutcomeSpace::positive_half_line();
        // log-range [0, 1] sits inside ]-3/2, 3/2[, least n = 1
        let m = DensityMeasure::uniform(&space, 1.0, std::f64::consts::E).unwrap();
        assert_eq!(ex.cover_index_density(&m).unwrap(), 1);
    }

    #[test]
    fn cover_index_budget_error_names_the_escapee() {
        let ex = Exhaustion::utility_bands(&UtilityFunction::log(), 2).unwrap();
        let far = out((5.0f64).exp());
        let err = ex.cover_index(&SimpleLottery::dirac(far)).unwrap_err();
        assert!(matches!(err, VnmError::Budget(_)), "{err:?}");
    }

    #[test]
    fn level_as_space_round_trips_for_log() {
        let ex = Exhaustion::utility_bands(&UtilityFunction::log(), 4).unwrap();
        let s = ex.level_as_space(2).unwrap().unwrap();
        assert!(s.contains_value((-2.0f64).exp()));
        assert!(s.contains_value((2.0f64).exp()));
        assert!(!s.contains_value((2.2f64).exp()));
    }
}
