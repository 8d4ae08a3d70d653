//! Desk-scale surrogate for the weak* topology: a finite family of bounded
//! Lipschitz test functions, a pseudometric built from it, convergence
//! scoring for lottery sequences, and the counterexample net constructions.
//!
//! A finite family can only witness divergence, never verify convergence in
//! full; every report carries the family resolution that produced it.

use num::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VnmError};
use crate::lottery::{Measure, SimpleLottery};
use crate::real::ExtReal;
use crate::space::{Outcome, OutcomeSpace};
use crate::utility::UtilityFunction;

/// One bounded Lipschitz test function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TestFunction {
    /// Tent `max(0, height - slope * |x - center|)`.
    Bump { center: f64, slope: f64, height: f64 },
    /// `clamp(slope * (x - center), -bound, bound)`.
    ClippedLinear { center: f64, slope: f64, bound: f64 },
    Constant { value: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: &Outcome) -> f64 {
        // saturating readout: atoms beyond the f64 range land on the flat
        // tails of every member, so the values below stay correct
        let v = x.value();
        match *self {
            TestFunction::Bump {
                center,
                slope,
                height,
            } => (height - slope * (v - center).abs()).max(0.0),
            TestFunction::ClippedLinear {
                center,
                slope,
                bound,
            } => (slope * (v - center)).clamp(-bound, bound),
            TestFunction::Constant { value } => value,
        }
    }
}

/// A finite family of bounded `L`-Lipschitz test functions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    members: Vec<TestFunction>,
    bound: f64,
    lipschitz: f64,
    pitch: f64,
    window: (f64, f64),
}

impl TestFunctionFamily {
    /// Bump functions on a center grid of the given pitch, plus clipped-linear
    /// members and a constant.
    pub fn with_resolution(
        window: (f64, f64),
        pitch: f64,
        lipschitz: f64,
        bound: f64,
    ) -> Result<Self> {
        let (lo, hi) = window;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(VnmError::Domain(format!(
                "family window [{lo}, {hi}] must be a bounded interval"
            )));
        }
        if !(pitch > 0.0 && lipschitz > 0.0 && bound > 0.0) {
            return Err(VnmError::Domain(
                "family resolution parameters must be positive".into(),
            ));
        }
        let mut members = Vec::new();
        let height = bound.min(lipschitz * (hi - lo));
        let mut c = lo;
        while c <= hi + 1e-12 {
            members.push(TestFunction::Bump {
                center: c,
                slope: lipschitz,
                height,
            });
            c += pitch;
        }
        let mid = 0.5 * (lo + hi);
        for center in [lo, mid, hi] {
            members.push(TestFunction::ClippedLinear {
                center,
                slope: lipschitz,
                bound,
            });
        }
        members.push(TestFunction::Constant { value: bound });
        Ok(TestFunctionFamily {
            members,
            bound,
            lipschitz,
            pitch,
            window,
        })
    }

    /// Default family: Lipschitz constant 1, bound 1, pitch 1/2, window from
    /// the space clipped to a desk-scale box.
    pub fn default_for(space: &OutcomeSpace) -> Self {
        let lo = if space.lower().is_finite() {
            space.lower()
        } else {
            -24.0
        };
        let hi = if space.upper().is_finite() {
            space.upper()
        } else {
            24.0
        };
        let (lo, hi) = if lo < hi { (lo, hi) } else { (lo, lo + 1.0) };
        Self::with_resolution((lo, hi), 0.5, 1.0, 1.0).expect("default resolution is valid")
    }

    /// Same window and constants at a finer pitch.
    pub fn refined(&self, factor: u32) -> Result<Self> {
        Self::with_resolution(
            self.window,
            self.pitch / factor.max(1) as f64,
            self.lipschitz,
            self.bound,
        )
    }

    pub fn members(&self) -> &[TestFunction] {
        &self.members
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// Resolution record attached to reports.
    pub fn resolution(&self) -> FamilyResolution {
        FamilyResolution {
            members: self.members.len(),
            bound: self.bound,
            lipschitz: self.lipschitz,
            pitch: self.pitch,
            window: self.window,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FamilyResolution {
    pub members: usize,
    pub bound: f64,
    pub lipschitz: f64,
    pub pitch: f64,
    pub window: (f64, f64),
}

/// Bounded-Lipschitz discrepancy: `max_v |E_P[v] - E_Q[v]|` over the family.
/// A pseudometric; it can understate but never overstate weak* distance
/// relative to the family's resolution.
pub fn dudley_distance<P: Measure, Q: Measure>(p: &P, q: &Q, family: &TestFunctionFamily) -> f64 {
    family
        .members
        .iter()
        .map(|v| (p.expect_map(|x| v.eval(x)) - q.expect_map(|x| v.eval(x))).abs())
        .fold(0.0, f64::max)
}

/// Per-index convergence scores of a lottery sequence against its limit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub scores: Vec<f64>,
    pub converged: bool,
    pub eps: f64,
    pub tail: usize,
    pub resolution: FamilyResolution,
}

/// Score every prefix element; converged iff the last `tail` scores are
/// all below `eps`.
pub fn converges(
    seq: &[SimpleLottery],
    limit: &SimpleLottery,
    family: &TestFunctionFamily,
    eps: f64,
    tail: usize,
) -> Result<ConvergenceReport> {
    if tail == 0 || seq.len() < tail {
        return Err(VnmError::Domain(format!(
            "sequence prefix of length {} cannot be judged on a tail of {tail}",
            seq.len()
        )));
    }
    let scores: Vec<f64> = seq
        .iter()
        .map(|p| dudley_distance(p, limit, family))
        .collect();
    let converged = scores[scores.len() - tail..].iter().all(|s| *s < eps);
    Ok(ConvergenceReport {
        scores,
        converged,
        eps,
        tail,
        resolution: family.resolution(),
    })
}

/// Element `n` of the escaping-mass net for an unbounded utility:
/// weight `1 - 2^-n` on the reference atom and `2^-n` on an atom whose
/// utility exceeds the level-n threshold, so the expected utility stays
/// above `u(x0)` while the net collapses onto the reference atom.
pub fn escaping_mass_net(
    u: &UtilityFunction,
    x_star: Outcome,
    x0: Outcome,
    n: u32,
) -> Result<SimpleLottery> {
    if u.bounded_above() {
        return Err(VnmError::Inapplicable(format!(
            "{} is bounded above on {}; the escaping-mass net needs an unbounded utility",
            u.label(),
            u.domain()
        )));
    }
    let u_star = u.eval(&x_star)?;
    let u0 = u.eval(&x0)?;
    let gap = u0 - u_star;
    if !(gap > 0.0) {
        return Err(VnmError::Domain(format!(
            "need u(x0) > u(x*): got {u0} vs {u_star}"
        )));
    }
    if n > 1022 {
        return Err(VnmError::Overflow {
            msg: format!("level {n} exceeds the representable weight range"),
            largest_feasible: Some(1022),
        });
    }
    let target = u_star + (2f64.powi(n as i32) + 1.0) * gap;
    let xn = match u.invert(target) {
        Ok(x) => Outcome::from_ext(x),
        Err(VnmError::Overflow { .. }) => {
            // report the largest level that still inverts
            let mut feasible = None;
            for m in (0..n).rev() {
                let t = u_star + (2f64.powi(m as i32) + 1.0) * gap;
                if u.invert(t).is_ok() {
                    feasible = Some(m);
                    break;
                }
            }
            return Err(VnmError::Overflow {
                msg: format!("level {n} target {target} escapes the coordinate range"),
                largest_feasible: feasible,
            });
        }
        Err(e) => return Err(e),
    };
    if !u.domain().contains(&xn) {
        return Err(VnmError::Domain(format!(
            "inverted atom {xn} escapes the utility domain {}",
            u.domain()
        )));
    }
    let half_pow = BigRational::new(1.into(), num::BigInt::from(2).pow(n));
    let escaped = SimpleLottery::dirac(xn);
    let anchored = SimpleLottery::dirac(x_star);
    SimpleLottery::mix(&half_pow, &escaped, &anchored)
}

/// The approach sequence and blend witnessing an upper-semicontinuity failure.
#[derive(Clone, Debug)]
pub struct JumpNet {
    /// The jump point.
    pub jump_at: Outcome,
    /// Outcomes descending to the jump point from above.
    pub points: Vec<Outcome>,
    /// Blend strictly between the jump value and the approached value.
    pub blend: SimpleLottery,
    /// Blend weight on the approached side.
    pub t: BigRational,
    pub eps: f64,
}

/// Build the semicontinuity net at a utility's declared jump: points
/// `x_k -> x` from above with `u(x_k) > u(x) + eps`, and a blend `P` with
/// `u(x) < E_P[u] < u(x) + eps`.
pub fn semicontinuity_net(u: &UtilityFunction, eps: f64, steps: u32) -> Result<JumpNet> {
    let jump = u
        .jump()
        .ok_or_else(|| VnmError::Inapplicable(format!("{} has no declared jump", u.label())))?;
    if !(eps > 0.0) {
        return Err(VnmError::Domain("eps must be positive".into()));
    }
    let height = jump.limit_above - jump.value_at;
    if eps >= height {
        return Err(VnmError::Domain(format!(
            "eps {eps} is not below the jump height {height}"
        )));
    }
    if steps == 0 {
        return Err(VnmError::Domain("need at least one approach point".into()));
    }
    let jump_at = u.domain().outcome(jump.at)?;
    let mut points = Vec::with_capacity(steps as usize);
    for k in 1..=steps {
        let x = jump.at + 1.0 / k as f64;
        let x = u.domain().outcome(x)?;
        points.push(x);
    }
    // t solves value_at + t * height = value_at + eps/2
    let t_real = 0.5 * eps / height;
    let t = BigRational::from_float(t_real)
        .ok_or_else(|| VnmError::Domain("blend weight must be finite".into()))?;
    let blend = SimpleLottery::mix(
        &t,
        &SimpleLottery::dirac(points[0]),
        &SimpleLottery::dirac(jump_at),
    )?;
    Ok(JumpNet {
        jump_at,
        points,
        blend,
        t,
        eps,
    })
}

/// Largest net level whose escaped atom still inverts, found by direct trial.
pub fn escaping_mass_feasible_levels(
    u: &UtilityFunction,
    x_star: Outcome,
    x0: Outcome,
    n_max: u32,
) -> Result<u32> {
    let mut last = None;
    for n in 0..=n_max {
        match escaping_mass_net(u, x_star, x0, n) {
            Ok(_) => last = Some(n),
            Err(VnmError::Overflow { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    last.ok_or_else(|| VnmError::Overflow {
        msg: "no net level is representable".into(),
        largest_feasible: None,
    })
}

/// exp(t) as an outcome coordinate, usable far beyond the f64 range.
pub fn exp_outcome(t: f64) -> Result<Outcome> {
    Ok(Outcome::from_ext(ExtReal::exp(t)?))
}
