//! Seeded random lotteries and convergent-sequence generators for the
//! falsifiers. Determinism contract: every trial derives its own stream from
//! `(seed, trial index)`, so reports are identical regardless of schedule.

use num::{BigInt, BigRational, One};
#[cfg(test)]
use num::Zero;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::lottery::SimpleLottery;
use crate::space::{Outcome, OutcomeSpace};
use crate::utility::UtilityFunction;
use crate::weakstar::{escaping_mass_net, semicontinuity_net};

/// Denominator cap for rationalized weights.
pub const WEIGHT_DENOMINATOR: u64 = 1 << 16;

/// Largest random support size.
pub const MAX_SUPPORT: usize = 5;

/// Independent deterministic stream for one trial.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random simple lotteries confined to a desk-scale window of a space.
/// Atoms are log-uniform on positive windows and uniform otherwise; weights
/// come from a flat Dirichlet draw rationalized over a fixed denominator.
#[derive(Clone, Debug)]
pub struct LotterySampler {
    window: (f64, f64),
    log_uniform: bool,
}

impl LotterySampler {
    /// Default window: the space clipped to a desk-scale box, nudged inside
    /// open endpoints.
    pub fn for_space(space: &OutcomeSpace) -> LotterySampler {
        let lo = if space.lower().is_finite() {
            if space.lower_closed() {
                space.lower()
            } else if space.lower() == 0.0 {
                0.05
            } else {
                space.lower() + (space.upper() - space.lower()).min(1.0) * 1e-3
            }
        } else {
            -10.0
        };
        let hi = if space.upper().is_finite() {
            if space.upper_closed() {
                space.upper()
            } else {
                space.upper() - (space.upper() - lo).min(1.0) * 1e-3
            }
        } else if lo > 0.0 {
            20.0
        } else {
            10.0
        };
        let (lo, hi) = if lo < hi { (lo, hi) } else { (lo, lo) };
        LotterySampler {
            window: (lo, hi),
            log_uniform: lo > 0.0,
        }
    }

    /// Clip the window further (used when confining generators to a level).
    pub fn confined(space: &OutcomeSpace, within: &OutcomeSpace) -> LotterySampler {
        let base = Self::for_space(space);
        let inner = Self::for_space(within);
        let lo = base.window.0.max(inner.window.0);
        let hi = base.window.1.min(inner.window.1);
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (lo, lo) };
        LotterySampler {
            window: (lo, hi),
            log_uniform: lo > 0.0,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn sample_outcome(&self, rng: &mut ChaCha8Rng) -> Outcome {
        let (lo, hi) = self.window;
        if lo >= hi {
            return Outcome::new(lo).expect("window endpoint is finite");
        }
        let v = if self.log_uniform {
            let (a, b) = (lo.ln(), hi.ln());
            (a + (b - a) * rng.gen::<f64>()).exp()
        } else {
            lo + (hi - lo) * rng.gen::<f64>()
        };
        Outcome::new(v.clamp(lo, hi)).expect("sampled coordinate is finite")
    }

    pub fn sample_lottery(&self, rng: &mut ChaCha8Rng) -> SimpleLottery {
        let k = rng.gen_range(1..=MAX_SUPPORT);
        let mut outcomes = Vec::with_capacity(k);
        for _ in 0..k {
            outcomes.push(self.sample_outcome(rng));
        }
        outcomes.sort();
        outcomes.dedup();
        let weights = rational_simplex(rng, outcomes.len());
        SimpleLottery::from_atoms(outcomes.into_iter().zip(weights))
            .expect("simplex weights sum to one")
    }

    /// Rational in `[0, 1]`, or `[0, 1[` when the top is excluded.
    pub fn sample_unit_rational(&self, rng: &mut ChaCha8Rng, include_one: bool) -> BigRational {
        let hi = if include_one {
            WEIGHT_DENOMINATOR
        } else {
            WEIGHT_DENOMINATOR - 1
        };
        let k = rng.gen_range(0..=hi);
        BigRational::new(BigInt::from(k), BigInt::from(WEIGHT_DENOMINATOR))
    }
}

/// Flat Dirichlet draw rationalized to exact weights summing to one.
fn rational_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<BigRational> {
    if k == 1 {
        return vec![BigRational::one()];
    }
    let raw: Vec<f64> = (0..k)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let mut ints: Vec<i64> = raw
        .iter()
        .map(|w| ((w / total) * WEIGHT_DENOMINATOR as f64).round() as i64)
        .map(|n| n.max(1))
        .collect();
    let drift: i64 = WEIGHT_DENOMINATOR as i64 - ints.iter().sum::<i64>();
    let argmax = (0..k).max_by_key(|&i| ints[i]).expect("k >= 1");
    ints[argmax] += drift;
    debug_assert!(ints[argmax] > 0);
    ints.into_iter()
        .map(|n| BigRational::new(BigInt::from(n), BigInt::from(WEIGHT_DENOMINATOR)))
        .collect()
}

/// A candidate closedness witness: paired sequences with their limits.
#[derive(Clone, Debug)]
pub struct SequencePair {
    pub kind: &'static str,
    pub ps: Vec<SimpleLottery>,
    pub qs: Vec<SimpleLottery>,
    pub limit_p: SimpleLottery,
    pub limit_q: SimpleLottery,
}

/// Replace one atom of `base` by a drifting copy `x + c/k`, clamped to the
/// window so rounding can never push it out of scope.
fn drift_lottery(
    base: &SimpleLottery,
    target: Outcome,
    c: f64,
    k: u64,
    window: (f64, f64),
) -> SimpleLottery {
    let shifted = (target.value() + c / k as f64).clamp(window.0, window.1);
    let moved = Outcome::new(shifted).unwrap_or(target);
    let pairs = base.atoms().iter().map(|(x, w)| {
        if *x == target {
            (moved, w.clone())
        } else {
            (*x, w.clone())
        }
    });
    SimpleLottery::from_atoms(pairs).expect("drift preserves total mass")
}

/// Signed drift rate that keeps `target + rate` inside the window.
fn safe_rate(window: (f64, f64), target: f64, magnitude: f64) -> f64 {
    let up = (window.1 - target).max(0.0) / 2.0;
    let down = (target - window.0).max(0.0) / 2.0;
    if up >= magnitude {
        magnitude
    } else if down >= magnitude {
        -magnitude
    } else if up >= down {
        up
    } else {
        -down
    }
}

/// Atom drift `x + c/k` toward the limit lottery's atom, sampled along the
/// geometric subsequence `k = 2^j` so the final prefix elements sit at
/// roundoff distance from the limit. A premise that survives the whole
/// prefix then genuinely pins the limit verdict.
pub fn atom_drift_pair(
    sampler: &LotterySampler,
    rng: &mut ChaCha8Rng,
    len: u32,
) -> SequencePair {
    let limit_p = sampler.sample_lottery(rng);
    let limit_q = sampler.sample_lottery(rng);
    let support = limit_p.support();
    let target = support[rng.gen_range(0..support.len())];
    let magnitude = 0.05 + 0.35 * rng.gen::<f64>();
    let c = safe_rate(sampler.window(), target.value(), magnitude);
    let drift_q = rng.gen_bool(0.5);
    let q_support = limit_q.support();
    let q_target = q_support[rng.gen_range(0..q_support.len())];
    let qc = safe_rate(sampler.window(), q_target.value(), magnitude / 2.0);
    let len = len.min(52);
    let ps = (0..len)
        .map(|j| drift_lottery(&limit_p, target, c, 1u64 << j, sampler.window()))
        .collect();
    let qs = (0..len)
        .map(|j| {
            if drift_q {
                drift_lottery(&limit_q, q_target, qc, 1u64 << j, sampler.window())
            } else {
                limit_q.clone()
            }
        })
        .collect();
    SequencePair {
        kind: "atom_drift",
        ps,
        qs,
        limit_p,
        limit_q,
    }
}

/// Mass migration `(1 - 2^-k) P + 2^-k S` back to `P`.
pub fn weight_drift_pair(
    sampler: &LotterySampler,
    rng: &mut ChaCha8Rng,
    len: u32,
) -> SequencePair {
    let limit_p = sampler.sample_lottery(rng);
    let limit_q = sampler.sample_lottery(rng);
    let stray = sampler.sample_lottery(rng);
    let ps = (1..=len)
        .map(|k| {
            let w = BigRational::new(BigInt::one(), BigInt::from(2).pow(k));
            SimpleLottery::mix(&w, &stray, &limit_p).expect("unit weight")
        })
        .collect();
    let qs = (1..=len).map(|_| limit_q.clone()).collect();
    SequencePair {
        kind: "weight_drift",
        ps,
        qs,
        limit_p,
        limit_q,
    }
}

/// Escaping-mass candidate for oracles backed by an unbounded utility:
/// the net elements stay strictly above the reference point mass while the
/// sequence collapses onto the anchor.
pub fn escaping_mass_pair(
    u: &UtilityFunction,
    sampler: &LotterySampler,
    rng: &mut ChaCha8Rng,
    len: u32,
) -> Result<Option<SequencePair>> {
    if u.bounded_above() {
        return Ok(None);
    }
    // pick an ordered pair from the window
    let mut x_star = sampler.sample_outcome(rng);
    let mut x0 = sampler.sample_outcome(rng);
    for _ in 0..16 {
        if u.eval(&x0)? > u.eval(&x_star)? {
            break;
        }
        x_star = sampler.sample_outcome(rng);
        x0 = sampler.sample_outcome(rng);
    }
    if !(u.eval(&x0)? > u.eval(&x_star)?) {
        return Ok(None);
    }
    let mut ps = Vec::with_capacity(len as usize);
    for n in 0..len {
        match escaping_mass_net(u, x_star, x0, n) {
            Ok(p) => ps.push(p),
            Err(_) => return Ok(None),
        }
    }
    let q = SimpleLottery::dirac(x0);
    let qs = vec![q.clone(); ps.len()];
    Ok(Some(SequencePair {
        kind: "escaping_mass",
        ps,
        qs,
        limit_p: SimpleLottery::dirac(x_star),
        limit_q: q,
    }))
}

/// Jump-approach candidate for oracles backed by a utility with a declared
/// jump: point masses descending onto the jump against the fixed blend.
pub fn jump_approach_pair(u: &UtilityFunction, len: u32) -> Result<Option<SequencePair>> {
    let jump = match u.jump() {
        Some(j) => j,
        None => return Ok(None),
    };
    let eps = 0.5 * (jump.limit_above - jump.value_at);
    let net = match semicontinuity_net(u, eps, len) {
        Ok(n) => n,
        Err(_) => return Ok(None),
    };
    let ps: Vec<SimpleLottery> = net.points.iter().map(|x| SimpleLottery::dirac(*x)).collect();
    let qs = vec![net.blend.clone(); ps.len()];
    Ok(Some(SequencePair {
        kind: "jump_approach",
        ps,
        qs,
        limit_p: SimpleLottery::dirac(net.jump_at),
        limit_q: net.blend,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::ToPrimitive;

    #[test]
    fn sampler_respects_the_window() {
        let space = OutcomeSpace::positive_half_line();
        let sampler = LotterySampler::for_space(&space);
        let mut rng = trial_rng(7, 0);
        for _ in 0..200 {
            let p = sampler.sample_lottery(&mut rng);
            let total: BigRational = p.atoms().values().cloned().sum();
            assert!(total.is_one());
            for x in p.support() {
                assert!(space.contains(&x), "atom {x} escaped");
                let v = x.value();
                assert!(v >= sampler.window().0 && v <= sampler.window().1);
            }
        }
    }

    #[test]
    fn samples_are_reproducible_per_stream() {
        let sampler = LotterySampler::for_space(&OutcomeSpace::real_line());
        let a = sampler.sample_lottery(&mut trial_rng(42, 3));
        let b = sampler.sample_lottery(&mut trial_rng(42, 3));
        let c = sampler.sample_lottery(&mut trial_rng(42, 4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rational_weights_use_the_fixed_denominator() {
        let sampler = LotterySampler::for_space(&OutcomeSpace::real_line());
        let mut rng = trial_rng(1, 1);
        let t = sampler.sample_unit_rational(&mut rng, false);
        assert!(t >= BigRational::zero() && t < BigRational::one());
        let denom = t.denom().to_u64().unwrap();
        assert!(WEIGHT_DENOMINATOR % denom == 0);
    }

    #[test]
    fn drift_pairs_converge_by_construction() {
        use crate::weakstar::{converges, TestFunctionFamily};
        let space = OutcomeSpace::real_line();
        let sampler = LotterySampler::for_space(&space);
        let fam = TestFunctionFamily::default_for(&space);
        let mut rng = trial_rng(11, 5);
        let pair = atom_drift_pair(&sampler, &mut rng, 48);
        let rep = converges(&pair.ps, &pair.limit_p, &fam, 1e-2, 5).unwrap();
        assert!(rep.converged, "atom drift tail scores: {:?}", &rep.scores[43..]);
        let pair = weight_drift_pair(&sampler, &mut rng, 48);
        let rep = converges(&pair.ps, &pair.limit_p, &fam, 1e-2, 5).unwrap();
        assert!(rep.converged);
    }

    #[test]
    fn escaping_pair_needs_unbounded_utility() {
        let sampler = LotterySampler::for_space(&OutcomeSpace::real_line());
        let mut rng = trial_rng(2, 0);
        let p = escaping_mass_pair(&UtilityFunction::logistic(), &sampler, &mut rng, 10).unwrap();
        assert!(p.is_none());
        let sampler = LotterySampler::for_space(&OutcomeSpace::positive_half_line());
        let p = escaping_mass_pair(&UtilityFunction::log(), &sampler, &mut rng, 10)
            .unwrap()
            .expect("log is unbounded");
        assert_eq!(p.ps.len(), 10);
    }
}
