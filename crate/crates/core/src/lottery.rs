//! Simple lotteries (finite-support measures with exact rational weights) and
//! compact-support density measures with midpoint-rule quadrature.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigRational, One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, VnmError};
use crate::space::{Outcome, OutcomeSpace};

/// Default node count for composite midpoint quadrature.
pub const DEFAULT_QUADRATURE_NODES: u32 = 4096;

/// Anything with a well-defined expectation of a pointwise function.
pub trait Measure {
    fn expect_map<F: FnMut(&Outcome) -> f64>(&self, f: F) -> f64;
}

/// A finite-support probability measure. Atom weights are strictly positive
/// exact rationals summing to exactly one; the atom set is the support.
#[derive(Clone, PartialEq, Eq)]
pub struct SimpleLottery {
    atoms: BTreeMap<Outcome, BigRational>,
}

impl SimpleLottery {
    /// Point mass at `x`.
    pub fn dirac(x: Outcome) -> SimpleLottery {
        let mut atoms = BTreeMap::new();
        atoms.insert(x, BigRational::one());
        SimpleLottery { atoms }
    }

    /// Build from (outcome, weight) pairs. Duplicate outcomes merge by
    /// weight addition; zero weights are dropped; the total must be exactly 1.
    pub fn from_atoms<I>(pairs: I) -> Result<SimpleLottery>
    where
        I: IntoIterator<Item = (Outcome, BigRational)>,
    {
        let mut atoms: BTreeMap<Outcome, BigRational> = BTreeMap::new();
        for (x, w) in pairs {
            if w.is_negative() {
                return Err(VnmError::Validation(format!("negative atom weight {w}")));
            }
            if w.is_zero() {
                continue;
            }
            *atoms.entry(x).or_insert_with(BigRational::zero) += w;
        }
        let total: BigRational = atoms.values().cloned().sum();
        if !total.is_one() {
            return Err(VnmError::Validation(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        Ok(SimpleLottery { atoms })
    }

    /// Convex combination `t*P + (1-t)*Q` with exact rational arithmetic.
    /// Zero-weight atoms are removed, so `mix(1, P, Q) == P` exactly.
    pub fn mix(t: &BigRational, p: &SimpleLottery, q: &SimpleLottery) -> Result<SimpleLottery> {
        if t.is_negative() || t > &BigRational::one() {
            return Err(VnmError::Domain(format!("mixture weight {t} outside [0, 1]")));
        }
        let s = BigRational::one() - t;
        let mut atoms: BTreeMap<Outcome, BigRational> = BTreeMap::new();
        if !t.is_zero() {
            for (x, w) in &p.atoms {
                *atoms.entry(*x).or_insert_with(BigRational::zero) += t * w;
            }
        }
        if !s.is_zero() {
            for (x, w) in &q.atoms {
                *atoms.entry(*x).or_insert_with(BigRational::zero) += &s * w;
            }
        }
        atoms.retain(|_, w| !w.is_zero());
        Ok(SimpleLottery { atoms })
    }

    /// The support: exactly the atom set, in increasing coordinate order.
    pub fn support(&self) -> Vec<Outcome> {
        self.atoms.keys().copied().collect()
    }

    pub fn atoms(&self) -> &BTreeMap<Outcome, BigRational> {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight(&self, x: &Outcome) -> BigRational {
        self.atoms.get(x).cloned().unwrap_or_else(BigRational::zero)
    }

    /// True when every atom lies in `space`.
    pub fn supported_in(&self, space: &OutcomeSpace) -> bool {
        self.atoms.keys().all(|x| space.contains(x))
    }

    /// First atom outside `space`, if any.
    pub fn escaping_atom(&self, space: &OutcomeSpace) -> Option<Outcome> {
        self.atoms.keys().find(|x| !space.contains(x)).copied()
    }
}

impl Measure for SimpleLottery {
    fn expect_map<F: FnMut(&Outcome) -> f64>(&self, mut f: F) -> f64 {
        self.atoms
            .iter()
            .map(|(x, w)| w.to_f64().unwrap_or(f64::NAN) * f(x))
            .sum()
    }
}

impl fmt::Debug for SimpleLottery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (x, w)) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}: {w}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct AtomRecord {
    x: Outcome,
    p: String,
}

#[derive(Serialize, Deserialize)]
struct LotteryRecord {
    atoms: Vec<AtomRecord>,
}

impl Serialize for SimpleLottery {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rec = LotteryRecord {
            atoms: self
                .atoms
                .iter()
                .map(|(x, w)| AtomRecord {
                    x: *x,
                    p: w.to_string(),
                })
                .collect(),
        };
        rec.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SimpleLottery {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = LotteryRecord::deserialize(deserializer)?;
        let mut pairs = Vec::with_capacity(rec.atoms.len());
        for atom in rec.atoms {
            let w: BigRational = atom
                .p
                .parse()
                .map_err(|_| D::Error::custom(format!("bad rational weight {:?}", atom.p)))?;
            pairs.push((atom.x, w));
        }
        SimpleLottery::from_atoms(pairs).map_err(D::Error::custom)
    }
}

/// Density catalog for compact-support measures on an interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    /// Constant density `1 / (b - a)`.
    Uniform,
    /// Increasing ramp `2 (x - a) / (b - a)^2`.
    Triangular,
}

impl DensityKind {
    pub fn name(&self) -> &'static str {
        match self {
            DensityKind::Uniform => "uniform",
            DensityKind::Triangular => "triangular",
        }
    }
}

/// A probability measure on a compact interval `[a, b]` given by a density,
/// evaluated by composite midpoint quadrature with a fixed node count.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMeasure {
    carrier: (f64, f64),
    kind: DensityKind,
    nodes: u32,
}

impl DensityMeasure {
    pub fn new(space: &OutcomeSpace, a: f64, b: f64, kind: DensityKind, nodes: u32) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(VnmError::Validation(format!(
                "carrier [{a}, {b}] is not a bounded interval"
            )));
        }
        if !(space.contains_value(a) && space.contains_value(b)) {
            return Err(VnmError::Validation(format!(
                "carrier [{a}, {b}] is not contained in the outcome space {space}"
            )));
        }
        if nodes == 0 {
            return Err(VnmError::Validation("quadrature needs at least one node".into()));
        }
        let m = DensityMeasure {
            carrier: (a, b),
            kind,
            nodes,
        };
        let mass = m.quadrature(|_| 1.0);
        if (mass - 1.0).abs() > 1e-10 {
            return Err(VnmError::Validation(format!(
                "density mass {mass} differs from 1 by more than 1e-10"
            )));
        }
        Ok(m)
    }

    pub fn uniform(space: &OutcomeSpace, a: f64, b: f64) -> Result<Self> {
        Self::new(space, a, b, DensityKind::Uniform, DEFAULT_QUADRATURE_NODES)
    }

    pub fn triangular(space: &OutcomeSpace, a: f64, b: f64) -> Result<Self> {
        Self::new(space, a, b, DensityKind::Triangular, DEFAULT_QUADRATURE_NODES)
    }

    pub fn carrier(&self) -> (f64, f64) {
        self.carrier
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn nodes(&self) -> u32 {
        self.nodes
    }

    pub fn density_at(&self, x: f64) -> f64 {
        let (a, b) = self.carrier;
        if x < a || x > b {
            return 0.0;
        }
        match self.kind {
            DensityKind::Uniform => 1.0 / (b - a),
            DensityKind::Triangular => 2.0 * (x - a) / ((b - a) * (b - a)),
        }
    }

    /// Composite midpoint quadrature of `f * density` over the carrier.
    pub fn quadrature<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let (a, b) = self.carrier;
        let n = self.nodes as usize;
        let h = (b - a) / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let x = a + (i as f64 + 0.5) * h;
            sum += f(x) * self.density_at(x);
        }
        sum * h
    }

    /// Quadrature-cell discretization onto `k` midpoint nodes, renormalized to
    /// exact rational weights summing to one.
    pub fn discretize(&self, k: u32) -> Result<SimpleLottery> {
        if k == 0 {
            return Err(VnmError::Domain("discretization needs at least one node".into()));
        }
        let (a, b) = self.carrier;
        let h = (b - a) / k as f64;
        let mut cells: Vec<(Outcome, BigRational)> = Vec::with_capacity(k as usize);
        let mut total = BigRational::zero();
        for i in 0..k {
            let x = a + (i as f64 + 0.5) * h;
            let d = self.density_at(x);
            if d < 0.0 {
                return Err(VnmError::Validation(format!(
                    "negative density {d} at node {x}"
                )));
            }
            if d == 0.0 {
                continue;
            }
            let w = BigRational::from_float(d)
                .ok_or_else(|| VnmError::Validation(format!("non-finite density at node {x}")))?;
            total += &w;
            cells.push((Outcome::new(x)?, w));
        }
        if total.is_zero() {
            return Err(VnmError::Validation(
                "density vanishes at every discretization node".into(),
            ));
        }
        SimpleLottery::from_atoms(cells.into_iter().map(|(x, w)| (x, w / &total)))
    }
}

impl Measure for DensityMeasure {
    fn expect_map<F: FnMut(&Outcome) -> f64>(&self, mut f: F) -> f64 {
        self.quadrature(|x| f(&Outcome::new(x).expect("quadrature node is finite")))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityRecord {
    carrier: [f64; 2],
    density: DensityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Map<String, serde_json::Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<u32>,
}

impl Serialize for DensityMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DensityRecord {
            carrier: [self.carrier.0, self.carrier.1],
            density: self.kind,
            params: None,
            nodes: Some(self.nodes),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMeasure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = DensityRecord::deserialize(deserializer)?;
        DensityMeasure::new(
            &OutcomeSpace::real_line(),
            rec.carrier[0],
            rec.carrier[1],
            rec.density,
            rec.nodes.unwrap_or(DEFAULT_QUADRATURE_NODES),
        )
        .map_err(D::Error::custom)
    }
}

/// Convenience: exact rational from small integers.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}
