//! Extended-range real scalar used for outcome coordinates.
//!
//! The escaping-mass nets place atoms at coordinates like exp(2^30 + 1),
//! far beyond what an `f64` can hold. `ExtReal` stores a sign, a mantissa
//! in `[1, 2)`, and a binary exponent in `i64`. Every finite `f64` converts
//! exactly, so ordinary desk-scale coordinates keep bit-exact identity,
//! while the exponent range extends to about `2^(9.2e18)`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, VnmError};

const MANT_MASK: u64 = (1u64 << 52) - 1;
const EXP_MASK: u64 = 0x7ff;

/// Sign-mantissa-exponent scalar: value = sign * mant * 2^exp, mant in [1, 2).
#[derive(Clone, Copy, Debug)]
pub struct ExtReal {
    neg: bool,
    exp: i64,
    mant: f64,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal {
        neg: false,
        exp: 0,
        mant: 0.0,
    };

    /// Exact conversion from a finite `f64`. Returns `None` for NaN or infinity.
    pub fn from_f64(x: f64) -> Option<ExtReal> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(ExtReal::ZERO);
        }
        let neg = x < 0.0;
        let mut m = x.abs();
        let mut shift = 0i64;
        let bits = m.to_bits();
        if (bits >> 52) & EXP_MASK == 0 {
            // subnormal: scale into the normal range first
            m *= 9007199254740992.0; // 2^53
            shift = -53;
        }
        let bits = m.to_bits();
        let raw_exp = ((bits >> 52) & EXP_MASK) as i64;
        let exp = raw_exp - 1023 + shift;
        let mant = f64::from_bits((bits & MANT_MASK) | (1023u64 << 52));
        Some(ExtReal { neg, exp, mant })
    }

    /// Saturating readout: values beyond the `f64` range map to `±inf` or `±0`.
    pub fn to_f64(self) -> f64 {
        if self.mant == 0.0 {
            return 0.0;
        }
        let v = if self.exp > 1023 {
            f64::INFINITY
        } else if self.exp < -1074 {
            0.0
        } else {
            self.mant * pow2(self.exp)
        };
        if self.neg {
            -v
        } else {
            v
        }
    }

    /// Readout that refuses to saturate.
    pub fn to_finite_f64(self) -> Option<f64> {
        let v = self.to_f64();
        if v.is_finite() && (v != 0.0 || self.mant == 0.0) {
            Some(v)
        } else {
            None
        }
    }

    pub fn is_zero(self) -> bool {
        self.mant == 0.0
    }

    pub fn is_positive(self) -> bool {
        !self.neg && self.mant != 0.0
    }

    pub fn is_negative(self) -> bool {
        self.neg
    }

    /// Natural logarithm. Errors on non-positive values.
    pub fn ln(self) -> Result<f64> {
        if !self.is_positive() {
            return Err(VnmError::Domain(
                "logarithm of a non-positive coordinate".into(),
            ));
        }
        // Prefer the native ln when the value reads out as a normal f64.
        if (-1021..=1023).contains(&self.exp) {
            Ok(self.to_f64().ln())
        } else {
            Ok(self.mant.ln() + (self.exp as f64) * std::f64::consts::LN_2)
        }
    }

    /// exp(t) with an extended exponent range.
    pub fn exp(t: f64) -> Result<ExtReal> {
        if !t.is_finite() {
            return Err(VnmError::Domain("exp of a non-finite argument".into()));
        }
        if t.abs() <= 700.0 {
            return Ok(ExtReal::from_f64(t.exp()).expect("finite"));
        }
        let y = t / std::f64::consts::LN_2;
        if y.abs() >= 9.0e15 {
            return Err(VnmError::Overflow {
                msg: format!("exp({t}) escapes the extended coordinate range"),
                largest_feasible: None,
            });
        }
        let k = y.floor();
        let mut mant = (y - k).exp2();
        let mut exp = k as i64;
        if mant >= 2.0 {
            mant /= 2.0;
            exp += 1;
        }
        Ok(ExtReal {
            neg: false,
            exp,
            mant,
        })
    }

    /// Base-10 scientific decomposition `(mantissa in [1, 10), exponent)`.
    fn decimal_parts(self) -> (f64, i64) {
        debug_assert!(self.mant != 0.0);
        let log10 = self.mant.log10() + (self.exp as f64) * std::f64::consts::LOG10_2;
        let mut d = log10.floor();
        let mut m = 10f64.powf(log10 - d);
        if m >= 10.0 {
            m /= 10.0;
            d += 1.0;
        }
        (if self.neg { -m } else { m }, d as i64)
    }

    fn magnitude_cmp(a: &ExtReal, b: &ExtReal) -> Ordering {
        match a.exp.cmp(&b.exp) {
            Ordering::Equal => a.mant.partial_cmp(&b.mant).expect("mantissa is never NaN"),
            ord => ord,
        }
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        if self.is_zero() && other.is_zero() {
            return true;
        }
        self.neg == other.neg && self.exp == other.exp && self.mant == other.mant
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => {
                return if other.neg {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
            (false, true) => {
                return if self.neg {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
            (false, false) => {}
        }
        match (self.neg, other.neg) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => Self::magnitude_cmp(self, other),
            (true, true) => Self::magnitude_cmp(other, self),
        }
    }
}

impl Hash for ExtReal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        if self.is_zero() {
            0u8.hash(state);
            return;
        }
        self.neg.hash(state);
        self.exp.hash(state);
        self.mant.to_bits().hash(state);
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_finite_f64() {
            Some(v) => write!(f, "{v}"),
            None => {
                let (m, d) = self.decimal_parts();
                write!(f, "{m:.9}e{d}")
            }
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.to_finite_f64() {
            Some(v) => serializer.serialize_f64(v),
            None => serializer.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => {
                ExtReal::from_f64(v).ok_or_else(|| D::Error::custom("non-finite coordinate"))
            }
            Raw::Text(s) => parse_ext(&s).map_err(D::Error::custom),
        }
    }
}

/// Parse either a plain float or the wide scientific form `<m>e<exp>`.
pub fn parse_ext(s: &str) -> Result<ExtReal> {
    if let Ok(v) = s.parse::<f64>() {
        if v.is_finite() {
            return Ok(ExtReal::from_f64(v).expect("finite"));
        }
    }
    let (m_str, e_str) = s
        .split_once(['e', 'E'])
        .ok_or_else(|| VnmError::Parse(format!("bad coordinate literal {s:?}")))?;
    let m: f64 = m_str
        .trim()
        .parse()
        .map_err(|_| VnmError::Parse(format!("bad coordinate mantissa {m_str:?}")))?;
    let d: i64 = e_str
        .trim()
        .parse()
        .map_err(|_| VnmError::Parse(format!("bad coordinate exponent {e_str:?}")))?;
    if m == 0.0 {
        return Ok(ExtReal::ZERO);
    }
    let ln = m.abs().ln() + (d as f64) * std::f64::consts::LN_10;
    let mag = ExtReal::exp(ln)?;
    Ok(ExtReal {
        neg: m < 0.0,
        ..mag
    })
}

fn pow2(e: i64) -> f64 {
    debug_assert!((-1074..=1023).contains(&e));
    if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        // subnormal scale
        f64::from_bits(1u64 << (e + 1074) as u64)
    }
}
