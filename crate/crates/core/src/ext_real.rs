use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A real number or `+∞`.
///
/// Risk functionals of infinite-mean losses (ES, the mean, most distortion
/// integrals) legitimately evaluate to `+∞`; this type carries that value
/// without smuggling IEEE infinities through arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
}

pub use ExtendedReal::{Finite, PosInfinity};

impl ExtendedReal {
    /// Maps `f64::INFINITY` to the sentinel. NaN and `-∞` are rejected.
    pub fn from_f64(x: f64) -> Option<Self> {
        if x.is_nan() || x == f64::NEG_INFINITY {
            None
        } else if x == f64::INFINITY {
            Some(PosInfinity)
        } else {
            Some(Finite(x))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Finite(x) => Some(x),
            PosInfinity => None,
        }
    }

    /// `f64` view, with the sentinel mapped to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            Finite(x) => x,
            PosInfinity => f64::INFINITY,
        }
    }

    /// Multiplication by a nonnegative scalar; `0 · ∞ = 0` (measure-theoretic convention).
    pub fn scale(self, c: f64) -> Self {
        debug_assert!(c >= 0.0);
        match self {
            Finite(x) => Finite(c * x),
            PosInfinity if c == 0.0 => Finite(0.0),
            PosInfinity => PosInfinity,
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(x: f64) -> Self {
        Finite(x)
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;
    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Finite(a), Finite(b)) => Finite(a + b),
            _ => PosInfinity,
        }
    }
}

impl Add<f64> for ExtendedReal {
    type Output = ExtendedReal;
    fn add(self, rhs: f64) -> Self {
        self + Finite(rhs)
    }
}

impl Sub<f64> for ExtendedReal {
    type Output = ExtendedReal;
    fn sub(self, rhs: f64) -> Self {
        self + Finite(-rhs)
    }
}

impl Mul<f64> for ExtendedReal {
    type Output = ExtendedReal;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl Neg for ExtendedReal {
    type Output = Option<ExtendedReal>;
    /// Only finite values can be negated without leaving the type.
    fn neg(self) -> Option<ExtendedReal> {
        self.finite().map(|x| Finite(-x))
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Finite(a), Finite(b)) => a.total_cmp(b),
            (Finite(_), PosInfinity) => Ordering::Less,
            (PosInfinity, Finite(_)) => Ordering::Greater,
            (PosInfinity, PosInfinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finite(x) => write!(f, "{x}"),
            PosInfinity => write!(f, "inf"),
        }
    }
}

// JSON has no infinity literal; the sentinel is written as the string "inf".
impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Finite(x) => s.serialize_f64(*x),
            PosInfinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(Finite(x)),
            Repr::Text(s) if s == "inf" || s == "+inf" => Ok(PosInfinity),
            Repr::Text(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}
