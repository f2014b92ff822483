use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

/// Bit length above which a count is only reported by a power-of-ten bound.
///
/// `2^3_400_000 > 10^1_000_000`, so every [`BigCount::AtMostPow10`] value has
/// more than a million decimal digits.
pub const EXACT_BITS_LIMIT: u64 = 3_400_000;

/// A natural number produced by the rate formulas.
///
/// Values are exact unless they would need more than a million decimal
/// digits; those are reported by a sound upper bound `value < 10^exponent`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BigCount {
    Exact {
        #[serde(with = "decimal")]
        value: BigUint,
    },
    AtMostPow10 {
        #[serde(with = "decimal")]
        exponent: BigUint,
    },
}

impl BigCount {
    pub fn exact(value: impl Into<BigUint>) -> Self {
        BigCount::Exact {
            value: value.into(),
        }
    }

    pub fn as_exact(&self) -> Option<&BigUint> {
        match self {
            BigCount::Exact { value } => Some(value),
            BigCount::AtMostPow10 { .. } => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, BigCount::Exact { .. })
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.as_exact().and_then(|v| v.to_u64())
    }

    /// Returns the count if it is at most `budget`.
    pub fn within(&self, budget: u64) -> Option<u64> {
        self.to_u64().filter(|&n| n <= budget)
    }

    /// Number of decimal digits (exact values) or an upper bound on it.
    pub fn digits(&self) -> BigUint {
        match self {
            BigCount::Exact { value } => BigUint::from(value.to_string().len()),
            BigCount::AtMostPow10 { exponent } => exponent.clone(),
        }
    }

    pub fn max(self, other: BigCount) -> BigCount {
        match (self, other) {
            (BigCount::Exact { value: a }, BigCount::Exact { value: b }) => BigCount::Exact {
                value: a.max(b),
            },
            (BigCount::AtMostPow10 { exponent: x }, BigCount::AtMostPow10 { exponent: y }) => {
                BigCount::AtMostPow10 { exponent: x.max(y) }
            }
            (BigCount::Exact { value }, BigCount::AtMostPow10 { exponent })
            | (BigCount::AtMostPow10 { exponent }, BigCount::Exact { value }) => {
                if value.bits() < EXACT_BITS_LIMIT {
                    BigCount::AtMostPow10 { exponent }
                } else {
                    let d = BigUint::from(value.to_string().len());
                    BigCount::AtMostPow10 {
                        exponent: exponent.max(d),
                    }
                }
            }
        }
    }

    /// Exact comparison where both values are exact; `None` otherwise.
    pub fn partial_cmp_exact(&self, other: &BigCount) -> Option<Ordering> {
        Some(self.as_exact()?.cmp(other.as_exact()?))
    }
}

impl From<u64> for BigCount {
    fn from(n: u64) -> Self {
        BigCount::exact(n)
    }
}

impl From<BigUint> for BigCount {
    fn from(n: BigUint) -> Self {
        BigCount::Exact { value: n }
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BigCount::Exact { value } => write!(f, "{value}"),
            BigCount::AtMostPow10 { exponent } => {
                write!(f, "< 10^{exponent}")
            }
        }
    }
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_prefers_astronomical_bound() {
        let small = BigCount::exact(5u64);
        let huge = BigCount::AtMostPow10 {
            exponent: BigUint::from(2_000_000u64),
        };
        assert_eq!(small.clone().max(huge.clone()), huge);
        assert_eq!(small.clone().max(BigCount::exact(9u64)), BigCount::exact(9u64));
        assert_eq!(small.within(5), Some(5));
        assert_eq!(small.within(4), None);
    }

    #[test]
    fn display_and_json() {
        let c = BigCount::exact(30u64);
        assert_eq!(c.to_string(), "30");
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"kind":"exact","value":"30"}"#);
        let back: BigCount = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
