//! Exact rational scalars used for configuration values, schedules and rate inputs.
//!
//! Rationals are written as `"p/q"` strings in configuration files. Plain
//! integers, decimal strings (`"0.25"`) and JSON numbers are also accepted;
//! JSON numbers are taken at the exact binary value of the parsed `f64`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid rational `{input}`: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

/// An exact rational number with `"p/q"` serialization.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(pub BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact conversion of a finite float (every finite `f64` is a dyadic rational).
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Rational)
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rational(s).map(Rational)
    }
}

pub fn parse_rational(input: &str) -> Result<BigRational, ParseRationalError> {
    let err = |reason| ParseRationalError {
        input: input.to_string(),
        reason,
    };
    let s = input.trim();
    if s.is_empty() {
        return Err(err("empty"));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| err("bad numerator"))?;
        let q = BigInt::from_str(q.trim()).map_err(|_| err("bad denominator"))?;
        if q.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(BigRational::new(p, q));
    }
    let (negative, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err("no digits"));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err("expected p/q or a decimal"));
    }
    let joined = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if joined.is_empty() { "0" } else { &joined })
        .map_err(|_| err("bad digits"))?;
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let r = BigRational::new(numer, denom);
    Ok(if negative { -r } else { r })
}

/// Nearest `f64` to a big rational, robust to huge numerators and denominators.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Scale both sides down to 64 significant bits before dividing.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift_n = (nb - 64).max(0) as usize;
    let shift_d = (db - 64).max(0) as usize;
    let n = (r.numer() >> shift_n).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d).to_f64().unwrap_or(1.0);
    (n / d) * 2f64.powi((shift_n as i64 - shift_d as i64).clamp(-2000, 2000) as i32)
}

/// Least natural number `>= r`; negative inputs give zero.
pub fn ceil_nat(r: &BigRational) -> BigUint {
    let c = r.ceil().to_integer();
    if c.sign() == Sign::Minus {
        BigUint::zero()
    } else {
        c.to_biguint().unwrap_or_default()
    }
}

/// `⌈1/ε⌉ + 1`, the index past which `1/n < ε`.
pub fn inverse_ceil_plus_one(eps: &BigRational) -> BigUint {
    ceil_nat(&eps.recip()) + BigUint::one()
}

pub fn is_integer(r: &BigRational) -> bool {
    r.denom().is_one() || r.numer().is_multiple_of(r.denom())
}

/// Deserializes an `f64` from anything [`Rational`] accepts (`"p/q"`, decimals, numbers).
pub fn de_real<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
    let r = Rational::deserialize(deserializer)?;
    Ok(r.to_f64())
}

/// Optional variant of [`de_real`]; use with `#[serde(default)]`.
pub fn de_opt_real<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Option<f64>, D::Error> {
    let r = Option::<Rational>::deserialize(deserializer)?;
    Ok(r.map(|r| r.to_f64()))
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RationalVisitor;

        impl Visitor<'_> for RationalVisitor {
            type Value = Rational;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational as \"p/q\", a decimal string, or a number")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
                Ok(Rational::integer(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
                Ok(Rational(BigRational::from_integer(BigInt::from(v))))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
                Rational::from_f64(v).ok_or_else(|| E::custom("non-finite number"))
            }
        }

        deserializer.deserialize_any(RationalVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!("1/2".parse::<Rational>().unwrap(), Rational::new(1, 2));
        assert_eq!("0.25".parse::<Rational>().unwrap(), Rational::new(1, 4));
        assert_eq!("-3".parse::<Rational>().unwrap(), Rational::integer(-3));
        assert_eq!("-1.5".parse::<Rational>().unwrap(), Rational::new(-3, 2));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
        assert!("".parse::<Rational>().is_err());
    }

    #[test]
    fn json_roundtrip_uses_fraction_strings() {
        let r: Rational = serde_json::from_str("\"6/4\"").unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), "\"3/2\"");
        let n: Rational = serde_json::from_str("0.5").unwrap();
        assert_eq!(n, Rational::new(1, 2));
        let i: Rational = serde_json::from_str("7").unwrap();
        assert_eq!(i.to_string(), "7");
    }

    #[test]
    fn ceilings() {
        assert_eq!(ceil_nat(&Rational::new(3, 8).0), BigUint::from(1u32));
        assert_eq!(ceil_nat(&Rational::new(4, 2).0), BigUint::from(2u32));
        assert_eq!(ceil_nat(&Rational::new(-5, 2).0), BigUint::zero());
        assert_eq!(inverse_ceil_plus_one(&Rational::new(1, 4).0), BigUint::from(5u32));
        assert_eq!(inverse_ceil_plus_one(&Rational::integer(4).0), BigUint::from(2u32));
    }

    #[test]
    fn huge_ratio_to_float() {
        let big = BigRational::new(BigInt::from(1u32) << 3000usize, BigInt::from(3u32) << 2990usize);
        assert!((ratio_to_f64(&big) - 1024.0 / 3.0).abs() < 1e-9);
    }
}
