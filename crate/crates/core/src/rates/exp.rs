use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::RateError;
use crate::numeric::ceil_nat;

/// Largest exponent evaluated by the series; above it `c·3^e` is used.
pub const SERIES_EXPONENT_LIMIT: u64 = 64;

/// Exponents beyond this would produce `3^e` with more than a million digits.
pub const EXPONENT_LIMIT: u64 = 2_000_000;

/// A natural `N ≥ ⌈c·exp(e)⌉`, never computed in floating point.
///
/// For `e ≤ 64` the Taylor series is summed exactly and the tail
/// `Σ_{k>T} e^k/k!` is bounded by `e^{T+1}/(T+1)! · 1/(1 − e/(T+2))`, with `T`
/// chosen so that `c` times the tail stays below `2^-32`; the result is then
/// at most `⌈c·exp(e)⌉ + 1`. Larger exponents use `exp(e) < 3^e`.
pub fn ceil_exp_upper(c: &BigRational, e: u64) -> Result<BigUint, RateError> {
    if !c.is_positive() {
        return Err(RateError::Argument(format!("ceil_exp_upper needs c > 0, got {c}")));
    }
    if e > EXPONENT_LIMIT {
        return Err(RateError::Unaffordable(format!(
            "exp({e}) is beyond the supported exponent range (<= {EXPONENT_LIMIT})"
        )));
    }
    if e > SERIES_EXPONENT_LIMIT {
        let bound = c * BigRational::from_integer(num_traits::pow(BigInt::from(3u32), e as usize));
        return Ok(ceil_nat(&bound));
    }

    let x = BigRational::from_integer(BigInt::from(e));
    let tolerance = BigRational::new(BigInt::one(), BigInt::one() << 32usize);
    let mut sum = BigRational::zero();
    let mut term = BigRational::one(); // x^k / k!
    let mut k: u64 = 0;
    loop {
        sum += &term;
        k += 1;
        term = term * &x / BigRational::from_integer(BigInt::from(k));
        // `term` is now x^k/k!, the first omitted summand.
        let ratio_denom = BigRational::from_integer(BigInt::from(k + 1));
        if x < ratio_denom {
            let tail = &term / (BigRational::one() - &x / ratio_denom);
            if c * &tail < tolerance {
                return Ok(ceil_nat(&(c * (sum + tail))));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;

    fn r(p: i64, q: i64) -> BigRational {
        Rational::new(p, q).0
    }

    #[test]
    fn matches_known_ceilings() {
        // 2e² ≈ 14.778, 12e² ≈ 88.669, e²/2 ≈ 3.695, 2e⁴ ≈ 109.196, 0.12e² ≈ 0.887
        assert_eq!(ceil_exp_upper(&r(2, 1), 2).unwrap(), BigUint::from(15u32));
        assert_eq!(ceil_exp_upper(&r(12, 1), 2).unwrap(), BigUint::from(89u32));
        assert_eq!(ceil_exp_upper(&r(1, 2), 2).unwrap(), BigUint::from(4u32));
        assert_eq!(ceil_exp_upper(&r(2, 1), 4).unwrap(), BigUint::from(110u32));
        assert_eq!(ceil_exp_upper(&r(12, 100), 2).unwrap(), BigUint::from(1u32));
        assert_eq!(ceil_exp_upper(&r(1, 1), 0).unwrap(), BigUint::from(1u32));
    }

    #[test]
    fn tight_at_series_limit() {
        // e^64 = 6235149080811616882909238708.928...
        let got = ceil_exp_upper(&r(1, 1), 64).unwrap();
        let floor: BigUint = "6235149080811616882909238708".parse().unwrap();
        assert!(got == &floor + 1u32 || got == &floor + 2u32, "{got}");
    }

    #[test]
    fn falls_back_to_powers_of_three() {
        let got = ceil_exp_upper(&r(1, 1), 65).unwrap();
        assert_eq!(got, num_traits::pow(BigUint::from(3u32), 65));
        assert!(ceil_exp_upper(&r(1, 1), EXPONENT_LIMIT + 1).is_err());
        assert!(ceil_exp_upper(&r(0, 1), 3).is_err());
    }
}
