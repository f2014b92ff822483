//! Exact evaluation of the asymptotic-regularity rates `h`, `h̃`, `g` and `g̃`.
//!
//! All outputs are natural numbers computed with arbitrary-precision
//! integers. The only non-rational quantity, `exp(K(M+1))`, is bounded from
//! above by [`ceil_exp_upper`]; since `α̂` is nondecreasing in its first
//! argument an upper-rounded ceiling still yields a valid rate.

mod alpha;
mod count;
mod exp;

pub use alpha::{
    alpha_hat, alpha_plus, alpha_prime, alpha_tilde, truncated_pred, AlphaFn, RECURSION_DEPTH,
};
pub use count::{BigCount, EXACT_BITS_LIMIT};
pub use exp::{ceil_exp_upper, EXPONENT_LIMIT, SERIES_EXPONENT_LIMIT};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;
use thiserror::Error;

use crate::numeric::{ceil_nat, inverse_ceil_plus_one, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RateError {
    #[error("invalid rate argument: {0}")]
    Argument(String),
    #[error("rate not computable within limits: {0}")]
    Unaffordable(String),
}

/// Inputs shared by every rate function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateInputs {
    pub eps: Rational,
    pub b: Rational,
    pub k: u64,
    pub alpha: AlphaFn,
}

impl RateInputs {
    pub fn new(eps: Rational, b: Rational, k: u64, alpha: AlphaFn) -> Self {
        RateInputs { eps, b, k, alpha }
    }

    fn validate(&self) -> Result<(), RateError> {
        if !self.eps.is_positive() {
            return Err(RateError::Argument(format!("epsilon must be > 0, got {}", self.eps)));
        }
        if !self.b.is_positive() {
            return Err(RateError::Argument(format!("b must be > 0, got {}", self.b)));
        }
        if self.k == 0 {
            return Err(RateError::Argument("K must be >= 1".into()));
        }
        self.alpha.validate()
    }
}

/// The intermediate quantities of one rate evaluation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RateDetail {
    /// Least natural `M` with `M ≥ (1 + c_M·b)/ε`.
    #[serde(serialize_with = "as_decimal")]
    pub m: BigUint,
    /// The exponent `K(M+1)`.
    pub exponent: u64,
    /// Upper bound on `⌈c_E·b·exp(K(M+1))⌉`.
    #[serde(serialize_with = "as_decimal")]
    pub ceiling: BigUint,
    pub value: BigCount,
}

fn as_decimal<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// `α̂(⌈e_factor·b·exp(K(M+1))⌉ ∸ 1, M)` with `M` the least natural `≥ (1 + m_factor·b)/ε`.
fn rate_core(inputs: &RateInputs, m_factor: i64, e_factor: i64) -> Result<RateDetail, RateError> {
    inputs.validate()?;
    let b = inputs.b.inner();
    let one = BigRational::from_integer(BigInt::from(1));
    let m_bound = (one + b * BigRational::from_integer(BigInt::from(m_factor))) / inputs.eps.inner();
    let m = ceil_nat(&m_bound);
    let exponent = (&m + 1u32)
        .to_u64()
        .and_then(|m1| m1.checked_mul(inputs.k))
        .ok_or_else(|| RateError::Unaffordable(format!("K(M+1) overflows with M = {m}")))?;
    let c = b * BigRational::from_integer(BigInt::from(e_factor));
    let ceiling = ceil_exp_upper(&c, exponent)?;
    let value = alpha_hat(&inputs.alpha, truncated_pred(&ceiling), m.clone())?;
    Ok(RateDetail {
        m,
        exponent,
        ceiling,
        value,
    })
}

/// Details of `h(ε,b,K,α)`.
pub fn rate_brs_detail(inputs: &RateInputs) -> Result<RateDetail, RateError> {
    rate_core(inputs, 2, 2)
}

/// `h(ε,b,K,α)`: past this index the KM residual is within `ε` of the residual
/// at any point `x*` with `ρ(x,T x) ≤ b` and `ρ(x,x*) ≤ b`.
pub fn rate_brs(inputs: &RateInputs) -> Result<BigCount, RateError> {
    rate_brs_detail(inputs).map(|d| d.value)
}

/// Details of `h̃(ε,b,K,α)`.
pub fn rate_ishikawa_detail(inputs: &RateInputs) -> Result<RateDetail, RateError> {
    rate_core(inputs, 6, 12)
}

/// `h̃(ε,b,K,α)`: past this index the residual is at most `ε` whenever the
/// orbit of a point `b`-close to the start has diameter at most `b`.
pub fn rate_ishikawa(inputs: &RateInputs) -> Result<BigCount, RateError> {
    rate_ishikawa_detail(inputs).map(|d| d.value)
}

fn positive(name: &str, v: &Rational) -> Result<(), RateError> {
    if v.inner().is_positive() {
        Ok(())
    } else {
        Err(RateError::Argument(format!("{name} must be > 0, got {v}")))
    }
}

/// `g(ε,b₁,b₂,K,α) = max{⌈1/ε⌉ + 1, h(ε, 2b₁ + b₂, K, α)}`.
pub fn rate_product(
    eps: &Rational,
    b1: &Rational,
    b2: &Rational,
    k: u64,
    alpha: &AlphaFn,
) -> Result<BigCount, RateError> {
    positive("epsilon", eps)?;
    positive("b1", b1)?;
    positive("b2", b2)?;
    let b = Rational(b1.inner() * BigRational::from_integer(BigInt::from(2)) + b2.inner());
    let h = rate_brs(&RateInputs::new(eps.clone(), b, k, alpha.clone()))?;
    Ok(BigCount::exact(inverse_ceil_plus_one(eps.inner())).max(h))
}

/// `g̃(ε,b,K,α) = max{⌈1/ε⌉ + 1, h̃(ε, b, K, α)}`.
///
/// Defined by analogy with [`rate_product`]: it dominates both `h̃`'s
/// threshold and `⌈1/ε⌉ + 1`.
pub fn rate_product_ishikawa(
    eps: &Rational,
    b: &Rational,
    k: u64,
    alpha: &AlphaFn,
) -> Result<BigCount, RateError> {
    positive("epsilon", eps)?;
    positive("b", b)?;
    let h = rate_ishikawa(&RateInputs::new(eps.clone(), b.clone(), k, alpha.clone()))?;
    Ok(BigCount::exact(inverse_ceil_plus_one(eps.inner())).max(h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p, d)
    }

    fn h(eps: Rational, b: Rational, k: u64, alpha: AlphaFn) -> BigCount {
        rate_brs(&RateInputs::new(eps, b, k, alpha)).unwrap()
    }

    #[test]
    fn brs_examples() {
        let d = rate_brs_detail(&RateInputs::new(q(4, 1), q(1, 1), 1, AlphaFn::Identity)).unwrap();
        assert_eq!(d.m, BigUint::from(1u32));
        assert_eq!(d.ceiling, BigUint::from(15u32));
        assert_eq!(d.value, BigCount::exact(30u64));

        let d = rate_brs_detail(&RateInputs::new(q(4, 1), q(1, 4), 1, AlphaFn::Identity)).unwrap();
        assert_eq!(d.m, BigUint::from(1u32));
        assert_eq!(d.ceiling, BigUint::from(4u32));
        assert_eq!(d.value, BigCount::exact(8u64));

        let small = h(q(4, 1), q(1, 1), 1, AlphaFn::Identity);
        let smaller_eps = h(q(2, 1), q(1, 1), 1, AlphaFn::Identity);
        assert!(small.as_exact().unwrap() <= smaller_eps.as_exact().unwrap());
    }

    #[test]
    fn ishikawa_examples() {
        let d = rate_ishikawa_detail(&RateInputs::new(q(7, 1), q(1, 1), 1, AlphaFn::Identity)).unwrap();
        assert_eq!(d.m, BigUint::from(1u32));
        assert_eq!(d.ceiling, BigUint::from(89u32));
        assert_eq!(d.value, BigCount::exact(178u64));
    }

    #[test]
    fn product_examples() {
        let g = rate_product(&q(4, 1), &q(1, 4), &q(1, 2), 1, &AlphaFn::Identity).unwrap();
        assert_eq!(g, BigCount::exact(30u64));
        let g = rate_product(&q(1, 1), &q(1, 4), &q(1, 2), 1, &AlphaFn::Identity).unwrap();
        assert_eq!(g, BigCount::exact(440u64));
        let gt = rate_product_ishikawa(&q(7, 1), &q(1, 1), 1, &AlphaFn::Identity).unwrap();
        assert_eq!(gt, BigCount::exact(178u64));
        // E = ⌈0.12e²⌉ = 1, so α̂(0,1) = 2 = ⌈1/10⌉ + 1.
        let gt = rate_product_ishikawa(&q(10, 1), &q(1, 100), 1, &AlphaFn::Identity).unwrap();
        assert_eq!(gt, BigCount::exact(2u64));
    }

    #[test]
    fn tiny_rate_regime_is_dominated_by_inverse_epsilon() {
        // α ≡ 0: M = 1, E = ⌈2(1/100)e²⌉ = 1, so h = α̂(0,1) = α(1) + 1 = 1 < ⌈1/4⌉ + 1.
        let zero = AlphaFn::Tabulated { values: vec![0], step: 0 };
        assert_eq!(h(q(4, 1), q(1, 100), 1, zero.clone()), BigCount::exact(1u64));
        let g = rate_product(&q(4, 1), &q(1, 400), &q(1, 200), 1, &zero).unwrap();
        assert_eq!(g, BigCount::exact(2u64));
    }

    #[test]
    fn rejects_nonpositive_arguments() {
        let bad = RateInputs::new(q(0, 1), q(1, 1), 1, AlphaFn::Identity);
        assert!(matches!(rate_brs(&bad), Err(RateError::Argument(_))));
        let bad = RateInputs::new(q(1, 1), q(-1, 1), 1, AlphaFn::Identity);
        assert!(matches!(rate_ishikawa(&bad), Err(RateError::Argument(_))));
        let bad = RateInputs::new(q(1, 1), q(1, 1), 0, AlphaFn::Identity);
        assert!(rate_brs(&bad).is_err());
        assert!(rate_product(&q(1, 1), &q(0, 1), &q(1, 1), 1, &AlphaFn::Identity).is_err());
    }

    #[test]
    fn realistic_inputs_give_astronomical_bounds() {
        // ε = 1/100, b = 1, K = 2, α(n) = 2n: M = 300, exponent 602, E ≈ 2·3^602.
        let d = rate_brs_detail(&RateInputs::new(q(1, 100), q(1, 1), 2, AlphaFn::Linear { factor: 2 }))
            .unwrap();
        assert_eq!(d.m, BigUint::from(300u32));
        assert_eq!(d.exponent, 602);
        assert!(matches!(d.value, BigCount::AtMostPow10 { .. }));
        // With α = identity the same bound stays exact: E·(M+1).
        let d = rate_brs_detail(&RateInputs::new(q(1, 100), q(1, 1), 2, AlphaFn::Identity)).unwrap();
        assert_eq!(d.value, BigCount::exact(&d.ceiling * 301u32));
    }
}
