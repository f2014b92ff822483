//! The catalogued divergence witnesses `α: ℕ → ℕ` and the combinators built from them.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::count::{BigCount, EXACT_BITS_LIMIT};
use super::RateError;
use crate::numeric::{ceil_nat, Rational};

/// Depth up to which `alpha_hat` is evaluated by its defining recursion.
/// Deeper evaluations use the closed forms available for the catalogue.
pub const RECURSION_DEPTH: u64 = 4096;

/// A total function `ℕ → ℕ` from a fixed, serializable catalogue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaFn {
    Identity,
    /// `n ↦ factor·n`
    Linear { factor: u64 },
    /// `n ↦ ⌈c·n⌉` with `c > 0`
    CeilScaled { c: Rational },
    /// `values[n]` inside the table, then `last + step·(n − (len−1))`.
    Tabulated { values: Vec<u64>, step: u64 },
}

/// How `max_{k≤j} α'(k,n)` behaves, which decides the available closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    /// `α(m) = p·m + q` everywhere.
    Affine { p: u64, q: u64 },
    /// `α(m+1) ≤ α(m) + 1`: the shifted maximum sits at `k = 0`.
    SlowGrowth,
    /// `α(m+1) ≥ α(m) + 1`: the shifted maximum sits at `k = j`.
    FastGrowth,
    Mixed,
}

impl AlphaFn {
    pub fn label(&self) -> String {
        match self {
            AlphaFn::Identity => "identity".into(),
            AlphaFn::Linear { factor } => format!("n -> {factor}n"),
            AlphaFn::CeilScaled { c } => format!("n -> ceil({c} n)"),
            AlphaFn::Tabulated { values, step } => {
                format!("tabulated({} values, step {step})", values.len())
            }
        }
    }

    pub fn validate(&self) -> Result<(), RateError> {
        match self {
            AlphaFn::CeilScaled { c } if !c.is_positive() => {
                Err(RateError::Argument("ceil_scaled alpha needs c > 0".into()))
            }
            AlphaFn::Tabulated { values, .. } if values.is_empty() => {
                Err(RateError::Argument("tabulated alpha needs at least one value".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, m: &BigUint) -> BigUint {
        match self {
            AlphaFn::Identity => m.clone(),
            AlphaFn::Linear { factor } => m * *factor,
            AlphaFn::CeilScaled { c } => {
                let prod = c.inner() * num_rational::BigRational::from_integer(BigInt::from(m.clone()));
                ceil_nat(&prod)
            }
            AlphaFn::Tabulated { values, step } => {
                let last = values.len() - 1;
                match m.to_usize() {
                    Some(i) if i <= last => BigUint::from(values[i]),
                    _ => BigUint::from(values[last]) + (m - BigUint::from(last)) * *step,
                }
            }
        }
    }

    pub fn eval_u64(&self, m: u64) -> BigUint {
        self.eval(&BigUint::from(m))
    }

    fn shape(&self) -> Shape {
        match self {
            AlphaFn::Identity => Shape::Affine { p: 1, q: 0 },
            AlphaFn::Linear { factor } => Shape::Affine { p: *factor, q: 0 },
            AlphaFn::CeilScaled { c } => {
                if is_one(c) {
                    Shape::Affine { p: 1, q: 0 }
                } else if c.inner() >= &num_rational::BigRational::one() {
                    Shape::FastGrowth
                } else {
                    Shape::SlowGrowth
                }
            }
            AlphaFn::Tabulated { .. } => Shape::Mixed,
        }
    }

    /// `max_{k ≤ j} (α(n+k) − k)`, computed without scanning all `k` for the
    /// catalogued shapes.
    fn max_shifted(&self, j: &BigUint, n: &BigUint) -> BigInt {
        let at = |k: &BigUint| BigInt::from(self.eval(&(n + k))) - BigInt::from(k.clone());
        match self.shape() {
            Shape::Affine { p: 0, .. } | Shape::SlowGrowth => at(&BigUint::zero()),
            Shape::Affine { .. } | Shape::FastGrowth => at(j),
            Shape::Mixed => {
                let AlphaFn::Tabulated { values, step } = self else {
                    unreachable!("only tabulated alphas are mixed")
                };
                let last = BigUint::from(values.len() - 1);
                // Inside the table: scan. Past it α is affine with slope `step`,
                // so α(n+k) − k is monotone and the maximum is at an endpoint.
                let tail_start = if n >= &last { BigUint::zero() } else { &last - n };
                let mut best: Option<BigInt> = None;
                let mut k = BigUint::zero();
                while &k < &tail_start && &k <= j {
                    let v = at(&k);
                    best = Some(best.map_or(v.clone(), |b| b.max(v)));
                    k += 1u32;
                }
                if &tail_start <= j {
                    let v = if *step >= 1 { at(j) } else { at(&tail_start) };
                    best = Some(best.map_or(v.clone(), |b| b.max(v)));
                }
                best.expect("k = 0 is always considered")
            }
        }
    }

    /// `(p, q)` with `α(m) = p·m + q` for all `m`, when α is affine.
    fn affine(&self) -> Option<(u64, u64)> {
        match self.shape() {
            Shape::Affine { p, q } => Some((p, q)),
            _ => None,
        }
    }
}

fn is_one(c: &Rational) -> bool {
    c.inner().is_one()
}

/// `α'(i,n) = α(n+i) − i + 1`; may be negative.
pub fn alpha_prime(alpha: &AlphaFn, i: impl Into<BigUint>, n: impl Into<BigUint>) -> BigInt {
    let i = i.into();
    let n = n.into();
    BigInt::from(alpha.eval(&(&n + &i))) - BigInt::from(i) + 1
}

/// `α⁺(i,n) = max{α'(j,n) : j ≤ i}`. Always at least `α(n) + 1 ≥ 1`.
pub fn alpha_plus(alpha: &AlphaFn, i: impl Into<BigUint>, n: impl Into<BigUint>) -> BigUint {
    let m: BigInt = alpha.max_shifted(&i.into(), &n.into()) + 1u32;
    m.to_biguint().expect("alpha_plus is bounded below by alpha'(0,n) >= 1")
}

/// `α̃(i,n) = i + α⁺(i,n)`.
pub fn alpha_tilde(alpha: &AlphaFn, i: impl Into<BigUint>, n: impl Into<BigUint>) -> BigUint {
    let i = i.into();
    let plus = alpha_plus(alpha, i.clone(), n);
    i + plus
}

/// `α̂(0,n) = α̃(0,n)`, `α̂(i+1,n) = α̃(α̂(i,n), n)`.
///
/// Depths up to [`RECURSION_DEPTH`] run the recursion itself. Deeper
/// evaluations need a closed form: affine α (`α⁺(j,n) = pn + q + 1 + (p−1)j`
/// gives `α̂(i,n) = s(p^{i+1} − 1)/(p − 1)` with `s = pn + q + 1`, or
/// `(i+1)s` when `p ≤ 1`) and slow-growth α (`α̂(i,n) = (i+1)(α(n)+1)`).
pub fn alpha_hat(
    alpha: &AlphaFn,
    i: impl Into<BigUint>,
    n: impl Into<BigUint>,
) -> Result<BigCount, RateError> {
    alpha.validate()?;
    let i = i.into();
    let n = n.into();
    if i <= BigUint::from(RECURSION_DEPTH) {
        let depth = i.to_u64().expect("bounded by RECURSION_DEPTH");
        return Ok(BigCount::exact(alpha_hat_recursive(alpha, depth, &n)));
    }
    alpha_hat_closed(alpha, &i, &n).ok_or_else(|| {
        RateError::Unaffordable(format!(
            "alpha_hat({i}, {n}) for {} needs {i} recursion steps and no closed form is known",
            alpha.label()
        ))
    })
}

fn alpha_hat_recursive(alpha: &AlphaFn, depth: u64, n: &BigUint) -> BigUint {
    let mut a = alpha_tilde(alpha, BigUint::zero(), n.clone());
    for _ in 0..depth {
        a = alpha_tilde(alpha, a, n.clone());
    }
    a
}

/// Closed forms for `α̂`; `None` when α has no catalogued closed form.
pub(crate) fn alpha_hat_closed(alpha: &AlphaFn, i: &BigUint, n: &BigUint) -> Option<BigCount> {
    let steps = i + 1u32;
    match (alpha.affine(), alpha.shape()) {
        (Some((p, q)), _) if p >= 2 => {
            let s = BigUint::from(p) * n + q + 1u32;
            Some(geometric_closed_form(p, &s, &steps))
        }
        (Some((p, q)), _) => {
            // p ∈ {0, 1}: α⁺ is constant in j.
            let s = BigUint::from(p) * n + q + 1u32;
            Some(BigCount::exact(steps * s))
        }
        (None, Shape::SlowGrowth) => {
            let s = alpha.eval(n) + 1u32;
            Some(BigCount::exact(steps * s))
        }
        _ => None,
    }
}

/// `s·(p^steps − 1)/(p − 1)` for `p ≥ 2`, exact when it has at most about a
/// million digits and otherwise bounded by `10^exponent`.
fn geometric_closed_form(p: u64, s: &BigUint, steps: &BigUint) -> BigCount {
    let log2p = (p as f64).log2();
    let bits_estimate = steps.to_f64().unwrap_or(f64::INFINITY) * log2p;
    if bits_estimate <= (EXACT_BITS_LIMIT + 64) as f64 {
        let e = steps.to_u32().expect("steps bounded by the bit estimate");
        let pow = num_traits::pow(BigUint::from(p), e as usize);
        return BigCount::exact(s * (pow - 1u32) / (p - 1));
    }
    // value < s·p^steps < 10^{digits(s)} · 10^{steps·log10 p}
    let log10p_upper = upper_log10(p);
    let scaled = num_rational::BigRational::from_integer(BigInt::from(steps.clone())) * log10p_upper;
    let exponent = ceil_nat(&scaled) + BigUint::from(s.to_string().len());
    BigCount::AtMostPow10 { exponent }
}

/// A rational upper bound on `log10(p)`.
fn upper_log10(p: u64) -> num_rational::BigRational {
    let approx = (p as f64).log10();
    // libm log10 is accurate to a few ulp; a 1e-12 relative margin dominates that.
    let padded = approx * (1.0 + 1e-12) + 1e-15;
    num_rational::BigRational::from_float(padded).expect("finite")
}

/// `E ∸ 1 = max{0, E − 1}`.
pub fn truncated_pred(e: &BigUint) -> BigUint {
    if e.is_zero() {
        BigUint::zero()
    } else {
        e - 1u32
    }
}
