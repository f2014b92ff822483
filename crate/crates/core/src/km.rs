//! Krasnoselski–Mann iteration `x_{n+1} = (1−λₙ)xₙ ⊕ λₙT(xₙ)` with witnessed
//! step-size schedules, residual traces and the residual-limit estimator.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::maps::{MapError, NonexpansiveMap};
use crate::numeric::{ratio_to_f64, Rational};
use crate::rates::AlphaFn;
use crate::spaces::{fmt17, Point, Space};

/// Step sizes `λₙ`, exact rationals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaSeq {
    /// `λₙ = value`.
    Constant { value: Rational },
    /// `λₙ = 1/(n + offset)`, `offset ≥ 1`.
    Reciprocal { offset: u64 },
    /// `λₙ = values[n]`, then `tail`.
    Tabulated { values: Vec<Rational>, tail: Rational },
}

impl LambdaSeq {
    pub fn at(&self, n: u64) -> BigRational {
        match self {
            LambdaSeq::Constant { value } => value.inner().clone(),
            LambdaSeq::Reciprocal { offset } => {
                BigRational::new(BigInt::one(), BigInt::from(n) + BigInt::from(*offset))
            }
            LambdaSeq::Tabulated { values, tail } => usize::try_from(n)
                .ok()
                .and_then(|i| values.get(i))
                .unwrap_or(tail)
                .inner()
                .clone(),
        }
    }

    pub fn at_f64(&self, n: u64) -> f64 {
        match self {
            LambdaSeq::Reciprocal { offset } => 1.0 / (n as f64 + *offset as f64),
            _ => ratio_to_f64(&self.at(n)),
        }
    }

    /// `Σ_{i<n} λᵢ`, exact.
    pub fn partial_sum(&self, n: u64) -> BigRational {
        match self {
            LambdaSeq::Constant { value } => value.inner() * BigRational::from_integer(BigInt::from(n)),
            _ => (0..n).fold(BigRational::zero(), |acc, i| acc + self.at(i)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            LambdaSeq::Constant { value } => format!("lambda = {value}"),
            LambdaSeq::Reciprocal { offset } => format!("lambda_n = 1/(n+{offset})"),
            LambdaSeq::Tabulated { values, tail } => format!("lambda tabulated ({} values, tail {tail})", values.len()),
        }
    }

    fn validate(&self) -> Result<(), MapError> {
        if let LambdaSeq::Reciprocal { offset: 0 } = self {
            return Err(MapError::Argument("reciprocal schedule needs offset >= 1".into()));
        }
        Ok(())
    }
}

/// `(λₙ)` with the witnesses `K` and `α` of `λₙ ≤ 1 − 1/K` and
/// `n ≤ Σ_{i ≤ α(n)} λᵢ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub lambda: LambdaSeq,
    #[serde(rename = "K")]
    pub k: u64,
    pub alpha: AlphaFn,
}

impl Schedule {
    pub fn new(lambda: LambdaSeq, k: u64, alpha: AlphaFn) -> Self {
        Schedule { lambda, k, alpha }
    }

    /// `λ ≡ 1/2` with `K = 2` and `α(n) = 2n`.
    pub fn half() -> Self {
        Schedule::new(
            LambdaSeq::Constant { value: Rational::new(1, 2) },
            2,
            AlphaFn::Linear { factor: 2 },
        )
    }
}

/// Which clause of the schedule hypothesis failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleClause {
    /// `0 ≤ λₙ ≤ 1 − 1/K`.
    BoundedAway,
    /// `n ≤ Σ_{i=0}^{α(n)} λᵢ`.
    Divergence,
    /// `α(n)` too large to sum exactly.
    Unchecked,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleViolation {
    pub n: u64,
    pub clause: ScheduleClause,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub horizon: u64,
    pub first_violation: Option<ScheduleViolation>,
    /// Indices `n ≤ horizon` with any violated clause.
    pub violating: Vec<u64>,
}

impl ValidationReport {
    pub fn valid(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Largest `α(n)` for which partial sums are evaluated exactly.
pub const MAX_SUM_TERMS: u64 = 5_000_000;

/// Checks both clauses of the schedule hypothesis for every `n ≤ horizon`,
/// with exact rational arithmetic.
pub fn validate_schedule(sched: &Schedule, horizon: u64) -> ValidationReport {
    let mut violating = Vec::new();
    let mut first = None;
    let mut note = |n: u64, clause, detail: String, first: &mut Option<ScheduleViolation>| {
        if violating.last() != Some(&n) {
            violating.push(n);
        }
        if first.is_none() {
            *first = Some(ScheduleViolation { n, clause, detail });
        }
    };
    if sched.k == 0 || sched.lambda.validate().is_err() || sched.alpha.validate().is_err() {
        note(0, ScheduleClause::BoundedAway, "K must be >= 1 and catalog entries valid".into(), &mut first);
        return ValidationReport { horizon, first_violation: first, violating };
    }
    let cap = BigRational::one() - BigRational::new(BigInt::one(), BigInt::from(sched.k));
    // prefix[j] = Σ_{i<j} λᵢ, extended lazily.
    let mut prefix = vec![BigRational::zero()];
    for n in 0..=horizon {
        let l = sched.lambda.at(n);
        if l < BigRational::zero() || l > cap {
            note(n, ScheduleClause::BoundedAway, format!("lambda_{n} = {l} exceeds 1 - 1/K = {cap}"), &mut first);
        }
        let a = sched.alpha.eval_u64(n);
        let Some(a) = a.to_u64().filter(|a| *a < MAX_SUM_TERMS) else {
            note(n, ScheduleClause::Unchecked, format!("alpha({n}) = {a} is too large to sum"), &mut first);
            continue;
        };
        while (prefix.len() as u64) <= a + 1 {
            let j = prefix.len() as u64 - 1;
            let next = prefix.last().unwrap() + sched.lambda.at(j);
            prefix.push(next);
        }
        let sum = &prefix[(a + 1) as usize];
        if *sum < BigRational::from_integer(BigInt::from(n)) {
            note(
                n,
                ScheduleClause::Divergence,
                format!("sum of lambda_0..lambda_{a} = {} < {n}", ratio_to_f64(sum)),
                &mut first,
            );
        }
    }
    ValidationReport {
        horizon,
        first_violation: first,
        violating,
    }
}

/// `x₀, …, x_N` and `ρ(xₙ, T(xₙ))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualTrace {
    pub points: Vec<Point>,
    pub residuals: Vec<f64>,
}

impl ResidualTrace {
    pub fn last_residual(&self) -> f64 {
        *self.residuals.last().expect("traces hold at least x0")
    }

    /// `n,residual,<point columns>` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header = vec!["n".to_string(), "residual".to_string()];
        header.extend(self.points[0].csv_columns("point"));
        out.push_str(&header.join(","));
        out.push('\n');
        for (n, (p, r)) in self.points.iter().zip(&self.residuals).enumerate() {
            let _ = write!(out, "{n},{}", fmt17(*r));
            for field in p.csv_fields() {
                out.push(',');
                out.push_str(&field);
            }
            out.push('\n');
        }
        out
    }
}

fn escape(step: u64, what: &'static str, p: &Point, domain: &Space) -> MapError {
    MapError::IterateEscape {
        step,
        what,
        point: format!("{p:?}"),
        domain: domain.label(),
    }
}

/// One KM step from `x` given `T(x)`, with membership checks on the new iterate.
fn km_step(
    s: &Space,
    t: &NonexpansiveMap,
    x: &Point,
    tx: &Point,
    lambda: f64,
    step: u64,
) -> Result<Point, MapError> {
    if !s.contains(tx) || !t.domain().contains(tx) {
        return Err(escape(step, "image of iterate", tx, t.domain()));
    }
    let next = s.combine_unchecked(x, tx, lambda);
    if !t.domain().contains(&next) {
        return Err(escape(step + 1, "iterate", &next, t.domain()));
    }
    Ok(next)
}

/// The trace `x₀ … x_N` of the KM iteration in `s` driven by `t`.
pub fn km_iterate(
    s: &Space,
    t: &NonexpansiveMap,
    x0: &Point,
    sched: &Schedule,
    n: u64,
) -> Result<ResidualTrace, MapError> {
    let mut x = x0.clone();
    let mut points = Vec::with_capacity(n as usize + 1);
    let mut residuals = Vec::with_capacity(n as usize + 1);
    for step in 0..=n {
        let tx = t.apply(&x)?;
        residuals.push(s.distance(&x, &tx));
        if step == n {
            points.push(x);
            break;
        }
        let next = km_step(s, t, &x, &tx, sched.lambda.at_f64(step), step)?;
        points.push(std::mem::replace(&mut x, next));
    }
    Ok(ResidualTrace { points, residuals })
}

/// `x_n` alone, without storing the orbit.
pub fn km_point(s: &Space, t: &NonexpansiveMap, x0: &Point, sched: &Schedule, n: u64) -> Result<Point, MapError> {
    let mut x = x0.clone();
    if n == 0 {
        // Keep the membership contract of `T` even when no step is taken.
        t.apply(&x)?;
    }
    for step in 0..n {
        let tx = t.apply(&x)?;
        x = km_step(s, t, &x, &tx, sched.lambda.at_f64(step), step)?;
    }
    Ok(x)
}

/// `ρ(x_N, T(x_N))`, an upper estimate of `r_C(T)` that is nonincreasing in `N`.
pub fn estimate_residual_inf(
    s: &Space,
    t: &NonexpansiveMap,
    x0: &Point,
    sched: &Schedule,
    n: u64,
) -> Result<f64, MapError> {
    let xn = km_point(s, t, x0, sched, n)?;
    t.displacement(&xn)
}
