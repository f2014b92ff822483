//! Moduli for the uniform approximate fixed point property and for
//! `λₙ`-uniform asymptotic regularity, and the conversions between them.
//!
//! A UAFPP modulus `D(ε, b)` promises: whenever `ρ(x, T(x)) ≤ b` there is `x*`
//! with `ρ(x, x*) ≤ D` and `ρ(x*, T(x*)) ≤ ε`. A regularity modulus `N(ε, b)`
//! promises `ρ(xₙ, T(xₙ)) ≤ ε` for all `n ≥ N` along KM orbits starting at
//! such `x`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::km::{km_point, LambdaSeq, Schedule, MAX_SUM_TERMS};
use crate::maps::{MapError, NonexpansiveMap};
use crate::numeric::Rational;
use crate::rates::{rate_brs, BigCount, RateError, RateInputs};
use crate::spaces::{Point, Space, DEFAULT_ETA};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UafppError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

type DFn = Arc<dyn Fn(&Rational, &Rational) -> Result<Rational, UafppError> + Send + Sync>;
type NFn = Arc<dyn Fn(&Rational, &Rational) -> Result<BigCount, UafppError> + Send + Sync>;

fn positive(eps: &Rational, b: &Rational) -> Result<(), UafppError> {
    if !eps.is_positive() || !b.is_positive() {
        return Err(UafppError::Argument(format!("epsilon and b must be > 0, got {eps} and {b}")));
    }
    Ok(())
}

/// `(ε, b) ↦ D`.
#[derive(Clone)]
pub struct UafppModulus {
    label: String,
    d_of: DFn,
}

impl fmt::Debug for UafppModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UafppModulus({})", self.label)
    }
}

impl UafppModulus {
    pub fn new(
        label: impl Into<String>,
        d_of: impl Fn(&Rational, &Rational) -> Result<Rational, UafppError> + Send + Sync + 'static,
    ) -> Self {
        UafppModulus {
            label: label.into(),
            d_of: Arc::new(d_of),
        }
    }

    /// `D(ε, b) ≡ d`.
    pub fn constant(d: Rational) -> Self {
        UafppModulus::new(format!("D = {d}"), move |_, _| Ok(d.clone()))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn d_of(&self, eps: &Rational, b: &Rational) -> Result<Rational, UafppError> {
        positive(eps, b)?;
        (self.d_of)(eps, b)
    }
}

/// `(ε, b) ↦ N`. Iterates past `N` have residual at most
/// `residual_factor · ε` (the converter from UAFPP loses a factor 2).
#[derive(Clone)]
pub struct RegularityModulus {
    label: String,
    n_of: NFn,
    pub residual_factor: u32,
}

impl fmt::Debug for RegularityModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RegularityModulus({}, factor {})", self.label, self.residual_factor)
    }
}

impl RegularityModulus {
    pub fn new(
        label: impl Into<String>,
        residual_factor: u32,
        n_of: impl Fn(&Rational, &Rational) -> Result<BigCount, UafppError> + Send + Sync + 'static,
    ) -> Self {
        RegularityModulus {
            label: label.into(),
            n_of: Arc::new(n_of),
            residual_factor,
        }
    }

    /// `N(ε, b) ≡ n`.
    pub fn constant(n: u64) -> Self {
        RegularityModulus::new(format!("N = {n}"), 1, move |_, _| Ok(BigCount::from(n)))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_of(&self, eps: &Rational, b: &Rational) -> Result<BigCount, UafppError> {
        positive(eps, b)?;
        (self.n_of)(eps, b)
    }
}

/// `N(ε, b) := h(ε, max{b, D(ε,b)}, K, α)`.
///
/// From `x` with `ρ(x,T(x)) ≤ b`, the point `x*` given by `D` lies within
/// `b′ = max{b, D}` of `x`, and `ρ(xₙ,T(xₙ)) ≤ ρ(x*,T(x*)) + ε ≤ 2ε` for `n ≥ N`.
pub fn uafpp_to_regularity(phi: &UafppModulus, sched: &Schedule) -> RegularityModulus {
    let phi = phi.clone();
    let (k, alpha) = (sched.k, sched.alpha.clone());
    RegularityModulus::new(format!("h(eps, max(b, {}), K, alpha)", phi.label()), 2, move |eps, b| {
        let d = phi.d_of(eps, b)?;
        let b_prime = if d.inner() > b.inner() { d } else { b.clone() };
        Ok(rate_brs(&RateInputs::new(eps.clone(), b_prime, k, alpha.clone()))?)
    })
}

/// `N` as a step count whose prefix sum can be formed exactly.
fn affordable(n: &BigCount) -> Result<u64, UafppError> {
    n.within(MAX_SUM_TERMS).ok_or_else(|| {
        UafppError::Rate(RateError::Unaffordable(format!("N = {n} exceeds the {MAX_SUM_TERMS}-step limit")))
    })
}

/// `D(ε, b) := b·Σ_{i<N} λᵢ` with `N = R(ε, b)`; the witness is `x_N`
/// (see [`regularity_witness`]).
pub fn regularity_to_uafpp(r: &RegularityModulus, sched: &Schedule) -> UafppModulus {
    let r = r.clone();
    let lambda = sched.lambda.clone();
    UafppModulus::new(format!("b * sum_(i < {}) lambda_i", r.label()), move |eps, b| {
        let n = r.n_of(eps, b)?;
        let sum = match (&lambda, n.as_exact()) {
            // Constant steps: the sum is N·λ for any exact N.
            (LambdaSeq::Constant { value }, Some(n)) => {
                value.inner() * BigRational::from_integer(BigInt::from(n.clone()))
            }
            _ => lambda.partial_sum(affordable(&n)?),
        };
        Ok(Rational(b.inner() * sum))
    })
}

/// `x_N` from `x`, the UAFPP witness behind [`regularity_to_uafpp`].
pub fn regularity_witness(
    s: &Space,
    t: &NonexpansiveMap,
    x: &Point,
    sched: &Schedule,
    r: &RegularityModulus,
    eps: &Rational,
    b: &Rational,
) -> Result<Point, UafppError> {
    let n = affordable(&r.n_of(eps, b)?)?;
    Ok(km_point(s, t, x, sched, n)?)
}

fn contraction_factor(k: &Rational) -> Result<(), UafppError> {
    if k.inner() <= &BigRational::zero() || k.inner() >= &BigRational::one() {
        return Err(UafppError::Argument(format!("contraction factor must lie in (0,1), got {k}")));
    }
    Ok(())
}

/// `D = b/(1−k)` for a `k`-contraction.
pub fn banach_ufpp_modulus(k: &Rational, b: &Rational) -> Result<Rational, UafppError> {
    contraction_factor(k)?;
    if !b.is_positive() {
        return Err(UafppError::Argument(format!("b must be > 0, got {b}")));
    }
    Ok(Rational(b.inner() / (BigRational::one() - k.inner())))
}

/// [`banach_ufpp_modulus`] as a modulus in `(ε, b)`.
pub fn banach_modulus(k: &Rational) -> Result<UafppModulus, UafppError> {
    contraction_factor(k)?;
    let k = k.clone();
    Ok(UafppModulus::new(format!("b/(1-{k})"), move |_, b| banach_ufpp_modulus(&k, b)))
}

/// `kⁿ/(1−k)·ρ(x,T(x))`, the a-priori distance from `Tⁿ(x)` to the fixed point.
pub fn banach_a_priori_bound(k: f64, n: u32, displacement: f64) -> f64 {
    k.powi(n as i32) / (1.0 - k) * displacement
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BanachRun {
    pub point: Point,
    pub iterations: u64,
    /// `ρ(x, x_out)`.
    pub distance: f64,
    /// `ρ(x, T(x))/(1−k)`.
    pub bound: f64,
}

/// Picard iteration until `ρ(xₙ, T(xₙ)) ≤ (1−k)·tol`, which places `xₙ` within
/// `tol` of the fixed point. Each step is checked against the ratio `k`.
pub fn banach_fixed_point(
    t: &NonexpansiveMap,
    x: &Point,
    k: &Rational,
    tol: f64,
    max_iter: u64,
) -> Result<BanachRun, UafppError> {
    contraction_factor(k)?;
    let kf = k.to_f64();
    let s = t.domain();
    let mut cur = x.clone();
    let mut next = t.apply(&cur)?;
    let mut step = s.distance(&cur, &next);
    let bound = step / (1.0 - kf);
    for iterations in 0..=max_iter {
        if step <= (1.0 - kf) * tol {
            let distance = s.distance(x, &cur);
            if distance > bound + DEFAULT_ETA {
                return Err(UafppError::Precondition(format!(
                    "rho(x, x_out) = {distance} exceeds rho(x,Tx)/(1-k) = {bound}"
                )));
            }
            return Ok(BanachRun {
                point: cur,
                iterations,
                distance,
                bound,
            });
        }
        let after = t.apply(&next)?;
        let next_step = s.distance(&next, &after);
        if next_step > kf * step + DEFAULT_ETA {
            return Err(UafppError::Precondition(format!(
                "{} is not a {k}-contraction: step {next_step} after {step}",
                t.label()
            )));
        }
        cur = std::mem::replace(&mut next, after);
        step = next_step;
    }
    Err(UafppError::Precondition(format!(
        "no {tol}-approximate fixed point within {max_iter} iterations"
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GkReport {
    pub samples: usize,
    /// `2D₁ + 1`.
    pub bound: f64,
    pub max_distance: f64,
    /// `(x, y, ρ(x,y))` with `ρ(x,y) > 2D₁ + 1`.
    pub violation: Option<(Point, Point, f64)>,
}

impl GkReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Tests a claimed uniform bound `D₁` (at `ε = 1`, for every `x`) against
/// constant maps `T ≡ y`: their only fixed point is `y`, so the claim forces
/// `ρ(x,y) ≤ ρ(x,x*) + ρ(x*,T(x*)) + ρ(T(x*),T(x)) ≤ 2D₁ + 1` for all pairs.
/// A violation shows the set is too large for the claim.
pub fn gk_boundedness_check(c: &Space, d1: f64, samples: usize, seed: u64) -> GkReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 2.0 * d1 + 1.0;
    let mut report = GkReport {
        samples,
        bound,
        max_distance: 0.0,
        violation: None,
    };
    for _ in 0..samples {
        let x = c.sample(&mut rng);
        let y = c.sample(&mut rng);
        // T ≡ y: ρ(x, T(x)) = ρ(x, y).
        let d = c.distance(&x, &y);
        report.max_distance = report.max_distance.max(d);
        if d > bound + DEFAULT_ETA && report.violation.is_none() {
            report.violation = Some((x, y, d));
        }
    }
    report
}

/// Produces a candidate `x*` for `T` from a start `x`.
pub type UafppProbe = Arc<dyn Fn(&NonexpansiveMap, &Point) -> Result<Point, UafppError> + Send + Sync>;

/// One `(T, x)` pair to test.
#[derive(Clone)]
pub struct UafppCase {
    pub map: NonexpansiveMap,
    pub start: Point,
    pub probe: UafppProbe,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UafppReport {
    pub d: f64,
    pub eps: f64,
    pub checked: usize,
    /// Cases with `ρ(x,T(x)) > b`, outside the hypothesis.
    pub skipped: usize,
    pub failures: Vec<String>,
}

impl UafppReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// For each case with `ρ(x,T(x)) ≤ b`, checks `ρ(x,x*) ≤ D(ε,b)` and
/// `ρ(x*,T(x*)) ≤ ε`.
pub fn check_uafpp_empirically(
    cases: &[UafppCase],
    eps: &Rational,
    b: &Rational,
    phi: &UafppModulus,
) -> Result<UafppReport, UafppError> {
    let d = phi.d_of(eps, b)?.to_f64();
    let (epsf, bf) = (eps.to_f64(), b.to_f64());
    let mut report = UafppReport {
        d,
        eps: epsf,
        checked: 0,
        skipped: 0,
        failures: vec![],
    };
    for case in cases {
        let s = case.map.domain();
        if case.map.displacement(&case.start)? > bf {
            report.skipped += 1;
            continue;
        }
        report.checked += 1;
        let x_star = (case.probe)(&case.map, &case.start)?;
        let dist = s.distance(&case.start, &x_star);
        let res = case.map.displacement(&x_star)?;
        if dist > d + DEFAULT_ETA || res > epsf + DEFAULT_ETA {
            report.failures.push(format!(
                "{} from {:?}: rho(x, x*) = {dist} (D = {d}), residual {res} (eps = {epsf})",
                case.map.label(),
                case.start
            ));
        }
    }
    Ok(report)
}

/// One entry of a modulus table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusRow {
    pub eps: Rational,
    pub b: Rational,
    /// `D` or `N`, or the reason it is unavailable.
    pub value: String,
}

/// `D(ε, b)` over the grid `eps × bs`.
pub fn uafpp_table(phi: &UafppModulus, eps: &[Rational], bs: &[Rational]) -> Vec<ModulusRow> {
    grid(eps, bs, |e, b| phi.d_of(e, b).map(|d| d.to_string()))
}

/// `N(ε, b)` over the grid `eps × bs`.
pub fn regularity_table(r: &RegularityModulus, eps: &[Rational], bs: &[Rational]) -> Vec<ModulusRow> {
    grid(eps, bs, |e, b| r.n_of(e, b).map(|n| n.to_string()))
}

fn grid(
    eps: &[Rational],
    bs: &[Rational],
    f: impl Fn(&Rational, &Rational) -> Result<String, UafppError>,
) -> Vec<ModulusRow> {
    let mut rows = Vec::with_capacity(eps.len() * bs.len());
    for e in eps {
        for b in bs {
            let value = f(e, b).unwrap_or_else(|err| format!("unavailable: {err}"));
            rows.push(ModulusRow {
                eps: e.clone(),
                b: b.clone(),
                value,
            });
        }
    }
    rows
}
