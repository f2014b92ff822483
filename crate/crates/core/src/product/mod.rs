//! The constructive product-space pipeline.
//!
//! For `T: H → H` and a selection `δ`, each `φₙ` is a nonexpansive self-map of
//! `M`; an AFPP oracle gives `zₙ` with `d(zₙ, φₙ(zₙ)) ≤ 1/n`, and the candidate
//! `((δ(zₙ))ₙ, zₙ)` has `d∞`-residual `max{ρ((δ(zₙ))ₙ, T_{zₙ}((δ(zₙ))ₙ)), 1/n}`
//! at most. The rates `g` and `g̃` say how large `n` must be for this to be
//! within `ε` of the slice residuals.

mod family;
mod oracle;

pub use family::{check_family, check_family_invariance, family_product, InvarianceReport};
pub use oracle::{solve_checked, AffineOracle, AfppOracle, GridOracle};

use std::sync::Arc;

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::km::{km_iterate, Schedule};
use crate::maps::{phi, selection_iterate, slice, MapError, ProductMap, SelectionFunction};
use crate::numeric::{inverse_ceil_plus_one, Rational};
use crate::rates::{rate_product, rate_product_ishikawa, BigCount, RateError};
use crate::spaces::{Point, DEFAULT_ETA};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProductError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error("oracle `{oracle}` failed: {reason}")]
    Oracle { oracle: String, reason: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invariant violated (implementation bug or non-nonexpansive input): {0}")]
    Invariant(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// `probe(u, ε)`: a point `x* ∈ C_u` close to `δ(u)` with small slice residual.
pub type Probe = Arc<dyn Fn(&Point, f64) -> Result<Point, MapError> + Send + Sync>;

/// `ε ↦ φ(ε)`, the distance within which probes find their points.
pub type DistanceModulus = Arc<dyn Fn(&Rational) -> Rational + Send + Sync>;

/// The data every pipeline operation shares.
#[derive(Clone)]
pub struct Pipeline {
    pub t: ProductMap,
    pub delta: SelectionFunction,
    pub sched: Schedule,
    pub oracle: Arc<dyn AfppOracle>,
    pub eta: f64,
}

impl Pipeline {
    pub fn new(t: ProductMap, delta: SelectionFunction, sched: Schedule, oracle: Arc<dyn AfppOracle>) -> Self {
        Pipeline {
            t,
            delta,
            sched,
            oracle,
            eta: DEFAULT_ETA,
        }
    }
}

/// One element of the sequence `(zₙ)` and its candidate point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxFixed {
    pub n: u64,
    pub z: Point,
    /// `(δ(z))ₙ`.
    pub x_n: Point,
    /// `d∞(((δ(z))ₙ, z), T((δ(z))ₙ, z))`.
    pub residual: f64,
    /// `ρ((δ(z))ₙ, T_z((δ(z))ₙ))`.
    pub slice_residual: f64,
    /// `d(z, φₙ(z))`.
    pub oracle_residual: f64,
}

impl ApproxFixed {
    pub fn point(&self) -> Point {
        Point::pair(self.x_n.clone(), self.z.clone())
    }
}

/// `zₙ` from the oracle at tolerance `1/n`, and the candidate `((δ(zₙ))ₙ, zₙ)`.
/// Re-verifies `residual ≤ max{slice residual, 1/n} + η`.
pub fn approx_fixed_sequence(p: &Pipeline, n: u64) -> Result<ApproxFixed, ProductError> {
    if n == 0 {
        return Err(ProductError::Argument("the sequence (z_n) starts at n = 1".into()));
    }
    let tol = 1.0 / n as f64;
    let phi_n = phi(&p.t, &p.delta, &p.sched, n);
    let (z, oracle_residual) = solve_checked(p.oracle.as_ref(), &phi_n, tol)?;
    let x_n = selection_iterate(&p.t, &p.delta, &p.sched, &z, n)?;
    let residual = p.t.displacement(&x_n, &z)?;
    let slice_residual = slice(&p.t, &z)?.displacement(&x_n)?;
    if residual > slice_residual.max(tol) + p.eta {
        return Err(ProductError::Invariant(format!(
            "n = {n}: residual {residual} > max{{{slice_residual}, 1/{n}}}"
        )));
    }
    Ok(ApproxFixed {
        n,
        z,
        x_n,
        residual,
        slice_residual,
        oracle_residual,
    })
}

/// `n` to run at: the rate if affordable, else the budget (flagged).
fn choose_n(bound: &BigCount, eps: &Rational, budget: u64) -> Result<(u64, bool), ProductError> {
    if let Some(n) = bound.within(budget) {
        return Ok((n, false));
    }
    let floor = inverse_ceil_plus_one(eps.inner());
    match floor.to_u64() {
        Some(f) if f <= budget => Ok((budget, true)),
        _ => Err(ProductError::Argument(format!(
            "budget {budget} is below ceil(1/eps) + 1 = {floor}"
        ))),
    }
}

/// The outcome of one main-lemma execution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaRun {
    pub step: ApproxFixed,
    pub bound: BigCount,
    pub truncated: bool,
    /// `x*ₙ = probe(zₙ)`.
    pub probe_point: Point,
    /// `ρ(x*ₙ, T_{zₙ}(x*ₙ))`.
    pub probe_residual: f64,
    /// `ρ(δ(zₙ), T_{zₙ}(δ(zₙ)))`, at most `2b₁ + b₂`.
    pub start_displacement: f64,
    /// `ρ(x*ₙ, T_{zₙ}(x*ₙ)) + ε`.
    pub lemma_rhs: f64,
    pub lemma_holds: bool,
}

/// Runs the sequence at `n = g(ε, b₁, b₂, K, α)` (or the budget) and checks
/// `d∞(candidate, T(candidate)) ≤ ρ(x*ₙ, T_{zₙ}(x*ₙ)) + ε`.
///
/// The inequality is asserted only at the certified `n`; at a
/// budget-truncated `n` it is reported.
pub fn main_lemma_run(
    p: &Pipeline,
    b1: &Rational,
    b2: &Rational,
    eps: &Rational,
    probe: &dyn Fn(&Point, f64) -> Result<Point, MapError>,
    budget: u64,
) -> Result<LemmaRun, ProductError> {
    let bound = rate_product(eps, b1, b2, p.sched.k, &p.sched.alpha)?;
    let (n, truncated) = choose_n(&bound, eps, budget)?;
    let step = approx_fixed_sequence(p, n)?;
    let (b1f, b2f, epsf) = (b1.to_f64(), b2.to_f64(), eps.to_f64());

    let z = &step.z;
    let tz = slice(&p.t, z)?;
    let start = p.delta.apply(z)?;
    let x_star = probe(z, epsf)?;
    if !tz.domain().contains(&x_star) {
        return Err(ProductError::Precondition(format!(
            "probe at u = {z:?} returned {x_star:?} outside {}",
            tz.domain().label()
        )));
    }
    let ambient = p.t.domain().ambient();
    let probe_distance = ambient.distance(&start, &x_star);
    let probe_residual = tz.displacement(&x_star)?;
    if probe_distance > b1f + p.eta || probe_residual > b2f + p.eta {
        return Err(ProductError::Precondition(format!(
            "probe at u = {z:?}: rho(delta(u), x*) = {probe_distance} (b1 = {b1f}), \
             rho(x*, T_u x*) = {probe_residual} (b2 = {b2f})"
        )));
    }
    let start_displacement = tz.displacement(&start)?;
    if start_displacement > 2.0 * b1f + b2f + p.eta {
        return Err(ProductError::Invariant(format!(
            "rho(delta(z), T_z delta(z)) = {start_displacement} > 2 b1 + b2 = {}",
            2.0 * b1f + b2f
        )));
    }
    let lemma_rhs = probe_residual + epsf;
    let lemma_holds = step.residual <= lemma_rhs + p.eta;
    if !truncated && !lemma_holds {
        return Err(ProductError::Invariant(format!(
            "at certified n = {n}: residual {} > {lemma_rhs}",
            step.residual
        )));
    }
    Ok(LemmaRun {
        step,
        bound,
        truncated,
        probe_point: x_star,
        probe_residual,
        start_displacement,
        lemma_rhs,
        lemma_holds,
    })
}

/// How the boundedness hypotheses of a solve are realized.
#[derive(Clone)]
pub enum SolveMode {
    /// `sup_u r_{C_u}(T_u) = r*` with probes within `φ(ε)` of `δ(u)` having
    /// slice residual at most `r* + ε`. Target residual: `r* + ε`.
    SupResidual {
        probe: Probe,
        modulus: DistanceModulus,
        r_star: Rational,
    },
    /// Every KM orbit of `T_u` from `y(u)` (default `δ(u)`) has diameter at
    /// most `b`, and `ρ(δ(u), y(u)) ≤ b`. Target residual: `ε`.
    BoundedOrbit {
        b: Rational,
        start: Option<Probe>,
        /// Extra base points `u` on which the hypothesis is sampled.
        samples: usize,
        seed: u64,
    },
}

/// Which result justifies a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Justification {
    /// `r_H(T) ≤ sup_u r_{C_u}(T_u)`, through the main lemma and `g`.
    SupResidualBound,
    /// Bounded orbits from a point near `δ(u)`: `r_H(T) = 0`, through `g̃`.
    BoundedOrbits,
    /// Bounded orbits of `(δ(u))ₙ` itself (e.g. bounded `C`).
    BoundedSelectionOrbits,
}

/// Residual of the inner main-lemma inequality at the emitted point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub asserted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub point: Point,
    /// `d∞(point, T(point))`, recomputed at emission.
    pub residual: f64,
    pub eps_target: f64,
    pub n_used: u64,
    pub bound_used: Option<BigCount>,
    pub truncated: bool,
    pub justification: Justification,
    pub lemma: Option<LemmaCheck>,
    /// Hypothesis checks that failed on sampled base points.
    pub notes: Vec<String>,
}

/// Best effort when the target residual was not reached.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Partial {
    pub best_point: Point,
    pub best_residual: f64,
    pub eps_target: f64,
    pub n_used: u64,
    pub bound_used: Option<BigCount>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveOutcome {
    Certified(Certificate),
    BudgetExhausted(Partial),
}

impl SolveOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            SolveOutcome::Certified(c) => Some(c),
            SolveOutcome::BudgetExhausted(_) => None,
        }
    }
}

/// Rounds of the `ε, ε/2, …` schedule in sup-residual mode.
const MAX_ROUNDS: u32 = 32;

/// Produces a point of `H` with `d∞`-residual at most the mode's target, or
/// reports the best residual reached within `budget` KM steps per evaluation.
pub fn solve_product_afpp(
    p: &Pipeline,
    eps: &Rational,
    mode: &SolveMode,
    budget: u64,
) -> Result<SolveOutcome, ProductError> {
    if !eps.is_positive() {
        return Err(ProductError::Argument(format!("epsilon must be > 0, got {eps}")));
    }
    match mode {
        SolveMode::SupResidual { probe, modulus, r_star } => {
            let target = r_star.to_f64() + eps.to_f64();
            let mut inner = Rational(eps.inner() / num_rational::BigRational::from_integer(2.into()));
            let mut last = None;
            for _ in 0..MAX_ROUNDS {
                let b1 = modulus(&inner);
                let b2 = Rational(r_star.inner() + inner.inner());
                let run = main_lemma_run(p, &b1, &b2, &inner, probe.as_ref(), budget)?;
                let point = run.step.point();
                let residual = recompute(p, &point)?;
                let lemma = LemmaCheck {
                    lhs: run.step.residual,
                    rhs: run.lemma_rhs,
                    holds: run.lemma_holds,
                    asserted: !run.truncated,
                };
                if residual <= target {
                    return Ok(SolveOutcome::Certified(Certificate {
                        point,
                        residual,
                        eps_target: target,
                        n_used: run.step.n,
                        bound_used: Some(run.bound),
                        truncated: run.truncated,
                        justification: Justification::SupResidualBound,
                        lemma: Some(lemma),
                        notes: vec![],
                    }));
                }
                let truncated = run.truncated;
                last = Some((point, residual, run.step.n, run.bound));
                if truncated {
                    break;
                }
                inner = Rational(inner.inner() / num_rational::BigRational::from_integer(2.into()));
            }
            let (best_point, best_residual, n_used, bound) = last.expect("at least one round ran");
            Ok(SolveOutcome::BudgetExhausted(Partial {
                best_point,
                best_residual,
                eps_target: target,
                n_used,
                bound_used: Some(bound),
                notes: vec![],
            }))
        }
        SolveMode::BoundedOrbit { b, start, samples, seed } => {
            let bound = rate_product_ishikawa(eps, b, p.sched.k, &p.sched.alpha)?;
            let (n, truncated) = choose_n(&bound, eps, budget)?;
            let step = approx_fixed_sequence(p, n)?;
            let mut notes = Vec::new();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut bases = vec![step.z.clone()];
            bases.extend((0..*samples).map(|_| p.t.domain().base().sample(&mut rng)));
            for u in &bases {
                if let Some(note) = orbit_hypothesis(p, u, b.to_f64(), start.as_ref(), n)? {
                    notes.push(note);
                }
            }
            let point = step.point();
            let residual = recompute(p, &point)?;
            let target = eps.to_f64();
            if residual <= target {
                Ok(SolveOutcome::Certified(Certificate {
                    point,
                    residual,
                    eps_target: target,
                    n_used: n,
                    bound_used: Some(bound),
                    truncated,
                    justification: if start.is_some() {
                        Justification::BoundedOrbits
                    } else {
                        Justification::BoundedSelectionOrbits
                    },
                    lemma: None,
                    notes,
                }))
            } else {
                Ok(SolveOutcome::BudgetExhausted(Partial {
                    best_point: point,
                    best_residual: residual,
                    eps_target: target,
                    n_used: n,
                    bound_used: Some(bound),
                    notes,
                }))
            }
        }
    }
}

fn recompute(p: &Pipeline, point: &Point) -> Result<f64, ProductError> {
    let (x, u) = point.as_pair().expect("candidates are pairs");
    Ok(p.t.displacement(x, u)?)
}

/// Samples the bounded-orbit hypothesis at `u` over the first `n` steps.
fn orbit_hypothesis(
    p: &Pipeline,
    u: &Point,
    b: f64,
    start: Option<&Probe>,
    n: u64,
) -> Result<Option<String>, ProductError> {
    let tu = slice(&p.t, u)?;
    let d = p.delta.apply(u)?;
    let y = match start {
        Some(probe) => probe(u, b)?,
        None => d.clone(),
    };
    let ambient = p.t.domain().ambient();
    let gap = ambient.distance(&d, &y);
    if gap > b + p.eta {
        return Ok(Some(format!("u = {u:?}: rho(delta(u), y) = {gap} > b = {b}")));
    }
    let orbit = match km_iterate(ambient, &tu, &y, &p.sched, n) {
        Ok(t) => t.points,
        Err(e) => return Ok(Some(format!("u = {u:?}: orbit left the domain: {e}"))),
    };
    // Diameter of the orbit: max over pairs.
    let mut diam: f64 = 0.0;
    for (i, a) in orbit.iter().enumerate() {
        for c in &orbit[i + 1..] {
            diam = diam.max(ambient.distance(a, c));
        }
    }
    Ok((diam > b + p.eta).then(|| format!("u = {u:?}: orbit diameter {diam} > b = {b} within {n} steps")))
}

/// `min_{1 ≤ n ≤ N}` of the candidate residuals: an upper bound on `r_H(T)`,
/// nonincreasing in `N`.
pub fn estimate_rh(p: &Pipeline, n_max: u64) -> Result<f64, ProductError> {
    let mut best = f64::INFINITY;
    for n in 1..=n_max.max(1) {
        best = best.min(approx_fixed_sequence(p, n)?.residual);
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisplacementReport {
    pub samples: usize,
    pub bound: f64,
    pub max_displacement: f64,
    pub violations: usize,
    pub first_violation: Option<Point>,
}

impl DisplacementReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Samples `ρ(T_u(δ(u)), δ(u)) ≤ b` over `u ∈ M`.
pub fn check_uniform_displacement(
    t: &ProductMap,
    delta: &SelectionFunction,
    b: f64,
    samples: usize,
    seed: u64,
) -> Result<DisplacementReport, ProductError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = DisplacementReport {
        samples,
        bound: b,
        max_displacement: 0.0,
        violations: 0,
        first_violation: None,
    };
    for _ in 0..samples {
        let u = t.domain().base().sample(&mut rng);
        let d = slice(t, &u)?.displacement(&delta.apply(&u)?)?;
        report.max_displacement = report.max_displacement.max(d);
        if d > b {
            report.violations += 1;
            report.first_violation.get_or_insert(u);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::catalog::{self, AffinePair, Clamp, ProductMapSpec};
    use crate::maps::ProductDomain;
    use crate::spaces::{make_half_line, make_interval, Space};

    fn unit() -> Space {
        make_interval(0.0, 1.0).unwrap()
    }

    fn diagonal_pipeline() -> Pipeline {
        Pipeline::new(
            catalog::diagonal_average(unit(), unit()),
            SelectionFunction::identity(unit()),
            Schedule::half(),
            Arc::new(GridOracle::new(unit()).unwrap()),
        )
    }

    fn exact_probe() -> Probe {
        Arc::new(|u: &Point, _| Ok(u.clone()))
    }

    #[test]
    fn diagonal_candidates_are_fixed() {
        let p = diagonal_pipeline();
        for n in [1, 2, 10] {
            let s = approx_fixed_sequence(&p, n).unwrap();
            assert_eq!(s.residual, 0.0);
            assert_eq!(s.x_n, s.z);
        }
        assert!(approx_fixed_sequence(&p, 0).is_err());
        assert_eq!(estimate_rh(&p, 1).unwrap(), 0.0);
    }

    #[test]
    fn constant_map_candidate_by_hand() {
        // T ≡ (1, m), δ ≡ 0, λ = 1/2: (δ(m))₅ = 1 − 2⁻⁵, residual 2⁻⁵.
        let t = catalog::constant_pair(unit(), unit(), Point::real(1.0), Point::real(0.25));
        let p = Pipeline::new(
            t,
            SelectionFunction::constant(unit(), Point::real(0.0)),
            Schedule::half(),
            Arc::new(GridOracle::new(unit()).unwrap()),
        );
        let s = approx_fixed_sequence(&p, 5).unwrap();
        assert_eq!(s.z, Point::real(0.25));
        assert_eq!(s.x_n, Point::real(0.96875));
        assert_eq!(s.residual, 0.03125);
    }

    #[test]
    fn main_lemma_on_the_diagonal() {
        let p = diagonal_pipeline();
        let run = main_lemma_run(&p, &Rational::new(1, 10), &Rational::new(1, 10), &Rational::new(1, 100), &|u, _| Ok(u.clone()), 200)
            .unwrap();
        assert!(run.truncated);
        assert_eq!(run.step.n, 200);
        assert!(run.lemma_holds && run.step.residual == 0.0);
    }

    #[test]
    fn main_lemma_with_a_shift_map() {
        // C = [0,10], T(x,u) = (max(x−1,0), u), δ ≡ 5, probe ≡ 0.
        let c = make_interval(0.0, 10.0).unwrap();
        let t = ProductMapSpec::Affine {
            coefficients: AffinePair { a: 1.0, b: 0.0, c: -1.0, d: 0.0, e: 1.0, f: 0.0 },
            clamp_x: Clamp::below(0.0),
            clamp_u: Clamp::NONE,
        }
        .build(ProductDomain::plain(c, unit()))
        .unwrap();
        let p = Pipeline::new(
            t,
            SelectionFunction::constant(unit(), Point::real(5.0)),
            Schedule::half(),
            Arc::new(GridOracle::new(unit()).unwrap()),
        );
        let eps = Rational::new(1, 100);
        let run = main_lemma_run(&p, &Rational::integer(5), &Rational::new(1, 1_000_000_000), &eps, &|_, _| Ok(Point::real(0.0)), 128)
            .unwrap();
        assert!(run.lemma_holds);
        assert!(run.step.residual <= 0.01);
        // A probe that breaks its contract is named.
        let err = main_lemma_run(&p, &Rational::integer(1), &Rational::integer(1), &eps, &|_, _| Ok(Point::real(0.0)), 128);
        assert!(matches!(err, Err(ProductError::Precondition(_))));
    }

    #[test]
    fn tiny_regime_uses_the_rate_itself() {
        // α ≡ 0, ε = 4, b₁ = 1/400, b₂ = 1/200: g = max{2, 1} = 2, affordable.
        let mut p = diagonal_pipeline();
        p.sched.alpha = crate::rates::AlphaFn::Tabulated { values: vec![0], step: 0 };
        let run = main_lemma_run(&p, &Rational::new(1, 400), &Rational::new(1, 200), &Rational::integer(4), &|u, _| Ok(u.clone()), 10)
            .unwrap();
        assert!(!run.truncated);
        assert_eq!(run.step.n, 2);
    }

    #[test]
    fn bounded_unit_square_certificate() {
        let p = diagonal_pipeline();
        let mode = SolveMode::BoundedOrbit { b: Rational::integer(1), start: None, samples: 4, seed: 0 };
        let out = solve_product_afpp(&p, &Rational::new(1, 100), &mode, 128).unwrap();
        let c = out.certificate().unwrap();
        assert_eq!(c.residual, 0.0);
        assert!(c.truncated && c.notes.is_empty());
        assert_eq!(c.justification, Justification::BoundedSelectionOrbits);
    }

    #[test]
    fn unbounded_fiber_with_stationary_orbit() {
        // C = [0,∞), T(x,u) = (max(x−1,0), clamp(x,0,1)), δ(u) = u, y := 0.
        let c = make_half_line(0.0).unwrap();
        let t = product_shift(c, 1.0);
        let p = Pipeline::new(t, SelectionFunction::identity(unit()), Schedule::half(), Arc::new(GridOracle::new(unit()).unwrap()));
        let origin: Probe = Arc::new(|_: &Point, _| Ok(Point::real(0.0)));
        let mode = SolveMode::BoundedOrbit { b: Rational::integer(1), start: Some(origin), samples: 8, seed: 3 };
        let out = solve_product_afpp(&p, &Rational::new(1, 100), &mode, 128).unwrap();
        let c = out.certificate().expect("certified");
        assert!(c.residual <= 0.01 && c.notes.is_empty(), "{c:?}");
    }

    fn product_shift(c: Space, shift: f64) -> ProductMap {
        let (d, cu) = if shift < 0.0 { (0.0, Clamp::NONE) } else { (1.0, Clamp::both(0.0, 1.0)) };
        ProductMapSpec::Affine {
            coefficients: AffinePair { a: 1.0, b: 0.0, c: -shift.abs() * if shift < 0.0 { -1.0 } else { 1.0 }, d, e: 1.0 - d, f: 0.0 },
            clamp_x: Clamp::below(0.0),
            clamp_u: cu,
        }
        .build(ProductDomain::plain(c, unit()))
        .unwrap()
    }

    #[test]
    fn escaping_map_exhausts_the_budget() {
        // T(x,u) = (x + 1, u) on [0,∞) × [0,1] has r_H = 1.
        let c = make_half_line(0.0).unwrap();
        let t = product_shift(c, -1.0);
        let p = Pipeline::new(t, SelectionFunction::identity(unit()), Schedule::half(), Arc::new(GridOracle::new(unit()).unwrap()));
        let mode = SolveMode::BoundedOrbit { b: Rational::integer(1), start: None, samples: 2, seed: 0 };
        match solve_product_afpp(&p, &Rational::new(1, 10), &mode, 50).unwrap() {
            SolveOutcome::BudgetExhausted(part) => {
                assert_eq!(part.best_residual, 1.0);
                assert!(!part.notes.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sup_residual_mode_with_positive_r_star() {
        // T(x,u) = (x + 1/2, (u+1)/2) on R × [0,1]: every slice residual is 1/2.
        let t = ProductMapSpec::Affine {
            coefficients: AffinePair { a: 1.0, b: 0.0, c: 0.5, d: 0.0, e: 0.5, f: 0.5 },
            clamp_x: Clamp::NONE,
            clamp_u: Clamp::NONE,
        }
        .build(ProductDomain::plain(Space::Euclidean { dim: 1 }, unit()))
        .unwrap();
        let p = Pipeline::new(t, SelectionFunction::identity(unit()), Schedule::half(), Arc::new(GridOracle::new(unit()).unwrap()));
        let mode = SolveMode::SupResidual {
            probe: exact_probe(),
            modulus: Arc::new(|_: &Rational| Rational::integer(1)),
            r_star: Rational::new(1, 2),
        };
        let eps = Rational::new(1, 100);
        let c = solve_product_afpp(&p, &eps, &mode, 256).unwrap();
        let c = c.certificate().unwrap();
        assert_eq!(c.residual, 0.5);
        assert!(estimate_rh(&p, 20).unwrap() <= 0.5 + 0.02);
    }

    #[test]
    fn displacement_checks() {
        let t = catalog::diagonal_average(unit(), unit());
        let r = check_uniform_displacement(&t, &SelectionFunction::identity(unit()), 1e-12, 100, 0).unwrap();
        assert!(r.passed() && r.max_displacement == 0.0);
        let r = check_uniform_displacement(&t, &SelectionFunction::constant(unit(), Point::real(0.0)), 0.1, 100, 0).unwrap();
        assert!(!r.passed() && r.first_violation.is_some());
    }
}
