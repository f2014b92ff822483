use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::maps::{FamilyProduct, ProductDomain, ProductMap, SelectionFunction};
use crate::spaces::{Point, Space, DEFAULT_ETA};

use super::ProductError;

/// Base points sampled when validating a family.
const FAMILY_SAMPLES: usize = 256;

/// Builds `H = {(x,u) : u ∈ M, x ∈ C_u}` after sampling the selection contract:
/// `δ(u) ∈ C_u`, `δ` nonexpansive, and `diam(C_u) ≤ b` when `b` is declared.
pub fn family_product(
    ambient: Space,
    base: Space,
    fiber_label: impl Into<String>,
    fibers: impl Fn(&Point) -> Space + Send + Sync + 'static,
    delta: SelectionFunction,
    diameter_bound: Option<f64>,
) -> Result<FamilyProduct, ProductError> {
    check_family(FamilyProduct::new_unchecked(ambient, base, fiber_label, fibers, delta, diameter_bound))
}

/// Validates an already assembled family (see [`family_product`]).
pub fn check_family(f: FamilyProduct) -> Result<FamilyProduct, ProductError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut previous: Option<(Point, Point)> = None;
    for _ in 0..FAMILY_SAMPLES {
        let u = f.base.sample(&mut rng);
        let fiber = f.fiber(&u);
        fiber.validate().map_err(|e| ProductError::Argument(format!("fiber over u = {u:?}: {e}")))?;
        let d = f.selection.apply(&u)?;
        if !fiber.contains(&d) {
            return Err(ProductError::Precondition(format!(
                "selection: delta({u:?}) = {d:?} is not in {}",
                fiber.label()
            )));
        }
        if let (Some(b), Some(diam)) = (f.diameter_bound, fiber.diameter()) {
            if diam > b + DEFAULT_ETA {
                return Err(ProductError::Precondition(format!(
                    "diam of fiber over u = {u:?} is {diam} > declared {b}"
                )));
            }
        }
        if let Some((v, dv)) = &previous {
            let (lhs, rhs) = (f.ambient.distance(&d, dv), f.base.distance(&u, v));
            if lhs > rhs + DEFAULT_ETA {
                return Err(ProductError::Precondition(format!(
                    "selection is not nonexpansive at u = {u:?}, v = {v:?}: {lhs} > {rhs}"
                )));
            }
        }
        previous = Some((u, d));
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub samples: usize,
    pub violations: usize,
    /// `(x, u, P₁T(x,u))` for the first sampled violation.
    pub first_violation: Option<(Point, Point, Point)>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Samples `(x,u) ∈ H` and flags `P₁T(x,u) ∉ C_u` or `P₂T(x,u) ∉ M`.
pub fn check_family_invariance(
    t: &ProductMap,
    family: &FamilyProduct,
    samples: usize,
    seed: u64,
) -> Result<InvarianceReport, ProductError> {
    let h = ProductDomain::Family(family.clone());
    let t = t.with_domain(h.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = InvarianceReport {
        samples,
        violations: 0,
        first_violation: None,
    };
    for _ in 0..samples {
        let (x, u) = h.sample(&mut rng);
        let (tx, tu) = t.apply(&x, &u)?;
        if !family.fiber(&u).contains(&tx) || !family.base.contains(&tu) {
            report.violations += 1;
            report.first_violation.get_or_insert((x, u, tx));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::catalog::{AffinePair, Clamp, FiberSpec, ProductMapSpec};
    use crate::spaces::make_interval;

    fn growing() -> FamilyProduct {
        let unit = make_interval(0.0, 1.0).unwrap();
        let spec = FiberSpec::Interval { lo: 0.0, hi: 1.0, slope: 1.0 };
        let zero = SelectionFunction::constant(unit.clone(), Point::real(0.0));
        check_family(spec.family(Space::Euclidean { dim: 1 }, unit, zero, None)).unwrap()
    }

    #[test]
    fn growing_intervals_form_a_family() {
        let f = growing();
        let h = ProductDomain::Family(f);
        assert!(h.contains(&Point::real(1.5), &Point::real(0.5)));
        assert!(!h.contains(&Point::real(1.6), &Point::real(0.5)));
        assert_eq!(h.distance(&Point::real(1.5), &Point::real(0.5), &Point::real(0.0), &Point::real(0.0)), 1.5);
    }

    #[test]
    fn selection_outside_the_fibers_is_refused() {
        let unit = make_interval(0.0, 1.0).unwrap();
        let bad = SelectionFunction::constant(unit.clone(), Point::real(3.0));
        let r = family_product(Space::Euclidean { dim: 1 }, unit, "C_u = [0, 1+u]", |u| Space::Interval { a: 0.0, b: 1.0 + u.as_real().unwrap() }, bad, None);
        assert!(matches!(r, Err(ProductError::Precondition(_))));
    }

    #[test]
    fn invariance_checks() {
        let f = growing();
        let h = ProductDomain::Family(f.clone());
        // (min(x, 1+u)/2, u): images stay below (1+u)/2.
        let halving = ProductMap::new("(min(x,1+u)/2, u)", h.clone(), |x, u| {
            let (x, u) = (x.as_real().unwrap(), u.as_real().unwrap());
            Ok((Point::real(x.min(1.0 + u) / 2.0), Point::real(u)))
        });
        assert!(check_family_invariance(&halving, &f, 500, 1).unwrap().passed());
        // (x+u, u) leaves C_u whenever x > 1, e.g. at (1.05, 0.1).
        let drift = ProductMapSpec::Affine {
            coefficients: AffinePair { a: 1.0, b: 1.0, c: 0.0, d: 0.0, e: 1.0, f: 0.0 },
            clamp_x: Clamp::NONE,
            clamp_u: Clamp::NONE,
        }
        .build(h)
        .unwrap();
        let (tx, _) = drift.apply(&Point::real(1.05), &Point::real(0.1)).unwrap();
        assert!(!f.fiber(&Point::real(0.1)).contains(&tx));
        let r = check_family_invariance(&drift, &f, 500, 1).unwrap();
        assert!(!r.passed() && r.first_violation.is_some());
    }
}
