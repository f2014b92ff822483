//! Nonexpansive maps, product maps `T: H → H` with their slices `T_u`,
//! selection functions `δ` and the maps `φₙ(u) = P₂ T((δ(u))ₙ, u)`.
//!
//! Nonexpansiveness is never certified: maps are black boxes and
//! [`falsify_nonexpansive`] searches for counterexamples.

pub mod catalog;

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::km::{km_point, Schedule};
use crate::spaces::{Point, ProductSpace, Space, SpaceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("{map}: input {point} is outside {domain}")]
    Domain {
        map: String,
        point: String,
        domain: String,
    },
    #[error("KM step {step}: {what} {point} is outside {domain}")]
    IterateEscape {
        step: u64,
        what: &'static str,
        point: String,
        domain: String,
    },
    #[error("invalid map: {0}")]
    Argument(String),
}

pub type PointFn = Arc<dyn Fn(&Point) -> Result<Point, MapError> + Send + Sync>;
pub type PairFn = Arc<dyn Fn(&Point, &Point) -> Result<(Point, Point), MapError> + Send + Sync>;
pub type FiberFn = Arc<dyn Fn(&Point) -> Space + Send + Sync>;

/// A self-map of `domain`, claimed to be 1-Lipschitz.
#[derive(Clone)]
pub struct NonexpansiveMap {
    label: String,
    domain: Space,
    f: PointFn,
}

impl fmt::Debug for NonexpansiveMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NonexpansiveMap({} on {})", self.label, self.domain.label())
    }
}

impl NonexpansiveMap {
    pub fn new(
        label: impl Into<String>,
        domain: Space,
        f: impl Fn(&Point) -> Result<Point, MapError> + Send + Sync + 'static,
    ) -> Self {
        NonexpansiveMap {
            label: label.into(),
            domain,
            f: Arc::new(f),
        }
    }

    /// A map given by an infallible function.
    pub fn from_fn(
        label: impl Into<String>,
        domain: Space,
        f: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        Self::new(label, domain, move |p| Ok(f(p)))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &Space {
        &self.domain
    }

    pub fn apply(&self, p: &Point) -> Result<Point, MapError> {
        if !self.domain.contains(p) {
            return Err(MapError::Domain {
                map: self.label.clone(),
                point: format!("{p:?}"),
                domain: self.domain.label(),
            });
        }
        (self.f)(p)
    }

    /// `ρ(x, T(x))`.
    pub fn displacement(&self, p: &Point) -> Result<f64, MapError> {
        Ok(self.domain.distance(p, &self.apply(p)?))
    }
}

/// The domain `H` of a product map: either `(C × M)∞` or the family
/// `{(x, u) : u ∈ M, x ∈ C_u}` inside `(X × M)∞`.
#[derive(Clone, Debug)]
pub enum ProductDomain {
    Plain(ProductSpace),
    Family(FamilyProduct),
}

impl ProductDomain {
    pub fn plain(c: Space, m: Space) -> Self {
        ProductDomain::Plain(ProductSpace { left: c, right: m })
    }

    /// The space in which `ρ` and `W` on the first coordinate are evaluated.
    pub fn ambient(&self) -> &Space {
        match self {
            ProductDomain::Plain(p) => &p.left,
            ProductDomain::Family(f) => &f.ambient,
        }
    }

    /// `M`.
    pub fn base(&self) -> &Space {
        match self {
            ProductDomain::Plain(p) => &p.right,
            ProductDomain::Family(f) => &f.base,
        }
    }

    /// `C`, or `C_u` in family mode.
    pub fn fiber(&self, u: &Point) -> Space {
        match self {
            ProductDomain::Plain(p) => p.left.clone(),
            ProductDomain::Family(f) => f.fiber(u),
        }
    }

    pub fn contains(&self, x: &Point, u: &Point) -> bool {
        self.base().contains(u) && self.fiber(u).contains(x)
    }

    /// `d∞((x,u),(y,v)) = max{ρ(x,y), d(u,v)}`.
    pub fn distance(&self, x: &Point, u: &Point, y: &Point, v: &Point) -> f64 {
        self.ambient().distance(x, y).max(self.base().distance(u, v))
    }

    pub fn label(&self) -> String {
        match self {
            ProductDomain::Plain(p) => format!("({} x {})_inf", p.left.label(), p.right.label()),
            ProductDomain::Family(f) => format!("H = {{(x,u): u in {}, x in {}}}", f.base.label(), f.fiber_label),
        }
    }

    /// A random member `(x, u)` of `H`.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> (Point, Point) {
        let u = self.base().sample(rng);
        let x = self.fiber(&u).sample(rng);
        (x, u)
    }
}

/// A nonexpansive selection `δ: M → ∪ C_u` with `δ(u) ∈ C_u`.
#[derive(Clone)]
pub struct SelectionFunction {
    label: String,
    from: Space,
    f: PointFn,
}

impl fmt::Debug for SelectionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SelectionFunction({} on {})", self.label, self.from.label())
    }
}

impl SelectionFunction {
    pub fn new(
        label: impl Into<String>,
        from: Space,
        f: impl Fn(&Point) -> Result<Point, MapError> + Send + Sync + 'static,
    ) -> Self {
        SelectionFunction {
            label: label.into(),
            from,
            f: Arc::new(f),
        }
    }

    /// `δ(u) = u`, for `M ⊆ C`.
    pub fn identity(m: Space) -> Self {
        Self::new("identity", m, |u| Ok(u.clone()))
    }

    /// `δ(u) = x₀`.
    pub fn constant(m: Space, x0: Point) -> Self {
        Self::new(format!("constant {x0:?}"), m, move |_| Ok(x0.clone()))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn from_space(&self) -> &Space {
        &self.from
    }

    pub fn apply(&self, u: &Point) -> Result<Point, MapError> {
        if !self.from.contains(u) {
            return Err(MapError::Domain {
                map: format!("selection {}", self.label),
                point: format!("{u:?}"),
                domain: self.from.label(),
            });
        }
        (self.f)(u)
    }
}

/// A family `(C_u)_{u ∈ M}` of convex subsets of `ambient` with a selection.
#[derive(Clone)]
pub struct FamilyProduct {
    pub ambient: Space,
    pub base: Space,
    pub fiber_label: String,
    fibers: FiberFn,
    pub selection: SelectionFunction,
    /// Declared bound `diam(C_u) ≤ b` for every `u`.
    pub diameter_bound: Option<f64>,
}

impl fmt::Debug for FamilyProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilyProduct")
            .field("ambient", &self.ambient)
            .field("base", &self.base)
            .field("fibers", &self.fiber_label)
            .field("selection", &self.selection)
            .field("diameter_bound", &self.diameter_bound)
            .finish()
    }
}

impl FamilyProduct {
    /// Builds the family without validating the selection; see
    /// [`crate::product::family_product`] for the checked constructor.
    pub fn new_unchecked(
        ambient: Space,
        base: Space,
        fiber_label: impl Into<String>,
        fibers: impl Fn(&Point) -> Space + Send + Sync + 'static,
        selection: SelectionFunction,
        diameter_bound: Option<f64>,
    ) -> Self {
        FamilyProduct {
            ambient,
            base,
            fiber_label: fiber_label.into(),
            fibers: Arc::new(fibers),
            selection,
            diameter_bound,
        }
    }

    pub fn fiber(&self, u: &Point) -> Space {
        (self.fibers)(u)
    }
}

/// `T: H → H`, claimed nonexpansive for `d∞`.
#[derive(Clone)]
pub struct ProductMap {
    label: String,
    domain: ProductDomain,
    f: PairFn,
}

impl fmt::Debug for ProductMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProductMap({} on {})", self.label, self.domain.label())
    }
}

impl ProductMap {
    pub fn new(
        label: impl Into<String>,
        domain: ProductDomain,
        f: impl Fn(&Point, &Point) -> Result<(Point, Point), MapError> + Send + Sync + 'static,
    ) -> Self {
        ProductMap {
            label: label.into(),
            domain,
            f: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    /// The same map on another domain, e.g. a family with `C_u ≡ C`.
    pub fn with_domain(&self, domain: ProductDomain) -> ProductMap {
        ProductMap {
            label: self.label.clone(),
            domain,
            f: self.f.clone(),
        }
    }

    pub fn apply(&self, x: &Point, u: &Point) -> Result<(Point, Point), MapError> {
        if !self.domain.contains(x, u) {
            return Err(MapError::Domain {
                map: self.label.clone(),
                point: format!("({x:?}, {u:?})"),
                domain: self.domain.label(),
            });
        }
        (self.f)(x, u)
    }

    /// `d∞((x,u), T(x,u))`.
    pub fn displacement(&self, x: &Point, u: &Point) -> Result<f64, MapError> {
        let (tx, tu) = self.apply(x, u)?;
        Ok(self.domain.distance(x, u, &tx, &tu))
    }

    /// `T` as a self-map of the space `(C × M)∞`, for plain domains.
    pub fn as_self_map(&self) -> Option<NonexpansiveMap> {
        let ProductDomain::Plain(p) = &self.domain else {
            return None;
        };
        let space = Space::Product(Box::new(p.clone()));
        let t = self.clone();
        Some(NonexpansiveMap::new(self.label.clone(), space, move |p| {
            let (x, u) = p.as_pair().expect("product space members are pairs");
            let (a, b) = t.apply(x, u)?;
            Ok(Point::pair(a, b))
        }))
    }
}

/// `T_u(x) = P₁ T(x, u)` on `C` (or `C_u`).
pub fn slice(t: &ProductMap, u: &Point) -> Result<NonexpansiveMap, MapError> {
    let base = t.domain.base();
    if !base.contains(u) {
        return Err(MapError::Domain {
            map: format!("slice of {}", t.label),
            point: format!("{u:?}"),
            domain: base.label(),
        });
    }
    let fiber = t.domain.fiber(u);
    let t = t.clone();
    let u = u.clone();
    let label = format!("{} sliced at {u:?}", t.label);
    Ok(NonexpansiveMap::new(label, fiber, move |x| Ok(t.apply(x, &u)?.0)))
}

/// `(δ(u))ₙ`: the `n`-th KM iterate of `T_u` started at `δ(u)`.
pub fn selection_iterate(
    t: &ProductMap,
    delta: &SelectionFunction,
    sched: &Schedule,
    u: &Point,
    n: u64,
) -> Result<Point, MapError> {
    let tu = slice(t, u)?;
    let start = delta.apply(u)?;
    km_point(t.domain.ambient(), &tu, &start, sched, n)
}

/// `φₙ(u) = P₂ T((δ(u))ₙ, u)`, a self-map of `M`. The KM orbit is recomputed
/// on every call.
pub fn phi(t: &ProductMap, delta: &SelectionFunction, sched: &Schedule, n: u64) -> NonexpansiveMap {
    let (t, delta, sched) = (t.clone(), delta.clone(), sched.clone());
    let m = t.domain.base().clone();
    let label = format!("phi_{n}[{}]", t.label);
    NonexpansiveMap::new(label, m, move |u| {
        let xn = selection_iterate(&t, &delta, &sched, u, n)?;
        Ok(t.apply(&xn, u)?.1)
    })
}

/// A sampled pair on which a map stretches distances.
#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub x: Point,
    pub y: Point,
    pub distance: f64,
    pub image_distance: f64,
}

/// First sampled pair with `ρ(f(x), f(y)) > ρ(x, y) + η`.
pub fn falsify_nonexpansive(
    f: &NonexpansiveMap,
    trials: usize,
    seed: u64,
    eta: f64,
) -> Result<Option<Counterexample>, MapError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = f.domain();
    for _ in 0..trials.max(1) {
        let x = s.sample(&mut rng);
        let y = s.sample(&mut rng);
        let distance = s.distance(&x, &y);
        let image_distance = s.distance(&f.apply(&x)?, &f.apply(&y)?);
        if image_distance > distance + eta {
            return Ok(Some(Counterexample {
                x,
                y,
                distance,
                image_distance,
            }));
        }
    }
    Ok(None)
}

/// [`falsify_nonexpansive`] for a product map over `H` with `d∞`.
pub fn falsify_product_nonexpansive(
    t: &ProductMap,
    trials: usize,
    seed: u64,
    eta: f64,
) -> Result<Option<Counterexample>, MapError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = t.domain();
    for _ in 0..trials.max(1) {
        let (x, u) = h.sample(&mut rng);
        let (y, v) = h.sample(&mut rng);
        let distance = h.distance(&x, &u, &y, &v);
        let (tx, tu) = t.apply(&x, &u)?;
        let (ty, tv) = t.apply(&y, &v)?;
        let image_distance = h.distance(&tx, &tu, &ty, &tv);
        if image_distance > distance + eta {
            return Ok(Some(Counterexample {
                x: Point::pair(x, u),
                y: Point::pair(y, v),
                distance,
                image_distance,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::km::LambdaSeq;
    use crate::numeric::Rational;
    use crate::rates::AlphaFn;
    use crate::spaces::{make_euclidean, make_interval};

    fn unit() -> Space {
        make_interval(0.0, 1.0).unwrap()
    }

    fn diagonal() -> ProductMap {
        catalog::diagonal_average(unit(), unit())
    }

    fn half() -> Schedule {
        Schedule::new(LambdaSeq::Constant { value: Rational::new(1, 2) }, 2, AlphaFn::Linear { factor: 2 })
    }

    fn re(p: &Point) -> f64 {
        p.as_real().unwrap()
    }

    #[test]
    fn slices_of_the_diagonal_map() {
        let t = diagonal();
        let s0 = slice(&t, &Point::real(0.0)).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(re(&s0.apply(&Point::real(x)).unwrap()), x / 2.0);
        }
        let s1 = slice(&t, &Point::real(1.0)).unwrap();
        assert_eq!(re(&s1.apply(&Point::real(0.0)).unwrap()), 0.5);
        assert!(matches!(slice(&t, &Point::real(2.0)), Err(MapError::Domain { .. })));
    }

    #[test]
    fn constant_product_map() {
        let t = catalog::constant_pair(unit(), unit(), Point::real(0.25), Point::real(0.75));
        let s = slice(&t, &Point::real(0.1)).unwrap();
        assert_eq!(re(&s.apply(&Point::real(0.9)).unwrap()), 0.25);
        let delta = SelectionFunction::identity(unit());
        for n in [0, 1, 5] {
            let p = phi(&t, &delta, &half(), n);
            assert_eq!(re(&p.apply(&Point::real(0.3)).unwrap()), 0.75);
        }
    }

    #[test]
    fn phi_is_identity_on_the_diagonal() {
        let t = diagonal();
        let delta = SelectionFunction::identity(unit());
        for n in [0, 1, 7, 30] {
            let p = phi(&t, &delta, &half(), n);
            for u in [0.0, 0.2, 0.77, 1.0] {
                assert!((re(&p.apply(&Point::real(u)).unwrap()) - u).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn phi_zero_uses_the_start_point() {
        // T(x,u) = ((x+u)/2, x), δ ≡ 0.3: φ₀(u) = P₂T(0.3, u) = 0.3.
        let t = diagonal();
        let delta = SelectionFunction::constant(unit(), Point::real(0.3));
        let p = phi(&t, &delta, &half(), 0);
        assert_eq!(re(&p.apply(&Point::real(0.9)).unwrap()), 0.3);
    }

    #[test]
    fn falsification() {
        let r = make_euclidean(1).unwrap();
        let half = NonexpansiveMap::from_fn("x/2", r.clone(), |p| Point::real(p.as_real().unwrap() / 2.0));
        assert!(falsify_nonexpansive(&half, 500, 1, 1e-9).unwrap().is_none());
        let id = NonexpansiveMap::from_fn("id", r.clone(), |p| p.clone());
        assert!(falsify_nonexpansive(&id, 500, 1, 1e-9).unwrap().is_none());
        let double = NonexpansiveMap::from_fn("2x", r, |p| Point::real(2.0 * p.as_real().unwrap()));
        let c = falsify_nonexpansive(&double, 100, 1, 1e-9).unwrap().unwrap();
        assert!((c.image_distance - 2.0 * c.distance).abs() < 1e-12);
    }

    #[test]
    fn product_falsification() {
        assert!(falsify_product_nonexpansive(&diagonal(), 500, 2, 1e-9).unwrap().is_none());
        let bad = catalog::product_affine(
            unit(),
            unit(),
            catalog::AffinePair { a: 1.0, b: 1.0, c: 0.0, d: 0.0, e: 1.0, f: 0.0 },
            catalog::Clamp::both(0.0, 1.0),
            catalog::Clamp::both(0.0, 1.0),
        );
        assert!(falsify_product_nonexpansive(&bad, 500, 2, 1e-9).unwrap().is_some());
    }
}
