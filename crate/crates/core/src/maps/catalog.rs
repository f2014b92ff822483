//! The fixed catalog of configuration-defined maps, selections and fiber
//! families, plus random generators of nonexpansive affine maps.
//!
//! Every catalog map is nonexpansive for the stated parameter ranges:
//! a clamp `t ↦ min(max(t, lo), hi)` is 1-Lipschitz, an affine map with
//! operator norm at most 1 is nonexpansive for the Euclidean norm, and a
//! product component `a·x + b·u + c` with `|a| + |b| ≤ 1` is 1-Lipschitz for
//! `d∞`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FamilyProduct, MapError, NonexpansiveMap, ProductDomain, ProductMap, SelectionFunction};
use crate::numeric::{de_opt_real, de_real};
use crate::spaces::{Point, Space};

/// Optional bounds applied after an affine step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Clamp {
    #[serde(default, deserialize_with = "de_opt_real", skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, deserialize_with = "de_opt_real", skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

impl Clamp {
    pub const NONE: Clamp = Clamp { lo: None, hi: None };

    pub fn both(lo: f64, hi: f64) -> Self {
        Clamp { lo: Some(lo), hi: Some(hi) }
    }

    pub fn below(lo: f64) -> Self {
        Clamp { lo: Some(lo), hi: None }
    }

    pub fn apply(&self, t: f64) -> f64 {
        let t = self.lo.map_or(t, |lo| t.max(lo));
        self.hi.map_or(t, |hi| t.min(hi))
    }
}

/// Coefficients of `T(x,u) = (a·x + b·u + c, d·x + e·u + f)` on real lines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePair {
    #[serde(deserialize_with = "de_real")]
    pub a: f64,
    #[serde(deserialize_with = "de_real")]
    pub b: f64,
    #[serde(deserialize_with = "de_real")]
    pub c: f64,
    #[serde(deserialize_with = "de_real")]
    pub d: f64,
    #[serde(deserialize_with = "de_real")]
    pub e: f64,
    #[serde(deserialize_with = "de_real")]
    pub f: f64,
}

/// Self-maps of a single space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    Identity,
    Constant { point: Point },
    /// `x ↦ A x + offset` on a coordinate space; needs `‖A‖ ≤ 1`.
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// `x ↦ clamp(x + shift)` on a real line.
    ClampedTranslation {
        #[serde(deserialize_with = "de_real")]
        shift: f64,
        #[serde(default, flatten)]
        clamp: Clamp,
    },
}

impl MapSpec {
    pub fn build(&self, domain: Space) -> Result<NonexpansiveMap, MapError> {
        Ok(match self {
            MapSpec::Identity => identity(domain),
            MapSpec::Constant { point } => {
                domain.require(point)?;
                constant(domain, point.clone())
            }
            MapSpec::Affine { matrix, offset } => affine(domain, matrix.clone(), offset.clone())?,
            MapSpec::ClampedTranslation { shift, clamp } => clamped_translation(domain, *shift, *clamp),
        })
    }
}

/// Self-maps of a product domain `H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProductMapSpec {
    Identity,
    ConstantPair { x: Point, u: Point },
    /// `((x+u)/2, x)`: every diagonal point `(u, u)` is fixed.
    DiagonalAverage,
    /// `(clamp_x(a·x + b·u + c), clamp_u(d·x + e·u + f))`.
    Affine {
        #[serde(flatten)]
        coefficients: AffinePair,
        #[serde(default)]
        clamp_x: Clamp,
        #[serde(default)]
        clamp_u: Clamp,
    },
    /// `(scale·min(x, cap + slope·u), u)`; for `0 ≤ scale ≤ 1` and
    /// `|slope| ≤ 1` nonexpansive.
    CappedScale {
        #[serde(deserialize_with = "de_real")]
        scale: f64,
        #[serde(deserialize_with = "de_real")]
        cap: f64,
        #[serde(deserialize_with = "de_real")]
        slope: f64,
    },
}

impl ProductMapSpec {
    pub fn build(&self, domain: ProductDomain) -> Result<ProductMap, MapError> {
        let real_line = |s: &Space| s.coord_dim() == Some(1);
        let needs_reals = !matches!(self, ProductMapSpec::Identity | ProductMapSpec::ConstantPair { .. });
        if needs_reals && !(real_line(domain.ambient()) && real_line(domain.base())) {
            return Err(MapError::Argument(format!(
                "product map {self:?} needs one-dimensional real components"
            )));
        }
        Ok(match self {
            ProductMapSpec::Identity => ProductMap::new("identity", domain, |x, u| Ok((x.clone(), u.clone()))),
            ProductMapSpec::ConstantPair { x, u } => {
                let (x, u) = (x.clone(), u.clone());
                ProductMap::new(format!("constant ({x:?}, {u:?})"), domain, move |_, _| {
                    Ok((x.clone(), u.clone()))
                })
            }
            ProductMapSpec::DiagonalAverage => with_domain(domain, "((x+u)/2, x)", |x, u| ((x + u) / 2.0, x)),
            ProductMapSpec::Affine {
                coefficients,
                clamp_x,
                clamp_u,
            } => affine_pair_on(domain, *coefficients, *clamp_x, *clamp_u),
            ProductMapSpec::CappedScale { scale, cap, slope } => {
                let (s, c, k) = (*scale, *cap, *slope);
                with_domain(domain, &format!("({s}*min(x, {c} + {k}u), u)"), move |x, u| {
                    (s * x.min(c + k * u), u)
                })
            }
        })
    }
}

/// Selections `δ: M → C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectionSpec {
    Identity,
    Constant { point: Point },
}

impl SelectionSpec {
    pub fn build(&self, m: Space) -> SelectionFunction {
        match self {
            SelectionSpec::Identity => SelectionFunction::identity(m),
            SelectionSpec::Constant { point } => SelectionFunction::constant(m, point.clone()),
        }
    }
}

/// Fiber families `u ↦ C_u` over a real base space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiberSpec {
    /// `C_u ≡ C`.
    Fixed { space: Space },
    /// `C_u = [lo, hi + slope·u]`.
    Interval {
        #[serde(deserialize_with = "de_real")]
        lo: f64,
        #[serde(deserialize_with = "de_real")]
        hi: f64,
        #[serde(deserialize_with = "de_real")]
        slope: f64,
    },
}

impl FiberSpec {
    pub fn label(&self) -> String {
        match self {
            FiberSpec::Fixed { space } => space.label(),
            FiberSpec::Interval { lo, hi, slope } => format!("C_u = [{lo}, {hi} + {slope}u]"),
        }
    }

    /// The unchecked family; [`crate::product::family_product`] validates it.
    pub fn family(
        &self,
        ambient: Space,
        base: Space,
        selection: SelectionFunction,
        diameter_bound: Option<f64>,
    ) -> FamilyProduct {
        let label = self.label();
        match self.clone() {
            FiberSpec::Fixed { space } => {
                FamilyProduct::new_unchecked(ambient, base, label, move |_| space.clone(), selection, diameter_bound)
            }
            FiberSpec::Interval { lo, hi, slope } => FamilyProduct::new_unchecked(
                ambient,
                base,
                label,
                move |u| {
                    let top = hi + slope * u.as_real().unwrap_or(f64::NAN);
                    Space::Interval { a: lo, b: top }
                },
                selection,
                diameter_bound,
            ),
        }
    }
}

pub fn identity(domain: Space) -> NonexpansiveMap {
    NonexpansiveMap::from_fn("identity", domain, |p| p.clone())
}

pub fn constant(domain: Space, c: Point) -> NonexpansiveMap {
    NonexpansiveMap::from_fn(format!("constant {c:?}"), domain, move |_| c.clone())
}

/// `x ↦ A x + offset`. Only shapes are checked; nonexpansiveness is the
/// caller's claim.
pub fn affine(domain: Space, matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<NonexpansiveMap, MapError> {
    let n = offset.len();
    if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
        return Err(MapError::Argument(format!("affine map needs an {n}x{n} matrix")));
    }
    if domain.coord_dim() != Some(n) {
        return Err(MapError::Argument(format!("affine map of dimension {n} on {}", domain.label())));
    }
    let label = format!("affine {matrix:?} + {offset:?}");
    Ok(NonexpansiveMap::from_fn(label, domain, move |p| {
        let x = p.as_coords().expect("coordinate space member");
        Point::Coords(
            matrix
                .iter()
                .zip(&offset)
                .map(|(row, o)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + o)
                .collect(),
        )
    }))
}

/// `x ↦ clamp(x + shift)` on a real line.
pub fn clamped_translation(domain: Space, shift: f64, clamp: Clamp) -> NonexpansiveMap {
    let label = match (clamp.lo, clamp.hi) {
        (None, None) => format!("x + {shift}"),
        (lo, hi) => format!("clamp(x + {shift}, {lo:?}, {hi:?})"),
    };
    NonexpansiveMap::from_fn(label, domain, move |p| {
        Point::real(clamp.apply(p.as_real().expect("real line member") + shift))
    })
}

fn with_domain(
    domain: ProductDomain,
    label: &str,
    f: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
) -> ProductMap {
    ProductMap::new(label, domain, move |x, u| {
        let (a, b) = f(x.as_real().expect("real component"), u.as_real().expect("real component"));
        Ok((Point::real(a), Point::real(b)))
    })
}

fn affine_pair_on(domain: ProductDomain, k: AffinePair, cx: Clamp, cu: Clamp) -> ProductMap {
    let label = format!(
        "({}x + {}u + {}, {}x + {}u + {}) clamped",
        k.a, k.b, k.c, k.d, k.e, k.f
    );
    with_domain(domain, &label, move |x, u| {
        (cx.apply(k.a * x + k.b * u + k.c), cu.apply(k.d * x + k.e * u + k.f))
    })
}

/// `T(x,u) = ((x+u)/2, x)` on `(C × M)∞` for real intervals `C ⊇ M`.
pub fn diagonal_average(c: Space, m: Space) -> ProductMap {
    ProductMapSpec::DiagonalAverage
        .build(ProductDomain::plain(c, m))
        .expect("diagonal average on real lines")
}

pub fn constant_pair(c: Space, m: Space, x: Point, u: Point) -> ProductMap {
    ProductMapSpec::ConstantPair { x, u }
        .build(ProductDomain::plain(c, m))
        .expect("constant maps build on any domain")
}

pub fn product_affine(c: Space, m: Space, k: AffinePair, clamp_x: Clamp, clamp_u: Clamp) -> ProductMap {
    affine_pair_on(ProductDomain::plain(c, m), k, clamp_x, clamp_u)
}

/// A random affine self-map `x ↦ A x + c` of `[0,1]^dim`.
///
/// `A` is scaled so that its Frobenius norm (an upper bound on the operator
/// norm) and every row's absolute sum are at most 1; the offset then places
/// each coordinate's image range inside `[0, 1]`.
pub fn random_box_affine<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut a: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    let frobenius = a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let row_max = a
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let scale = rng.gen_range(0.05..=1.0) / frobenius.max(row_max).max(f64::MIN_POSITIVE);
    for v in a.iter_mut().flatten() {
        *v *= scale;
    }
    let offset = a
        .iter()
        .map(|row| {
            let low: f64 = row.iter().map(|v| v.min(0.0)).sum();
            let width: f64 = row.iter().map(|v| v.abs()).sum();
            -low + rng.gen::<f64>() * (1.0 - width).max(0.0)
        })
        .collect();
    (a, offset)
}

/// [`random_box_affine`] as a map on `[0,1]^dim`.
pub fn random_box_map<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> NonexpansiveMap {
    let (a, c) = random_box_affine(rng, dim);
    affine(Space::Cube { dim, a: 0.0, b: 1.0 }, a, c).expect("shapes match")
}

/// A random `d∞`-nonexpansive affine self-map of `[0,1] × [0,1]`.
pub fn random_product_affine<R: Rng + ?Sized>(rng: &mut R) -> ProductMap {
    let mut row = || {
        let p: f64 = rng.gen_range(-1.0..=1.0);
        let q: f64 = rng.gen_range(-1.0..=1.0);
        let s = rng.gen_range(0.1..=1.0) / (p.abs() + q.abs()).max(f64::MIN_POSITIVE);
        (p * s, q * s, rng.gen_range(-0.5..=0.5))
    };
    let (a, b, c) = row();
    let (d, e, f) = row();
    let unit = Space::Interval { a: 0.0, b: 1.0 };
    product_affine(
        unit.clone(),
        unit,
        AffinePair { a, b, c, d, e, f },
        Clamp::both(0.0, 1.0),
        Clamp::both(0.0, 1.0),
    )
}
