//! Metric and hyperbolic spaces: the shipped instances, the `d∞` product and
//! the axiom checker.
//!
//! A hyperbolic space here is a metric space with a convexity map
//! `W(x, y, λ)`, written `(1−λ)x ⊕ λy`, satisfying (W1)–(W4). All geometry is
//! double precision; tests compare against a tolerance `η`.

mod axioms;
mod point;

pub use axioms::{check_axioms, Axiom, AxiomCheck, AxiomReport};
pub use point::{fmt17, Point};

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::de_real;

/// Slack absorbed by membership tests on closed sets.
pub const BOUNDARY_SLACK: f64 = 1e-12;

/// Default comparison tolerance for geometric identities.
pub const DEFAULT_ETA: f64 = 1e-9;

/// Window used to sample unbounded spaces.
const SAMPLE_RADIUS: f64 = 10.0;

/// Largest radius sampled in the Poincaré disk.
const DISK_SAMPLE_RADIUS: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("invalid space parameters: {0}")]
    Argument(String),
    #[error("point {point} is not a member of {space}")]
    Domain { point: String, space: String },
    #[error("{0} has no convexity structure")]
    NotHyperbolic(String),
}

/// A space descriptor. Doubles as the serialized configuration form, e.g.
/// `{"kind":"interval","a":0,"b":1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Space {
    /// ℝⁿ with the Euclidean norm.
    Euclidean { dim: usize },
    /// `[a, b] ⊂ ℝ`.
    Interval {
        #[serde(deserialize_with = "de_real")]
        a: f64,
        #[serde(deserialize_with = "de_real")]
        b: f64,
    },
    /// `[a, ∞) ⊂ ℝ`.
    HalfLine {
        #[serde(deserialize_with = "de_real")]
        a: f64,
    },
    /// `[a, b]^dim` with the Euclidean norm.
    Cube {
        dim: usize,
        #[serde(deserialize_with = "de_real")]
        a: f64,
        #[serde(deserialize_with = "de_real")]
        b: f64,
    },
    /// Open unit disk with curvature −1, `d(0, z) = 2·artanh|z|`.
    PoincareDisk,
    /// A finite spider: `rays` segments of length `length` glued at a hub.
    StarTree {
        rays: usize,
        #[serde(deserialize_with = "de_real")]
        length: f64,
    },
    /// Unit circle with the arc-length metric. Metric only, no convexity map.
    Circle,
    /// `(C × M)∞`.
    Product(Box<ProductSpace>),
    /// ℝⁿ with the degenerate map `W(x, y, λ) = x`, which violates (W2).
    BrokenW { dim: usize },
}

/// The `d∞` product of two spaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductSpace {
    pub left: Space,
    pub right: Space,
}

impl ProductSpace {
    /// `d∞((x,u),(y,v)) = max{ρ(x,y), d(u,v)}`.
    pub fn distance(&self, x: &Point, u: &Point, y: &Point, v: &Point) -> f64 {
        self.left.distance(x, y).max(self.right.distance(u, v))
    }

    pub fn contains(&self, x: &Point, u: &Point) -> bool {
        self.left.contains(x) && self.right.contains(u)
    }
}

pub fn make_euclidean(dim: usize) -> Result<Space, SpaceError> {
    Space::Euclidean { dim }.validated()
}

pub fn make_interval(a: f64, b: f64) -> Result<Space, SpaceError> {
    Space::Interval { a, b }.validated()
}

pub fn make_half_line(a: f64) -> Result<Space, SpaceError> {
    Space::HalfLine { a }.validated()
}

pub fn make_cube(dim: usize, a: f64, b: f64) -> Result<Space, SpaceError> {
    Space::Cube { dim, a, b }.validated()
}

pub fn make_poincare_disk() -> Space {
    Space::PoincareDisk
}

pub fn make_star_tree(rays: usize, length: f64) -> Result<Space, SpaceError> {
    Space::StarTree { rays, length }.validated()
}

pub fn make_circle() -> Space {
    Space::Circle
}

/// `(C × M)∞` as a space in its own right.
pub fn product(c: Space, m: Space) -> Space {
    Space::Product(Box::new(ProductSpace { left: c, right: m }))
}

impl Space {
    pub fn validated(self) -> Result<Space, SpaceError> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        let bad = |msg: String| Err(SpaceError::Argument(msg));
        match self {
            Space::Euclidean { dim } | Space::BrokenW { dim } if *dim == 0 => {
                bad("dimension must be >= 1".into())
            }
            Space::Interval { a, b } if !(a.is_finite() && b.is_finite() && a < b) => {
                bad(format!("interval needs finite a < b, got [{a}, {b}]"))
            }
            Space::HalfLine { a } if !a.is_finite() => bad(format!("half-line start {a} not finite")),
            Space::Cube { dim, a, b } if *dim == 0 || !(a.is_finite() && b.is_finite() && a < b) => {
                bad(format!("cube needs dim >= 1 and a < b, got dim {dim}, [{a}, {b}]"))
            }
            Space::StarTree { rays, length } if *rays < 2 || !(length.is_finite() && *length > 0.0) => {
                bad(format!("star tree needs >= 2 rays of positive length, got {rays} x {length}"))
            }
            Space::Product(p) => {
                p.left.validate()?;
                p.right.validate()
            }
            _ => Ok(()),
        }
    }

    /// Short human-readable name.
    pub fn label(&self) -> String {
        match self {
            Space::Euclidean { dim } => format!("R^{dim}"),
            Space::Interval { a, b } => format!("[{a}, {b}]"),
            Space::HalfLine { a } => format!("[{a}, inf)"),
            Space::Cube { dim, a, b } => format!("[{a}, {b}]^{dim}"),
            Space::PoincareDisk => "Poincare disk".into(),
            Space::StarTree { rays, length } => format!("star tree ({rays} rays, length {length})"),
            Space::Circle => "unit circle (arc metric)".into(),
            Space::Product(p) => format!("({} x {})_inf", p.left.label(), p.right.label()),
            Space::BrokenW { dim } => format!("R^{dim} with W(x,y,l) = x"),
        }
    }

    /// The JSON descriptor of this space.
    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("space descriptors always serialize")
    }

    /// Whether a convexity map `W` is defined.
    pub fn is_hyperbolic(&self) -> bool {
        match self {
            Space::Circle => false,
            Space::Product(p) => p.left.is_hyperbolic() && p.right.is_hyperbolic(),
            _ => true,
        }
    }

    /// Number of coordinates for spaces whose points are coordinate vectors.
    pub fn coord_dim(&self) -> Option<usize> {
        match self {
            Space::Euclidean { dim } | Space::BrokenW { dim } | Space::Cube { dim, .. } => Some(*dim),
            Space::Interval { .. } | Space::HalfLine { .. } => Some(1),
            _ => None,
        }
    }

    /// Diameter of bounded spaces, `None` for unbounded ones.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            Space::Interval { a, b } => Some(b - a),
            Space::Cube { dim, a, b } => Some((b - a) * (*dim as f64).sqrt()),
            Space::StarTree { length, .. } => Some(2.0 * length),
            Space::Circle => Some(std::f64::consts::PI),
            Space::Product(p) => Some(p.left.diameter()?.max(p.right.diameter()?)),
            _ => None,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match (self, p) {
            (Space::Euclidean { dim } | Space::BrokenW { dim }, Point::Coords(v)) => {
                v.len() == *dim && finite(v)
            }
            (Space::Interval { a, b }, Point::Coords(v)) => {
                v.len() == 1 && v[0] >= a - BOUNDARY_SLACK && v[0] <= b + BOUNDARY_SLACK
            }
            (Space::HalfLine { a }, Point::Coords(v)) => {
                v.len() == 1 && v[0].is_finite() && v[0] >= a - BOUNDARY_SLACK
            }
            (Space::Cube { dim, a, b }, Point::Coords(v)) => {
                v.len() == *dim
                    && v.iter().all(|x| *x >= a - BOUNDARY_SLACK && *x <= b + BOUNDARY_SLACK)
            }
            (Space::PoincareDisk, Point::Disk { re, im }) => {
                re.is_finite() && im.is_finite() && re * re + im * im < 1.0
            }
            (Space::StarTree { rays, length }, Point::Tree { ray, offset }) => {
                ray < rays && *offset >= -BOUNDARY_SLACK && *offset <= length + BOUNDARY_SLACK
            }
            (Space::Circle, Point::Angle(t)) => {
                t.is_finite() && *t >= -BOUNDARY_SLACK && *t < TAU + BOUNDARY_SLACK
            }
            (Space::Product(ps), Point::Pair(x, u)) => ps.contains(x, u),
            _ => false,
        }
    }

    pub fn require(&self, p: &Point) -> Result<(), SpaceError> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(SpaceError::Domain {
                point: format!("{p:?}"),
                space: self.label(),
            })
        }
    }

    /// Distance between two points of this space.
    ///
    /// Points of a different kind than this space produces yield `NaN`, which
    /// fails every tolerance comparison downstream.
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        match (self, x, y) {
            (
                Space::Euclidean { .. }
                | Space::Interval { .. }
                | Space::HalfLine { .. }
                | Space::Cube { .. }
                | Space::BrokenW { .. },
                Point::Coords(a),
                Point::Coords(b),
            ) if a.len() == b.len() => euclidean_distance(a, b),
            (Space::PoincareDisk, Point::Disk { .. }, Point::Disk { .. }) => {
                poincare_distance(x.as_complex().unwrap(), y.as_complex().unwrap())
            }
            (
                Space::StarTree { .. },
                Point::Tree { ray: i, offset: s },
                Point::Tree { ray: j, offset: t },
            ) => {
                if i == j {
                    (s - t).abs()
                } else {
                    s + t
                }
            }
            (Space::Circle, Point::Angle(a), Point::Angle(b)) => {
                let d = (a - b).abs().rem_euclid(TAU);
                d.min(TAU - d)
            }
            (Space::Product(p), Point::Pair(x1, u1), Point::Pair(x2, u2)) => {
                p.distance(x1, u1, x2, u2)
            }
            _ => f64::NAN,
        }
    }

    /// `W(x, y, λ)` with membership and range checks.
    pub fn convex_comb(&self, x: &Point, y: &Point, lambda: f64) -> Result<Point, SpaceError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(SpaceError::Argument(format!("lambda {lambda} outside [0, 1]")));
        }
        if !self.is_hyperbolic() {
            return Err(SpaceError::NotHyperbolic(self.label()));
        }
        self.require(x)?;
        self.require(y)?;
        Ok(self.combine_unchecked(x, y, lambda))
    }

    /// `W(x, y, λ)` for members `x`, `y` and `λ ∈ [0, 1]`.
    pub fn combine_unchecked(&self, x: &Point, y: &Point, lambda: f64) -> Point {
        match (self, x, y) {
            (Space::BrokenW { .. }, _, _) => x.clone(),
            (Space::PoincareDisk, Point::Disk { .. }, Point::Disk { .. }) => Point::disk(
                poincare_combine(x.as_complex().unwrap(), y.as_complex().unwrap(), lambda),
            ),
            (
                Space::StarTree { .. },
                Point::Tree { ray: i, offset: s },
                Point::Tree { ray: j, offset: t },
            ) => {
                if i == j {
                    Point::tree(*i, (1.0 - lambda) * s + lambda * t)
                } else {
                    let along = lambda * (s + t);
                    if along <= *s {
                        Point::tree(*i, s - along)
                    } else {
                        Point::tree(*j, along - s)
                    }
                }
            }
            (Space::Product(p), Point::Pair(x1, u1), Point::Pair(x2, u2)) => Point::pair(
                p.left.combine_unchecked(x1, x2, lambda),
                p.right.combine_unchecked(u1, u2, lambda),
            ),
            (_, Point::Coords(a), Point::Coords(b)) => Point::Coords(
                a.iter()
                    .zip(b)
                    .map(|(p, q)| (1.0 - lambda) * p + lambda * q)
                    .collect(),
            ),
            _ => panic!("combine_unchecked called with points foreign to {}", self.label()),
        }
    }

    /// A random member, drawn from a bounded window for unbounded spaces.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            Space::Euclidean { dim } | Space::BrokenW { dim } => Point::Coords(
                (0..*dim)
                    .map(|_| rng.gen_range(-SAMPLE_RADIUS..=SAMPLE_RADIUS))
                    .collect(),
            ),
            Space::Interval { a, b } => Point::real(rng.gen_range(*a..=*b)),
            Space::HalfLine { a } => Point::real(rng.gen_range(*a..=*a + 2.0 * SAMPLE_RADIUS)),
            Space::Cube { dim, a, b } => {
                Point::Coords((0..*dim).map(|_| rng.gen_range(*a..=*b)).collect())
            }
            Space::PoincareDisk => {
                let r = DISK_SAMPLE_RADIUS * rng.gen::<f64>().sqrt();
                let theta = rng.gen_range(0.0..TAU);
                Point::disk(Complex64::from_polar(r, theta))
            }
            Space::StarTree { rays, length } => {
                let ray = rng.gen_range(0..*rays);
                // Hit the hub and the leaves now and then.
                let offset = match rng.gen_range(0..20) {
                    0 => 0.0,
                    1 => *length,
                    _ => rng.gen_range(0.0..=*length),
                };
                Point::tree(ray, offset)
            }
            Space::Circle => Point::Angle(rng.gen_range(0.0..TAU)),
            Space::Product(p) => Point::pair(p.left.sample(rng), p.right.sample(rng)),
        }
    }
}

fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Möbius map `z ↦ (z − a)/(1 − ā z)` sending `a` to the origin.
fn mobius_to_origin(a: Complex64, z: Complex64) -> Complex64 {
    (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z)
}

fn mobius_from_origin(a: Complex64, w: Complex64) -> Complex64 {
    (w + a) / (Complex64::new(1.0, 0.0) + a.conj() * w)
}

fn poincare_distance(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm();
    if num == 0.0 {
        return 0.0;
    }
    let den = (Complex64::new(1.0, 0.0) - z.conj() * w).norm();
    2.0 * (num / den).min(1.0).atanh()
}

/// The point at hyperbolic distance `λ·d(x, y)` from `x` on the geodesic to `y`.
fn poincare_combine(x: Complex64, y: Complex64, lambda: f64) -> Complex64 {
    if lambda == 0.0 {
        return x;
    }
    if lambda == 1.0 {
        return y;
    }
    let moved = mobius_to_origin(x, y);
    let r = moved.norm();
    if r == 0.0 {
        return x;
    }
    let t = (lambda * r.atanh()).tanh();
    mobius_from_origin(x, moved * (t / r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn interval_combination_and_distance() {
        let r = make_euclidean(1).unwrap();
        let p = r.convex_comb(&Point::real(0.0), &Point::real(10.0), 0.3).unwrap();
        assert!(close(p.as_real().unwrap(), 3.0, 1e-12));
        let i = make_interval(0.0, 1.0).unwrap();
        assert!(close(i.distance(&Point::real(0.2), &Point::real(0.9)), 0.7, 1e-15));
    }

    #[test]
    fn endpoints_are_exact() {
        let mut rng = rand::thread_rng();
        for s in [
            make_euclidean(3).unwrap(),
            make_poincare_disk(),
            make_star_tree(3, 1.0).unwrap(),
            make_interval(-1.0, 2.0).unwrap(),
        ] {
            let x = s.sample(&mut rng);
            let y = s.sample(&mut rng);
            assert_eq!(s.convex_comb(&x, &y, 0.0).unwrap(), x, "{}", s.label());
        }
    }

    #[test]
    fn poincare_midpoint_on_a_radius() {
        let d = make_poincare_disk();
        let m = d
            .convex_comb(&Point::disk(Complex64::new(0.0, 0.0)), &Point::disk(Complex64::new(0.5, 0.0)), 0.5)
            .unwrap();
        let z = m.as_complex().unwrap();
        // Oracle: bisection on the radius for the point whose distance from 0,
        // computed by midpoint quadrature of the density 2/(1−r²), is half of d(0, 0.5).
        let arc = |r: f64| -> f64 {
            let steps = 20_000;
            let h = r / steps as f64;
            (0..steps)
                .map(|k| {
                    let s = (k as f64 + 0.5) * h;
                    2.0 / (1.0 - s * s) * h
                })
                .sum()
        };
        let target = arc(0.5) / 2.0;
        let (mut lo, mut hi) = (0.0, 0.5);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if arc(mid) < target {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!(close(z.re, lo, 1e-7) && close(z.im, 0.0, 1e-15), "{z}");
        assert!(close(z.re, 0.267_949_192_431_122_7, 1e-12));
    }

    #[test]
    fn poincare_distance_from_origin() {
        let d = make_poincare_disk();
        let o = Point::disk(Complex64::new(0.0, 0.0));
        let h = Point::disk(Complex64::new(0.5, 0.0));
        assert!(close(d.distance(&o, &h), 3f64.ln(), 1e-14));
        // Quadrature of 2/(1−r²) on [0, 0.5] (Simpson).
        let n = 1000;
        let f = |r: f64| 2.0 / (1.0 - r * r);
        let hstep = 0.5 / n as f64;
        let simpson: f64 = (0..n)
            .map(|k| {
                let a = k as f64 * hstep;
                hstep / 6.0 * (f(a) + 4.0 * f(a + hstep / 2.0) + f(a + hstep))
            })
            .sum();
        assert!(close(d.distance(&o, &h), simpson, 1e-10));
        assert!(close(simpson, 1.098_612_3, 1e-7));
    }

    #[test]
    fn star_tree_metric() {
        let t = make_star_tree(3, 1.0).unwrap();
        assert!(close(t.distance(&Point::tree(0, 0.3), &Point::tree(1, 0.4)), 0.7, 1e-15));
        assert!(close(t.distance(&Point::tree(2, 0.3), &Point::tree(2, 0.9)), 0.6, 1e-15));
        // Passing through the hub lands on the target ray.
        let m = t.convex_comb(&Point::tree(0, 0.3), &Point::tree(1, 0.4), 0.5).unwrap();
        assert_eq!(m, Point::tree(1, 0.35 - 0.3));
    }

    #[test]
    fn product_distance_is_max_of_components() {
        let h = ProductSpace {
            left: make_interval(0.0, 1.0).unwrap(),
            right: make_interval(0.0, 1.0).unwrap(),
        };
        assert_eq!(h.distance(&Point::real(0.0), &Point::real(0.0), &Point::real(1.0), &Point::real(0.5)), 1.0);
        let s = product(make_euclidean(1).unwrap(), make_circle());
        let p = Point::pair(Point::real(0.0), Point::Angle(0.0));
        let q = Point::pair(Point::real(3.0), Point::Angle(std::f64::consts::PI));
        assert_eq!(s.distance(&p, &q), std::f64::consts::PI);
        assert_eq!(s.distance(&p, &p), 0.0);
    }

    #[test]
    fn argument_and_domain_errors() {
        assert!(make_euclidean(0).is_err());
        assert!(make_interval(1.0, 0.0).is_err());
        assert!(make_star_tree(1, 1.0).is_err());
        assert!(make_star_tree(3, 0.0).is_err());
        let i = make_interval(0.0, 1.0).unwrap();
        assert!(matches!(
            i.convex_comb(&Point::real(0.0), &Point::real(2.0), 0.5),
            Err(SpaceError::Domain { .. })
        ));
        assert!(matches!(
            i.convex_comb(&Point::real(0.0), &Point::real(1.0), 1.5),
            Err(SpaceError::Argument(_))
        ));
        assert!(matches!(
            make_circle().convex_comb(&Point::Angle(0.0), &Point::Angle(1.0), 0.5),
            Err(SpaceError::NotHyperbolic(_))
        ));
        // Cross-space points.
        assert!(!i.contains(&Point::tree(0, 0.5)));
        assert!(i.distance(&Point::real(0.0), &Point::tree(0, 0.5)).is_nan());
    }

    #[test]
    fn boundary_slack() {
        let i = make_interval(0.0, 1.0).unwrap();
        assert!(i.contains(&Point::real(1.0 + 1e-13)));
        assert!(!i.contains(&Point::real(1.0 + 1e-9)));
    }

    #[test]
    fn descriptors_roundtrip() {
        let s: Space = serde_json::from_str(r#"{"kind":"interval","a":0,"b":"1/2"}"#).unwrap();
        assert_eq!(s, Space::Interval { a: 0.0, b: 0.5 });
        let p = product(make_star_tree(3, 1.0).unwrap(), make_poincare_disk());
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Space>(&json).unwrap(), p);
    }
}
