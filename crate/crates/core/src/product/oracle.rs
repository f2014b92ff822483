use crate::maps::NonexpansiveMap;
use crate::spaces::{Point, Space};

use super::ProductError;

/// Returns `ε`-fixed points of nonexpansive self-maps of one space.
pub trait AfppOracle: Send + Sync {
    fn space(&self) -> &Space;

    fn label(&self) -> String;

    /// Some `u` with `d(u, f(u)) ≤ ε`.
    fn solve(&self, f: &NonexpansiveMap, eps: f64) -> Result<Point, ProductError>;
}

/// Runs the oracle and recomputes its residual contract independently.
pub fn solve_checked(oracle: &dyn AfppOracle, f: &NonexpansiveMap, eps: f64) -> Result<(Point, f64), ProductError> {
    let fail = |reason: String| ProductError::Oracle {
        oracle: oracle.label(),
        reason,
    };
    if f.domain() != oracle.space() {
        return Err(fail(format!(
            "oracle serves {} but the map lives on {}",
            oracle.space().label(),
            f.domain().label()
        )));
    }
    let u = oracle.solve(f, eps)?;
    if !f.domain().contains(&u) {
        return Err(fail(format!("answer {u:?} is outside {}", f.domain().label())));
    }
    let residual = f.displacement(&u)?;
    if !(residual <= eps) {
        return Err(fail(format!("answer {u:?} has residual {residual} > {eps}")));
    }
    Ok((u, residual))
}

/// Exhaustive search on uniform grids of an interval or cube, refined by
/// halving the spacing `h`.
///
/// A nonexpansive self-map of a compact convex set has a fixed point `p`; the
/// grid point nearest to `p` is within `h·√d/2`, so its residual is at most
/// `h·√d`. Refinement therefore succeeds once `h·√d ≤ ε`.
#[derive(Clone, Debug)]
pub struct GridOracle {
    space: Space,
    /// Largest number of grid points examined at one level.
    pub max_points: usize,
}

impl GridOracle {
    pub fn new(space: Space) -> Result<Self, ProductError> {
        match space {
            Space::Interval { .. } | Space::Cube { .. } => Ok(GridOracle {
                space,
                max_points: 1 << 22,
            }),
            other => Err(ProductError::Argument(format!(
                "grid oracle needs an interval or cube, got {}",
                other.label()
            ))),
        }
    }

    fn bounds(&self) -> (usize, f64, f64) {
        match self.space {
            Space::Interval { a, b } => (1, a, b),
            Space::Cube { dim, a, b } => (dim, a, b),
            _ => unreachable!("checked at construction"),
        }
    }
}

impl AfppOracle for GridOracle {
    fn space(&self) -> &Space {
        &self.space
    }

    fn label(&self) -> String {
        format!("grid search on {}", self.space.label())
    }

    fn solve(&self, f: &NonexpansiveMap, eps: f64) -> Result<Point, ProductError> {
        let (dim, a, b) = self.bounds();
        let mut cells: usize = 1;
        loop {
            let per_axis = cells + 1;
            let total = (per_axis as f64).powi(dim as i32);
            if total > self.max_points as f64 {
                return Err(ProductError::Oracle {
                    oracle: self.label(),
                    reason: format!("no {eps}-fixed point with at most {} grid points", self.max_points),
                });
            }
            let h = (b - a) / cells as f64;
            let mut best: Option<(f64, Point)> = None;
            let mut index = vec![0usize; dim];
            for _ in 0..total as usize {
                let coords: Vec<f64> = index
                    .iter()
                    .map(|&i| if i == cells { b } else { a + i as f64 * h })
                    .collect();
                let p = Point::Coords(coords);
                let r = f.displacement(&p)?;
                if best.as_ref().map_or(true, |(br, _)| r < *br) {
                    best = Some((r, p));
                }
                for slot in index.iter_mut() {
                    *slot += 1;
                    if *slot < per_axis {
                        break;
                    }
                    *slot = 0;
                }
            }
            let (r, p) = best.expect("grids are nonempty");
            if r <= eps {
                return Ok(p);
            }
            if h * (dim as f64).sqrt() <= eps / 4.0 {
                return Err(ProductError::Oracle {
                    oracle: self.label(),
                    reason: format!(
                        "best residual {r} > {eps} at spacing {h}; the map is not a nonexpansive self-map"
                    ),
                });
            }
            cells *= 2;
        }
    }
}

/// Closed-form fixed points of affine self-maps of an interval.
///
/// Affinity is detected from three evaluations; non-affine maps are refused.
#[derive(Clone, Debug)]
pub struct AffineOracle {
    space: Space,
}

impl AffineOracle {
    pub fn new(space: Space) -> Result<Self, ProductError> {
        match space {
            Space::Interval { .. } => Ok(AffineOracle { space }),
            other => Err(ProductError::Argument(format!(
                "affine oracle needs an interval, got {}",
                other.label()
            ))),
        }
    }
}

impl AfppOracle for AffineOracle {
    fn space(&self) -> &Space {
        &self.space
    }

    fn label(&self) -> String {
        format!("affine fixed point on {}", self.space.label())
    }

    fn solve(&self, f: &NonexpansiveMap, _eps: f64) -> Result<Point, ProductError> {
        let Space::Interval { a, b } = self.space else {
            unreachable!("checked at construction")
        };
        let eval = |x: f64| -> Result<f64, ProductError> {
            Ok(f.apply(&Point::real(x))?.as_real().expect("interval member"))
        };
        let (fa, fb, fm) = (eval(a)?, eval(b)?, eval(0.5 * (a + b))?);
        if (fm - 0.5 * (fa + fb)).abs() > 1e-12 * (1.0 + fa.abs() + fb.abs()) {
            return Err(ProductError::Oracle {
                oracle: self.label(),
                reason: format!("{} is not affine", f.label()),
            });
        }
        let slope = (fb - fa) / (b - a);
        // x = fa + slope (x − a)  ⇔  x (1 − slope) = fa − slope·a.
        let x = if (1.0 - slope).abs() < 1e-15 {
            a
        } else {
            (fa - slope * a) / (1.0 - slope)
        };
        Ok(Point::real(x.clamp(a, b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::catalog::{affine, clamped_translation, Clamp};
    use crate::spaces::{make_cube, make_interval};

    #[test]
    fn grid_finds_fixed_points() {
        let unit = make_interval(0.0, 1.0).unwrap();
        let f = NonexpansiveMap::from_fn("1 - x", unit.clone(), |p| Point::real(1.0 - p.as_real().unwrap()));
        let o = GridOracle::new(unit).unwrap();
        for eps in [0.5, 0.01, 1e-4] {
            let (_, r) = solve_checked(&o, &f, eps).unwrap();
            assert!(r <= eps);
        }
        let sq = make_cube(2, 0.0, 1.0).unwrap();
        let g = affine(sq.clone(), vec![vec![0.0, -0.6], vec![0.6, 0.0]], vec![0.6, 0.2]).unwrap();
        let (_, r) = solve_checked(&GridOracle::new(sq).unwrap(), &g, 1e-3).unwrap();
        assert!(r <= 1e-3);
    }

    #[test]
    fn grid_rejects_expanding_maps() {
        let unit = make_interval(0.0, 1.0).unwrap();
        // No fixed point: the map is not a self-map in the usual sense.
        let f = clamped_translation(unit.clone(), 0.5, Clamp::NONE);
        let o = GridOracle::new(unit).unwrap();
        assert!(solve_checked(&o, &f, 0.1).is_err());
    }

    #[test]
    fn affine_oracle_is_exact() {
        let unit = make_interval(0.0, 1.0).unwrap();
        let f = NonexpansiveMap::from_fn("(u+1)/2", unit.clone(), |p| Point::real((p.as_real().unwrap() + 1.0) / 2.0));
        let (u, r) = solve_checked(&AffineOracle::new(unit.clone()).unwrap(), &f, 1e-12).unwrap();
        assert_eq!((u, r), (Point::real(1.0), 0.0));
        let g = NonexpansiveMap::from_fn("x^2", unit.clone(), |p| Point::real(p.as_real().unwrap().powi(2)));
        assert!(solve_checked(&AffineOracle::new(unit).unwrap(), &g, 0.1).is_err());
    }
}
