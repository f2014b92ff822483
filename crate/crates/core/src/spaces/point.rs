use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// An element of some [`Space`](super::Space).
///
/// A point is only meaningful relative to the space that produced it: metric
/// operations on a point of the wrong kind are rejected by membership tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    /// Coordinates in ℝⁿ (also intervals, boxes and half-lines).
    Coords(Vec<f64>),
    /// A point of the open unit disk.
    Disk { re: f64, im: f64 },
    /// `offset` along ray `ray` of a star tree; offset 0 is the hub.
    Tree { ray: usize, offset: f64 },
    /// Angle on the unit circle, in `[0, 2π)`.
    Angle(f64),
    /// A pair `(x, u)` of a product space.
    Pair(Box<Point>, Box<Point>),
}

impl Point {
    pub fn real(x: f64) -> Point {
        Point::Coords(vec![x])
    }

    pub fn coords(xs: impl Into<Vec<f64>>) -> Point {
        Point::Coords(xs.into())
    }

    pub fn disk(z: Complex64) -> Point {
        Point::Disk { re: z.re, im: z.im }
    }

    pub fn tree(ray: usize, offset: f64) -> Point {
        Point::Tree { ray, offset }
    }

    pub fn pair(x: Point, u: Point) -> Point {
        Point::Pair(Box::new(x), Box::new(u))
    }

    /// The single coordinate of a one-dimensional point.
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Point::Coords(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }

    pub fn as_coords(&self) -> Option<&[f64]> {
        match self {
            Point::Coords(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_complex(&self) -> Option<Complex64> {
        match self {
            Point::Disk { re, im } => Some(Complex64::new(*re, *im)),
            _ => None,
        }
    }

    pub fn as_pair(&self) -> Option<(&Point, &Point)> {
        match self {
            Point::Pair(x, u) => Some((x, u)),
            _ => None,
        }
    }

    /// Column names used when a point is written to CSV.
    pub fn csv_columns(&self, prefix: &str) -> Vec<String> {
        match self {
            Point::Coords(v) if v.len() == 1 => vec![prefix.to_string()],
            Point::Coords(v) => (0..v.len()).map(|i| format!("{prefix}_{i}")).collect(),
            Point::Disk { .. } => vec![format!("{prefix}_re"), format!("{prefix}_im")],
            Point::Tree { .. } => vec![format!("{prefix}_ray"), format!("{prefix}_offset")],
            Point::Angle(_) => vec![format!("{prefix}_theta")],
            Point::Pair(x, u) => {
                let mut cols = x.csv_columns(&format!("{prefix}_x"));
                cols.extend(u.csv_columns(&format!("{prefix}_u")));
                cols
            }
        }
    }

    /// CSV fields, reals in fixed 17-significant-digit notation.
    pub fn csv_fields(&self) -> Vec<String> {
        match self {
            Point::Coords(v) => v.iter().map(|x| fmt17(*x)).collect(),
            Point::Disk { re, im } => vec![fmt17(*re), fmt17(*im)],
            Point::Tree { ray, offset } => vec![ray.to_string(), fmt17(*offset)],
            Point::Angle(t) => vec![fmt17(*t)],
            Point::Pair(x, u) => {
                let mut fields = x.csv_fields();
                fields.extend(u.csv_fields());
                fields
            }
        }
    }
}

/// A real in scientific notation with 17 significant digits, which
/// round-trips every `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
