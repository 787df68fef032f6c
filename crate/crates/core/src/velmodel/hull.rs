//! Convex hulls and convex polygons in model coordinates (meters, `z` down).

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub z: f64,
}

impl Point {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }
}

/// `(b - a) x (c - a)`; positive when `a, b, c` turn counter-clockwise in the `(x, z)` frame.
#[inline]
pub fn cross(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.z - a.z) - (b.z - a.z) * (c.x - a.x)
}

/// Strictly convex polygon with counter-clockwise vertices. Closed: boundary points are inside.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::DegenerateInput("polygon needs at least 3 vertices"));
        }
        if vertices
            .iter()
            .any(|p| !p.x.is_finite() || !p.z.is_finite())
        {
            return Err(Error::NonFinite("polygon vertices"));
        }
        for k in 0..n {
            let (a, b, c) = (vertices[k], vertices[(k + 1) % n], vertices[(k + 2) % n]);
            if a == b {
                return Err(Error::DegenerateInput("repeated polygon vertex"));
            }
            if cross(a, b, c) <= 0.0 {
                return Err(Error::DegenerateInput(
                    "polygon is not strictly convex and counter-clockwise",
                ));
            }
        }
        // Local convexity at every vertex still admits star-shaped windings; the
        // total turning of a simple convex polygon is exactly one revolution.
        let mut winding = 0.0;
        for k in 0..n {
            let (a, b, c) = (vertices[k], vertices[(k + 1) % n], vertices[(k + 2) % n]);
            let d1 = (b.x - a.x, b.z - a.z);
            let d2 = (c.x - b.x, c.z - b.z);
            winding += libm::atan2(d1.0 * d2.1 - d1.1 * d2.0, d1.0 * d2.0 + d1.1 * d2.1);
        }
        if (winding - 2.0 * core::f64::consts::PI).abs() > 1e-6 {
            return Err(Error::DegenerateInput("polygon winds more than once"));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    /// Half-plane containment test; points on the boundary count as inside.
    pub fn contains(&self, p: Point) -> bool {
        self.edges().all(|(a, b)| cross(a, b, p) >= 0.0)
    }

    /// `(x_min, x_max, z_min, z_max)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ),
            |(x0, x1, z0, z1), p| (x0.min(p.x), x1.max(p.x), z0.min(p.z), z1.max(p.z)),
        )
    }

    /// Horizontal extent of the polygon at depth `z`, if the line meets it.
    pub fn span_at(&self, z: f64) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (a, b) in self.edges() {
            if z < a.z.min(b.z) || z > a.z.max(b.z) {
                continue;
            }
            if a.z == b.z {
                lo = lo.min(a.x.min(b.x));
                hi = hi.max(a.x.max(b.x));
            } else {
                let t = (z - a.z) / (b.z - a.z);
                let x = a.x + t * (b.x - a.x);
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    pub fn area(&self) -> f64 {
        0.5 * self
            .edges()
            .map(|(a, b)| a.x * b.z - b.x * a.z)
            .sum::<f64>()
    }
}

/// Convex hull by Andrew's monotone chain. Collinear boundary points are dropped,
/// so the result is strictly convex and its vertices are a subset of `points`.
pub fn convex_hull(points: &[Point]) -> Result<ConvexPolygon> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(
            "convex hull needs at least 3 points",
        ));
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.z.is_finite()) {
        return Err(Error::NonFinite("hull points"));
    }
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.z.total_cmp(&b.z)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::DegenerateInput("fewer than 3 distinct points"));
    }

    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();

    if hull.len() < 3 {
        return Err(Error::DegenerateInput("all points are collinear"));
    }
    ConvexPolygon::new(hull)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use alloc::vec;

    fn p(x: f64, z: f64) -> Point {
        Point::new(x, z)
    }

    #[test]
    fn triangle_is_its_own_hull() {
        let pts = [p(0.0, 0.0), p(4.0, 1.0), p(1.0, 3.0)];
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.vertices().len(), 3);
        for q in pts {
            assert!(h.vertices().contains(&q));
        }
    }

    #[test]
    fn square_drops_center_point() {
        let pts = [
            p(0.0, 0.0),
            p(1.0, 0.0),
            p(1.0, 1.0),
            p(0.0, 1.0),
            p(0.5, 0.5),
        ];
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.vertices().len(), 4);
        assert!(!h.vertices().contains(&p(0.5, 0.5)));
        assert!((h.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn collinear_and_short_inputs_are_rejected() {
        let line = [p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0), p(3.0, 3.0)];
        assert!(matches!(convex_hull(&line), Err(Error::DegenerateInput(_))));
        assert!(convex_hull(&[p(0.0, 0.0), p(1.0, 0.0)]).is_err());
        let dup = [p(0.0, 0.0), p(0.0, 0.0), p(1.0, 0.0)];
        assert!(convex_hull(&dup).is_err());
    }

    #[test]
    fn random_hull_contains_every_input_point() {
        let mut rng = SplitMix64::new(42);
        let pts: Vec<Point> = (0..50)
            .map(|_| p(rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0)))
            .collect();
        let h = convex_hull(&pts).unwrap();
        // Brute-force half-plane oracle with a scale-aware tolerance.
        let verts = h.vertices();
        for q in &pts {
            for k in 0..verts.len() {
                let (a, b) = (verts[k], verts[(k + 1) % verts.len()]);
                let c = (b.x - a.x) * (q.z - a.z) - (b.z - a.z) * (q.x - a.x);
                assert!(c >= -1e-9, "point {q:?} outside edge {k}");
            }
        }
        for v in verts {
            assert!(pts.contains(v));
        }
    }

    #[test]
    fn polygon_validation() {
        let cw = vec![p(0.0, 0.0), p(0.0, 1.0), p(1.0, 0.0)];
        assert!(ConvexPolygon::new(cw).is_err());
        let ccw = vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)];
        assert!(ConvexPolygon::new(ccw).is_ok());
        let collinear = vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(1.0, 1.0)];
        assert!(ConvexPolygon::new(collinear).is_err());
        // Pentagram vertex order: every turn is left but the boundary winds twice.
        let star: Vec<Point> = (0..5)
            .map(|k| {
                let a = 2.0 * core::f64::consts::PI * (2 * k) as f64 / 5.0;
                p(libm::cos(a), libm::sin(a))
            })
            .collect();
        assert!(ConvexPolygon::new(star).is_err());
    }

    #[test]
    fn span_and_contains_agree_on_a_diamond() {
        let d = ConvexPolygon::new(vec![p(1.0, 0.0), p(2.0, 1.0), p(1.0, 2.0), p(0.0, 1.0)]);
        // z grows downward, so this vertex order is clockwise on screen but CCW in (x, z).
        let d = d.unwrap();
        assert_eq!(d.span_at(1.0), Some((0.0, 2.0)));
        assert_eq!(d.span_at(0.5), Some((0.5, 1.5)));
        assert_eq!(d.span_at(2.5), None);
        assert!(d.contains(p(1.0, 1.0)));
        assert!(d.contains(p(0.5, 0.5)));
        assert!(!d.contains(p(0.4, 0.5)));
    }
}
