//! Polygonal regions and their overlap area.

use geo::{Area, BooleanOps, Coord, LineString};
use nalgebra::Vector2;

use crate::moments::EllipseShape;

/// Vertex count of the inscribed polygon that stands in for an ellipse.
pub const ELLIPSE_VERTICES: usize = 720;

pub type Polygon = Vec<Vector2<f64>>;

/// A planar region given as a union of pairwise-disjoint convex polygons,
/// each with counter-clockwise vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub pieces: Vec<Polygon>,
}

impl Region {
    pub fn new(pieces: Vec<Polygon>) -> Self {
        Self { pieces }
    }

    pub fn from_ellipse(e: &EllipseShape) -> Self {
        Self::new(vec![ellipse_polygon(e, ELLIPSE_VERTICES)])
    }

    pub fn area(&self) -> f64 {
        self.pieces.iter().map(|p| polygon_area(p)).sum()
    }

    pub fn intersection_area(&self, other: &Region) -> f64 {
        let mut total = 0.0;
        for a in &self.pieces {
            let (amin, amax) = bounds(a);
            for b in &other.pieces {
                let (bmin, bmax) = bounds(b);
                if amax.x < bmin.x || bmax.x < amin.x || amax.y < bmin.y || bmax.y < amin.y {
                    continue;
                }
                total += to_geo(a).intersection(&to_geo(b)).unsigned_area();
            }
        }
        total
    }
}

/// Inscribed polygon with `n` vertices on the ellipse boundary, counter-clockwise.
pub fn ellipse_polygon(e: &EllipseShape, n: usize) -> Polygon {
    (0..n)
        .map(|k| e.boundary_point(2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect()
}

/// Axis-aligned `w × h` rectangle centered at `(cx, cy)`, counter-clockwise.
pub fn rectangle(cx: f64, cy: f64, w: f64, h: f64) -> Polygon {
    let (hw, hh) = (w / 2.0, h / 2.0);
    vec![
        Vector2::new(cx - hw, cy - hh),
        Vector2::new(cx + hw, cy - hh),
        Vector2::new(cx + hw, cy + hh),
        Vector2::new(cx - hw, cy + hh),
    ]
}

/// Shoelace area; positive for counter-clockwise polygons.
pub fn polygon_area(p: &[Vector2<f64>]) -> f64 {
    if p.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..p.len() {
        let a = p[i];
        let b = p[(i + 1) % p.len()];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

fn bounds(p: &[Vector2<f64>]) -> (Vector2<f64>, Vector2<f64>) {
    let mut lo = Vector2::repeat(f64::INFINITY);
    let mut hi = Vector2::repeat(f64::NEG_INFINITY);
    for v in p {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    (lo, hi)
}

fn to_geo(p: &[Vector2<f64>]) -> geo::Polygon<f64> {
    let ring: Vec<Coord<f64>> = p.iter().map(|v| Coord { x: v.x, y: v.y }).collect();
    geo::Polygon::new(LineString::from(ring), vec![])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn overlap(a: Polygon, b: Polygon) -> f64 {
        Region::new(vec![a]).intersection_area(&Region::new(vec![b]))
    }

    #[test]
    fn square_overlap() {
        let a = rectangle(0.0, 0.0, 2.0, 2.0);
        assert_relative_eq!(polygon_area(&a), 4.0);
        assert_relative_eq!(overlap(a.clone(), rectangle(1.0, 1.0, 2.0, 2.0)), 1.0, epsilon = 1e-12);
        assert_eq!(overlap(a, rectangle(10.0, 0.0, 1.0, 1.0)), 0.0);
    }

    #[test]
    fn contained_polygon_is_untouched() {
        let big = rectangle(0.0, 0.0, 10.0, 10.0);
        let small = rectangle(1.0, -1.0, 1.0, 2.0);
        assert_relative_eq!(overlap(small.clone(), big.clone()), 2.0, epsilon = 1e-12);
        assert_relative_eq!(overlap(big, small), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn union_pieces_add_up() {
        let plus = Region::new(vec![
            rectangle(0.0, 0.0, 3.0, 0.5),
            rectangle(0.0, 0.625, 0.5, 0.75),
            rectangle(0.0, -0.625, 0.5, 0.75),
        ]);
        assert_relative_eq!(plus.intersection_area(&plus), plus.area(), epsilon = 1e-12);
        let window = Region::new(vec![rectangle(0.0, 0.5, 4.0, 1.0)]);
        assert_relative_eq!(
            plus.intersection_area(&window),
            3.0 * 0.25 + 0.5 * 0.75,
            epsilon = 1e-12
        );
    }

    #[test]
    fn inscribed_polygon_area_close_to_ellipse() {
        let e = EllipseShape::new(3.0, 1.0, 0.3, Vector2::new(1.0, 1.0)).unwrap();
        let r = Region::from_ellipse(&e);
        assert!((r.area() - e.area()).abs() / e.area() < 1e-4);
    }
}
