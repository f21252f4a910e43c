//! Planar geometry for palm construction: monotone-chain convex hull and
//! prism extrusion of the hull into a closed triangle mesh.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

/// z-component of (a - o) x (b - o); positive for a counter-clockwise turn.
pub fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain. Returns the hull counter-clockwise starting from
/// the lexicographically smallest point, with collinear and nearly collinear
/// boundary points dropped so the result stays strictly convex under rotation.
pub fn convex_hull_2d(points: &[Point2]) -> Result<Vec<Point2>> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!(
            "convex hull needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::Degenerate("non-finite point".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    let extent = pts.iter().fold(0.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
    let eps = 1e-12 * extent * extent;

    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();

    if hull.len() < 3 {
        return Err(Error::Degenerate("all points are collinear".into()));
    }
    Ok(hull)
}

/// Signed shoelace area; positive for counter-clockwise polygons.
pub fn polygon_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    let mut twice = 0.0;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        twice += a.x * b.y - b.x * a.y;
    }
    0.5 * twice
}

pub fn polygon_centroid(poly: &[Point2]) -> Point2 {
    let n = poly.len();
    let area = polygon_area(poly);
    if n == 0 || area.abs() < f64::MIN_POSITIVE {
        let k = n.max(1) as f64;
        let (sx, sy) = poly.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
        return Point2::new(sx / k, sy / k);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let w = a.x * b.y - b.x * a.y;
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
    }
    Point2::new(cx / (6.0 * area), cy / (6.0 * area))
}

/// Strictly convex and counter-clockwise (no three consecutive collinear vertices).
pub fn is_strictly_convex_ccw(poly: &[Point2]) -> bool {
    let n = poly.len();
    n >= 3
        && (0..n).all(|i| cross(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]) > 0.0)
}

/// Inside-or-on test against a CCW convex polygon, with a signed-area tolerance.
pub fn convex_contains(poly: &[Point2], p: Point2, tol: f64) -> bool {
    let n = poly.len();
    (0..n).all(|i| cross(poly[i], poly[(i + 1) % n], p) >= -tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrismMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl PrismMesh {
    /// Enclosed volume from the divergence theorem (sum of signed tetrahedra
    /// against the origin). Requires outward-facing triangle winding.
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]];
                (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                    + a[2] * (b[0] * c[1] - b[1] * c[0]))
                    / 6.0
            })
            .sum()
    }
}

/// Extrudes a CCW hull along +z. Bottom ring is `0..n`, top ring `n..2n`.
pub fn extrude_palm(hull: &[Point2], thickness_m: f64) -> Result<PrismMesh> {
    if !(thickness_m > 0.0 && thickness_m.is_finite()) {
        return Err(Error::OutOfRange(format!("thickness must be positive, got {thickness_m}")));
    }
    if !is_strictly_convex_ccw(hull) {
        return Err(Error::Degenerate("hull is not a strictly convex CCW polygon".into()));
    }
    let n = hull.len();
    let mut vertices = Vec::with_capacity(2 * n);
    vertices.extend(hull.iter().map(|p| [p.x, p.y, 0.0]));
    vertices.extend(hull.iter().map(|p| [p.x, p.y, thickness_m]));

    let mut triangles = Vec::with_capacity(4 * n - 4);
    for i in 1..n - 1 {
        // bottom faces -z, so wind clockwise when seen from above
        triangles.push([0, i + 1, i]);
        triangles.push([n, n + i, n + i + 1]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        triangles.push([i, j, n + j]);
        triangles.push([i, n + j, n + i]);
    }
    Ok(PrismMesh { vertices, triangles })
}
