//! Planar primitives for convex polygons.
//!
//! Everything here is a pure function of the vertex coordinates. Tolerances
//! are relative to the size of the polygon being examined so that results do
//! not depend on the unit of length.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Relative area tolerance (times bounding-box area).
pub const AREA_EPS: f64 = 1e-14;
/// Relative vertex snapping tolerance (times the longest edge).
pub const SNAP_EPS: f64 = 1e-9;
/// Angular slack of the convexity test, in radians.
pub const ANGLE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let len_sq = d.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len_sq).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

fn bbox_area(vertices: &[Point2]) -> f64 {
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for v in vertices {
        xmin = xmin.min(v.x);
        xmax = xmax.max(v.x);
        ymin = ymin.min(v.y);
        ymax = ymax.max(v.y);
    }
    (xmax - xmin) * (ymax - ymin)
}

/// Signed shoelace area of a closed vertex loop (positive when CCW).
pub fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let o = vertices[0];
    let mut twice = 0.0;
    for i in 1..n - 1 {
        twice += (vertices[i] - o).cross(vertices[i + 1] - o);
    }
    0.5 * twice
}

/// Shoelace area and area centroid of a CCW vertex loop.
pub fn polygon_area_centroid(vertices: &[Point2]) -> Result<(f64, Point2)> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::DegeneratePolygon { area: 0.0 });
    }
    // Work relative to the first vertex to limit cancellation.
    let o = vertices[0];
    let mut twice_area = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 1..n - 1 {
        let a = vertices[i] - o;
        let b = vertices[i + 1] - o;
        let w = a.cross(b);
        twice_area += w;
        cx += w * (a.x + b.x);
        cy += w * (a.y + b.y);
    }
    let area = 0.5 * twice_area;
    if !(area > AREA_EPS * bbox_area(vertices)) {
        return Err(Error::DegeneratePolygon { area });
    }
    let c = Point2::new(cx / (3.0 * twice_area), cy / (3.0 * twice_area));
    Ok((area, o + c))
}

/// Symmetric 2x2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.a11 + self.a22);
        let r = (0.5 * (self.a11 - self.a22)).hypot(self.a12);
        (m + r, m - r)
    }

    /// Unit eigenvector of the largest eigenvalue, or `None` when the two
    /// eigenvalues agree to `rel_tol * trace`.
    pub fn principal_direction(&self, rel_tol: f64) -> Option<Point2> {
        let (l1, l2) = self.eigenvalues();
        if (l1 - l2).abs() <= rel_tol * self.trace().abs() {
            return None;
        }
        // Two candidate (non-normalized) eigenvectors; keep the larger one.
        let u = Point2::new(l1 - self.a22, self.a12);
        let v = Point2::new(self.a12, l1 - self.a11);
        let w = if u.norm_sq() >= v.norm_sq() { u } else { v };
        let mut d = w * (1.0 / w.norm());
        if d.y < 0.0 || (d.y == 0.0 && d.x < 0.0) {
            d = -d;
        }
        Some(d)
    }

    pub fn rotated(&self, angle: f64) -> Sym2 {
        // R S R^T
        let (s, c) = angle.sin_cos();
        let r = [[c, -s], [s, c]];
        let m = [[self.a11, self.a12], [self.a12, self.a22]];
        let mut rm = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                rm[i][j] = r[i][0] * m[0][j] + r[i][1] * m[1][j];
            }
        }
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = rm[i][0] * r[j][0] + rm[i][1] * r[j][1];
            }
        }
        Sym2 {
            a11: out[0][0],
            a12: 0.5 * (out[0][1] + out[1][0]),
            a22: out[1][1],
        }
    }
}

/// A line through `anchor` with unit `direction`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutLine {
    pub anchor: Point2,
    pub direction: Point2,
}

impl CutLine {
    pub fn new(anchor: Point2, direction: Point2) -> Self {
        let n = direction.norm();
        debug_assert!(n > 0.0, "zero cut direction");
        CutLine {
            anchor,
            direction: direction * (1.0 / n),
        }
    }

    pub fn through(a: Point2, b: Point2) -> Self {
        CutLine::new(a, b - a)
    }

    /// Signed distance of `p` from the line (positive on the left).
    pub fn side(&self, p: Point2) -> f64 {
        self.direction.cross(p - self.anchor)
    }
}

/// One crossing of a cut line with a polygon boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryHit {
    /// Loop index of the edge `v[edge] -> v[edge + 1]`.
    pub edge: usize,
    pub point: Point2,
    /// Position along the edge; exactly 0 or 1 when snapped to a vertex.
    pub t: f64,
}

impl BoundaryHit {
    /// Loop index of the vertex this hit was snapped to, if any.
    pub fn vertex(&self, n: usize) -> Option<usize> {
        if self.t == 0.0 {
            Some(self.edge)
        } else if self.t == 1.0 {
            Some((self.edge + 1) % n)
        } else {
            None
        }
    }
}

/// Ordered vertex loop of one convex cell and its derived size scalars.
#[derive(Clone, Debug)]
pub struct ConvexPolygonView {
    vertices: Vec<Point2>,
    area: f64,
    centroid: Point2,
    longest_edge: f64,
    shortest_edge: f64,
    max_vertex_dist: f64,
    min_edge_dist: f64,
}

impl ConvexPolygonView {
    /// Builds the view; fails for fewer than three vertices or a
    /// non-positive (clockwise or degenerate) area.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        let (area, centroid) = polygon_area_centroid(&vertices)?;
        let n = vertices.len();
        let mut longest_edge = 0.0f64;
        let mut shortest_edge = f64::INFINITY;
        let mut max_vertex_dist = 0.0f64;
        let mut min_edge_dist = f64::INFINITY;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let len = a.dist(b);
            longest_edge = longest_edge.max(len);
            shortest_edge = shortest_edge.min(len);
            max_vertex_dist = max_vertex_dist.max(centroid.dist(a));
            min_edge_dist = min_edge_dist.min(point_segment_distance(centroid, a, b));
        }
        Ok(ConvexPolygonView {
            vertices,
            area,
            centroid,
            longest_edge,
            shortest_edge,
            max_vertex_dist,
            min_edge_dist,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i % self.vertices.len()]
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// `C_E`.
    pub fn centroid(&self) -> Point2 {
        self.centroid
    }

    /// `H_E`: longest edge.
    pub fn longest_edge(&self) -> f64 {
        self.longest_edge
    }

    /// `h_E`: shortest edge.
    pub fn shortest_edge(&self) -> f64 {
        self.shortest_edge
    }

    /// `R_E`: largest centroid-to-vertex distance.
    pub fn max_vertex_dist(&self) -> f64 {
        self.max_vertex_dist
    }

    /// `r_E`: smallest centroid-to-edge distance.
    pub fn min_edge_dist(&self) -> f64 {
        self.min_edge_dist
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let (i, j) = self.longest_vertex_pair();
        self.vertices[i].dist(self.vertices[j])
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        self.vertex(i).dist(self.vertex(i + 1))
    }

    /// Outward unit normal of edge `i`.
    pub fn edge_normal(&self, i: usize) -> Point2 {
        let d = self.vertex(i + 1) - self.vertex(i);
        Point2::new(d.y, -d.x) * (1.0 / d.norm())
    }

    /// Triangles `(C_E, v_i, v_{i+1})` of the centroid fan.
    pub fn fan(&self) -> impl Iterator<Item = [Point2; 3]> + '_ {
        let n = self.vertices.len();
        let c = self.centroid;
        (0..n).map(move |i| [c, self.vertices[i], self.vertices[(i + 1) % n]])
    }

    /// True when every turn is a left turn or straight, up to `ANGLE_EPS`.
    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[(i + n - 1) % n];
            let b = self.vertices[i];
            let c = self.vertices[(i + 1) % n];
            let u = b - a;
            let v = c - b;
            let s = u.cross(v);
            if s < 0.0 && -s > ANGLE_EPS * u.norm() * v.norm() {
                return false;
            }
            // A straight reversal (spike) is not convex either.
            if s.abs() <= ANGLE_EPS * u.norm() * v.norm() && u.dot(v) < 0.0 {
                return false;
            }
        }
        true
    }

    /// Area inertia tensor about the centroid,
    /// `[[∫(y-yc)², -∫(x-xc)(y-yc)], [., ∫(x-xc)²]]`, from exact closed forms
    /// on the centroid fan.
    pub fn inertia_tensor(&self) -> Sym2 {
        let n = self.vertices.len();
        let c = self.centroid;
        let (mut ixx, mut iyy, mut ixy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = self.vertices[i] - c;
            let q = self.vertices[(i + 1) % n] - c;
            let a = 0.5 * p.cross(q);
            ixx += a / 6.0 * (p.x * p.x + p.x * q.x + q.x * q.x);
            iyy += a / 6.0 * (p.y * p.y + p.y * q.y + q.y * q.y);
            ixy += a / 12.0 * (2.0 * p.x * p.y + 2.0 * q.x * q.y + p.x * q.y + q.x * p.y);
        }
        Sym2 {
            a11: iyy,
            a12: -ixy,
            a22: ixx,
        }
    }

    /// Cut line through the centroid along the eigenvector of the largest
    /// inertia eigenvalue. Isotropic cells get the vertical direction.
    pub fn max_moment_direction(&self) -> CutLine {
        let dir = self
            .inertia_tensor()
            .principal_direction(1e-9)
            .unwrap_or(Point2::new(0.0, 1.0));
        CutLine::new(self.centroid, dir)
    }

    /// Vertex pair at maximal distance; ties keep the lexicographically
    /// smallest pair.
    pub fn longest_vertex_pair(&self) -> (usize, usize) {
        let n = self.vertices.len();
        let mut best = (0, 1);
        let mut best_d = -1.0;
        for i in 0..n {
            for j in i + 1..n {
                let d = (self.vertices[i] - self.vertices[j]).norm_sq();
                if d > best_d * (1.0 + 1e-12) {
                    best_d = d;
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Longest diagonal and the cut line through the centroid orthogonal to it.
    pub fn longest_diagonal(&self) -> ((usize, usize), CutLine) {
        let (i, j) = self.longest_vertex_pair();
        let d = self.vertices[j] - self.vertices[i];
        ((i, j), CutLine::new(self.centroid, d.perp()))
    }

    /// Crossings of `line` with the boundary, sorted by edge index. Hits
    /// within `SNAP_EPS * H_E` of a vertex are reported at the vertex.
    pub fn line_boundary_intersections(&self, line: &CutLine) -> Result<Vec<BoundaryHit>> {
        let n = self.vertices.len();
        let eps = SNAP_EPS * self.longest_edge;
        let side: Vec<f64> = self
            .vertices
            .iter()
            .map(|&v| {
                let s = line.side(v);
                if s.abs() <= eps {
                    0.0
                } else {
                    s
                }
            })
            .collect();

        let mut vertex_hit = vec![false; n];
        let mut hits = Vec::with_capacity(2);
        for i in 0..n {
            if side[i] == 0.0 {
                vertex_hit[i] = true;
            }
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if side[i] * side[j] < 0.0 {
                let t = side[i] / (side[i] - side[j]);
                let a = self.vertices[i];
                let b = self.vertices[j];
                let p = a + (b - a) * t;
                if p.dist(a) <= eps {
                    vertex_hit[i] = true;
                } else if p.dist(b) <= eps {
                    vertex_hit[j] = true;
                } else {
                    hits.push(BoundaryHit { edge: i, point: p, t });
                }
            }
        }
        for (i, hit) in vertex_hit.iter().enumerate() {
            if *hit {
                hits.push(BoundaryHit {
                    edge: i,
                    point: self.vertices[i],
                    t: 0.0,
                });
            }
        }
        if hits.len() != 2 {
            return Err(Error::NoIntersection { hits: hits.len() });
        }
        hits.sort_by_key(|h| h.edge);
        Ok(hits)
    }
}
