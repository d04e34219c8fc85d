//! Starting meshes: structured and Voronoi meshes of the L-shaped domain
//! `(-1,1)² \ (-1,0)²`, and single regular polygons.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{polygon_area_centroid, signed_area, Point2};
use crate::mesh::PolyMesh;

/// Grid index of point `(i, j)` on the `(2n+1)²` lattice over `[-1,1]²`,
/// or `None` inside the removed quadrant.
struct Lattice {
    n: usize,
    index: Vec<Option<usize>>,
    points: Vec<Point2>,
}

impl Lattice {
    fn new(n: usize, shift: impl Fn(usize, usize) -> f64) -> Self {
        let m = 2 * n + 1;
        let mut index = vec![None; m * m];
        let mut points = Vec::new();
        for j in 0..m {
            for i in 0..m {
                if i < n && j < n {
                    continue;
                }
                index[j * m + i] = Some(points.len());
                let x = i as f64 / n as f64 - 1.0;
                let y = j as f64 / n as f64 - 1.0 + shift(i, j);
                points.push(Point2::new(x, y));
            }
        }
        Lattice { n, index, points }
    }

    fn at(&self, i: usize, j: usize) -> usize {
        self.index[j * (2 * self.n + 1) + i].expect("lattice point inside the domain")
    }

    /// Lower-left corners `(i, j)` of the `3n²` grid squares.
    fn squares(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..2 * n).flat_map(move |j| (0..2 * n).map(move |i| (i, j))).filter(move |&(i, j)| i >= n || j >= n)
    }
}

/// Each of the `3n²` squares split in two along the diagonal through the
/// corner nearest the re-entrant corner.
pub fn lshape_triangular(n: usize) -> Result<PolyMesh> {
    if n == 0 {
        return Err(Error::GenerationFailure("need at least one subdivision".into()));
    }
    let g = Lattice::new(n, |_, _| 0.0);
    let mut loops = Vec::with_capacity(6 * n * n);
    for (i, j) in g.squares() {
        let (a, b, c, d) = (g.at(i, j), g.at(i + 1, j), g.at(i + 1, j + 1), g.at(i, j + 1));
        // Quadrant of the square decides which diagonal points at the origin.
        if (i >= n) == (j >= n) {
            loops.push(vec![a, b, c]);
            loops.push(vec![a, c, d]);
        } else {
            loops.push(vec![a, b, d]);
            loops.push(vec![b, c, d]);
        }
    }
    PolyMesh::build(g.points, &loops)
}

/// Quadrilateral grid whose interior points are moved up or down by
/// `0.2/n` in a checkerboard pattern, turning the squares into trapezoids.
/// Points on horizontal boundary segments stay put.
pub fn lshape_trapezoidal(n: usize) -> Result<PolyMesh> {
    if n == 0 {
        return Err(Error::GenerationFailure("need at least one subdivision".into()));
    }
    let m = 2 * n;
    let on_horizontal_boundary = |i: usize, j: usize| j == 0 || j == m || (j == n && i <= n);
    let shift = |i: usize, j: usize| {
        if on_horizontal_boundary(i, j) {
            0.0
        } else if (i + j) % 2 == 0 {
            0.2 / n as f64
        } else {
            -0.2 / n as f64
        }
    };
    let g = Lattice::new(n, shift);
    let loops: Vec<Vec<usize>> = g
        .squares()
        .map(|(i, j)| vec![g.at(i, j), g.at(i + 1, j), g.at(i + 1, j + 1), g.at(i, j + 1)])
        .collect();
    PolyMesh::build(g.points, &loops)
}

/// Single cell with `n` vertices on the circle of the given radius.
pub fn regular_polygon(n: usize, radius: f64) -> Result<PolyMesh> {
    if n < 3 || !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::GenerationFailure(format!("no regular polygon with {n} sides and radius {radius}")));
    }
    let points = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            Point2::new(radius * t.cos(), radius * t.sin())
        })
        .collect();
    PolyMesh::build(points, &[(0..n).collect()])
}

/// The L-shape as two convex pieces meeting along `y = 0, 0 ≤ x ≤ 1`.
fn pieces() -> [Vec<Point2>; 2] {
    let p = Point2::new;
    [
        vec![p(-1.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(-1.0, 1.0)],
        vec![p(0.0, -1.0), p(1.0, -1.0), p(1.0, 0.0), p(0.0, 0.0)],
    ]
}

/// Keeps the part of a convex polygon where `(q - m)·d ≤ 0`.
fn clip(poly: &[Point2], m: Point2, d: Point2) -> Vec<Point2> {
    let side = |q: Point2| (q - m).dot(d);
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            out.push(a + (b - a) * (sa / (sa - sb)));
        }
    }
    out
}

/// Voronoi region of `seeds[k]` restricted to a convex piece.
fn voronoi_piece(seeds: &[Point2], k: usize, order: &[usize], piece: &[Point2]) -> Vec<Point2> {
    let s = seeds[k];
    let mut poly = piece.to_vec();
    for &o in order {
        if poly.len() < 3 {
            break;
        }
        let q = seeds[o];
        let reach = poly.iter().map(|v| v.dist(s)).fold(0.0, f64::max);
        if q.dist(s) > 2.0 * reach {
            break;
        }
        poly = clip(&poly, (s + q) * 0.5, q - s);
    }
    poly
}

/// Voronoi regions of all seeds clipped to each piece of the L-shape.
fn voronoi_cells(seeds: &[Point2]) -> Vec<[Vec<Point2>; 2]> {
    let pieces = pieces();
    (0..seeds.len())
        .map(|k| {
            let mut order: Vec<usize> = (0..seeds.len()).filter(|&o| o != k).collect();
            order.sort_by(|&a, &b| seeds[a].dist(seeds[k]).total_cmp(&seeds[b].dist(seeds[k])).then(a.cmp(&b)));
            [
                voronoi_piece(seeds, k, &order, &pieces[0]),
                voronoi_piece(seeds, k, &order, &pieces[1]),
            ]
        })
        .collect()
}

fn sample_lshape(rng: &mut ChaCha8Rng) -> Point2 {
    loop {
        let p = Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if !(p.x < 0.0 && p.y < 0.0) {
            return p;
        }
    }
}

/// Snaps nearly equal points to a single index.
struct PointPool {
    tol: f64,
    points: Vec<Point2>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl PointPool {
    fn new(tol: f64) -> Self {
        PointPool {
            tol,
            points: Vec::new(),
            buckets: HashMap::new(),
        }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.tol).floor() as i64, (p.y / self.tol).floor() as i64)
    }

    fn insert(&mut self, p: Point2) -> usize {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(b) = self.buckets.get(&(kx + dx, ky + dy)) {
                    if let Some(&i) = b.iter().find(|&&i| self.points[i].dist(p) <= self.tol) {
                        return i;
                    }
                }
            }
        }
        let i = self.points.len();
        self.points.push(p);
        self.buckets.entry((kx, ky)).or_default().push(i);
        i
    }
}

fn is_convex(poly: &[Point2], tol: f64) -> bool {
    let n = poly.len();
    (0..n).all(|k| {
        let (a, b, c) = (poly[k], poly[(k + 1) % n], poly[(k + 2) % n]);
        (b - a).cross(c - b) >= -tol
    })
}

/// Joins the two pieces of a region across `y = 0` when they share their
/// whole seam and the result is convex.
fn merge(top: &[Point2], bottom: &[Point2], tol: f64) -> Option<Vec<Point2>> {
    let seam = |poly: &[Point2]| {
        let n = poly.len();
        (0..n).find(|&k| poly[k].y.abs() <= tol && poly[(k + 1) % n].y.abs() <= tol && (poly[(k + 1) % n].x - poly[k].x).abs() > tol)
    };
    let (i, j) = (seam(top)?, seam(bottom)?);
    let (nt, nb) = (top.len(), bottom.len());
    // top runs i -> i+1 left to right along y = 0; bottom runs right to left.
    if top[i].dist(bottom[(j + 1) % nb]) > tol || top[(i + 1) % nt].dist(bottom[j]) > tol {
        return None;
    }
    let mut out: Vec<Point2> = (0..nt).map(|k| top[(i + 1 + k) % nt]).collect();
    out.extend((1..nb - 1).map(|k| bottom[(j + 1 + k) % nb]));
    is_convex(&out, tol).then_some(out)
}

/// Drops repeated consecutive points.
fn dedup_loop(poly: Vec<Point2>, tol: f64) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::with_capacity(poly.len());
    for p in poly {
        if out.last().is_none_or(|q| q.dist(p) > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].dist(out[out.len() - 1]) <= tol {
        out.pop();
    }
    out
}

/// Clipped Voronoi cells of the current seeds, as polygons, and the Lloyd
/// update of the seeds.
fn regions(seeds: &[Point2], tol: f64) -> (Vec<Vec<Point2>>, Vec<Point2>) {
    let mut polys = Vec::new();
    let mut moved = Vec::with_capacity(seeds.len());
    for (k, [top, bottom]) in voronoi_cells(seeds).into_iter().enumerate() {
        let top = dedup_loop(top, tol);
        let bottom = dedup_loop(bottom, tol);
        let keep = |p: &Vec<Point2>| p.len() >= 3 && signed_area(p) > tol;
        let parts: Vec<Vec<Point2>> = match (keep(&top), keep(&bottom)) {
            (true, true) => match merge(&top, &bottom, tol) {
                Some(m) => vec![m],
                None => vec![top, bottom],
            },
            (true, false) => vec![top],
            (false, true) => vec![bottom],
            (false, false) => vec![],
        };
        let (mut area, mut moment) = (0.0, Point2::new(0.0, 0.0));
        for p in &parts {
            if let Ok((a, c)) = polygon_area_centroid(p) {
                area += a;
                moment = moment + c * a;
            }
        }
        moved.push(if area > 0.0 { moment * (1.0 / area) } else { seeds[k] });
        polys.extend(parts);
    }
    (polys, moved)
}

/// Clipped Voronoi mesh of the L-shape with `lloyd_iters` Lloyd steps.
/// A region that wraps the re-entrant corner stays split along `y = 0`,
/// so the mesh can hold a few more cells than seeds.
pub fn lshape_polygonal(n_seeds: usize, seed: u64, lloyd_iters: usize) -> Result<PolyMesh> {
    if n_seeds < 3 {
        return Err(Error::GenerationFailure(format!("need at least 3 seeds, got {n_seeds}")));
    }
    let tol = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds: Vec<Point2> = (0..n_seeds).map(|_| sample_lshape(&mut rng)).collect();
    let (mut polys, mut moved) = regions(&seeds, tol);
    for _ in 0..lloyd_iters {
        seeds = moved;
        (polys, moved) = regions(&seeds, tol);
    }

    let mut pool = PointPool::new(1e-9);
    let mut loops: Vec<Vec<usize>> = polys
        .iter()
        .map(|p| {
            let mut l: Vec<usize> = p.iter().map(|&q| pool.insert(q)).collect();
            l.dedup();
            while l.len() > 1 && l[0] == l[l.len() - 1] {
                l.pop();
            }
            l
        })
        .collect();
    insert_hanging_points(&pool.points, &mut loops, 1e-9);
    if loops.iter().any(|l| l.len() < 3) {
        return Err(Error::GenerationFailure("degenerate Voronoi region".into()));
    }
    PolyMesh::build(pool.points, &loops).map_err(|e| Error::GenerationFailure(format!("clipped Voronoi mesh is invalid: {e}")))
}

/// Adds to each loop the points lying inside its sides, so that neighbouring
/// regions share every point along a common side.
fn insert_hanging_points(points: &[Point2], loops: &mut [Vec<usize>], tol: f64) {
    let mut by_x: Vec<usize> = (0..points.len()).collect();
    by_x.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x));
    let xs: Vec<f64> = by_x.iter().map(|&i| points[i].x).collect();
    for l in loops.iter_mut() {
        let mut out = Vec::with_capacity(l.len());
        for k in 0..l.len() {
            let (a, b) = (l[k], l[(k + 1) % l.len()]);
            let (pa, pb) = (points[a], points[b]);
            out.push(a);
            let (lo, hi) = (pa.x.min(pb.x) - tol, pa.x.max(pb.x) + tol);
            let start = xs.partition_point(|&x| x < lo);
            let d = pb - pa;
            let len_sq = d.norm_sq();
            let mut inner: Vec<(f64, usize)> = by_x[start..]
                .iter()
                .take_while(|&&i| points[i].x <= hi)
                .filter(|&&i| i != a && i != b)
                .filter_map(|&i| {
                    let t = (points[i] - pa).dot(d) / len_sq;
                    let off = (points[i] - pa).cross(d).abs() / len_sq.sqrt();
                    (t > 0.0 && t < 1.0 && off <= tol).then_some((t, i))
                })
                .collect();
            inner.sort_by(|x, y| x.0.total_cmp(&y.0));
            out.extend(inner.into_iter().map(|(_, i)| i));
        }
        *l = out;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::mesh_stats;
    use approx::assert_relative_eq;

    #[test]
    fn triangular_counts() {
        let m = lshape_triangular(1).unwrap();
        assert_eq!((m.n_cells(), m.n_points()), (6, 8));
        let m = lshape_triangular(2).unwrap();
        assert_eq!(m.n_cells(), 24);
        assert_relative_eq!(m.total_area(), 3.0, epsilon = 1e-14);
        let s = mesh_stats(&lshape_triangular(3).unwrap()).unwrap();
        assert_relative_eq!(s.ar_hh.max, 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(s.ar_hh.mean, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn triangular_diagonals_meet_the_corner() {
        let m = lshape_triangular(2).unwrap();
        let origin = m.points().iter().position(|p| p.norm() == 0.0).unwrap();
        let degree = m
            .edges()
            .filter(|(_, e)| e.ends().iter().any(|p| p.index() == origin))
            .count();
        // Two re-entrant sides, two grid lines and three diagonals.
        assert_eq!(degree, 7);
    }

    #[test]
    fn trapezoidal_counts_and_shape() {
        assert_eq!(lshape_trapezoidal(1).unwrap().n_cells(), 3);
        for n in 1..=5 {
            let m = lshape_trapezoidal(n).unwrap();
            assert_eq!(m.n_cells(), 3 * n * n);
            assert_relative_eq!(m.total_area(), 3.0, epsilon = 1e-12);
            for c in m.cells() {
                assert!(m.cell_polygon(c).unwrap().is_convex());
            }
        }
    }

    #[test]
    fn regular_polygons() {
        let s = mesh_stats(&regular_polygon(4, 1.0).unwrap()).unwrap();
        assert_relative_eq!(s.ar_rr.max, 2f64.sqrt(), epsilon = 1e-12);
        let m = regular_polygon(120, 1.0).unwrap();
        let s = mesh_stats(&m).unwrap();
        assert_relative_eq!(s.ar_edge.max, 1.0, epsilon = 1e-12);
        assert!((m.total_area() - PI).abs() / PI < 1e-3);
        assert!(regular_polygon(2, 1.0).is_err());
    }

    #[test]
    fn polygonal_mesh_is_valid() {
        let m = lshape_polygonal(100, 7, 20).unwrap();
        assert_relative_eq!(m.total_area(), 3.0, epsilon = 1e-10);
        assert!(m.n_cells() >= 100 && m.n_cells() <= 104, "{}", m.n_cells());
        for c in m.cells() {
            assert!(m.cell_polygon(c).unwrap().is_convex());
        }
        m.validate().unwrap();
    }

    #[test]
    fn polygonal_is_deterministic() {
        let a = lshape_polygonal(40, 3, 5).unwrap();
        let b = lshape_polygonal(40, 3, 5).unwrap();
        assert_eq!(a.points(), b.points());
        let c = lshape_polygonal(40, 4, 5).unwrap();
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn too_few_seeds() {
        assert!(matches!(lshape_polygonal(2, 0, 0), Err(Error::GenerationFailure(_))));
    }
}
