//! Element shape parameters and whole-mesh statistics.

use crate::error::Result;
use crate::geometry::ConvexPolygonView;
use crate::mesh::{CellId, PolyMesh};

/// Aspect ratios of one cell. All are at least 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementQuality {
    /// `R_E / r_E`
    pub ar_rr: f64,
    /// `H_E / r_E`
    pub ar_hr: f64,
    /// `H_E / h_E`
    pub ar_hh: f64,
    /// Largest length ratio of two consecutive loop edges.
    pub ar_edge: f64,
}

impl ElementQuality {
    pub fn of(view: &ConvexPolygonView) -> Self {
        let n = view.len();
        let ar_edge = (0..n)
            .map(|i| {
                let a = view.edge_length(i);
                let b = view.edge_length(i + 1);
                a.max(b) / a.min(b)
            })
            .fold(1.0, f64::max);
        ElementQuality {
            ar_rr: view.max_vertex_dist() / view.min_edge_dist(),
            ar_hr: view.longest_edge() / view.min_edge_dist(),
            ar_hh: view.longest_edge() / view.shortest_edge(),
            ar_edge,
        }
    }
}

pub fn element_quality(mesh: &PolyMesh, c: CellId) -> Result<ElementQuality> {
    Ok(ElementQuality::of(&mesh.cell_polygon(c)?))
}

/// Maximum, mean and population standard deviation of a sample.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Summary {
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

/// Streaming accumulator behind [`Summary`].
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    n: u64,
    max: f64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.max = if self.n == 1 { x } else { self.max.max(x) };
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn summary(&self) -> Summary {
        if self.n == 0 {
            return Summary::default();
        }
        Summary {
            max: self.max,
            mean: self.mean,
            std: (self.m2 / self.n as f64).max(0.0).sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeshStats {
    pub n_cells: usize,
    pub n_points: usize,
    /// Cells with exactly three loop vertices.
    pub n_tri: usize,
    /// Cells with exactly four loop vertices.
    pub n_quad: usize,
    pub e_ratio: f64,
    pub r_tri: f64,
    pub r_quad: f64,
    pub ar_rr: Summary,
    pub ar_edge: Summary,
    pub ar_hr: Summary,
    pub ar_hh: Summary,
}

pub fn mesh_stats(mesh: &PolyMesh) -> Result<MeshStats> {
    let mut acc = [Accumulator::default(); 4];
    let (mut n_tri, mut n_quad) = (0, 0);
    for c in mesh.cells() {
        let view = mesh.cell_polygon(c)?;
        match view.len() {
            3 => n_tri += 1,
            4 => n_quad += 1,
            _ => {}
        }
        let q = ElementQuality::of(&view);
        for (a, x) in acc.iter_mut().zip([q.ar_rr, q.ar_edge, q.ar_hr, q.ar_hh]) {
            a.push(x);
        }
    }
    let n_cells = mesh.n_cells();
    let n_points = mesh.n_points();
    let per_cell = |k: usize| k as f64 / n_cells.max(1) as f64;
    Ok(MeshStats {
        n_cells,
        n_points,
        n_tri,
        n_quad,
        e_ratio: per_cell(n_points),
        r_tri: per_cell(n_tri),
        r_quad: per_cell(n_quad),
        ar_rr: acc[0].summary(),
        ar_edge: acc[1].summary(),
        ar_hr: acc[2].summary(),
        ar_hh: acc[3].summary(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn view(v: &[(f64, f64)]) -> ConvexPolygonView {
        ConvexPolygonView::new(v.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn unit_square() {
        let q = ElementQuality::of(&view(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]));
        assert_relative_eq!(q.ar_rr, 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(q.ar_hr, 2.0, epsilon = 1e-14);
        assert_eq!(q.ar_hh, 1.0);
        assert_eq!(q.ar_edge, 1.0);
    }

    #[test]
    fn equilateral_triangle() {
        let q = ElementQuality::of(&view(&[(0.0, 0.0), (1.0, 0.0), (0.5, 3f64.sqrt() / 2.0)]));
        assert_relative_eq!(q.ar_rr, 2.0, epsilon = 1e-12);
        assert_relative_eq!(q.ar_hh, 1.0, epsilon = 1e-12);
        assert_relative_eq!(q.ar_edge, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rectangle() {
        let q = ElementQuality::of(&view(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]));
        assert_eq!(q.ar_hh, 2.0);
        assert_eq!(q.ar_edge, 2.0);
    }

    #[test]
    fn two_triangle_stats() {
        let m = PolyMesh::build(
            [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
                .iter()
                .map(|&(x, y)| Point2::new(x, y))
                .collect(),
            &[vec![0, 1, 2], vec![0, 2, 3]],
        )
        .unwrap();
        let s = mesh_stats(&m).unwrap();
        assert_eq!((s.n_cells, s.n_points, s.n_tri, s.n_quad), (2, 4, 2, 0));
        assert_eq!(s.e_ratio, 2.0);
        assert_eq!(s.r_tri, 1.0);
        assert_eq!(s.ar_hh.std, 0.0);
    }

    #[test]
    fn accumulator_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, 9.0, 3.25];
        let mut a = Accumulator::default();
        xs.iter().for_each(|&x| a.push(x));
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 5.0;
        let s = a.summary();
        assert_eq!(s.max, 9.0);
        assert_relative_eq!(s.mean, mean, epsilon = 1e-14);
        assert_relative_eq!(s.std, var.sqrt(), epsilon = 1e-14);
    }

    fn convex_polygon() -> impl Strategy<Value = Vec<Point2>> {
        // Sorted angles on an ellipse give a convex CCW loop.
        (prop::collection::vec(0.0f64..1.0, 3..9), 0.3f64..3.0).prop_filter_map(
            "well separated angles",
            |(mut ts, ecc)| {
                ts.sort_by(f64::total_cmp);
                let n = ts.len();
                let gaps_ok = (0..n).all(|i| {
                    let next = if i + 1 < n { ts[i + 1] } else { ts[0] + 1.0 };
                    next - ts[i] > 0.02
                });
                gaps_ok.then(|| {
                    ts.iter()
                        .map(|t| {
                            let a = std::f64::consts::TAU * t;
                            Point2::new(ecc * a.cos(), a.sin())
                        })
                        .collect()
                })
            },
        )
    }

    proptest! {
        #[test]
        fn ratios_at_least_one(p in convex_polygon()) {
            let q = ElementQuality::of(&ConvexPolygonView::new(p).unwrap());
            for x in [q.ar_rr, q.ar_hr, q.ar_hh, q.ar_edge] {
                prop_assert!(x >= 1.0 - 1e-12);
            }
        }

        #[test]
        fn ratios_invariant_under_similarity(
            p in convex_polygon(),
            angle in 0.0f64..6.3,
            scale in 0.01f64..100.0,
            tx in -10.0f64..10.0,
            ty in -10.0f64..10.0,
        ) {
            let (s, c) = angle.sin_cos();
            let moved: Vec<Point2> = p
                .iter()
                .map(|v| Point2::new(scale * (c * v.x - s * v.y) + tx, scale * (s * v.x + c * v.y) + ty))
                .collect();
            let a = ElementQuality::of(&ConvexPolygonView::new(p).unwrap());
            let b = ElementQuality::of(&ConvexPolygonView::new(moved).unwrap());
            for (x, y) in [(a.ar_rr, b.ar_rr), (a.ar_hr, b.ar_hr), (a.ar_hh, b.ar_hh), (a.ar_edge, b.ar_edge)] {
                prop_assert!((x - y).abs() <= 1e-10 * x);
            }
        }
    }
}
