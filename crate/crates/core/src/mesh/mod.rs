//! Polygonal mesh topology with edge ancestry.
//!
//! Cells store their boundary as a counter-clockwise loop of edge ids; the
//! vertex loop is recovered from consecutive edges. Every edge carries an
//! *ancestor marker*: edges of the input mesh get distinct markers, and the two
//! halves of a split edge inherit the marker of the edge they came from. Runs
//! of consecutive edges with one marker are collinear pieces of a single
//! ancestor segment (a cell side carrying hanging nodes).
//!
//! Refined cells are kept as tombstones so that the refinement history stays
//! addressable; [`PolyMesh::compact`] drops them when history is not needed.

mod io;

use std::collections::HashMap;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::{signed_area, ConvexPolygonView, Point2, SNAP_EPS};

pub use io::{read_mesh, read_mesh_file, write_mesh, write_mesh_file};

const NONE: u32 = u32::MAX;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(PointId, "p");
id_type!(CellId, "cell ");
id_type!(EdgeId, "edge ");

pub type EdgeLoop = SmallVec<[EdgeId; 4]>;
pub type VertexLoop = SmallVec<[PointId; 8]>;

#[derive(Clone, Debug)]
pub struct Edge {
    ends: [PointId; 2],
    cells: [u32; 2],
    marker: u32,
}

impl Edge {
    pub fn ends(&self) -> [PointId; 2] {
        self.ends
    }

    pub fn marker(&self) -> u32 {
        self.marker
    }

    pub fn is_boundary(&self) -> bool {
        self.cells[1] == NONE
    }

    /// The one or two adjacent cells.
    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.cells.iter().filter(|&&c| c != NONE).map(|&c| CellId(c))
    }

    /// The cell across this edge from `cell`.
    pub fn other_cell(&self, cell: CellId) -> Option<CellId> {
        let o = if self.cells[0] == cell.0 {
            self.cells[1]
        } else {
            self.cells[0]
        };
        (o != NONE).then_some(CellId(o))
    }

    pub fn other_end(&self, p: PointId) -> PointId {
        if self.ends[0] == p {
            self.ends[1]
        } else {
            self.ends[0]
        }
    }

    fn replace_cell(&mut self, old: CellId, new: CellId) {
        for c in &mut self.cells {
            if *c == old.0 {
                *c = new.0;
                return;
            }
        }
        debug_assert!(false, "cell {old} not adjacent to edge");
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    edges: EdgeLoop,
    parent: u32,
    alive: bool,
}

impl Cell {
    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn parent(&self) -> Option<CellId> {
        (self.parent != NONE).then_some(CellId(self.parent))
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }
}

/// Consecutive edges of one cell descending from the same ancestor edge.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedGroup {
    pub cell: CellId,
    /// Loop position of the first member edge.
    pub first: usize,
    pub edges: SmallVec<[EdgeId; 4]>,
    /// Group endpoints in loop order; these are corners of the cell.
    pub start: PointId,
    pub end: PointId,
}

/// Where a cut meets the boundary of the cell being split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplitAt {
    Vertex(PointId),
    /// A point strictly inside an edge; the edge is split there.
    OnEdge(EdgeId, Point2),
}

#[derive(Clone, Debug, Default)]
pub struct PolyMesh {
    points: Vec<Point2>,
    cells: Vec<Cell>,
    edges: Vec<Edge>,
    next_marker: u32,
    alive: usize,
    drop_history: bool,
}

impl PolyMesh {
    /// Builds a mesh from points and counter-clockwise cell vertex loops.
    /// Every input edge receives its own ancestor marker.
    pub fn build(points: Vec<Point2>, loops: &[Vec<usize>]) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidMesh(format!("non-finite point {p}")));
        }
        let n_points = points.len();
        let mut mesh = PolyMesh {
            points,
            cells: Vec::with_capacity(loops.len()),
            edges: Vec::new(),
            next_marker: 0,
            alive: 0,
            drop_history: false,
        };
        // key -> (edge id, direction of first use)
        let mut lookup: HashMap<(u32, u32), (u32, bool)> = HashMap::new();
        for (ci, lp) in loops.iter().enumerate() {
            if lp.len() < 3 {
                return Err(Error::InvalidMesh(format!("cell {ci} has fewer than 3 vertices")));
            }
            if let Some(&v) = lp.iter().find(|&&v| v >= n_points) {
                return Err(Error::InvalidMesh(format!("cell {ci} references missing point {v}")));
            }
            let mut sorted = lp.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMesh(format!("cell {ci} repeats a vertex")));
            }
            let pts: Vec<Point2> = lp.iter().map(|&v| mesh.points[v]).collect();
            if signed_area(&pts) <= 0.0 {
                return Err(Error::OrientationError { cell: ci });
            }
            let view = ConvexPolygonView::new(pts).map_err(|_| Error::OrientationError { cell: ci })?;
            if !view.is_convex() {
                return Err(Error::NonConvexCell { cell: ci });
            }

            let mut edges = EdgeLoop::new();
            for k in 0..lp.len() {
                let a = lp[k] as u32;
                let b = lp[(k + 1) % lp.len()] as u32;
                let key = (a.min(b), a.max(b));
                let forward = a < b;
                match lookup.get(&key) {
                    None => {
                        let id = mesh.edges.len() as u32;
                        mesh.edges.push(Edge {
                            ends: [PointId(a), PointId(b)],
                            cells: [ci as u32, NONE],
                            marker: mesh.next_marker,
                        });
                        mesh.next_marker += 1;
                        lookup.insert(key, (id, forward));
                        edges.push(EdgeId(id));
                    }
                    Some(&(id, dir)) => {
                        let e = &mut mesh.edges[id as usize];
                        if e.cells[1] != NONE {
                            return Err(Error::NonManifoldEdge { a, b });
                        }
                        if dir == forward {
                            // Both cells traverse the edge the same way.
                            return Err(Error::OrientationError { cell: ci });
                        }
                        e.cells[1] = ci as u32;
                        edges.push(EdgeId(id));
                    }
                }
            }
            mesh.cells.push(Cell {
                edges,
                parent: NONE,
                alive: true,
            });
            mesh.alive += 1;
        }
        Ok(mesh)
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn point(&self, p: PointId) -> Point2 {
        self.points[p.index()]
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    /// Number of alive (unrefined) cells.
    pub fn n_cells(&self) -> usize {
        self.alive
    }

    /// Number of cell records including refined ones.
    pub fn n_cell_records(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cell(&self, c: CellId) -> &Cell {
        &self.cells[c.index()]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.index()]
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| (EdgeId(i as u32), e))
    }

    /// Alive cells in ascending id order.
    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.alive)
            .map(|(i, _)| CellId(i as u32))
    }

    pub fn is_alive(&self, c: CellId) -> bool {
        self.cells.get(c.index()).is_some_and(|c| c.alive)
    }

    fn shared_point(&self, e1: EdgeId, e2: EdgeId) -> PointId {
        let [a, b] = self.edges[e1.index()].ends;
        let [c, d] = self.edges[e2.index()].ends;
        if a == c || a == d {
            a
        } else {
            debug_assert!(b == c || b == d, "edges {e1} and {e2} are not consecutive");
            b
        }
    }

    /// Vertex loop of a cell; vertex `i` is the start of edge `i`.
    pub fn cell_vertices(&self, c: CellId) -> VertexLoop {
        let edges = &self.cells[c.index()].edges;
        let n = edges.len();
        let mut out = VertexLoop::with_capacity(n);
        let mut v = self.shared_point(edges[n - 1], edges[0]);
        for &e in edges.iter() {
            out.push(v);
            v = self.edges[e.index()].other_end(v);
        }
        out
    }

    pub fn cell_points(&self, c: CellId) -> Vec<Point2> {
        self.cell_vertices(c)
            .iter()
            .map(|&p| self.points[p.index()])
            .collect()
    }

    pub fn cell_polygon(&self, c: CellId) -> Result<ConvexPolygonView> {
        ConvexPolygonView::new(self.cell_points(c))
    }

    /// Cells sharing an edge with `c`, without repetitions, in loop order.
    pub fn cell_neighbours(&self, c: CellId) -> SmallVec<[CellId; 8]> {
        let mut out: SmallVec<[CellId; 8]> = SmallVec::new();
        for &e in self.cell(c).edges() {
            if let Some(o) = self.edges[e.index()].other_cell(c) {
                if !out.contains(&o) {
                    out.push(o);
                }
            }
        }
        out
    }

    /// Groups consecutive loop edges of `c` by ancestor marker. The first
    /// group starts at the first marker change at or after loop position 0.
    pub fn aligned_groups(&self, c: CellId) -> Vec<AlignedGroup> {
        let edges = &self.cells[c.index()].edges;
        let verts = self.cell_vertices(c);
        let n = edges.len();
        let marker = |i: usize| self.edges[edges[i % n].index()].marker;
        let Some(first) = (0..n).find(|&i| marker(i) != marker(i + n - 1)) else {
            // Cannot happen for a cell with positive area.
            return vec![AlignedGroup {
                cell: c,
                first: 0,
                edges: edges.iter().copied().collect(),
                start: verts[0],
                end: verts[0],
            }];
        };
        let mut groups = Vec::new();
        let mut k = 0;
        while k < n {
            let pos = (first + k) % n;
            let m = marker(pos);
            let mut members = SmallVec::new();
            while k < n && marker(first + k) == m {
                members.push(edges[(first + k) % n]);
                k += 1;
            }
            groups.push(AlignedGroup {
                cell: c,
                first: pos,
                edges: members,
                start: verts[pos],
                end: verts[(first + k) % n],
            });
        }
        groups
    }

    /// Number of geometric corners of `c` (aligned groups).
    pub fn effective_vertex_count(&self, c: CellId) -> usize {
        let edges = &self.cells[c.index()].edges;
        let n = edges.len();
        (0..n)
            .filter(|&i| {
                self.edges[edges[i].index()].marker != self.edges[edges[(i + n - 1) % n].index()].marker
            })
            .count()
            .max(1)
    }

    pub fn group_length(&self, g: &AlignedGroup) -> f64 {
        self.point(g.start).dist(self.point(g.end))
    }

    /// Points lying on a boundary edge.
    pub fn boundary_points(&self) -> Vec<bool> {
        let mut on = vec![false; self.points.len()];
        for e in &self.edges {
            if e.is_boundary() {
                on[e.ends[0].index()] = true;
                on[e.ends[1].index()] = true;
            }
        }
        on
    }

    /// Sum of alive cell areas.
    pub fn total_area(&self) -> f64 {
        self.cells()
            .map(|c| signed_area(&self.cell_points(c)))
            .sum()
    }

    fn fresh_marker(&mut self) -> u32 {
        let m = self.next_marker;
        self.next_marker += 1;
        m
    }

    /// Splits edge `e` at `p`. The first half keeps the id of `e`, both
    /// halves keep its marker, and the loops of the adjacent cells gain the
    /// new vertex.
    pub fn split_edge(&mut self, e: EdgeId, p: Point2) -> PointId {
        let q = PointId(self.points.len() as u32);
        self.points.push(p);
        let old = self.edges[e.index()].clone();
        let [a, b] = old.ends;
        let e2 = EdgeId(self.edges.len() as u32);
        self.edges.push(Edge {
            ends: [q, b],
            cells: old.cells,
            marker: old.marker,
        });
        for &cid in old.cells.iter().filter(|&&c| c != NONE) {
            let loop_ = &self.cells[cid as usize].edges;
            let n = loop_.len();
            let pos = loop_.iter().position(|&x| x == e).expect("edge in loop");
            let start = self.shared_point(loop_[(pos + n - 1) % n], e);
            let insert_at = if start == a { pos + 1 } else { pos };
            self.cells[cid as usize].edges.insert(insert_at, e2);
        }
        self.edges[e.index()].ends = [a, q];
        q
    }

    /// Splits alive cell `c` along the segment between `a` and `b`.
    ///
    /// Edge points are inserted into the edge (and into the neighbour across
    /// it, which gains a hanging node); the new interior edge gets a fresh
    /// marker. Returns the two children; the parent becomes a tombstone.
    pub fn split_cell(&mut self, c: CellId, a: SplitAt, b: SplitAt) -> Result<(CellId, CellId)> {
        let invalid = |reason| Error::InvalidCut { cell: c, reason };
        if !self.is_alive(c) {
            return Err(invalid("cell is not alive"));
        }
        let verts = self.cell_vertices(c);
        let edges = self.cells[c.index()].edges.clone();
        let n = verts.len();
        let h = (0..n)
            .map(|i| self.point(verts[i]).dist(self.point(verts[(i + 1) % n])))
            .fold(0.0, f64::max);
        let tol = SNAP_EPS * h;

        // Locate each cut point on the loop as (position, inner point).
        let locate = |s: SplitAt| -> Result<(usize, Option<Point2>)> {
            match s {
                SplitAt::Vertex(p) => verts
                    .iter()
                    .position(|&v| v == p)
                    .map(|i| (i, None))
                    .ok_or(invalid("vertex not on the cell")),
                SplitAt::OnEdge(e, p) => {
                    let i = edges
                        .iter()
                        .position(|&x| x == e)
                        .ok_or(invalid("edge not on the cell"))?;
                    let s = self.point(verts[i]);
                    let t = self.point(verts[(i + 1) % n]);
                    if p.dist(s) <= tol {
                        Ok((i, None))
                    } else if p.dist(t) <= tol {
                        Ok(((i + 1) % n, None))
                    } else {
                        Ok((i, Some(p)))
                    }
                }
            }
        };
        let la = locate(a)?;
        let lb = locate(b)?;
        match (la, lb) {
            ((i, None), (j, None)) => {
                if i == j {
                    return Err(invalid("cut endpoints coincide"));
                }
                if (i + 1) % n == j || (j + 1) % n == i {
                    return Err(invalid("cut runs along an edge"));
                }
            }
            ((i, Some(_)), (j, Some(_))) if i == j => return Err(invalid("both cut points on one edge")),
            ((i, Some(_)), (j, None)) | ((j, None), (i, Some(_))) => {
                if j == i || j == (i + 1) % n {
                    return Err(invalid("cut point and vertex on one edge"));
                }
            }
            _ => {}
        }
        // Both children must have positive area.
        {
            let pa = la.1.unwrap_or_else(|| self.point(verts[la.0]));
            let pb = lb.1.unwrap_or_else(|| self.point(verts[lb.0]));
            let chain = |from: (usize, Option<Point2>), fp: Point2, to: (usize, Option<Point2>), tp: Point2| {
                let mut pts = vec![fp];
                let mut k = (from.0 + 1) % n;
                let stop = if to.1.is_some() { (to.0 + 1) % n } else { to.0 };
                while k != stop {
                    pts.push(self.point(verts[k]));
                    k = (k + 1) % n;
                }
                pts.push(tp);
                pts
            };
            let area = crate::geometry::polygon_area_centroid(&self.cell_points(c))?.0;
            for pts in [chain(la, pa, lb, pb), chain(lb, pb, la, pa)] {
                if pts.len() < 3 || signed_area(&pts) <= 1e-12 * area {
                    return Err(invalid("degenerate child"));
                }
            }
        }

        let va = match (a, la.1) {
            (SplitAt::OnEdge(e, _), Some(p)) => self.split_edge(e, p),
            _ => verts[la.0],
        };
        let vb = match (b, lb.1) {
            (SplitAt::OnEdge(e, _), Some(p)) => self.split_edge(e, p),
            _ => verts[lb.0],
        };

        let verts = self.cell_vertices(c);
        let edges = self.cells[c.index()].edges.clone();
        let n = verts.len();
        let mut i = verts.iter().position(|&v| v == va).expect("cut vertex in loop");
        let mut j = verts.iter().position(|&v| v == vb).expect("cut vertex in loop");
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        let (vi, vj) = (verts[i], verts[j]);

        let (c1, c2) = if self.drop_history {
            (c, CellId(self.cells.len() as u32))
        } else {
            let c1 = CellId(self.cells.len() as u32);
            (c1, CellId(c1.0 + 1))
        };
        let parent = if self.drop_history { NONE } else { c.0 };
        let cut = EdgeId(self.edges.len() as u32);
        let marker = self.fresh_marker();
        self.edges.push(Edge {
            ends: [vi, vj],
            cells: [c1.0, c2.0],
            marker,
        });

        let mut e1: EdgeLoop = edges[i..j].iter().copied().collect();
        e1.push(cut);
        let mut e2: EdgeLoop = edges[j..n].iter().chain(edges[..i].iter()).copied().collect();
        e2.push(cut);
        for &e in &e1[..e1.len() - 1] {
            self.edges[e.index()].replace_cell(c, c1);
        }
        for &e in &e2[..e2.len() - 1] {
            self.edges[e.index()].replace_cell(c, c2);
        }
        let first = Cell {
            edges: e1,
            parent,
            alive: true,
        };
        let second = Cell {
            edges: e2,
            parent,
            alive: true,
        };
        if self.drop_history {
            self.cells[c.index()] = first;
        } else {
            self.cells[c.index()].alive = false;
            self.cells.push(first);
        }
        self.cells.push(second);
        self.alive += 1;
        Ok((c1, c2))
    }

    /// Drops refined cells and renumbers the alive ones in ascending order.
    /// Parent links are cleared.
    pub fn compact(&mut self) {
        let mut remap = vec![NONE; self.cells.len()];
        let mut next = 0u32;
        for (i, c) in self.cells.iter().enumerate() {
            if c.alive {
                remap[i] = next;
                next += 1;
            }
        }
        self.cells.retain(|c| c.alive);
        for c in &mut self.cells {
            c.parent = NONE;
        }
        for e in &mut self.edges {
            for c in &mut e.cells {
                if *c != NONE {
                    *c = remap[*c as usize];
                }
            }
        }
        self.cells.shrink_to_fit();
    }

    /// When set, a split reuses the parent's record for the first child
    /// instead of keeping the parent as a tombstone. Cell ids then stay
    /// dense, which bounds memory on very large meshes.
    pub fn set_drop_history(&mut self, drop: bool) {
        if drop {
            self.compact();
        }
        self.drop_history = drop;
    }

    /// Reserves room for `n` more splits.
    pub fn reserve_splits(&mut self, n: usize) {
        self.cells.reserve_exact(if self.drop_history { n } else { 2 * n });
        self.edges.reserve(3 * n);
        self.points.reserve(2 * n);
    }

    /// Checks the topological invariants; used by tests and debug builds.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidMesh(m));
        for c in self.cells() {
            let cell = self.cell(c);
            if cell.edges.len() < 3 {
                return bad(format!("{c} has {} edges", cell.edges.len()));
            }
            for &e in cell.edges() {
                if !self.edges[e.index()].cells().any(|x| x == c) {
                    return bad(format!("{e} does not list {c}"));
                }
            }
            let verts = self.cell_vertices(c);
            for (k, &e) in cell.edges().iter().enumerate() {
                let ends = self.edges[e.index()].ends;
                let a = verts[k];
                let b = verts[(k + 1) % verts.len()];
                if !(ends == [a, b] || ends == [b, a]) {
                    return bad(format!("{c} loop is broken at {e}"));
                }
            }
            let view = self.cell_polygon(c)?;
            if !view.is_convex() {
                return Err(Error::NonConvexCell { cell: c.index() });
            }
        }
        for (id, e) in self.edges() {
            for cell in e.cells() {
                if !self.is_alive(cell) {
                    return bad(format!("{id} points at dead {cell}"));
                }
                if !self.cell(cell).edges().contains(&id) {
                    return bad(format!("{id} not in loop of {cell}"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn pts(v: &[(f64, f64)]) -> Vec<Point2> {
        v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    fn two_triangles() -> PolyMesh {
        PolyMesh::build(
            pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]),
            &[vec![0, 1, 2], vec![0, 2, 3]],
        )
        .unwrap()
    }

    fn unit_square() -> PolyMesh {
        PolyMesh::build(
            pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]),
            &[vec![0, 1, 2, 3]],
        )
        .unwrap()
    }

    fn grid2x2() -> PolyMesh {
        let mut p = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                p.push((i as f64 * 0.5, j as f64 * 0.5));
            }
        }
        let id = |i: usize, j: usize| j * 3 + i;
        let mut loops = Vec::new();
        for j in 0..2 {
            for i in 0..2 {
                loops.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        PolyMesh::build(pts(&p), &loops).unwrap()
    }

    fn interior_edges(m: &PolyMesh) -> usize {
        m.edges().filter(|(_, e)| !e.is_boundary()).count()
    }

    #[test]
    fn build_counts() {
        let m = two_triangles();
        assert_eq!(m.n_edges(), 5);
        assert_eq!(interior_edges(&m), 1);

        let m = unit_square();
        assert_eq!(m.n_edges(), 4);
        assert_eq!(interior_edges(&m), 0);

        let m = grid2x2();
        assert_eq!((m.n_points(), m.n_cells(), m.n_edges()), (9, 4, 12));
        assert_eq!(interior_edges(&m), 4);
        m.validate().unwrap();
    }

    #[test]
    fn build_rejects_bad_input() {
        let square = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert!(matches!(
            PolyMesh::build(square.clone(), &[vec![0, 3, 2, 1]]),
            Err(Error::OrientationError { .. })
        ));
        let dart = pts(&[(0.0, 0.0), (2.0, 0.0), (1.0, 0.3), (1.0, 2.0)]);
        assert!(matches!(
            PolyMesh::build(dart, &[vec![0, 1, 2, 3]]),
            Err(Error::NonConvexCell { .. })
        ));
        let fan = pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]);
        assert!(matches!(
            PolyMesh::build(fan, &[vec![0, 1, 2], vec![0, 2, 3], vec![0, 4, 1], vec![1, 0, 3]]),
            Err(Error::NonManifoldEdge { .. }) | Err(Error::OrientationError { .. })
        ));
    }

    #[test]
    fn fresh_cells_have_one_group_per_edge() {
        let m = grid2x2();
        for c in m.cells() {
            assert_eq!(m.aligned_groups(c).len(), 4);
            assert_eq!(m.effective_vertex_count(c), 4);
        }
    }

    #[test]
    fn split_square_in_half() {
        let mut m = unit_square();
        let e0 = m.cell(CellId(0)).edges()[0];
        let e2 = m.cell(CellId(0)).edges()[2];
        let before = m.n_edges();
        let (a, b) = m
            .split_cell(
                CellId(0),
                SplitAt::OnEdge(e0, Point2::new(0.5, 0.0)),
                SplitAt::OnEdge(e2, Point2::new(0.5, 1.0)),
            )
            .unwrap();
        assert_eq!(m.n_edges(), before + 3);
        assert_eq!(m.n_cells(), 2);
        assert!(!m.is_alive(CellId(0)));
        for c in [a, b] {
            let v = m.cell_polygon(c).unwrap();
            assert!((v.area() - 0.5).abs() < 1e-15);
            assert_eq!(m.cell(c).parent(), Some(CellId(0)));
        }
        m.validate().unwrap();
    }

    #[test]
    fn neighbour_gains_hanging_node() {
        let mut m = grid2x2();
        // Split the bottom-left cell vertically; its top edge is shared with
        // cell 2, which must end up with 5 loop vertices but 4 groups.
        let c = CellId(0);
        let verts = m.cell_vertices(c);
        let edges = m.cell(c).edges().to_vec();
        let pos_top = (0..4)
            .find(|&k| m.point(verts[k]).y == 0.5 && m.point(verts[(k + 1) % 4]).y == 0.5)
            .unwrap();
        m.split_cell(
            c,
            SplitAt::OnEdge(edges[0], Point2::new(0.25, 0.0)),
            SplitAt::OnEdge(edges[pos_top], Point2::new(0.25, 0.5)),
        )
        .unwrap();
        let above = CellId(2);
        assert_eq!(m.cell_vertices(above).len(), 5);
        assert_eq!(m.aligned_groups(above).len(), 4);
        assert_eq!(m.effective_vertex_count(above), 4);
        m.validate().unwrap();
    }

    #[test]
    fn group_count_is_loop_minus_two() {
        // Two sides of the square each carry one hanging node.
        let mut m = PolyMesh::build(
            pts(&[
                (0.0, 0.0),
                (1.0, 0.0),
                (1.0, 1.0),
                (0.0, 1.0),
                (0.0, -1.0),
                (1.0, -1.0),
                (2.0, 0.0),
                (2.0, 1.0),
            ]),
            &[vec![0, 1, 2, 3], vec![4, 5, 1, 0], vec![1, 6, 7, 2]],
        )
        .unwrap();
        let below = m.cell(CellId(1)).edges()[0];
        let bottom_shared = m.cell(CellId(1)).edges()[2];
        let right_cell_edges = m.cell(CellId(2)).edges().to_vec();
        m.split_cell(
            CellId(1),
            SplitAt::OnEdge(below, Point2::new(0.5, -1.0)),
            SplitAt::OnEdge(bottom_shared, Point2::new(0.5, 0.0)),
        )
        .unwrap();
        m.split_cell(
            CellId(2),
            SplitAt::OnEdge(right_cell_edges[3], Point2::new(1.0, 0.5)),
            SplitAt::OnEdge(right_cell_edges[1], Point2::new(2.0, 0.5)),
        )
        .unwrap();
        let sq = CellId(0);
        assert_eq!(m.cell_vertices(sq).len(), 6);
        assert_eq!(m.aligned_groups(sq).len(), 4);
        m.validate().unwrap();
    }

    #[test]
    fn vertex_to_vertex_cut_creates_no_point() {
        let mut m = unit_square();
        let n_pts = m.n_points();
        let n_edges = m.n_edges();
        m.split_cell(CellId(0), SplitAt::Vertex(PointId(0)), SplitAt::Vertex(PointId(2)))
            .unwrap();
        assert_eq!(m.n_points(), n_pts);
        assert_eq!(m.n_edges(), n_edges + 1);
    }

    #[test]
    fn median_cut_halves_triangle() {
        let mut m = PolyMesh::build(
            pts(&[(0.0, 0.0), (2.0, 0.0), (0.0, 1.0)]),
            &[vec![0, 1, 2]],
        )
        .unwrap();
        let hyp = m.cell(CellId(0)).edges()[1];
        let (a, b) = m
            .split_cell(
                CellId(0),
                SplitAt::OnEdge(hyp, Point2::new(1.0, 0.5)),
                SplitAt::Vertex(PointId(0)),
            )
            .unwrap();
        let aa = m.cell_polygon(a).unwrap().area();
        let ab = m.cell_polygon(b).unwrap().area();
        assert!((aa - ab).abs() < 1e-15);
    }

    #[test]
    fn invalid_cuts_rejected() {
        let mut m = unit_square();
        let e0 = m.cell(CellId(0)).edges()[0];
        let cases = [
            (SplitAt::Vertex(PointId(0)), SplitAt::Vertex(PointId(0))),
            (SplitAt::Vertex(PointId(0)), SplitAt::Vertex(PointId(1))),
            (SplitAt::OnEdge(e0, Point2::new(0.3, 0.0)), SplitAt::OnEdge(e0, Point2::new(0.6, 0.0))),
            (SplitAt::OnEdge(e0, Point2::new(0.3, 0.0)), SplitAt::Vertex(PointId(1))),
        ];
        for (a, b) in cases {
            assert!(matches!(m.split_cell(CellId(0), a, b), Err(Error::InvalidCut { .. })));
        }
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.n_points(), 4);
    }

    #[test]
    fn records_stay_small() {
        assert!(std::mem::size_of::<Cell>() <= 32);
        assert!(std::mem::size_of::<Edge>() <= 20);
    }

    #[test]
    fn dropped_history_reuses_parent_slot() {
        let mut m = grid2x2();
        m.set_drop_history(true);
        let (a, b) = m
            .split_cell(CellId(1), SplitAt::Vertex(PointId(1)), SplitAt::Vertex(PointId(5)))
            .unwrap();
        assert_eq!((a, b), (CellId(1), CellId(4)));
        assert_eq!(m.n_cell_records(), 5);
        assert_eq!(m.cell(a).parent(), None);
        m.validate().unwrap();
    }

    #[test]
    fn compact_keeps_topology() {
        let mut m = grid2x2();
        m.split_cell(CellId(1), SplitAt::Vertex(PointId(1)), SplitAt::Vertex(PointId(5)))
            .unwrap();
        let area = m.total_area();
        m.compact();
        assert_eq!(m.n_cell_records(), 5);
        assert!((m.total_area() - area).abs() < 1e-14);
        m.validate().unwrap();
    }
}
