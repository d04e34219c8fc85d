//! Quality-aware splitting of polygonal cells.
//!
//! A marked cell is cut in two. Geometric triangles (three aligned groups,
//! however many loop vertices) are bisected from the midpoint of their
//! longest side. Other cells get a cut line from the chosen [`Strategy`],
//! which [`smoothing_direction`] turns into a [`CutPlan`]: every crossed side
//! is cut at its midpoint unless the halves would be shorter than
//! `c_rho * rho`, in which case the crossing collapses onto a corner and the
//! line is re-aimed through that corner.

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryHit, ConvexPolygonView, CutLine, Point2};
use crate::mesh::{AlignedGroup, CellId, EdgeId, PointId, PolyMesh, SplitAt};

/// Half-sides within this relative distance of `c_rho * rho` collapse.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    MaximumMoment,
    LongestDiagonal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineConfig {
    pub strategy: Strategy,
    pub c_rho: f64,
}

impl RefineConfig {
    pub fn new(strategy: Strategy, c_rho: f64) -> Result<Self> {
        if !(c_rho >= 0.0 && c_rho.is_finite()) {
            return Err(Error::InvalidConfig(format!("c_rho must be a finite value >= 0, got {c_rho}")));
        }
        Ok(RefineConfig { strategy, c_rho })
    }
}

/// One end of a cut.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CutPoint {
    /// Midpoint of aligned group `group` (index into the cell's groups).
    Standard { group: usize, point: Point2 },
    /// An existing corner of the cell.
    Collapsed { vertex: PointId },
}

impl CutPoint {
    pub fn is_standard(&self) -> bool {
        matches!(self, CutPoint::Standard { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutPlan {
    pub a: CutPoint,
    pub b: CutPoint,
    /// Number of times the cut line was re-aimed through a corner.
    pub reaims: u8,
    /// True when the bounded re-aim failed and the best diagonal was used.
    pub fallback: bool,
}

/// Which branch of the refinement procedure handled a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Three loop vertices: longest-edge bisection.
    Triangle,
    /// Three aligned groups but more loop vertices: bisection of the
    /// longest side with the aligned edges glued together.
    GeometricTriangle,
    Polygon,
}

/// Counters gathered over all splits performed by a [`Refiner`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefineStats {
    pub splits: usize,
    pub triangle_splits: usize,
    pub geometric_triangle_splits: usize,
    pub reaims: usize,
    pub fallbacks: usize,
    /// Children with more corners than their parent plus one.
    pub vertex_bound_violations: usize,
    /// Half-sides produced by standard cut points.
    pub rule1_checks: usize,
    /// Half-sides not longer than `c_rho * rho` at split time.
    pub rule1_violations: usize,
}

/// `min(h_E, r_E)` of an alive cell.
pub fn rho_cell(mesh: &PolyMesh, c: CellId) -> Result<f64> {
    let v = mesh.cell_polygon(c)?;
    Ok(rho_of(&v))
}

fn rho_of(v: &ConvexPolygonView) -> f64 {
    v.shortest_edge().min(v.min_edge_dist())
}

/// Largest `rho_cell` over the cells adjacent to `e`.
pub fn rho_edge(mesh: &PolyMesh, e: EdgeId) -> Result<f64> {
    let mut r = 0.0f64;
    for c in mesh.edge(e).cells() {
        r = r.max(rho_cell(mesh, c)?);
    }
    Ok(r)
}

pub fn compute_cut_line(mesh: &PolyMesh, c: CellId, strategy: Strategy) -> Result<CutLine> {
    let v = mesh.cell_polygon(c)?;
    Ok(match strategy {
        Strategy::MaximumMoment => v.max_moment_direction(),
        Strategy::LongestDiagonal => v.longest_diagonal().1,
    })
}

/// Per-cell data shared by the steps of the smoothing procedure.
struct CellFrame<'m> {
    mesh: &'m PolyMesh,
    cell: CellId,
    view: ConvexPolygonView,
    verts: SmallVec<[PointId; 8]>,
    groups: Vec<AlignedGroup>,
    /// Group owning each loop edge.
    group_of_edge: SmallVec<[usize; 8]>,
    /// Group starting at each loop vertex, if the vertex is a corner.
    corner_group: SmallVec<[Option<usize>; 8]>,
    rho_self: f64,
}

/// A resolved crossing before the case analysis.
#[derive(Clone, Copy, Debug)]
struct Resolved {
    point: CutPoint,
    /// The raw crossing of the line with the boundary.
    hit: Point2,
}

impl<'m> CellFrame<'m> {
    fn new(mesh: &'m PolyMesh, cell: CellId) -> Result<Self> {
        let view = mesh.cell_polygon(cell)?;
        let verts = mesh.cell_vertices(cell);
        let groups = mesh.aligned_groups(cell);
        let n = verts.len();
        let mut group_of_edge = SmallVec::from_elem(0, n);
        let mut corner_group = SmallVec::from_elem(None, n);
        for (gi, g) in groups.iter().enumerate() {
            corner_group[g.first] = Some(gi);
            for k in 0..g.edges.len() {
                group_of_edge[(g.first + k) % n] = gi;
            }
        }
        let rho_self = rho_of(&view);
        Ok(CellFrame {
            mesh,
            cell,
            view,
            verts,
            groups,
            group_of_edge,
            corner_group,
            rho_self,
        })
    }

    fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// `rho` of a side: the largest cell `rho` among the cell itself and
    /// its neighbours across any member edge.
    fn rho_group(&self, g: usize) -> Result<f64> {
        let mut r = self.rho_self;
        for &e in &self.groups[g].edges {
            if let Some(o) = self.mesh.edge(e).other_cell(self.cell) {
                r = r.max(rho_cell(self.mesh, o)?);
            }
        }
        Ok(r)
    }

    fn group_len(&self, g: usize) -> f64 {
        self.mesh.group_length(&self.groups[g])
    }

    fn group_mid(&self, g: usize) -> Point2 {
        let g = &self.groups[g];
        self.mesh.point(g.start).midpoint(self.mesh.point(g.end))
    }

    /// Group index of the corner `v`, or `None` for a hanging node.
    fn corner_index(&self, v: PointId) -> Option<usize> {
        let i = self.verts.iter().position(|&x| x == v)?;
        self.corner_group[i]
    }

    /// Corners are adjacent when they bound a common side.
    fn corners_adjacent(&self, a: PointId, b: PointId) -> bool {
        let (Some(i), Some(j)) = (self.corner_index(a), self.corner_index(b)) else {
            return false;
        };
        let m = self.n_groups();
        (i + 1) % m == j || (j + 1) % m == i
    }

    /// True when `v` is an endpoint of side `g`.
    fn touches(&self, g: usize, v: PointId) -> bool {
        self.groups[g].start == v || self.groups[g].end == v
    }

    fn resolve(&self, hit: &BoundaryHit, c_rho: f64) -> Result<Resolved> {
        let n = self.verts.len();
        let group = match hit.vertex(n) {
            Some(i) => match self.corner_group[i] {
                Some(_) => {
                    return Ok(Resolved {
                        point: CutPoint::Collapsed { vertex: self.verts[i] },
                        hit: hit.point,
                    })
                }
                // A hanging node belongs to the side it lies on.
                None => self.group_of_edge[i],
            },
            None => self.group_of_edge[hit.edge],
        };
        let len = self.group_len(group);
        if len / 2.0 <= c_rho * self.rho_group(group)? * (1.0 + TIE_TOL) {
            let g = &self.groups[group];
            let ds = hit.point.dist(self.mesh.point(g.start));
            let de = hit.point.dist(self.mesh.point(g.end));
            let tie = (ds - de).abs() <= 1e-12 * len;
            let vertex = if (!tie && ds < de) || (tie && g.start < g.end) {
                g.start
            } else {
                g.end
            };
            Ok(Resolved {
                point: CutPoint::Collapsed { vertex },
                hit: hit.point,
            })
        } else {
            Ok(Resolved {
                point: CutPoint::Standard {
                    group,
                    point: self.group_mid(group),
                },
                hit: hit.point,
            })
        }
    }

    /// Crossing of the line through corner `v` and the centroid with the
    /// far side of the cell.
    fn reaim(&self, v: PointId, c_rho: f64) -> Result<Option<Resolved>> {
        let line = CutLine::through(self.mesh.point(v), self.view.centroid());
        let hits = self.view.line_boundary_intersections(&line)?;
        let n = self.verts.len();
        let far = hits
            .iter()
            .find(|h| h.vertex(n).map(|i| self.verts[i]) != Some(v));
        let Some(far) = far else { return Ok(None) };
        let r = self.resolve(far, c_rho)?;
        Ok(Some(r))
    }

    /// Whether `a`-`b` is a cut that does not run along the boundary.
    fn admissible(&self, a: &CutPoint, b: &CutPoint) -> bool {
        match (a, b) {
            (CutPoint::Standard { group: g, .. }, CutPoint::Standard { group: h, .. }) => g != h,
            (CutPoint::Collapsed { vertex: v }, CutPoint::Collapsed { vertex: w }) => {
                v != w && !self.corners_adjacent(*v, *w)
            }
            (CutPoint::Standard { group, .. }, CutPoint::Collapsed { vertex })
            | (CutPoint::Collapsed { vertex }, CutPoint::Standard { group, .. }) => {
                !self.touches(*group, *vertex)
            }
        }
    }

    /// Non-adjacent corner pair whose diagonal maximises the smaller child.
    fn best_diagonal(&self) -> Option<(PointId, PointId)> {
        let corners: Vec<(usize, PointId)> = self
            .groups
            .iter()
            .map(|g| (self.verts.iter().position(|&x| x == g.start).unwrap(), g.start))
            .collect();
        let pts = self.view.vertices();
        let n = pts.len();
        let m = corners.len();
        let mut best: Option<(f64, PointId, PointId)> = None;
        for a in 0..m {
            for b in a + 2..m {
                if a == 0 && b == m - 1 {
                    continue;
                }
                let (i, j) = (corners[a].0.min(corners[b].0), corners[a].0.max(corners[b].0));
                let c1: Vec<Point2> = (i..=j).map(|k| pts[k]).collect();
                let c2: Vec<Point2> = (j..n).chain(0..=i).map(|k| pts[k]).collect();
                let area = crate::geometry::signed_area(&c1).min(crate::geometry::signed_area(&c2));
                if best.is_none_or(|(ba, _, _)| area > ba) {
                    best = Some((area, corners[a].1, corners[b].1));
                }
            }
        }
        best.filter(|b| b.0 > 0.0).map(|(_, a, b)| (a, b))
    }

    /// Converts a cut point to a mesh split location.
    fn split_at(&self, p: &CutPoint) -> SplitAt {
        match *p {
            CutPoint::Collapsed { vertex } => SplitAt::Vertex(vertex),
            CutPoint::Standard { group, point } => {
                let g = &self.groups[group];
                let s = self.mesh.point(g.start);
                let d = self.mesh.point(g.end) - s;
                let len2 = d.norm_sq();
                let t_of = |q: PointId| (self.mesh.point(q) - s).dot(d) / len2;
                let n = self.verts.len();
                for (k, &e) in g.edges.iter().enumerate() {
                    let pos = (g.first + k) % n;
                    let t0 = t_of(self.verts[pos]);
                    let t1 = t_of(self.verts[(pos + 1) % n]);
                    if (0.5 - t0).abs() <= 1e-12 {
                        return SplitAt::Vertex(self.verts[pos]);
                    }
                    if t0 < 0.5 && 0.5 < t1 {
                        return SplitAt::OnEdge(e, point);
                    }
                }
                // Only reachable if the midpoint is the group end, which a
                // group with positive length excludes.
                SplitAt::OnEdge(g.edges[g.edges.len() - 1], point)
            }
        }
    }
}

/// Resolves a cut line into a plan for cell `c`.
pub fn smoothing_direction(mesh: &PolyMesh, c: CellId, line: &CutLine, c_rho: f64) -> Result<CutPlan> {
    let frame = CellFrame::new(mesh, c)?;
    plan_cut(&frame, line, c_rho)
}

const MAX_REAIMS: u8 = 2;

fn plan_cut(f: &CellFrame<'_>, line: &CutLine, c_rho: f64) -> Result<CutPlan> {
    let hits = f.view.line_boundary_intersections(line)?;
    let mut p = f.resolve(&hits[0], c_rho)?;
    let mut q = f.resolve(&hits[1], c_rho)?;
    let mut reaims = 0u8;
    let mut anchors: SmallVec<[PointId; 2]> = SmallVec::new();

    loop {
        let done = |a: CutPoint, b: CutPoint, reaims| CutPlan {
            a,
            b,
            reaims,
            fallback: false,
        };
        let anchor = match (p.point, q.point) {
            (CutPoint::Standard { .. }, CutPoint::Standard { .. }) if f.admissible(&p.point, &q.point) => {
                return Ok(done(p.point, q.point, reaims));
            }
            (CutPoint::Collapsed { vertex: v }, CutPoint::Collapsed { vertex: w }) => {
                if f.admissible(&p.point, &q.point) {
                    return Ok(done(p.point, q.point, reaims));
                }
                // Consecutive or identical corners: re-aim through the one
                // closer to its own crossing.
                let dv = p.hit.dist(mesh_point(f, v));
                let dw = q.hit.dist(mesh_point(f, w));
                let mut order = if dv < dw || (dv == dw && v < w) { [v, w] } else { [w, v] };
                if v == w {
                    order = [v, v];
                }
                order.into_iter().find(|x| !anchors.contains(x))
            }
            (CutPoint::Collapsed { vertex }, CutPoint::Standard { .. })
            | (CutPoint::Standard { .. }, CutPoint::Collapsed { vertex }) => {
                if reaims > 0 && f.admissible(&p.point, &q.point) {
                    // The pair came out of a re-aim: cut through it.
                    return Ok(done(p.point, q.point, reaims));
                }
                (!anchors.contains(&vertex)).then_some(vertex)
            }
            _ => None,
        };
        let Some(v) = anchor.filter(|_| reaims < MAX_REAIMS) else {
            break;
        };
        anchors.push(v);
        reaims += 1;
        let Some(far) = f.reaim(v, c_rho)? else { break };
        p = Resolved {
            point: CutPoint::Collapsed { vertex: v },
            hit: mesh_point(f, v),
        };
        q = far;
        if f.admissible(&p.point, &q.point) {
            return Ok(done(p.point, q.point, reaims));
        }
    }

    match f.best_diagonal() {
        Some((a, b)) => Ok(CutPlan {
            a: CutPoint::Collapsed { vertex: a },
            b: CutPoint::Collapsed { vertex: b },
            reaims,
            fallback: true,
        }),
        None => Err(Error::UnresolvableCut { cell: f.cell }),
    }
}

fn mesh_point(f: &CellFrame<'_>, v: PointId) -> Point2 {
    f.mesh.point(v)
}

/// Applies a refinement configuration to cells one at a time and keeps
/// running statistics.
#[derive(Clone, Debug)]
pub struct Refiner {
    config: RefineConfig,
    stats: RefineStats,
}

impl Refiner {
    pub fn new(config: RefineConfig) -> Self {
        Refiner {
            config,
            stats: RefineStats::default(),
        }
    }

    pub fn config(&self) -> &RefineConfig {
        &self.config
    }

    pub fn stats(&self) -> &RefineStats {
        &self.stats
    }

    /// Splits one alive cell in two and returns the children.
    pub fn refine_cell(&mut self, mesh: &mut PolyMesh, c: CellId) -> Result<(CellId, CellId)> {
        Ok(self.refine_cell_traced(mesh, c)?.0)
    }

    /// Like [`Refiner::refine_cell`], also reporting the branch taken.
    pub fn refine_cell_traced(&mut self, mesh: &mut PolyMesh, c: CellId) -> Result<((CellId, CellId), Branch)> {
        if !mesh.is_alive(c) {
            return Err(Error::InvalidCut {
                cell: c,
                reason: "cell is not alive",
            });
        }
        let frame = CellFrame::new(mesh, c)?;
        let parent_corners = frame.n_groups();
        let (a, b, branch, rule1) = if parent_corners == 3 {
            let (a, b) = triangle_cut(&frame);
            let branch = if frame.verts.len() == 3 {
                Branch::Triangle
            } else {
                Branch::GeometricTriangle
            };
            (a, b, branch, SmallVec::<[(f64, f64); 2]>::new())
        } else {
            let line = match self.config.strategy {
                Strategy::MaximumMoment => frame.view.max_moment_direction(),
                Strategy::LongestDiagonal => frame.view.longest_diagonal().1,
            };
            let plan = plan_cut(&frame, &line, self.config.c_rho)?;
            self.stats.reaims += plan.reaims as usize;
            self.stats.fallbacks += plan.fallback as usize;
            let mut checks = SmallVec::new();
            for p in [&plan.a, &plan.b] {
                if let CutPoint::Standard { group, point } = *p {
                    let g = &frame.groups[group];
                    let half = mesh.point(g.start).dist(point).min(mesh.point(g.end).dist(point));
                    checks.push((self.config.c_rho * frame.rho_group(group)?, half));
                }
            }
            let a = frame.split_at(&plan.a);
            let b = frame.split_at(&plan.b);
            (a, b, Branch::Polygon, checks)
        };
        drop(frame);

        let children = mesh.split_cell(c, a, b)?;
        self.stats.splits += 1;
        match branch {
            Branch::Triangle => self.stats.triangle_splits += 1,
            Branch::GeometricTriangle => self.stats.geometric_triangle_splits += 1,
            Branch::Polygon => {}
        }
        for (bound, half) in rule1 {
            self.stats.rule1_checks += 2;
            if half <= bound {
                self.stats.rule1_violations += 2;
            }
        }
        for child in [children.0, children.1] {
            if mesh.effective_vertex_count(child) > parent_corners + 1 {
                self.stats.vertex_bound_violations += 1;
            }
        }
        Ok((children, branch))
    }

    /// Refines each marked cell once, in ascending id order.
    pub fn refine_marked(&mut self, mesh: &mut PolyMesh, marked: &[CellId]) -> Result<()> {
        let mut order = marked.to_vec();
        order.sort_unstable();
        if order.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("marked cells must be distinct".into()));
        }
        mesh.reserve_splits(order.len());
        for c in order {
            self.refine_cell(mesh, c).map_err(|e| Error::RefineFailed {
                cell: c,
                source: Box::new(e),
            })?;
        }
        Ok(())
    }

    /// Longest-edge bisection of marked triangles followed by bisection of
    /// every cell left with a hanging node, until all cells are triangles
    /// without hanging nodes. Fails if a marked cell is not a triangle.
    pub fn refine_marked_conforming(&mut self, mesh: &mut PolyMesh, marked: &[CellId]) -> Result<()> {
        let mut order = marked.to_vec();
        order.sort_unstable();
        order.dedup();
        for c in order {
            if mesh.cell_vertices(c).len() != 3 && mesh.effective_vertex_count(c) != 3 {
                return Err(Error::InvalidCut {
                    cell: c,
                    reason: "conforming mode needs triangles",
                });
            }
            if mesh.is_alive(c) {
                self.refine_cell(mesh, c).map_err(|e| Error::RefineFailed {
                    cell: c,
                    source: Box::new(e),
                })?;
            }
        }
        loop {
            let pending: Vec<CellId> = mesh
                .cells()
                .filter(|&c| mesh.cell(c).edges().len() > 3)
                .collect();
            if pending.is_empty() {
                return Ok(());
            }
            for c in pending {
                if mesh.is_alive(c) {
                    self.refine_cell(mesh, c).map_err(|e| Error::RefineFailed {
                        cell: c,
                        source: Box::new(e),
                    })?;
                }
            }
        }
    }
}

/// Midpoint of the longest side (lowest index on ties) joined to the
/// opposite corner.
fn triangle_cut(f: &CellFrame<'_>) -> (SplitAt, SplitAt) {
    let mut g = 0;
    let mut best = f.group_len(0);
    for k in 1..3 {
        let len = f.group_len(k);
        if len > best {
            best = len;
            g = k;
        }
    }
    let mid = CutPoint::Standard {
        group: g,
        point: f.group_mid(g),
    };
    let opposite = f.groups[(g + 1) % 3].end;
    (f.split_at(&mid), SplitAt::Vertex(opposite))
}
