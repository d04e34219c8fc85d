//! Lowest-order virtual elements for the Poisson problem.
//!
//! Degrees of freedom are vertex values. On each cell the energy projector
//! `Π∇` maps them to a linear polynomial in the scaled monomial basis
//! `{1, (x - x_E)/h_E, (y - y_E)/h_E}` (with `h_E` the cell diameter),
//! closed by matching boundary means. The local matrix is the projected
//! consistency term plus the stabilization `K (I - Π)ᵀ(I - Π)` on the
//! dof vectors.

use nalgebra::{DMatrix, Matrix3, Vector3};
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygonView, Point2};
use crate::mesh::{CellId, PolyMesh};
use crate::problem::Problem;
use crate::quadrature::{integrate, Rule};
use crate::solver::solve_spd;

const NONE: u32 = u32::MAX;

/// Element matrices of one cell.
#[derive(Clone, Debug)]
pub struct LocalVem {
    pub centroid: Point2,
    /// Diameter used to scale the monomials.
    pub h: f64,
    pub area: f64,
    pub k: f64,
    /// `3 × N` map from vertex values to monomial coefficients.
    pub pinabla: DMatrix<f64>,
    /// `N × N` local stiffness, diffusivity included.
    pub stiffness: DMatrix<f64>,
}

/// `Π∇` of a cell in the scaled monomial basis.
pub fn local_pinabla(view: &ConvexPolygonView) -> DMatrix<f64> {
    let n = view.len();
    let c = view.centroid();
    let h = view.diameter();
    let area = view.area();
    let perimeter: f64 = (0..n).map(|i| view.edge_length(i)).sum();

    let mut g01 = 0.0;
    let mut g02 = 0.0;
    for i in 0..n {
        let m = view.vertex(i).midpoint(view.vertex(i + 1));
        let len = view.edge_length(i);
        g01 += len * (m.x - c.x) / h;
        g02 += len * (m.y - c.y) / h;
    }
    g01 /= perimeter;
    g02 /= perimeter;

    let mut p = DMatrix::zeros(3, n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let (lp, li) = (view.edge_length(prev), view.edge_length(i));
        let (np, ni) = (view.edge_normal(prev), view.edge_normal(i));
        let b0 = (lp + li) / (2.0 * perimeter);
        // ∫_∂E ∇m·n φ_i, divided by ∫_E |∇m|² = |E| / h².
        let p1 = (lp * np.x + li * ni.x) * h / (2.0 * area);
        let p2 = (lp * np.y + li * ni.y) * h / (2.0 * area);
        p[(0, i)] = b0 - g01 * p1 - g02 * p2;
        p[(1, i)] = p1;
        p[(2, i)] = p2;
    }
    p
}

/// `κ₂` of a `Π∇` matrix.
pub fn pinabla_condition(p: &DMatrix<f64>) -> f64 {
    let s = p.clone().svd(false, false).singular_values;
    s.max() / s.min()
}

impl LocalVem {
    pub fn new(view: &ConvexPolygonView, k: f64) -> Self {
        let n = view.len();
        let c = view.centroid();
        let h = view.diameter();
        let area = view.area();
        let pinabla = local_pinabla(view);

        let mut stiffness = DMatrix::zeros(n, n);
        let scale = k * area / (h * h);
        for i in 0..n {
            for j in 0..n {
                stiffness[(i, j)] =
                    scale * (pinabla[(1, i)] * pinabla[(1, j)] + pinabla[(2, i)] * pinabla[(2, j)]);
            }
        }
        // Π∇ is the identity on triangles, so only larger cells get the
        // stabilization.
        if n > 3 {
            let mut d = DMatrix::zeros(n, 3);
            for i in 0..n {
                let v = view.vertex(i);
                d[(i, 0)] = 1.0;
                d[(i, 1)] = (v.x - c.x) / h;
                d[(i, 2)] = (v.y - c.y) / h;
            }
            let r = DMatrix::identity(n, n) - &d * &pinabla;
            stiffness += (r.transpose() * r) * k;
        }
        LocalVem {
            centroid: c,
            h,
            area,
            k,
            pinabla,
            stiffness,
        }
    }

    pub fn len(&self) -> usize {
        self.pinabla.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Monomial coefficients of `Π∇ u`.
    pub fn coefficients(&self, u: &[f64]) -> [f64; 3] {
        let mut c = [0.0; 3];
        for (a, ca) in c.iter_mut().enumerate() {
            *ca = (0..self.len()).map(|i| self.pinabla[(a, i)] * u[i]).sum();
        }
        c
    }

    /// Constant gradient of `Π∇ u`.
    pub fn gradient(&self, u: &[f64]) -> Point2 {
        let c = self.coefficients(u);
        Point2::new(c[1] / self.h, c[2] / self.h)
    }

    /// Value of `Π∇ u` at `p`.
    pub fn eval(&self, coeffs: &[f64; 3], p: Point2) -> f64 {
        coeffs[0] + (coeffs[1] * (p.x - self.centroid.x) + coeffs[2] * (p.y - self.centroid.y)) / self.h
    }

    /// `K |(I - Π)u|²`, zero on triangles.
    pub fn stab_energy(&self, u: &[f64], vertices: &[Point2]) -> f64 {
        if self.len() <= 3 {
            return 0.0;
        }
        let c = self.coefficients(u);
        self.k
            * vertices
                .iter()
                .zip(u)
                .map(|(&v, ui)| (ui - self.eval(&c, v)).powi(2))
                .sum::<f64>()
    }

    pub fn condition(&self) -> f64 {
        pinabla_condition(&self.pinabla)
    }
}

/// L² projection of `f` onto linears on one cell, by degree-2 quadrature on
/// the centroid fan: moments `∫ f m_α` and `‖Π⁰f‖²`.
pub fn project_load<P: Problem + ?Sized>(view: &ConvexPolygonView, h: f64, problem: &P) -> (Vector3<f64>, f64) {
    if problem.zero_source() {
        return (Vector3::zeros(), 0.0);
    }
    let c = view.centroid();
    let m = |p: Point2| [1.0, (p.x - c.x) / h, (p.y - c.y) / h];
    let mut moments = Vector3::zeros();
    let mut mass = Matrix3::zeros();
    for tri in view.fan() {
        for a in 0..3 {
            moments[a] += integrate(tri, Rule::Degree2, |p| problem.source(p) * m(p)[a]);
            for b in 0..3 {
                mass[(a, b)] += integrate(tri, Rule::Degree2, |p| m(p)[a] * m(p)[b]);
            }
        }
    }
    let norm_sq = match mass.try_inverse() {
        Some(inv) => moments.dot(&(inv * moments)),
        None => 0.0,
    };
    (moments, norm_sq)
}

/// Reduced system over the non-Dirichlet points.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsMat<f64>,
    pub rhs: Vec<f64>,
    /// Reduced index of each mesh point, `None` for Dirichlet points.
    pub free: Vec<Option<usize>>,
    /// Prescribed value of each Dirichlet point.
    pub dirichlet: Vec<Option<f64>>,
}

impl LinearSystem {
    /// Full dof vector from a reduced solution.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .zip(&self.dirichlet)
            .map(|(f, d)| match (f, d) {
                (Some(i), _) => x[*i],
                (None, Some(v)) => *v,
                (None, None) => 0.0,
            })
            .collect()
    }
}

/// Per-cell data of a solved discretization.
#[derive(Clone, Debug)]
pub struct CellSolution {
    pub cell: CellId,
    pub k: f64,
    pub area: f64,
    /// `H_E`: longest edge.
    pub longest_edge: f64,
    pub coeffs: [f64; 3],
    pub grad: Point2,
    pub stab: f64,
    pub kappa: f64,
    /// `‖f_δ‖²` on the cell.
    pub load_norm_sq: f64,
}

#[derive(Clone, Debug)]
pub struct VemSolution {
    pub dofs: Vec<f64>,
    pub cells: Vec<CellSolution>,
    index: Vec<u32>,
}

impl VemSolution {
    pub fn cell(&self, c: CellId) -> Option<&CellSolution> {
        self.position(c).map(|i| &self.cells[i])
    }

    /// Index of `c` in `cells`.
    pub fn position(&self, c: CellId) -> Option<usize> {
        match self.index.get(c.index()) {
            Some(&i) if i != NONE => Some(i as usize),
            _ => None,
        }
    }

    pub fn stab_energy(&self) -> f64 {
        self.cells.iter().map(|c| c.stab).sum()
    }

    /// `‖√K ∇u^π‖²`.
    pub fn energy_sq(&self) -> f64 {
        self.cells.iter().map(|c| c.k * c.area * c.grad.norm_sq()).sum()
    }
}

fn local_values(dofs: &[f64], verts: &[crate::mesh::PointId]) -> Vec<f64> {
    verts.iter().map(|v| dofs[v.index()]).collect()
}

/// Assembles the reduced system with every boundary point constrained.
pub fn assemble<P: Problem + ?Sized>(mesh: &PolyMesh, problem: &P) -> Result<LinearSystem> {
    let on_boundary = mesh.boundary_points();
    let mut free = vec![None; mesh.n_points()];
    let mut dirichlet = vec![None; mesh.n_points()];
    let mut n_free = 0;
    for (i, &b) in on_boundary.iter().enumerate() {
        if b {
            dirichlet[i] = Some(problem.dirichlet(mesh.points()[i]));
        } else {
            free[i] = Some(n_free);
            n_free += 1;
        }
    }
    if n_free == mesh.n_points() {
        return Err(Error::SingularSystem("no Dirichlet points"));
    }

    let mut trip = TriMat::with_capacity((n_free, n_free), 16 * n_free);
    let mut rhs = vec![0.0; n_free];
    for c in mesh.cells() {
        let view = mesh.cell_polygon(c)?;
        let verts = mesh.cell_vertices(c);
        let local = LocalVem::new(&view, problem.diffusivity(view.centroid()));
        let (moments, _) = project_load(&view, local.h, problem);
        for (i, vi) in verts.iter().enumerate() {
            let Some(fi) = free[vi.index()] else { continue };
            rhs[fi] += (0..3).map(|a| moments[a] * local.pinabla[(a, i)]).sum::<f64>();
            for (j, vj) in verts.iter().enumerate() {
                let kij = local.stiffness[(i, j)];
                match (free[vj.index()], dirichlet[vj.index()]) {
                    (Some(fj), _) => trip.add_triplet(fi, fj, kij),
                    (None, Some(g)) => rhs[fi] -= kij * g,
                    (None, None) => unreachable!("point is neither free nor constrained"),
                }
            }
        }
    }
    Ok(LinearSystem {
        matrix: trip.to_csr(),
        rhs,
        free,
        dirichlet,
    })
}

/// Solves the reduced system and returns the full dof vector.
pub fn solve_system(system: &LinearSystem) -> Result<Vec<f64>> {
    let x = solve_spd(&system.matrix, &system.rhs)?;
    Ok(system.expand(&x))
}

/// Per-cell projections `Π∇ u` with the cell data the estimator needs.
pub fn project_solution<P: Problem + ?Sized>(mesh: &PolyMesh, problem: &P, dofs: Vec<f64>) -> Result<VemSolution> {
    let mut cells = Vec::with_capacity(mesh.n_cells());
    let mut index = vec![NONE; mesh.n_cell_records()];
    for c in mesh.cells() {
        let view = mesh.cell_polygon(c)?;
        let verts = mesh.cell_vertices(c);
        let local = LocalVem::new(&view, problem.diffusivity(view.centroid()));
        let u = local_values(&dofs, &verts);
        let coeffs = local.coefficients(&u);
        let (_, load_norm_sq) = project_load(&view, local.h, problem);
        index[c.index()] = cells.len() as u32;
        cells.push(CellSolution {
            cell: c,
            k: local.k,
            area: local.area,
            longest_edge: view.longest_edge(),
            coeffs,
            grad: Point2::new(coeffs[1] / local.h, coeffs[2] / local.h),
            stab: local.stab_energy(&u, view.vertices()),
            kappa: local.condition(),
            load_norm_sq,
        });
    }
    Ok(VemSolution { dofs, cells, index })
}

/// Assemble, solve and project in one step.
pub fn solve<P: Problem + ?Sized>(mesh: &PolyMesh, problem: &P) -> Result<VemSolution> {
    let system = assemble(mesh, problem)?;
    let dofs = solve_system(&system)?;
    project_solution(mesh, problem, dofs)
}
