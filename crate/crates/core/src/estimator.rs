//! Residual error estimator for the projected solution `u^π = Π∇ u`.
//!
//! Per cell,
//!
//! ```text
//! η²_E = H_E²/K ‖f_δ + div(K ∇u^π)‖²_E + ½ Σ_{e ⊂ ∂E interior} h_e/K ‖[[K ∂u^π/∂n]]‖²_e
//! ```
//!
//! with `H_E` the longest edge. For linear `u^π` and constant `K` the
//! divergence vanishes and the jump is constant along each edge.

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::mesh::{CellId, EdgeId, PolyMesh};
use crate::problem::Problem;
use crate::quadrature::{integrate, integrate_graded, Rule};
use crate::vem::{CellSolution, VemSolution};

/// Grading levels for error quadrature next to a singular point.
const GRADING_LEVELS: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementEstimate {
    pub cell: CellId,
    pub residual: f64,
    pub jump: f64,
    pub eta_sq: f64,
}

#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub elements: Vec<ElementEstimate>,
    pub eta_r: f64,
    /// `‖√K ∇(u - u^π)‖`, when the exact gradient is known.
    pub err: Option<f64>,
    /// `err / η_R`; absent when `η_R` vanishes relative to the energy.
    pub effectivity: Option<f64>,
    /// Stabilization energy over `η_R²`; absent when `η_R = 0`.
    pub stab_ratio: Option<f64>,
    /// `‖√K ∇u^π‖`
    pub energy_norm: f64,
    pub stab_energy: f64,
}

impl EstimateReport {
    /// `η_R² / ‖√K ∇u^π‖²`, the stopping ratio.
    pub fn stopping_ratio(&self) -> f64 {
        if self.energy_norm == 0.0 {
            if self.eta_r == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.eta_r / self.energy_norm).powi(2)
        }
    }
}

fn cell_of(sol: &VemSolution, c: CellId) -> Result<&CellSolution> {
    sol.cell(c)
        .ok_or_else(|| Error::InvalidMesh(format!("{c} has no solution data")))
}

/// Length and outward unit normal of loop edge `i` of a counter-clockwise cell.
fn loop_edge(points: &[Point2], i: usize) -> (f64, Point2) {
    let p = points[i];
    let q = points[(i + 1) % points.len()];
    let d = q - p;
    let len = d.norm();
    (len, Point2::new(d.y, -d.x) * (1.0 / len))
}

/// `K_lo ∇u_lo·n - K_hi ∇u_hi·n` on an interior edge, with `n` pointing
/// from the lower cell id to the higher one.
pub fn edge_jump(mesh: &PolyMesh, sol: &VemSolution, e: EdgeId) -> Result<f64> {
    let edge = mesh.edge(e);
    let mut cells = edge.cells();
    let (Some(a), Some(b)) = (cells.next(), cells.next()) else {
        return Err(Error::BoundaryEdge(e));
    };
    let (lo, hi) = (a.min(b), a.max(b));
    let i = mesh
        .cell(lo)
        .edges()
        .iter()
        .position(|&x| x == e)
        .ok_or_else(|| Error::InvalidMesh(format!("{e} missing from {lo}")))?;
    let (_, n) = loop_edge(&mesh.cell_points(lo), i);
    let (a, b) = (cell_of(sol, lo)?, cell_of(sol, hi)?);
    Ok(a.k * a.grad.dot(n) - b.k * b.grad.dot(n))
}

/// Jump contributions `½ h_e/K h_e J²` of every cell, in `sol.cells` order.
fn jump_terms(mesh: &PolyMesh, sol: &VemSolution) -> Result<Vec<f64>> {
    let mut terms = vec![0.0; sol.cells.len()];
    let slot = |c: CellId| {
        sol.position(c)
            .ok_or_else(|| Error::InvalidMesh(format!("{c} has no solution data")))
    };
    for (i, a) in sol.cells.iter().enumerate() {
        let pts = mesh.cell_points(a.cell);
        for (k, &e) in mesh.cell(a.cell).edges().iter().enumerate() {
            let Some(o) = mesh.edge(e).other_cell(a.cell) else {
                continue;
            };
            if o < a.cell {
                continue;
            }
            let j = slot(o)?;
            let b = &sol.cells[j];
            let (len, n) = loop_edge(&pts, k);
            let jump = a.k * a.grad.dot(n) - b.k * b.grad.dot(n);
            terms[i] += 0.5 * len * len / a.k * jump * jump;
            terms[j] += 0.5 * len * len / b.k * jump * jump;
        }
    }
    Ok(terms)
}

/// Estimate of a single cell.
pub fn element_estimate(mesh: &PolyMesh, sol: &VemSolution, c: CellId) -> Result<ElementEstimate> {
    let data = cell_of(sol, c)?;
    let residual = data.longest_edge.powi(2) / data.k * data.load_norm_sq;
    let mut jump = 0.0;
    for &e in mesh.cell(c).edges() {
        let edge = mesh.edge(e);
        if edge.is_boundary() {
            continue;
        }
        let [p, q] = edge.ends();
        let len = mesh.point(p).dist(mesh.point(q));
        let j = edge_jump(mesh, sol, e)?;
        jump += 0.5 * len * len / data.k * j * j;
    }
    Ok(ElementEstimate {
        cell: c,
        residual,
        jump,
        eta_sq: residual + jump,
    })
}

/// `∫_E K |∇u - ∇u^π|²` over the centroid fan, graded toward the
/// problem's singular point.
fn cell_error<P: Problem + ?Sized>(mesh: &PolyMesh, data: &CellSolution, problem: &P) -> Result<f64> {
    let view = mesh.cell_polygon(data.cell)?;
    let singular = problem.singular_point();
    let tol = 1e-12 * view.longest_edge();
    let mut failure = None;
    let mut integrand = |p: Point2| match problem.exact_gradient(p) {
        Some(Ok(g)) => (g - data.grad).norm_sq(),
        Some(Err(e)) => {
            failure.get_or_insert(e);
            0.0
        }
        None => 0.0,
    };
    let mut total = 0.0;
    for [c, a, b] in view.fan() {
        let near = |q: Point2| singular.is_some_and(|s| q.dist(s) <= tol);
        total += if near(a) {
            integrate_graded([a, b, c], GRADING_LEVELS, Rule::Degree5, &mut integrand)
        } else if near(b) {
            integrate_graded([b, c, a], GRADING_LEVELS, Rule::Degree5, &mut integrand)
        } else {
            integrate([c, a, b], Rule::Degree5, &mut integrand)
        };
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(data.k * total)
}

/// Element estimates, `η_R`, and the derived error quantities.
pub fn estimate<P: Problem + ?Sized>(mesh: &PolyMesh, sol: &VemSolution, problem: &P) -> Result<EstimateReport> {
    let jumps = jump_terms(mesh, sol)?;
    let elements: Vec<ElementEstimate> = sol
        .cells
        .iter()
        .zip(jumps)
        .map(|(d, jump)| {
            let residual = d.longest_edge.powi(2) / d.k * d.load_norm_sq;
            ElementEstimate {
                cell: d.cell,
                residual,
                jump,
                eta_sq: residual + jump,
            }
        })
        .collect();

    let eta_r = elements.iter().map(|e| e.eta_sq).sum::<f64>().sqrt();
    let energy_norm = sol.energy_sq().sqrt();
    let stab_energy = sol.stab_energy();
    let has_exact = mesh
        .points()
        .first()
        .is_some_and(|&p| problem.exact_gradient(p).is_some());
    let err = if has_exact {
        let mut s = 0.0;
        for d in &sol.cells {
            s += cell_error(mesh, d, problem)?;
        }
        Some(s.sqrt())
    } else {
        None
    };
    let effectivity = err
        .filter(|_| eta_r > 0.0 && eta_r > 1e-10 * energy_norm)
        .map(|e| e / eta_r);
    let stab_ratio = (eta_r > 0.0).then(|| stab_energy / (eta_r * eta_r));
    Ok(EstimateReport {
        elements,
        eta_r,
        err,
        effectivity,
        stab_ratio,
        energy_norm,
        stab_energy,
    })
}
