//! Solve, estimate, mark, refine.

use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimateReport};
use crate::mesh::{CellId, PolyMesh};
use crate::problem::Problem;
use crate::quality::{mesh_stats, MeshStats};
use crate::refine::{RefineConfig, RefineStats, Refiner};
use crate::vem::{solve, VemSolution};

/// Smallest set of cells, taken in decreasing `η²` order, whose `η²` sum
/// reaches `theta` times the total. Equal values are taken lower id first.
pub fn dorfler_mark(eta_sq: &[(CellId, f64)], theta: f64) -> Result<Vec<CellId>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidConfig(format!("theta must lie in (0, 1], got {theta}")));
    }
    let mut order: Vec<(CellId, f64)> = eta_sq.to_vec();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let total: f64 = order.iter().map(|e| e.1).sum();
    if !(total > 0.0) {
        return Err(Error::AllZeroEstimates);
    }
    let target = theta * total;
    let mut sum = 0.0;
    let mut marked = Vec::new();
    for (c, v) in order {
        marked.push(c);
        sum += v;
        if sum >= target {
            break;
        }
    }
    Ok(marked)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptConfig {
    pub theta: f64,
    /// Stop once `η_R² / ‖√K ∇u^π‖²` drops to this value.
    pub tol: f64,
    pub max_iter: usize,
    pub refine: RefineConfig,
    /// Triangle longest-edge bisection with conformity recovery.
    pub fvem: bool,
    /// Stop once the dof count reaches this value.
    pub max_dofs: Option<usize>,
}

impl AdaptConfig {
    pub fn new(refine: RefineConfig) -> Self {
        AdaptConfig {
            theta: 0.5,
            tol: 1e-4,
            max_iter: 100,
            refine,
            fvem: false,
            max_dofs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidConfig(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        RefineConfig::new(self.refine.strategy, self.refine.c_rho)?;
        Ok(())
    }
}

/// One row of loop history. PDE quantities are absent for uniform runs.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub n_cells: usize,
    pub n_points: usize,
    pub n_dofs: usize,
    pub marked: usize,
    pub eta_r: Option<f64>,
    pub err: Option<f64>,
    pub effectivity: Option<f64>,
    pub stab_ratio: Option<f64>,
    pub stats: MeshStats,
    pub kappa_max: Option<f64>,
    pub kappa_mean: Option<f64>,
}

impl IterationRecord {
    /// Mesh-only record, nothing marked.
    pub fn of_mesh(iter: usize, mesh: &PolyMesh) -> Result<Self> {
        Ok(IterationRecord {
            iter,
            n_cells: mesh.n_cells(),
            n_points: mesh.n_points(),
            n_dofs: mesh.n_points(),
            marked: 0,
            eta_r: None,
            err: None,
            effectivity: None,
            stab_ratio: None,
            stats: mesh_stats(mesh)?,
            kappa_max: None,
            kappa_mean: None,
        })
    }

    fn with_solution(mut self, sol: &VemSolution, report: &EstimateReport) -> Self {
        self.eta_r = Some(report.eta_r);
        self.err = report.err;
        self.effectivity = report.effectivity;
        self.stab_ratio = report.stab_ratio;
        let n = sol.cells.len().max(1) as f64;
        self.kappa_max = sol.cells.iter().map(|c| c.kappa).reduce(f64::max);
        self.kappa_mean = Some(sol.cells.iter().map(|c| c.kappa).sum::<f64>() / n);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIter,
    MaxDofs,
}

#[derive(Clone, Debug)]
pub struct AdaptRun {
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
    pub refine: RefineStats,
}

fn at(iteration: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Iteration {
        iteration,
        source: Box::new(e),
    }
}

/// Runs the adaptive loop on `mesh` in place. Iterations count from 1.
pub fn adaptive_loop<P: Problem + ?Sized>(mesh: &mut PolyMesh, problem: &P, config: &AdaptConfig) -> Result<AdaptRun> {
    adaptive_loop_with(mesh, problem, config, |_, _, _| Ok(()))
}

/// [`adaptive_loop`] with a hook called after each estimate, before
/// refinement, with the current mesh, record and element estimates.
pub fn adaptive_loop_with<P, F>(mesh: &mut PolyMesh, problem: &P, config: &AdaptConfig, mut hook: F) -> Result<AdaptRun>
where
    P: Problem + ?Sized,
    F: FnMut(&PolyMesh, &IterationRecord, &EstimateReport) -> Result<()>,
{
    config.validate()?;
    let mut refiner = Refiner::new(config.refine);
    let mut records = Vec::new();
    for iter in 1..=config.max_iter {
        let err = at(iter);
        let step = (|| {
            let sol = solve(mesh, problem)?;
            let report = estimate(mesh, &sol, problem)?;
            let record = IterationRecord::of_mesh(iter, mesh)?.with_solution(&sol, &report);
            Ok::<_, Error>((record, report))
        })();
        let (mut record, report) = step.map_err(err)?;

        let stop = if report.stopping_ratio() <= config.tol {
            Some(StopReason::Converged)
        } else if config.max_dofs.is_some_and(|m| record.n_dofs >= m) {
            Some(StopReason::MaxDofs)
        } else if iter == config.max_iter {
            Some(StopReason::MaxIter)
        } else {
            None
        };

        let marked = match stop {
            Some(_) => Vec::new(),
            None => {
                let eta: Vec<(CellId, f64)> = report.elements.iter().map(|e| (e.cell, e.eta_sq)).collect();
                dorfler_mark(&eta, config.theta).map_err(at(iter))?
            }
        };
        record.marked = marked.len();
        hook(mesh, &record, &report).map_err(at(iter))?;
        records.push(record);

        if let Some(stop) = stop {
            return Ok(AdaptRun {
                records,
                stop,
                refine: refiner.stats().clone(),
            });
        }
        let refined = if config.fvem {
            refiner.refine_marked_conforming(mesh, &marked)
        } else {
            refiner.refine_marked(mesh, &marked)
        };
        refined.map_err(at(iter))?;
    }
    unreachable!("the final iteration always stops")
}

/// Refines every cell `n_iters` times. Record `k` describes the mesh after
/// `k` rounds; record 0 is the input. Parent cells are not kept.
pub fn uniform_loop(mesh: &mut PolyMesh, config: RefineConfig, n_iters: usize) -> Result<(Vec<IterationRecord>, RefineStats)> {
    uniform_loop_with(mesh, config, n_iters, |_, _| Ok(()))
}

/// [`uniform_loop`] with a hook called on every recorded mesh.
pub fn uniform_loop_with<F>(
    mesh: &mut PolyMesh,
    config: RefineConfig,
    n_iters: usize,
    mut hook: F,
) -> Result<(Vec<IterationRecord>, RefineStats)>
where
    F: FnMut(&PolyMesh, &IterationRecord) -> Result<()>,
{
    mesh.set_drop_history(true);
    let mut refiner = Refiner::new(config);
    let mut records = Vec::with_capacity(n_iters + 1);
    for iter in 0..=n_iters {
        let marked = if iter < n_iters { mesh.n_cells() } else { 0 };
        let mut record = IterationRecord::of_mesh(iter, mesh).map_err(at(iter))?;
        record.marked = marked;
        hook(mesh, &record).map_err(at(iter))?;
        records.push(record);
        if iter < n_iters {
            let all: Vec<CellId> = mesh.cells().collect();
            refiner.refine_marked(mesh, &all).map_err(at(iter))?;
        }
    }
    Ok((records, refiner.stats().clone()))
}
