use thiserror::Error;

use crate::mesh::{CellId, EdgeId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate polygon (area {area:e})")]
    DegeneratePolygon { area: f64 },

    #[error("cut line does not cross the polygon boundary twice ({hits} hits)")]
    NoIntersection { hits: usize },

    #[error("edge {a}-{b} is shared by more than two cells")]
    NonManifoldEdge { a: u32, b: u32 },

    #[error("cell {cell} is not counter-clockwise")]
    OrientationError { cell: usize },

    #[error("cell {cell} is not convex")]
    NonConvexCell { cell: usize },

    #[error("invalid mesh input: {0}")]
    InvalidMesh(String),

    #[error("invalid cut of cell {cell}: {reason}")]
    InvalidCut { cell: CellId, reason: &'static str },

    #[error("no valid cut found for cell {cell}")]
    UnresolvableCut { cell: CellId },

    #[error("{0} is a boundary edge")]
    BoundaryEdge(EdgeId),

    #[error("linear system is singular: {0}")]
    SingularSystem(&'static str),

    #[error("linear solver failed after {iterations} iterations (residual {residual:e}, bound {bound:e})")]
    SolverFailure {
        iterations: usize,
        residual: f64,
        bound: f64,
    },

    #[error("exact gradient requested at the corner singularity ({x:e}, {y:e})")]
    CornerSingularity { x: f64, y: f64 },

    #[error("all error indicators are zero")]
    AllZeroEstimates,

    #[error("mesh generation failed: {0}")]
    GenerationFailure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("refinement of cell {cell} failed: {source}")]
    RefineFailed {
        cell: CellId,
        #[source]
        source: Box<Error>,
    },

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
