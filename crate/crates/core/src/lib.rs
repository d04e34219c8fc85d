pub mod adapt;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod mesh;
pub mod meshgen;
pub mod output;
pub mod problem;
pub mod quadrature;
pub mod quality;
pub mod refine;
pub mod solver;
pub mod vem;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/refinement.md")]
    mod refinement {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/estimator.md")]
    mod estimator {}
    #[doc = include_str!("../../../book/src/adaptive-loop.md")]
    mod adaptive_loop {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
