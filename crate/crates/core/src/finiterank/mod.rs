//! Finite-rank Mori-Zwanzig memory: kernels estimated from quadrature
//! ensembles of full-system runs, a second-kind Volterra solve for the
//! memory coefficients, and the non-Markovian reduced model.

mod kernels;
mod reduced;
mod volterra;

pub use kernels::{estimate_kernels, expand, project, KernelTable};
pub use reduced::{memory_term, run_reduced, MemorySeries};
pub use volterra::solve_volterra;
