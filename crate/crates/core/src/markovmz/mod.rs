//! Markovian reformulation of the memory integral: a hierarchy of auxiliary
//! ODEs for a finite memory length, on-the-fly estimation of that length from
//! the full system, and the adaptive full-to-reduced switch.

mod adaptive;
mod estimator;
mod hierarchy;

pub use adaptive::{adaptive_run, estimation_phase, AdaptiveConfig, AdaptiveOutcome, EstimationPhase, MemoryStart};
pub use estimator::{
    epsilon_update, estimate_y, memory_integral, polynomial_coefficients, t0_from_y, DiagnosticRow, EstimatorHistory,
    NewtonOptions, YEstimate,
};
pub use hierarchy::{run_reformulated_reduced, MemoryHierarchy, ReformulatedRun};
