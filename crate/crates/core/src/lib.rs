//! Polynomial-chaos Galerkin systems for uncertain ODEs and PDEs, and
//! Mori-Zwanzig reduced models for a subset of their chaos coefficients.
//!
//! Two memory constructions are provided:
//!
//! * [`finiterank`]: memory kernels estimated through a finite-rank
//!   (Hermite) projection and a second-kind Volterra equation.
//! * [`markovmz`]: the memory integral replaced by auxiliary ODEs with a
//!   finite memory length, estimated on the fly from the full system.

pub mod error;
pub mod finiterank;
pub mod galerkin;
pub mod integrate;
pub mod markovmz;
pub mod polybasis;
pub mod scalar;
pub mod stats;

pub use error::{MzError, Result};
pub use scalar::Scalar;

pub use finiterank::{KernelTable, MemorySeries};
pub use galerkin::{
    BurgersConfig, BurgersSystem, GalerkinSystem, LinearOdeSystem, ParticleSystem, Partition,
};
pub use integrate::{heun_step, integrate, StepperConfig, Trajectory};
pub use markovmz::{AdaptiveConfig, AdaptiveOutcome, EstimatorHistory, MemoryHierarchy};
pub use polybasis::{
    GaussianMeasure, HermiteBasisSet, LegendreFamily, MultiIndex, Normalization, QuadTensor,
    QuadratureKind, QuadratureRule, TripleConvention, TripleTensor,
};
pub use stats::StatSeries;

pub use num_complex::Complex64;
