//! Orthogonal polynomial families, their product tensors and quadrature rules.

mod hermite;
mod legendre;
mod quadrature;
mod tensors;

pub use hermite::{total_degree_set, GaussianMeasure, HermiteBasisSet, MultiIndex};
pub use legendre::{gauss_legendre, LegendreFamily, Normalization};
pub use quadrature::{gauss_hermite, inner_product, quadrature, QuadratureKind, QuadratureRule};
pub use tensors::{quad_tensor, triple_tensor, QuadTensor, TripleConvention, TripleTensor};
