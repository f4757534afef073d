//! Periodic fields on the flat torus and the operators the construction needs.

mod diff;
mod embedding;
mod field;
mod holder;
pub mod io;
mod metric;
mod mollify;
pub(crate) mod spectral;

pub use diff::{diff, gradient, hessian, DiffScheme};
pub use embedding::{chart_stub, injectivity_margin, product_torus, Embedding};
pub use field::{PeriodicField, MIN_RESOLUTION, PERIOD};
pub use holder::{holder_norms, holder_seminorms, HolderOptions, HolderReport};
pub use metric::{metric_from_jacobian, MetricField};
pub use mollify::{bump, kernel_transform, mollify};

use crate::error::Result;
use crate::real::Real;

/// `∇uᵀ∇u` for a vector field, differentiating spectrally.
pub fn induced_metric<T: Real>(u: &PeriodicField<T>) -> Result<MetricField<T>> {
    metric_from_jacobian(&gradient(u, DiffScheme::Spectral)?, u.components())
}
