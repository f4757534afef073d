//! Convex integration of flat tori `T^n -> R^{2n}`.
//!
//! The crate builds `C^{1,θ}` isometric embeddings numerically: one-dimensional
//! corrugation primitives, decompositions of metric defects into rank-one
//! pieces, corrugation steps, stages combining several steps, and a global
//! driver that iterates stages under an exponent schedule.

pub mod bessel;
pub mod corrugation;
pub mod decompose;
pub mod engine;
pub mod error;
pub mod frames;
pub mod grid;
pub mod linalg;
pub mod quadrature;
pub mod real;
pub mod stage;
pub mod step;
pub mod verify;

pub use error::{Error, Result};
pub use real::Real;

pub type Field64 = grid::PeriodicField<f64>;
pub type Field32 = grid::PeriodicField<f32>;
pub type Metric64 = grid::MetricField<f64>;
pub type Embedding64 = grid::Embedding<f64>;
