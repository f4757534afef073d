//! Decompositions of symmetric matrix fields into rank-one primitives.

mod conformal;
mod nash;
mod perturbed;

pub use conformal::{beltrami_coefficient, conformal_factorize, ConformalFactorization, ConformalOptions, MAX_BELTRAMI};
pub use nash::{balanced_center, nash_basis, nash_decompose, NashBasis, NashDecomposition, CLAMP_THRESHOLD};
pub use perturbed::{calibrate_sigma1, perturbed_at, perturbed_decompose, PerturbedDecomposition, PicardOptions};
