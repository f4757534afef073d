//! Corrugation and absorption steps.

mod absorb;
mod corrugate;

pub use absorb::{apply_absorption_step, cutoff_psi, AbsorptionOutput, AbsorptionParams, AbsorptionReport};
pub use corrugate::{apply_step, value_hessian_sup, Phase, StepOutput, StepParams, StepReport, STEP_CSV_HEADER};
pub(crate) use corrugate::second_seminorm;
