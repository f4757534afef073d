//! The global iteration on flat tori: exponents, schedule, adapted short states,
//! the driver and its artifacts.

mod exponents;

pub use exponents::{
    alpha_bound, b_factor, c_star, kappa, ledger_check, ledger_sweep, steps_exponent, steps_exponent_exact,
    theta_threshold, Inequality, LedgerCase, LEDGER_CSV_HEADER,
};
mod schedule;

pub use schedule::{
    check_ordering, max_alpha0, min_a0_for_ordering, schedule, stage_scales, theta_final, LevelParams,
    ScheduleParams, StageScale,
};
mod state;

pub use state::{
    initial_short_corrected, initial_short_flat, near_flat_metric, rho_update, AdaptedShortState, BoundCheck,
    BoundsReport, CorrectionOptions, StateParams, RHO_MIN,
};
mod calibrate;

pub use calibrate::{admissible_corner, calibrate, Calibration, CalibrationOptions, StageProbe, StepProbe};
mod driver;

pub use driver::{
    cutoff_phi, run_global, stage_top_frequency, IterateRecord, RunArtifacts, RunConfig, RunSummary, ITERATE_CSV_HEADER,
};
mod artifacts;

pub use artifacts::{
    export_mesh, surface_mesh, write_ledger_sweep, write_obj, write_ply, write_run, CalibratedConstants, Manifest,
    MeasuredConstants,
};
