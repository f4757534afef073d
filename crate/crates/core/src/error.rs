use thiserror::Error;

/// Failure modes of the library. The messages are part of the public contract.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("grid too coarse: resolution {resolution} below stencil width {width}")]
    GridTooCoarse { resolution: usize, width: usize },
    #[error("invalid mollification scale {0}")]
    InvalidMollificationScale(f64),
    #[error("empty field")]
    EmptyField,
    #[error("amplitude out of corrugation range: s = {s} exceeds s_max = {s_max}")]
    AmplitudeOutOfRange { s: f64, s_max: f64 },
    #[error("oscillation exceeds decomposition radius at node {node} (L_{index} = {value})")]
    DecompositionRadius { node: usize, index: usize, value: f64 },
    #[error("perturbation exceeds contraction radius after {iterations} iterations (last update {last_update})")]
    ContractionRadius { iterations: usize, last_update: f64 },
    #[error("metric not uniformly elliptic at node {node} (eigenvalue {eigenvalue})")]
    NotElliptic { node: usize, eigenvalue: f64 },
    #[error("metric outside near-flat range: {0}")]
    NotNearFlat(String),
    #[error("conformal iteration failed to converge; residual history {0:?}")]
    ConformalDivergence(Vec<f64>),
    #[error("not an immersion at node {node} (smallest singular value {sigma})")]
    NotImmersion { node: usize, sigma: f64 },
    #[error("frame holonomy obstruction: {0}")]
    FrameHolonomy(String),
    #[error("corrugation amplitude overflow: reduce δ or rescale (s = {s}, s_max = {s_max})")]
    AmplitudeOverflow { s: f64, s_max: f64 },
    #[error("step precondition violated: {0}")]
    StepPrecondition(String),
    #[error("stage precondition violated: {0}")]
    StagePrecondition(String),
    #[error("beyond threshold exponent: θ = {theta} ≥ θ(n) = {threshold}")]
    BeyondThreshold { theta: f64, threshold: f64 },
    #[error("exponent ledger rejected parameters: {0}")]
    LedgerRejected(String),
    #[error("shrink α₀: final θ {theta_final} does not exceed target {theta}")]
    ShrinkAlpha { theta_final: f64, theta: f64 },
    #[error("schedule ordering violated at level {level}: {detail}")]
    Ordering { level: usize, detail: String },
    #[error("adapted short state bound violated: {0}")]
    BoundViolation(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
