//! Error type shared by the numerical engines.

use thiserror::Error;

/// Failures raised by the physics engines.
///
/// Scenario-level failures (parsing, validation) live in
/// [`crate::scenario::ScenarioError`] and wrap these.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HolonomyError {
    #[error("matrix is not Hermitian: max |A_ij - conj(A_ji)| = {deviation:e} exceeds {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state became non-finite at step {step}")]
    NonFiniteState { step: usize },

    #[error("degenerate spectrum: gap {gap:e} below tolerance {tolerance:e} at loop point {point}")]
    DegenerateSpectrum { gap: f64, tolerance: f64, point: usize },

    #[error("gauge obstruction: overlap modulus {modulus:.3e} between points {from} and {to} (refine the loop)")]
    GaugeObstruction { modulus: f64, from: usize, to: usize },

    #[error("evolution is not cyclic in ray space: closure fidelity {fidelity} below {tolerance}")]
    OpenLoop { fidelity: f64, tolerance: f64 },

    #[error("degenerate overlap: |<s_{from}|s_{to}>| = {modulus:.3e} below 0.1")]
    DegenerateOverlap { modulus: f64, from: usize, to: usize },

    #[error("tangent vector base does not match the first path point")]
    BasePointMismatch,

    #[error("segment {index} joins (nearly) antipodal points")]
    AntipodalSegment { index: usize },

    #[error("velocity {index} has speed {speed} which is not below c = {c}")]
    SuperluminalVelocity { index: usize, speed: f64, c: f64 },

    #[error("loop segment {index} crosses the solenoid boundary")]
    LoopThroughSolenoid { index: usize },

    #[error("loop passes through the winding center at segment {index}")]
    CenterOnLoop { index: usize },

    #[error("insufficient probes: {0}")]
    InsufficientProbes(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, HolonomyError>;
