//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplicate emitters: indices {first} and {second} coincide within tolerance")]
    DuplicateEmitters { first: usize, second: usize },

    #[error("emitter {index} at ({x}, {y}) lies outside the window")]
    OutsideWindow { index: usize, x: f64, y: f64 },

    #[error(
        "density disk of radius {radius} exceeds the window (half extents {half_width} x {half_height})"
    )]
    DiskExceedsWindow {
        radius: f64,
        half_width: f64,
        half_height: f64,
    },

    #[error("emitter {index} has no interferer within reach; SIR is unbounded")]
    NoInterferers { index: usize },

    #[error("boundary tracing requires an SIR threshold > 1 (got beta = {beta}); below that, reception areas may overlap or be unbounded")]
    UnsupportedThreshold { beta: f64 },

    #[error("Newton iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    NewtonDidNotConverge { residual: f64, iterations: usize },

    #[error("SIR gradient vanished at ({x}, {y}); cannot continue the march")]
    GradientUnderflow { x: f64, y: f64 },

    #[error("trace did not close within {steps} steps; boundary may be open or the step size too small")]
    RunawayTrace { steps: usize },

    #[error("polygon needs at least 3 vertices, got {count}")]
    TooFewVertices { count: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}
