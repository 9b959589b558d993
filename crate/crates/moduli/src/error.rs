//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid polynomial order: {0}")]
    InvalidOrder(String),

    #[error("invalid cutoff radii: r_minus = {r_minus} must be < r_plus = {r_plus}")]
    InvalidCutoff { r_minus: f64, r_plus: f64 },

    #[error("point ({x}, {y}) lies outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("invalid projection plan: {0}")]
    InvalidPlan(String),

    #[error("conjugate gradient did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    CgNoConvergence { iterations: usize, residual: f64 },

    #[error("operator indefinite: negative curvature at CG iteration {iteration}")]
    IndefiniteOperator { iteration: usize },

    #[error("|det E| = {value:.3e} below threshold {threshold:.3e} at ({x:.4}, {y:.4})")]
    DetETooSmall { x: f64, y: f64, value: f64, threshold: f64 },

    #[error("field file: {0}")]
    FieldFormat(String),

    #[error("dimension mismatch: expected {expected} coefficients, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("curve leaves the domain at ({x}, {y})")]
    CurveOutsideDomain { x: f64, y: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
