use thiserror::Error;

/// Errors raised by the geometry kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("bilinear form is degenerate (smallest |eigenvalue| {smallest:e} vs threshold {threshold:e})")]
    DegenerateForm { smallest: f64, threshold: f64 },
    #[error("bilinear form is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix or vector has non-finite entries")]
    NonFinite,
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("point {point:?} lies outside chart `{chart}`")]
    OutOfDomain { chart: String, point: Vec<f64> },
    #[error("fields live on different charts (`{left}` vs `{right}`)")]
    ChartMismatch { left: String, right: String },
    #[error("metric is degenerate at {point:?}")]
    DegenerateMetric { point: Vec<f64> },
    #[error("averaged metric is degenerate at {point:?}")]
    DegenerateResult { point: Vec<f64> },
    #[error("compatible-metric construction degenerates at step {step} ({label}) at {point:?}")]
    DegenerateIntermediate {
        step: usize,
        label: &'static str,
        point: Vec<f64>,
    },
    #[error("incompatible inputs: {what} (residual {residual:e})")]
    IncompatibleInputs { what: String, residual: f64 },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("warp function must be positive, found {value} at r = {at}")]
    NonpositiveF { value: f64, at: f64 },
    #[error("cone radial range [{lo}, {hi}] must stay away from the apex")]
    ApexIncluded { lo: f64, hi: f64 },
    #[error("invalid finite-difference scheme: {0}")]
    InvalidScheme(String),
    #[error("invalid sample plan: {0}")]
    InvalidPlan(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation failed: {axiom} (residual {residual:e})")]
    ValidationFailed { axiom: String, residual: f64 },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
