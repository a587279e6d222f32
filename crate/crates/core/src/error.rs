use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient list has length {len}; expected an odd length of at least 3")]
    BadDegree { len: usize },
    #[error("curve is degenerate: branch points {i} and {j} are {distance:e} apart (threshold {threshold:e})")]
    DegenerateCurve {
        i: usize,
        j: usize,
        distance: f64,
        threshold: f64,
    },
    #[error("Newton polishing of root {index} did not converge (|f| = {residual:e})")]
    RootFindingFailed { index: usize, residual: f64 },
    #[error("point x = {x} is a branch point; the differential value is singular there")]
    AtBranchPoint { x: num_complex::Complex64 },
    #[error("point ({x}, {y}) is not on the curve (|y^2 - f(x)| = {residual:e})")]
    NotOnCurve {
        x: num_complex::Complex64,
        y: num_complex::Complex64,
        residual: f64,
    },
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("cycle construction failed: {0}")]
    CycleConstructionFailed(String),
    #[error("quadrature did not converge: last refinement changed the value by {delta:e} (tol {tol:e})")]
    QuadratureNotConverged { delta: f64, tol: f64 },
    #[error("period validation failed: {invariant} (value {value:e})")]
    ValidationFailed { invariant: String, value: f64 },
    #[error("imaginary part of the modulus is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("theta series overflowed")]
    Overflow,
    #[error("stratum level {level} out of range 0..={max}")]
    OutOfRange { level: usize, max: usize },
    #[error("lattice decomposition system is singular")]
    SingularSystem,
    #[error("gamma0 calibration unstable: successive estimates differ by {spread:e}")]
    CalibrationUnstable { spread: f64 },
    #[error("point lies on the theta divisor (|sigma| relative to its scale = {relative:e})")]
    OnThetaDivisor { relative: f64 },
    #[error("integration path is blocked: {0}")]
    PathBlocked(String),
    #[error("tail series at infinity did not converge within {terms} terms")]
    TailNotConverged { terms: usize },
    #[error("divisor is not generic: {0}")]
    NonGenericDivisor(String),
    #[error("sign audit cell (g={genus}, m={m}, n={n}) is inconsistent across trials")]
    InconsistentCell { genus: usize, m: usize, n: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Errors caused by the input or environment rather than by the mathematics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Json(_) | Error::Config(_) | Error::BadDegree { .. } | Error::DegenerateCurve { .. }
        )
    }
}
