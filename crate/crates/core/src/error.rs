use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Kernel evaluated on the diagonal `x = y`.
    #[error("kernel evaluated at coincident points x = y = {point:?}")]
    SingularEvaluation { point: Vec<f64> },

    /// A parameter lies outside its admissible range.
    #[error("invalid parameter `{name}` = {value}: expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// A precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A far-field integral does not converge.
    #[error("divergent integral: {0}")]
    Divergence(String),

    /// Spatial or temporal dimensions disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A parabolic cylinder or region contains no grid samples.
    #[error("empty intersection between {region} and the field samples")]
    EmptyRegion { region: String },

    /// Adaptive quadrature ran out of subdivisions before reaching its tolerance.
    #[error("quadrature budget exceeded: best estimate {estimate} with error {error_estimate}")]
    QuadratureBudget { estimate: f64, error_estimate: f64 },

    /// The linear system of a time step could not be factorised.
    #[error("linear solve failed at t = {time}: {reason}")]
    LinearSolve { time: f64, reason: String },

    /// The requested kernel family is not supported by this routine.
    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    /// Operation requested outside the regime where it is defined.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// Malformed field file.
    #[error("field format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected: "a finite number",
        })
    }
}
