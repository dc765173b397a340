use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-positive Jacobian det(F) = {det:e}{}", element_suffix(*.element))]
    NonPositiveJacobian { det: f64, element: Option<usize> },

    #[error("non-positive stretch {stretch:e}{}", element_suffix(*.element))]
    NegativeStretch { stretch: f64, element: Option<usize> },

    #[error("derivative {value:e} vanishes at x = {x}")]
    VanishingDerivative { x: f64, value: f64 },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("cannot calibrate arctan scale: {0}")]
    DegenerateCalibration(String),

    #[error("node {0} is not connected to any element")]
    IsolatedNode(usize),

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),

    #[error("solve did not converge")]
    NotConverged,

    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

fn element_suffix(element: Option<usize>) -> String {
    match element {
        Some(e) => format!(" in element {e}"),
        None => String::new(),
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
