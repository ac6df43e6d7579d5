use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}: need n >= 2")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("element {0} is zero")]
    DegenerateElement(usize),

    #[error("under-determined design: {outcomes} outcomes cannot estimate {unknowns} parameters")]
    UnderdeterminedDesign { outcomes: usize, unknowns: usize },

    #[error("design has {outcomes} outcomes; only exactly {expected} are supported for {unknowns} unknowns")]
    OvercompleteDesign { outcomes: usize, expected: usize, unknowns: usize },

    #[error("singular design: |det T| = {0:e}")]
    SingularDesign(f64),

    #[error("lambda_3 = 0: the measurement does not see the estimated direction")]
    NonEstimatingDirection,

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("outside the feasible domain: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("no feasible design found after {0} restarts")]
    Infeasible(usize),
}

impl Error {
    /// Stable machine-readable identifier, used in CLI reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid-dimension",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::InvalidState(_) => "invalid-state",
            Error::InvalidBasis(_) => "invalid-basis",
            Error::InvalidMeasurement(_) => "invalid-measurement",
            Error::DegenerateElement(_) => "degenerate-element",
            Error::UnderdeterminedDesign { .. } => "under-determined-design",
            Error::OvercompleteDesign { .. } => "overcomplete-design",
            Error::SingularDesign(_) => "singular-design",
            Error::NonEstimatingDirection => "non-estimating-direction",
            Error::InvalidProbability(_) => "invalid-probability",
            Error::InvalidPrior(_) => "invalid-prior",
            Error::Domain(_) => "domain",
            Error::InvalidParameters(_) => "invalid-parameters",
            Error::Infeasible(_) => "infeasible",
        }
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularDesign(_)
                | Error::Infeasible(_)
                | Error::UnderdeterminedDesign { .. }
                | Error::NonEstimatingDirection
                | Error::DegenerateElement(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
