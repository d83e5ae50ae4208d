use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown leg `{0}`")]
    UnknownLeg(String),
    #[error("duplicate leg `{0}`")]
    DuplicateLeg(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("not a partition of the tensor legs: {0}")]
    InvalidPartition(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("unsupported plaquette: {0}")]
    UnsupportedPlaquette(String),
    #[error("polynomial tensor is identically zero")]
    ZeroPolynomial,
    #[error("leading term mismatch: {0}")]
    LeadingMismatch(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("shift would leave a pole: {0}")]
    Pole(String),
    #[error("duplicate interpolation point {0}")]
    DuplicatePoint(String),
    #[error("interpolation points must be nonzero")]
    ZeroPoint,
    #[error("not enough interpolation points: {0}")]
    InsufficientPoints(String),
    #[error("interpolation degree underestimated: {0}")]
    DegreeUnderestimate(String),
    #[error("empty solution set: {0}")]
    EmptySolutionSet(String),
    #[error("network mismatch: {0}")]
    NetworkMismatch(String),
    #[error("certificate check failed: {0}")]
    Certificate(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownLeg(_) => "unknown_leg",
            Error::DuplicateLeg(_) => "duplicate_leg",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::InvalidTensor(_) => "invalid_tensor",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidStructure(_) => "invalid_structure",
            Error::UnsupportedPlaquette(_) => "unsupported_plaquette",
            Error::ZeroPolynomial => "zero_polynomial",
            Error::LeadingMismatch(_) => "leading_mismatch",
            Error::BudgetExceeded(_) => "budget_exceeded",
            Error::Pole(_) => "pole",
            Error::DuplicatePoint(_) => "duplicate_point",
            Error::ZeroPoint => "zero_point",
            Error::InsufficientPoints(_) => "insufficient_points",
            Error::DegreeUnderestimate(_) => "degree_underestimate",
            Error::EmptySolutionSet(_) => "empty_solution_set",
            Error::NetworkMismatch(_) => "network_mismatch",
            Error::Certificate(_) => "certificate",
            Error::Json(_) => "malformed_json",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
