use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },

    #[error("KernelEmpty: smallest singular value {sigma_min:e} of the characteristic matrix at {lambda} is above tolerance")]
    KernelEmpty { lambda: Complex64, sigma_min: f64 },

    #[error("NotSpectrallyControllableAt: <b, y> vanishes at eigenvalue {lambda}")]
    NotSpectrallyControllableAt { lambda: Complex64 },

    #[error("NonConvergence: {0}")]
    NonConvergence(String),

    #[error("CollidingSeeds: seeds {first} and {second} coincide")]
    CollidingSeeds { first: Complex64, second: Complex64 },

    #[error("TooFewSeeds: at least two seeds are needed to define the circle radius")]
    TooFewSeeds,

    #[error("BoundaryZero: characteristic determinant vanishes near {at} on the contour")]
    BoundaryZero { at: Complex64 },

    #[error("NotControllablePair: rank test fails at eigenvalue {witness}")]
    NotControllablePair { witness: Complex64 },

    #[error("PlacementIllConditioned: controllability matrix condition number {cond:e}")]
    PlacementIllConditioned { cond: f64 },

    #[error("MultipleEigenvalue: {lambda} has multiplicity {multiplicity}")]
    MultipleEigenvalue { lambda: Complex64, multiplicity: usize },

    #[error("SingularPairSystem: coefficient system for family member {index} is singular")]
    SingularPairSystem { index: i64 },

    #[error("IllConditioned: effective rank {effective_rank} of {size}, moment residual {residual:e}")]
    IllConditioned { effective_rank: usize, size: usize, residual: f64 },

    #[error("HorizonTooShort: horizon {horizon} must exceed the state dimension {n}")]
    HorizonTooShort { horizon: f64, n: usize },

    #[error("TruncationDiverging: partial sums grew by {factor:e} over the last terms")]
    TruncationDiverging { factor: f64 },

    #[error("SimpleSpectrumViolated: clustered eigenvalues {clusters:?}")]
    SimpleSpectrumViolated { clusters: Vec<Complex64> },

    #[error("IncompatibleGrid: {0}")]
    IncompatibleGrid(String),

    #[error("NonSmoothHistory: the neutral path needs a history flagged as differentiable")]
    NonSmoothHistory,

    #[error("HorizonShort: trajectory ends at {available}, verification needs {required}")]
    HorizonShort { available: f64, required: f64 },

    #[error("Unsupported: {0}")]
    Unsupported(String),
}
