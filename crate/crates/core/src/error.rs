use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("infinite product does not converge for |q| = {0}")]
    NonConvergent(f64),
    #[error("degenerate denominator at term {term} (|factor| = {modulus:e})")]
    DegenerateDenominator { term: usize, modulus: f64 },
    #[error("degenerate grid point: {0}")]
    DegenerateGridPoint(String),
    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),
    #[error("value is not q^(2m) for a natural m: {0}")]
    NonIntegerDualIndex(String),
    #[error("invalid spins: {0}")]
    InvalidSpins(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("rho must be nonzero")]
    ZeroRho,
    #[error("matrix is not diagonalizable (defect {0:e})")]
    NotDiagonalizable(f64),
    #[error("spectrum fits several cases: {0}")]
    AmbiguousFit(String),
    #[error("parameter sequence cannot be reduced: {0}")]
    NotReducible(String),
    #[error("vanishing eigenvalue gap in ladder operator at level {0}")]
    DegenerateGap(usize),
    #[error("degenerate prefactor: {0}")]
    DegeneratePrefactor(String),
    #[error("parameter conditions violated: {0}")]
    ConditionViolation(String),
    #[error("ill-conditioned Gram matrix: {0}")]
    IllConditionedGram(String),
    #[error("eigensolver failure: {0}")]
    EigensolverFailure(String),
    #[error("recurrence breaks down at step {0}")]
    BreakdownAtStep(usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
