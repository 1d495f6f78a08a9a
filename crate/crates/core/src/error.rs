use thiserror::Error;

/// Errors raised by operator construction, measurement assembly and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operator is not hermitian (defect {defect:.3e}, allowed {allowed:.3e})")]
    NotHermitian { defect: f64, allowed: f64 },

    #[error("eigenvalue {value:.3e} lies in the ambiguous band [{lo:.1e}, {hi:.1e}]; adjust the tolerance")]
    AmbiguousEigenvalue { value: f64, lo: f64, hi: f64 },

    #[error("operator has eigenvalue {0:.3e} below the PSD floor")]
    NotPositive(f64),

    #[error("invalid factor permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid space layout: {0}")]
    InvalidLayout(String),

    #[error("local dimension {0} is out of range")]
    InvalidDimension(usize),

    #[error("invalid priors ({eta1}, {eta2})")]
    InvalidPriors { eta1: f64, eta2: f64 },

    #[error("this construction requires eta1 <= eta2, got eta1 = {0}")]
    PriorOrder(f64),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("no-error condition violated: {which} has norm {norm:.3e}")]
    NoErrorViolated { which: &'static str, norm: f64 },

    #[error("infeasible separable coefficients: {constraint} = {value:.6} exceeds {bound}")]
    Infeasible {
        constraint: String,
        value: f64,
        bound: f64,
    },

    #[error("malformed protocol: {0}")]
    MalformedProtocol(String),

    #[error("trial {trial}: outcome probabilities sum to {sum:.12}")]
    ProbabilityLeak { trial: u64, sum: f64 },

    #[error("trial {trial}: sampled an outcome with vanishing post-measurement norm")]
    ZeroNormBranch { trial: u64 },

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
