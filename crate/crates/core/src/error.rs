use std::path::PathBuf;

use thiserror::Error;

/// The constraint of the link-parameter polytope that a tuple violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaConstraint {
    /// `λ01 = 1`.
    Normalization,
    /// `0 ≤ λ10 ≤ λ00 ≤ λ11 ≤ λ01`.
    Heterophily,
    /// `λ10 + λ01 ≥ λ00 + λ11`.
    Submodularity,
    /// `2λ00 + λ10 − λ01 ≥ 0`.
    EdgeNonNegativity,
}

impl std::fmt::Display for LambdaConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LambdaConstraint::Normalization => "normalization (lambda01 = 1)",
            LambdaConstraint::Heterophily => {
                "heterophily/homophily (0 <= lambda10 <= lambda00 <= lambda11 <= lambda01)"
            }
            LambdaConstraint::Submodularity => {
                "submodularity (lambda10 + lambda01 >= lambda00 + lambda11)"
            }
            LambdaConstraint::EdgeNonNegativity => {
                "edge non-negativity (2*lambda00 + lambda10 - lambda01 >= 0)"
            }
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}: line {line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error("{source_name}: line {line}: negative weight {weight}")]
    NegativeWeight {
        source_name: String,
        line: u64,
        weight: f64,
    },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("invalid link parameters: violates {0}")]
    InvalidLambda(LambdaConstraint),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no prior score for node {0}")]
    MissingPrior(String),

    #[error("no opinion for forced-stubborn user {0}")]
    MissingOpinion(String),

    #[error("size mismatch: expected {expected} entries, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("negative capacity {value} on energy-graph edge {edge}")]
    NegativeCapacity { edge: String, value: f64 },

    #[error("sample is empty")]
    EmptySample,

    #[error("ground truth needs at least one positive and one negative")]
    SingleClass,

    #[error("missing score for labeled user {0}")]
    MissingScore(String),

    #[error("score {score} out of [0, 1] for {record}")]
    ScoreOutOfRange { record: String, score: f64 },

    #[error("equilibrium solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Vec<Option<f64>>,
    },

    #[error("no non-stubborn node is reachable from a stubborn node")]
    NoSolvableNodes { unreachable: usize },

    #[error("node {0} is not stubborn")]
    NotStubborn(String),

    #[error("unknown user {0}")]
    UnknownUser(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}
