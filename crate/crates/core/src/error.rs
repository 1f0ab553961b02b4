use thiserror::Error;

use crate::coupling::threshold::Probe;

pub type Result<T> = std::result::Result<T, Error>;

/// How a Picard run failed to settle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NonConvergence {
    /// Step sizes stay bounded but do not shrink below tolerance.
    Oscillating,
    /// Iterates run away: growing steps or phase differences pinned at the clamp.
    Diverging,
}

impl std::fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NonConvergence::Oscillating => f.write_str("oscillating"),
            NonConvergence::Diverging => f.write_str("diverging"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("edge ({u}, {v}) references a vertex outside 0..{n}")]
    VertexOutOfRange { u: usize, v: usize, n: usize },

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("graph is not a tree ({edges} edges on {vertices} vertices)")]
    NotATree { vertices: usize, edges: usize },

    #[error("edge list parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("edge weight {index} is not strictly positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("phase difference {index} = {value} lies outside (-pi, pi)")]
    PhaseOutOfRange { index: usize, value: f64 },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not square: {0} x {1}")]
    NotSquare(usize, usize),

    #[error("Laplacian kernel has dimension {0}, expected 1")]
    SingularBeyondKernel(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration blew up at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("trace too short: {found} samples in tail, need at least {needed}")]
    TraceTooShort { found: usize, needed: usize },

    #[error("fixed-point iteration did not converge after {iterations} iterations ({kind}, last step {last_step:e})")]
    FixedPointNotConverged {
        kind: NonConvergence,
        iterations: usize,
        last_step: f64,
    },

    #[error("synchronization oracle is not monotone in K over the probed range")]
    NonMonotoneOracle { probes: Vec<Probe> },

    #[error("threshold search precondition violated: {0}")]
    BracketInvalid(String),
}
