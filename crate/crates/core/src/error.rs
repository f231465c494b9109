use thiserror::Error;

/// Failure of a linear or nonlinear solve inside a time step.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("linear solve did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("director collapsed before renormalization: |d| = {min_norm:.3e} at cell ({i}, {j})")]
    RenormalizationBreakdown { min_norm: f64, i: usize, j: usize },

    #[error("picard iteration diverged: contraction ratio {ratio:.3} at inner iteration {iteration}")]
    PicardDivergence { ratio: f64, iteration: usize },

    #[error("picard iteration did not reach tolerance: difference {difference:.3e} after {iterations} iterations")]
    PicardNonConvergence { difference: f64, iterations: usize },

    #[error("director left the unit sphere: max ||d| - 1| = {deviation:.3e}")]
    UnitLength { deviation: f64 },

    #[error("non-finite value produced by {stage}")]
    NonFinite { stage: &'static str },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Failure while reading or validating a run configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("parse error at `{key}`: {reason}")]
    Parse { key: String, reason: String },

    #[error("invalid value for `{key}`: {constraint}")]
    Validation { key: String, constraint: String },
}

/// Failure while reading or writing a checkpoint.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),

    #[error("not a checkpoint: magic bytes {found:?}")]
    Magic { found: [u8; 4] },

    #[error("checkpoint version mismatch: expected {expected}, found {found}")]
    Version { expected: u32, found: u32 },

    #[error("checkpoint grid mismatch: expected {expected:?}, found {found:?}")]
    Dimensions { expected: (usize, usize), found: (usize, usize) },

    #[error("checkpoint truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("checkpoint has {0} unexpected trailing bytes")]
    Trailing(usize),
}

/// Invalid argument to a norm evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("exponent `{name}` = {value} is outside its admissible range ({constraint})")]
    Exponent { name: &'static str, value: f64, constraint: &'static str },

    #[error("derivative order {0} is not supported (at most 3)")]
    Order(usize),

    #[error("need at least {needed} time samples, got {got}")]
    Samples { needed: usize, got: usize },
}
