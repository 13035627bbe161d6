//! Error taxonomy shared by every module in the crate.
//!
//! Errors fall into two families: precondition/input failures (bad domains,
//! non-alternating values, singular systems, malformed files) and
//! optimization failures (a training run that diverged). The CLI maps the
//! former to exit code 2 and the latter to exit code 3.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The target function is constant on its domain (no alternation to
    /// exploit, nothing to construct).
    #[error("constant-function: target is constant on its domain (range {range:e} below tolerance)")]
    ConstantFunction {
        /// Observed value range on the scan grid.
        range: f64,
    },

    /// A value sequence satisfies neither alternation sign.
    #[error("not-alternating: value sequence alternates for neither sign (first violation at index {index})")]
    NotAlternating {
        /// Index `i` of the first pair `(f_i, f_{i+1})` violating both signs.
        index: usize,
    },

    /// A least-squares system was singular beyond the requested tolerance.
    #[error("singular-system: effective rank {effective_rank} of {cols} columns")]
    SingularSystem {
        /// Number of singular values above the cutoff.
        effective_rank: usize,
        /// Number of unknowns.
        cols: usize,
    },

    /// Inversion was asked for a value outside the range of the function on
    /// the given interval.
    #[error("out-of-range: y={y:e} outside function range [{lo:e}, {hi:e}] on the interval")]
    OutOfRange {
        /// Requested ordinate.
        y: f64,
        /// Smaller endpoint value.
        lo: f64,
        /// Larger endpoint value.
        hi: f64,
    },

    /// A function assumed monotone on an interval was found not to be.
    #[error("not-monotone: {0}")]
    NotMonotone(String),

    /// Refined extrema stopped alternating — an internal contradiction in
    /// critical-set detection.
    #[error("internal-consistency: {0}")]
    InternalConsistency(String),

    /// An iterative solve (Newton or fixed-point) failed to converge.
    #[error("convergence-failure: {context} (residual {residual:e} after {iterations} iterations)")]
    ConvergenceFailure {
        /// What was being solved.
        context: String,
        /// Final residual norm.
        residual: f64,
        /// Iterations performed.
        iterations: usize,
    },

    /// A piece's function values left the polynomial's range on its paired
    /// node interval — the piece pairing is wrong.
    #[error("range-mismatch: f(x)={value:e} outside p(J_{piece}) by {excess:e}")]
    RangeMismatch {
        /// Index of the offending piece.
        piece: usize,
        /// Function value that failed to invert.
        value: f64,
        /// Distance beyond the admissible range.
        excess: f64,
    },

    /// A function expected to have a single extremizer set does not.
    #[error("not-single-extremum: {0}")]
    NotSingleExtremum(String),

    /// A numeric quantity became non-finite.
    #[error("non-finite: {0}")]
    NonFinite(String),

    /// Training diverged (loss became non-finite). The report still carries
    /// the last finite snapshot.
    #[error("training-diverged: loss became non-finite at step {step}")]
    TrainingDiverged {
        /// Step at which the loss stopped being finite.
        step: usize,
    },

    /// Dataset generation removed every row (cutoff below the minimum).
    #[error("empty-dataset: cutoff {cutoff:e} removed all {total} rows")]
    EmptyDataset {
        /// Applied cutoff.
        cutoff: f64,
        /// Rows before filtering.
        total: usize,
    },

    /// Unknown benchmark target name.
    #[error("unknown-target: {0:?} (expected f1, f2, f3, f4, or pes)")]
    UnknownTarget(String),

    /// A dataset file failed to parse.
    #[error("parse-error at line {line}: {message}")]
    Parse {
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        message: String,
    },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// CSV reading failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable reason written into failure reports.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::ConstantFunction { .. } => "constant-function",
            Error::NotAlternating { .. } => "not-alternating",
            Error::SingularSystem { .. } => "singular-system",
            Error::OutOfRange { .. } => "out-of-range",
            Error::NotMonotone(_) => "not-monotone",
            Error::InternalConsistency(_) => "internal-consistency",
            Error::ConvergenceFailure { .. } => "convergence-failure",
            Error::RangeMismatch { .. } => "range-mismatch",
            Error::NotSingleExtremum(_) => "not-single-extremum",
            Error::NonFinite(_) => "non-finite",
            Error::TrainingDiverged { .. } => "training-diverged",
            Error::EmptyDataset { .. } => "empty-dataset",
            Error::UnknownTarget(_) => "unknown-target",
            Error::Parse { .. } => "parse-error",
            Error::Io(_) => "io-error",
            Error::Json(_) => "json-error",
            Error::Csv(_) => "csv-error",
        }
    }

    /// True for failures of the optimizer itself (CLI exit code 3); all
    /// other errors are input/precondition failures (exit code 2).
    pub fn is_optimization_failure(&self) -> bool {
        matches!(self, Error::TrainingDiverged { .. })
    }
}
