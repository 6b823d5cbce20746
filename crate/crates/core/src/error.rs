use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong building accumulators, evaluating bounds,
/// or auditing a report. Operations never panic on bad numeric input; they
/// return one of these instead.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    /// An observation was NaN or infinite.
    #[error("non-finite observation: {0}")]
    NonFinite(f64),

    /// A non-finite value at a known position in an input sequence.
    #[error("non-finite observation at index {index}: {value}")]
    NonFiniteAt { index: usize, value: f64 },

    /// A statistic was requested from an accumulator with no observations.
    #[error("empty accumulator")]
    Empty,

    /// `remove` was called on an accumulator with no observations.
    #[error("remove from empty accumulator")]
    RemoveFromEmpty,

    /// More observations than the count field can represent.
    #[error("observation count overflow")]
    CountOverflow,

    /// An operation needs more observations than the input has.
    #[error("{what} requires n >= {min}, got {got}")]
    TooFew {
        what: &'static str,
        min: u64,
        got: u64,
    },

    /// A subset size incompatible with the full-sample size.
    #[error("subset size {size} out of range for n = {n}")]
    SubsetSize { size: u64, n: u64 },

    /// A rank outside `1..=n`.
    #[error("rank {k} out of range for n = {n}")]
    RankOutOfRange { k: u64, n: u64 },

    /// A positional index outside the input sequence.
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// The two indices of a pair operation must differ.
    #[error("pair indices must be distinct, both were {0}")]
    DuplicateIndex(usize),

    /// A field required by the operation is absent from the summary.
    #[error("summary is missing {0}")]
    MissingField(&'static str),

    /// Anything else that makes the input unusable (negative dispersion,
    /// inconsistent accumulator state, zero shard count, ...).
    #[error("invalid input: {0}")]
    Invalid(String),
}
