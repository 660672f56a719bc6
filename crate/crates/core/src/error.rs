use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the pattern algebra, the closed forms, the simulator
/// and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("receiver index {index} outside 1..={receivers}")]
    ReceiverOutOfRange { index: usize, receivers: usize },

    #[error("receiver count {0} outside 1..=64")]
    ReceiverCount(usize),

    #[error("at least two receivers are required, got {0}")]
    TooFewReceivers(usize),

    #[error("pattern has {got} entries but {expected} receivers are configured")]
    LengthMismatch { expected: usize, got: usize },

    #[error("a code group needs between 2 and {max} members, got {got}")]
    GroupSize { max: usize, got: usize },

    #[error("destination set is empty")]
    EmptyDestinations,

    #[error("loss pattern {pattern} already holds an intended receiver")]
    IntendedHeld { pattern: String },

    #[error("erasure probability {0} outside [0, 1)")]
    InvalidLossRate(f64),

    #[error("bit error rate {0} outside [0, 1]")]
    InvalidBer(f64),

    #[error("loss rates must be sorted ascending (entry {index} is smaller than its predecessor)")]
    Unsorted { index: usize },

    #[error("channel is lossless-degenerate: every zero receiver erases with probability 1")]
    DegenerateChannel,

    #[error("domination hypotheses violated: {0}")]
    Hypothesis(&'static str),

    #[error("{receivers} receivers exceeds the flow-solver limit of {max}")]
    FlowSolverLimit { receivers: usize, max: usize },

    #[error("scheme B bitmap window of {window} packets cannot hold sequences {low}..={high} for receiver {receiver}")]
    OutsideWindow {
        receiver: usize,
        low: u32,
        high: u32,
        window: u32,
    },

    #[error("feedback covers {got} receivers but the trial has {expected}")]
    FeedbackLength { expected: usize, got: usize },

    #[error("round cap of {cap} exceeded with {outstanding} packets still queued")]
    RoundCap { cap: u64, outstanding: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Grid {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot read {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {source}")]
    ParseConfig {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
