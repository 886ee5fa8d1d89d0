use thiserror::Error;

/// Errors raised by the signing, distillation and verification routines.
///
/// A verification that merely fails returns `Ok(false)`; the variants here
/// are reserved for malformed inputs and inconsistent state.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("expected {expected} bytes, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("node ({depth}, {index}) is outside the subtree of the source node")]
    OutsideSubtree { depth: u8, index: u32 },

    #[error("seed tree exhausted: epoch {epoch} >= {capacity}")]
    Exhausted { epoch: u64, capacity: u64 },

    #[error("epoch {0} has not been disclosed yet")]
    Undisclosed(u32),

    #[error("out-of-sequence input: expected {expected}, got {actual}")]
    Sequence { expected: u64, actual: u64 },

    #[error("batch for epoch {epoch} holds {actual} entries, expected {expected}")]
    BatchSize {
        epoch: u32,
        expected: usize,
        actual: usize,
    },

    #[error("no commitment available for epoch {0}")]
    MissingCommitment(u32),

    #[error("entry of {len} bytes exceeds the modular-addition hash bound")]
    Unsupported { len: usize },

    #[error("invalid encoding: {0}")]
    Encoding(&'static str),

    #[error("state error: {0}")]
    State(&'static str),

    #[error("worker count must be positive")]
    Workers,

    #[error("log holds no entries for epoch {0}")]
    MissingMessages(u32),

    #[error("entropy source failed")]
    Entropy,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
