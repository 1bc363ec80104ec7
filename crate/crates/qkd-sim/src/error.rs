//! Error types shared across the simulator.

use thiserror::Error;

/// Everything that can go wrong while simulating a link or running a protocol.
///
/// Variants split into two families: hard usage errors (bad parameters,
/// malformed topologies) and protocol aborts (conditions a real deployment
/// would abort a session on, such as an excessive error rate or an exhausted
/// key bank). [`Error::is_protocol_abort`] distinguishes them so callers can
/// map them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("no detections recorded; error rate is undefined")]
    NoDetections,

    #[error("an empty sequence was requested")]
    EmptySequence,

    #[error("sequence lengths differ ({left} vs {right}); parties are out of sync")]
    ProtocolDesync { left: usize, right: usize },

    #[error("sampling {requested} bits would exhaust the {available}-bit key")]
    InsufficientKey { requested: usize, available: usize },

    #[error("measured QBER {measured:.4} exceeds the correction threshold {threshold:.4}")]
    QberTooHigh { measured: f64, threshold: f64 },

    #[error("error correction failed verification after {passes} passes")]
    CorrectionFailed { passes: usize },

    #[error("error correction exceeded its search budget ({budget} searches)")]
    CorrectionBudgetExceeded { budget: usize },

    #[error("key bank exhausted on link {link}: need {needed} bits, have {available}")]
    KeyExhausted {
        link: String,
        needed: usize,
        available: usize,
    },

    #[error("no route between cells {from} and {to}")]
    NoRoute { from: String, to: String },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("unknown node: {0}")]
    UnknownNode(String),

    #[error("key stage cannot move from {from} back to {to}")]
    StageRegression { from: String, to: String },
}

impl Error {
    /// True for conditions that abort an otherwise well-formed protocol run,
    /// as opposed to caller mistakes.
    pub fn is_protocol_abort(&self) -> bool {
        matches!(
            self,
            Error::QberTooHigh { .. }
                | Error::CorrectionFailed { .. }
                | Error::CorrectionBudgetExceeded { .. }
                | Error::KeyExhausted { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
