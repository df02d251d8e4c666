use std::io;

use icm_core::scheduler::SchedulerError;
use icm_core::scoring::ScoringError;
use thiserror::Error;

use crate::session::SessionState;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown image {0}")]
    UnknownImage(String),
    #[error("unknown category {0}")]
    UnknownCategory(String),
    #[error("category {category} has {available} targets, {requested} requested")]
    InsufficientTargets {
        category: String,
        requested: usize,
        available: usize,
    },
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error("session {session} is {state}, not running")]
    SessionNotRunning {
        session: String,
        state: SessionState,
    },
    #[error("session {session} is {state}, not finished")]
    SessionNotFinished {
        session: String,
        state: SessionState,
    },
    #[error("session {session} cannot move from {from} to {to}")]
    InvalidTransition {
        session: String,
        from: SessionState,
        to: SessionState,
    },
    #[error("response at {timestamp_ms} ms falls after the last window of session {session}")]
    ResponseOutOfRange { session: String, timestamp_ms: u64 },
    #[error(
        "response at {timestamp_ms} ms is earlier than the previous response ({previous_ms} ms)"
    )]
    OutOfOrderResponse { timestamp_ms: u64, previous_ms: u64 },
    #[error("no qualified sessions to export")]
    NoQualifiedSessions,
    #[error("qualified sessions use different interval specs")]
    MixedIntervalSpecs,
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error("registry: {0}")]
    Registry(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}
