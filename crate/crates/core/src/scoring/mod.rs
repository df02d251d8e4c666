//! From raw keypresses to per-image memorability scores.
//!
//! Presentation `k` owns the half-open window
//! `[k * (display + blank), (k + 1) * (display + blank))`; a press anywhere
//! in that window counts for that presentation. Only repeat presentations
//! feed an image's score. Presses on first presentations and foils are false
//! positives and matter for quality control and the false-positive rate.

mod attribute;
mod icm;
mod io;
mod qc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::ImageId;
use crate::scheduler::SlotKind;

pub use attribute::{attribute_responses, false_positive_rate, Attribution};
pub use icm::{aggregate_scores, score_image, ExcludedImage, ScoreTable, SessionOutcomes};
pub use io::{read_scores_csv, write_outcomes_jsonl, write_scores_csv, SCORE_CSV_HEADER};
pub use qc::{qc_participant, QcConfig, QcMonitor};

/// The only key that signals recognition.
pub const SPACE_KEY: &str = "space";

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("no repeat responses to score")]
    NoResponses,
    #[error("outcomes mix images {0} and {1}")]
    MixedImages(ImageId, ImageId),
    #[error("slot {slot} of image {image} is not a repeat presentation")]
    NotARepeat { image: ImageId, slot: usize },
    #[error(
        "repeat at slot {slot} of image {image} has interval {interval:?} outside the allowed set"
    )]
    IntervalNotAllowed {
        image: ImageId,
        slot: usize,
        interval: Option<u32>,
    },
    #[error("malformed score table: {0}")]
    MalformedScores(String),
}

/// A participant keypress, timestamped in milliseconds since trial start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseEvent {
    pub session_id: String,
    pub timestamp_ms: u64,
    pub key: String,
}

impl ResponseEvent {
    pub fn space(session_id: impl Into<String>, timestamp_ms: u64) -> Self {
        Self {
            session_id: session_id.into(),
            timestamp_ms,
            key: SPACE_KEY.to_owned(),
        }
    }

    pub fn is_space(&self) -> bool {
        self.key == SPACE_KEY
    }
}

/// Presentation timing of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub display_ms: u64,
    pub blank_ms: u64,
}

impl Timing {
    pub const fn window_ms(&self) -> u64 {
        self.display_ms + self.blank_ms
    }

    pub const fn window_start(&self, slot: usize) -> u64 {
        slot as u64 * self.window_ms()
    }

    /// Slot whose window contains `timestamp_ms`.
    pub const fn slot_at(&self, timestamp_ms: u64) -> usize {
        (timestamp_ms / self.window_ms()) as usize
    }
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            display_ms: 1200,
            blank_ms: 1600,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Hit,
    Miss,
    FalsePositive,
    CorrectRejection,
}

impl Outcome {
    pub fn classify(kind: SlotKind, pressed: bool) -> Self {
        match (kind, pressed) {
            (SlotKind::TargetRepeat, true) => Self::Hit,
            (SlotKind::TargetRepeat, false) => Self::Miss,
            (_, true) => Self::FalsePositive,
            (_, false) => Self::CorrectRejection,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationOutcome {
    pub image_id: ImageId,
    pub slot_index: usize,
    pub kind: SlotKind,
    pub pressed: bool,
    pub outcome: Outcome,
    /// Set only on repeat presentations.
    pub interval: Option<u32>,
    pub reaction_time_ms: Option<u64>,
}

/// Aggregated score of one target image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub image_id: ImageId,
    pub category: String,
    pub icmscore: f64,
    pub icmscore_no_penalty: f64,
    pub n_responses: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QcReason {
    None,
    ConsecutiveFoilMisidentification,
    ResponseTimeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcVerdict {
    pub session_id: String,
    pub qualified: bool,
    pub reason: QcReason,
}

impl QcVerdict {
    pub fn new(session_id: impl Into<String>, reason: QcReason) -> Self {
        Self {
            session_id: session_id.into(),
            qualified: reason == QcReason::None,
            reason,
        }
    }
}
