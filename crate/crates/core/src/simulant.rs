//! Seeded participant model with exponential interval decay.
//!
//! Recall of a repeat at interval `t` succeeds with probability
//! `clamp(base_recall * exp(-decay_rate * t) * m)`, where `m` is the image's
//! latent memorability. Every other presentation draws a false alarm with
//! probability `guess_rate`. The simulant exists to drive the scoring
//! pipeline with known ground truth.

use std::collections::BTreeMap;

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventlog::LogRecord;
use crate::ids::ImageId;
use crate::scheduler::{SlotKind, StimulusPlan};
use crate::scoring::{ResponseEvent, Timing};

/// Recall ceiling at zero interval.
pub const DEFAULT_BASE_RECALL: f64 = 1.0;
/// Gives recall of about 0.932 at seven slots.
pub const DEFAULT_DECAY_RATE: f64 = 0.01;
pub const DEFAULT_GUESS_RATE: f64 = 0.15;

#[derive(Debug, Error, PartialEq)]
pub enum SimulantError {
    #[error("image {0} has no latent memorability")]
    UnknownImage(ImageId),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    pub base_recall: f64,
    pub decay_rate: f64,
    pub guess_rate: f64,
    pub per_image_memorability: BTreeMap<ImageId, f64>,
}

impl DecayModel {
    pub fn new(per_image_memorability: BTreeMap<ImageId, f64>) -> Self {
        Self {
            base_recall: DEFAULT_BASE_RECALL,
            decay_rate: DEFAULT_DECAY_RATE,
            guess_rate: DEFAULT_GUESS_RATE,
            per_image_memorability,
        }
    }

    /// Default parameters with latent memorability drawn uniformly from
    /// `[low, high]` for each image.
    pub fn with_uniform_memorability<'a>(
        images: impl IntoIterator<Item = &'a ImageId>,
        low: f64,
        high: f64,
        seed: u64,
    ) -> Result<Self, SimulantError> {
        let dist = Uniform::new_inclusive(low, high)
            .map_err(|e| SimulantError::InvalidModel(format!("memorability range: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = Self::new(
            images
                .into_iter()
                .map(|id| (id.clone(), dist.sample(&mut rng)))
                .collect(),
        );
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), SimulantError> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SimulantError::InvalidModel(format!(
                    "{name} = {v} outside [0, 1]"
                )))
            }
        };
        unit("base_recall", self.base_recall)?;
        unit("guess_rate", self.guess_rate)?;
        if !(self.decay_rate >= 0.0 && self.decay_rate.is_finite()) {
            return Err(SimulantError::InvalidModel(format!(
                "decay_rate = {} must be finite and non-negative",
                self.decay_rate
            )));
        }
        for (id, &m) in &self.per_image_memorability {
            unit(&format!("memorability of {id}"), m)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimulantError> {
        let model: Self =
            serde_json::from_str(text).map_err(|e| SimulantError::InvalidModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }
}

pub fn recall_probability(
    model: &DecayModel,
    image: &ImageId,
    t: u32,
) -> Result<f64, SimulantError> {
    let m = model
        .per_image_memorability
        .get(image)
        .ok_or_else(|| SimulantError::UnknownImage(image.clone()))?;
    Ok((model.base_recall * (-model.decay_rate * f64::from(t)).exp() * m).clamp(0.0, 1.0))
}

/// Simulated presses for one session, in timestamp order. Each press lands
/// uniformly inside its slot's window.
pub fn simulate_session(
    plan: &StimulusPlan,
    model: &DecayModel,
    session_id: &str,
    timing: Timing,
    seed: u64,
) -> Result<Vec<ResponseEvent>, SimulantError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let intervals = plan.repeat_intervals();
    let mut events = Vec::new();
    for slot in &plan.slots {
        let p = match slot.kind {
            SlotKind::TargetRepeat => {
                let t = intervals.get(&slot.slot_index).copied().unwrap_or(0);
                recall_probability(model, &slot.image_id, t)?
            }
            _ => model.guess_rate,
        };
        let pressed = rng.random_bool(p);
        let offset = rng.random_range(0..timing.window_ms());
        if pressed {
            events.push(ResponseEvent::space(
                session_id,
                timing.window_start(slot.slot_index) + offset,
            ));
        }
    }
    Ok(events)
}

/// Response records in the persisted log format. The server timestamp
/// mirrors the client one.
pub fn to_records(events: &[ResponseEvent]) -> Vec<LogRecord> {
    events
        .iter()
        .map(|e| LogRecord::trial_response(e.session_id.clone(), e.timestamp_ms, e.timestamp_ms))
        .collect()
}
