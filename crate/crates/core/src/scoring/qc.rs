use serde::{Deserialize, Serialize};

use super::{PresentationOutcome, QcReason, QcVerdict, ResponseEvent, Timing};
use crate::scheduler::{SlotKind, StimulusPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcConfig {
    /// A run of pressed foils longer than this disqualifies.
    pub max_consecutive_foil_presses: usize,
    /// Any gap between presses (or from trial start to the first press)
    /// longer than this disqualifies.
    pub timeout_ms: u64,
}

impl Default for QcConfig {
    fn default() -> Self {
        Self {
            max_consecutive_foil_presses: 3,
            timeout_ms: 60_000,
        }
    }
}

/// Offline quality control over a finished session.
///
/// Foil runs are counted over the foil presentations only; target slots
/// neither extend nor break a run. When both rules fire the one that fired
/// earlier in trial time wins.
pub fn qc_participant(
    session_id: &str,
    outcomes: &[PresentationOutcome],
    events: &[ResponseEvent],
    config: &QcConfig,
    timing: Timing,
) -> QcVerdict {
    let mut run = 0;
    let mut foil_trigger = None;
    for o in outcomes.iter().filter(|o| o.kind == SlotKind::Foil) {
        if !o.pressed {
            run = 0;
            continue;
        }
        run += 1;
        if run > config.max_consecutive_foil_presses {
            foil_trigger =
                Some(timing.window_start(o.slot_index) + o.reaction_time_ms.unwrap_or(0));
            break;
        }
    }

    let mut stamps: Vec<u64> = events
        .iter()
        .filter(|e| e.is_space())
        .map(|e| e.timestamp_ms)
        .collect();
    stamps.sort_unstable();
    let mut previous = 0;
    let mut timeout_trigger = None;
    for ts in stamps {
        if ts - previous > config.timeout_ms {
            timeout_trigger = Some(previous + config.timeout_ms);
            break;
        }
        previous = ts;
    }

    let reason = match (foil_trigger, timeout_trigger) {
        (Some(f), Some(t)) if t < f => QcReason::ResponseTimeout,
        (Some(_), _) => QcReason::ConsecutiveFoilMisidentification,
        (None, Some(_)) => QcReason::ResponseTimeout,
        (None, None) => QcReason::None,
    };
    QcVerdict::new(session_id, reason)
}

/// Incremental form of [`qc_participant`] for live sessions. Fed presses in
/// timestamp order, it reports the first rule that fires; its final state
/// always agrees with the offline verdict over the same presses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcMonitor {
    config: QcConfig,
    timing: Timing,
    last_timestamp: u64,
    last_pressed_slot: Option<usize>,
    last_pressed_foil: Option<usize>,
    foil_run: usize,
    verdict: Option<QcReason>,
}

impl QcMonitor {
    pub fn new(config: QcConfig, timing: Timing) -> Self {
        Self {
            config,
            timing,
            last_timestamp: 0,
            last_pressed_slot: None,
            last_pressed_foil: None,
            foil_run: 0,
            verdict: None,
        }
    }

    pub fn verdict(&self) -> Option<QcReason> {
        self.verdict
    }

    /// Records a press. Returns the disqualifying reason the first time a
    /// rule fires; later presses are ignored.
    pub fn observe(&mut self, plan: &StimulusPlan, timestamp_ms: u64) -> Option<QcReason> {
        if self.verdict.is_some() {
            return None;
        }
        if timestamp_ms.saturating_sub(self.last_timestamp) > self.config.timeout_ms {
            self.verdict = Some(QcReason::ResponseTimeout);
            return self.verdict;
        }
        self.last_timestamp = self.last_timestamp.max(timestamp_ms);

        let slot = self.timing.slot_at(timestamp_ms);
        if self.last_pressed_slot == Some(slot) {
            return None;
        }
        self.last_pressed_slot = Some(slot);
        if plan.slot(slot).map(|s| s.kind) != Some(SlotKind::Foil) {
            return None;
        }

        let from = self.last_pressed_foil.map_or(0, |s| s + 1);
        let skipped_foil = plan.slots[from..slot]
            .iter()
            .any(|s| s.kind == SlotKind::Foil);
        self.foil_run = if skipped_foil || self.last_pressed_foil.is_none() {
            1
        } else {
            self.foil_run + 1
        };
        self.last_pressed_foil = Some(slot);

        if self.foil_run > self.config.max_consecutive_foil_presses {
            self.verdict = Some(QcReason::ConsecutiveFoilMisidentification);
        }
        self.verdict
    }
}
