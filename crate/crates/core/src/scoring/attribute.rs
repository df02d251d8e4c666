use log::warn;

use super::{Outcome, PresentationOutcome, ResponseEvent, Timing};
use crate::scheduler::{SlotKind, StimulusPlan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribution {
    /// Exactly one outcome per plan slot, in slot order.
    pub outcomes: Vec<PresentationOutcome>,
    /// Presses past the last window.
    pub dropped: Vec<ResponseEvent>,
}

pub fn attribute_responses(
    plan: &StimulusPlan,
    events: &[ResponseEvent],
    timing: Timing,
) -> Attribution {
    let mut first_press: Vec<Option<u64>> = vec![None; plan.len()];
    let mut dropped = Vec::new();

    for event in events.iter().filter(|e| e.is_space()) {
        let slot = timing.slot_at(event.timestamp_ms);
        match first_press.get_mut(slot) {
            Some(press) => {
                *press = Some(press.map_or(event.timestamp_ms, |p| p.min(event.timestamp_ms)));
            }
            None => {
                warn!(
                    "session {}: press at {} ms is past the last window, dropped",
                    event.session_id, event.timestamp_ms
                );
                dropped.push(event.clone());
            }
        }
    }

    let intervals = plan.repeat_intervals();
    let outcomes = plan
        .slots
        .iter()
        .zip(first_press)
        .map(|(slot, press)| {
            let pressed = press.is_some();
            PresentationOutcome {
                image_id: slot.image_id.clone(),
                slot_index: slot.slot_index,
                kind: slot.kind,
                pressed,
                outcome: Outcome::classify(slot.kind, pressed),
                interval: match slot.kind {
                    SlotKind::TargetRepeat => intervals.get(&slot.slot_index).copied(),
                    _ => None,
                },
                reaction_time_ms: press.map(|p| p - timing.window_start(slot.slot_index)),
            }
        })
        .collect();

    Attribution { outcomes, dropped }
}

/// False positives over non-repeat presentations; 0 when there are none.
pub fn false_positive_rate(outcomes: &[PresentationOutcome]) -> f64 {
    let (fp, total) = outcomes
        .iter()
        .filter(|o| o.kind != SlotKind::TargetRepeat)
        .fold((0usize, 0usize), |(fp, n), o| {
            (fp + usize::from(o.outcome == Outcome::FalsePositive), n + 1)
        });
    if total == 0 {
        0.0
    } else {
        fp as f64 / total as f64
    }
}
