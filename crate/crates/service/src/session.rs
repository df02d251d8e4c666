//! Session state, rebuilt by folding event records.
//!
//! Live operations and crash recovery share [`Session::apply`]: the store
//! appends a record to the log and then applies it, and replay applies the
//! persisted records in order.

use std::fmt;

use icm_core::eventlog::{
    LogRecord, Phase, RecordType, ResponsePayload, StateChangePayload, StimulusPayload,
};
use icm_core::pipeline::EvaluationConfig;
use icm_core::scheduler::{
    plan_from_placements, IntervalSpec, SlotKind, StimulusImage, StimulusPlan, TargetPlacement,
};
use icm_core::scoring::{QcMonitor, QcVerdict, Timing};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

pub const DEFAULT_TARGETS: usize = 100;
const DEMO_TARGETS: usize = 6;
const DEMO_INTERVAL: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Created,
    Demo,
    Running,
    Finished,
    Disqualified,
}

impl SessionState {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Created => "created",
            Self::Demo => "demo",
            Self::Running => "running",
            Self::Finished => "finished",
            Self::Disqualified => "disqualified",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Self::Created,
            Self::Demo,
            Self::Running,
            Self::Finished,
            Self::Disqualified,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }

    pub fn can_move_to(self, next: Self) -> bool {
        matches!(
            (self, next),
            (Self::Created, Self::Demo)
                | (Self::Demo, Self::Running)
                | (Self::Running, Self::Finished)
                | (Self::Running, Self::Disqualified)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Finished | Self::Disqualified)
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub k: usize,
    pub intervals: IntervalSpec,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_TARGETS,
            intervals: IntervalSpec::default(),
            seed: 0,
        }
    }
}

/// One line of the store index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub category: String,
    pub created_at_ms: u64,
    pub config: SessionConfig,
}

/// Fixed mini-plan used for the guided demonstration: six targets shown in
/// slots 0-5 and repeated eight slots later, two foils in between.
pub fn demo_plan(category: &str) -> StimulusPlan {
    let placements: Vec<TargetPlacement> = (0..DEMO_TARGETS)
        .map(|i| TargetPlacement {
            image: StimulusImage::new(format!("demo-target-{}", i + 1), category),
            first_slot: i,
            interval: DEMO_INTERVAL,
        })
        .collect();
    let foils: Vec<StimulusImage> = (1..=DEMO_INTERVAL as usize - DEMO_TARGETS)
        .map(|i| StimulusImage::new(format!("demo-foil-{i}"), category))
        .collect();
    plan_from_placements(category, &placements, &foils, 0).expect("demo placements are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServedSlot {
    pub phase: Phase,
    pub slot_index: usize,
    pub image_id: icm_core::ImageId,
    pub display_ms: u64,
    pub blank_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndOfSequence {
    pub phase: Phase,
    pub end_of_sequence: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NextStimulus {
    Slot(ServedSlot),
    End(EndOfSequence),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub meta: SessionMeta,
    pub plan: StimulusPlan,
    pub demo_plan: StimulusPlan,
    pub state: SessionState,
    /// Next trial slot to serve.
    pub cursor: usize,
    pub demo_cursor: usize,
    pub verdict: Option<QcVerdict>,
    pub last_trial_response_ms: Option<u64>,
    pub last_server_timestamp_ms: u64,
    monitor: QcMonitor,
}

impl Session {
    pub fn new(meta: SessionMeta, plan: StimulusPlan, eval: &EvaluationConfig) -> Self {
        Self {
            demo_plan: demo_plan(&meta.category),
            meta,
            plan,
            state: SessionState::Created,
            cursor: 0,
            demo_cursor: 0,
            verdict: None,
            last_trial_response_ms: None,
            last_server_timestamp_ms: 0,
            monitor: QcMonitor::new(eval.qc, eval.timing),
        }
    }

    pub fn id(&self) -> &str {
        &self.meta.session_id
    }

    pub fn plan_for(&self, phase: Phase) -> &StimulusPlan {
        match phase {
            Phase::Demo => &self.demo_plan,
            Phase::Trial => &self.plan,
        }
    }

    pub fn active_phase(&self) -> Option<Phase> {
        match self.state {
            SessionState::Demo => Some(Phase::Demo),
            SessionState::Running => Some(Phase::Trial),
            _ => None,
        }
    }

    pub fn qc_monitor(&self) -> &QcMonitor {
        &self.monitor
    }

    /// Feedback for a press at `timestamp_ms`: correct iff the owning
    /// presentation is a repeat.
    pub fn feedback_for(
        &self,
        phase: Phase,
        timing: Timing,
        timestamp_ms: u64,
    ) -> Option<Feedback> {
        let slot = self.plan_for(phase).slot(timing.slot_at(timestamp_ms))?;
        Some(if slot.kind == SlotKind::TargetRepeat {
            Feedback::Correct
        } else {
            Feedback::Incorrect
        })
    }

    /// Folds one record into the state. Rejects records that are
    /// inconsistent with the current state.
    pub fn apply(&mut self, record: &LogRecord) -> Result<(), ServiceError> {
        let corrupt =
            |msg: String| ServiceError::Corrupt(format!("session {}: {msg}", record.session_id));
        if record.session_id != self.meta.session_id {
            return Err(corrupt("record for another session".into()));
        }
        match record.record_type {
            RecordType::StateChange => {
                let change: StateChangePayload =
                    record.payload_as().map_err(|e| corrupt(e.to_string()))?;
                let (from, to) = match (
                    SessionState::parse(&change.from),
                    SessionState::parse(&change.to),
                ) {
                    (Some(f), Some(t)) => (f, t),
                    _ => return Err(corrupt(format!("unknown state in {change:?}"))),
                };
                if from != self.state || !from.can_move_to(to) {
                    return Err(corrupt(format!(
                        "illegal transition {from} -> {to} from {}",
                        self.state
                    )));
                }
                self.state = to;
            }
            RecordType::StimulusServed => {
                let served: StimulusPayload =
                    record.payload_as().map_err(|e| corrupt(e.to_string()))?;
                if Some(served.phase) != self.active_phase() {
                    return Err(corrupt(format!(
                        "{:?} stimulus while {}",
                        served.phase, self.state
                    )));
                }
                if let Some(slot) = served.slot_index {
                    let cursor = match served.phase {
                        Phase::Demo => &mut self.demo_cursor,
                        Phase::Trial => &mut self.cursor,
                    };
                    if slot != *cursor {
                        return Err(corrupt(format!(
                            "served slot {slot} with cursor at {cursor}"
                        )));
                    }
                    *cursor += 1;
                }
            }
            RecordType::Response => {
                let response: ResponsePayload =
                    record.payload_as().map_err(|e| corrupt(e.to_string()))?;
                if Some(response.phase) != self.active_phase() {
                    return Err(corrupt(format!(
                        "{:?} response while {}",
                        response.phase, self.state
                    )));
                }
                if response.phase == Phase::Trial && response.key == icm_core::scoring::SPACE_KEY {
                    self.monitor
                        .observe(&self.plan, response.client_timestamp_ms);
                    self.last_trial_response_ms = Some(response.client_timestamp_ms);
                }
            }
            RecordType::Verdict => {
                self.verdict = Some(record.payload_as().map_err(|e| corrupt(e.to_string()))?);
            }
        }
        self.last_server_timestamp_ms = self
            .last_server_timestamp_ms
            .max(record.server_timestamp_ms);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use icm_core::scheduler::{validate_plan, IntervalSpec};

    #[test]
    fn demo_plan_is_valid() {
        let plan = demo_plan("teapot");
        assert_eq!(plan.len(), 14);
        assert_eq!(plan.targets().count(), 6);
        assert!(validate_plan(&plan, &IntervalSpec::default()).is_empty());
    }

    #[test]
    fn transitions() {
        use SessionState::*;
        assert!(Created.can_move_to(Demo));
        assert!(Demo.can_move_to(Running));
        assert!(Running.can_move_to(Finished));
        assert!(Running.can_move_to(Disqualified));
        assert!(!Created.can_move_to(Running));
        assert!(!Finished.can_move_to(Disqualified));
        assert!(!Disqualified.can_move_to(Running));
        for s in [Created, Demo, Running, Finished, Disqualified] {
            assert_eq!(SessionState::parse(s.as_str()), Some(s));
        }
    }

    #[test]
    fn apply_rejects_illegal_records() {
        let meta = SessionMeta {
            session_id: "s".into(),
            category: "c".into(),
            created_at_ms: 0,
            config: SessionConfig::default(),
        };
        let mut s = Session::new(
            meta,
            StimulusPlan::empty("c", 0),
            &EvaluationConfig::default(),
        );
        let jump = LogRecord::new(
            "s",
            RecordType::StateChange,
            &StateChangePayload {
                from: "created".into(),
                to: "running".into(),
            },
            1,
        );
        assert!(matches!(s.apply(&jump), Err(ServiceError::Corrupt(_))));
        let response = LogRecord::trial_response("s", 10, 1);
        assert!(s.apply(&response).is_err());
        assert!(s.apply(&LogRecord::trial_response("other", 10, 1)).is_err());
    }
}
