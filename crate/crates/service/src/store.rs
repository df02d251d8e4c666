//! Thread-safe session store.
//!
//! Each session sits behind its own mutex, so requests for different
//! sessions never contend. Every mutation is written to the session's event
//! log before it is applied in memory; a store reopened from disk replays the
//! logs through the same [`Session::apply`] and ends up in the same state.

use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use icm_core::eventlog::{
    trial_responses, LogRecord, Phase, RecordType, ResponsePayload, StateChangePayload,
    StimulusPayload,
};
use icm_core::pipeline::{evaluate_session, EvaluationConfig};
use icm_core::scheduler::{plan_sequence, IntervalSpec, StimulusPlan};
use icm_core::scoring::{
    aggregate_scores, write_outcomes_jsonl, write_scores_csv, ExcludedImage, PresentationOutcome,
    QcReason, QcVerdict, ResponseEvent, SessionOutcomes, SPACE_KEY,
};
use parking_lot::{Mutex, RwLock};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::{Clock, SystemClock};
use crate::error::ServiceError;
use crate::persist;
use crate::registry::{ImageRegistry, Role};
use crate::session::{
    EndOfSequence, Feedback, NextStimulus, ServedSlot, Session, SessionConfig, SessionMeta,
    SessionState,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub category: String,
    pub state: SessionState,
    pub config: SessionConfig,
    pub trial_length: usize,
    pub demo_length: usize,
    pub cursor: usize,
    pub demo_cursor: usize,
    pub verdict: Option<QcVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseAck {
    pub feedback: Feedback,
    pub state: SessionState,
    /// Set when this press disqualified the session.
    pub disqualified: Option<QcReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalizedSession {
    pub qc: QcVerdict,
    pub outcomes: Vec<PresentationOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedDataset {
    pub sessions: Vec<String>,
    pub scores_csv: String,
    pub outcomes_jsonl: String,
    pub excluded: Vec<ExcludedImage>,
}

struct Entry {
    session: Session,
    records: Vec<LogRecord>,
    log: Option<File>,
}

#[derive(Default)]
struct Sessions {
    map: HashMap<String, Arc<Mutex<Entry>>>,
    order: Vec<String>,
}

pub struct SessionStore {
    registry: ImageRegistry,
    eval: EvaluationConfig,
    clock: Arc<dyn Clock>,
    dir: Option<PathBuf>,
    sessions: RwLock<Sessions>,
    index: Mutex<Option<File>>,
    next_id: AtomicU64,
}

impl SessionStore {
    /// Store that lives only in memory.
    pub fn in_memory(registry: ImageRegistry, eval: EvaluationConfig) -> Self {
        Self {
            registry,
            eval,
            clock: Arc::new(SystemClock),
            dir: None,
            sessions: RwLock::default(),
            index: Mutex::new(None),
            next_id: AtomicU64::new(0),
        }
    }

    /// Opens (or creates) a store in `dir`, replaying any existing sessions.
    pub fn open(
        dir: &Path,
        registry: ImageRegistry,
        eval: EvaluationConfig,
    ) -> Result<Self, ServiceError> {
        persist::ensure_layout(dir)?;
        let metas = persist::read_index(dir)?;
        let mut sessions = Sessions::default();
        for meta in metas {
            let id = meta.session_id.clone();
            let plan = persist::read_plan(dir, &id)?;
            let records = persist::read_events(dir, &id)?;
            let mut session = Session::new(meta, plan, &eval);
            for r in &records {
                session.apply(r)?;
            }
            let log = persist::open_append(&persist::events_path(dir, &id))?;
            if sessions.map.contains_key(&id) {
                return Err(ServiceError::Corrupt(format!("session {id} indexed twice")));
            }
            sessions.order.push(id.clone());
            sessions.map.insert(
                id,
                Arc::new(Mutex::new(Entry {
                    session,
                    records,
                    log: Some(log),
                })),
            );
        }
        log::info!(
            "opened store {} with {} sessions",
            dir.display(),
            sessions.order.len()
        );
        let count = sessions.order.len() as u64;
        Ok(Self {
            registry,
            eval,
            clock: Arc::new(SystemClock),
            dir: Some(dir.to_owned()),
            sessions: RwLock::new(sessions),
            index: Mutex::new(Some(persist::open_append(&persist::index_path(dir))?)),
            next_id: AtomicU64::new(count),
        })
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn evaluation(&self) -> &EvaluationConfig {
        &self.eval
    }

    pub fn registry(&self) -> &ImageRegistry {
        &self.registry
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.read().order.clone()
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, ServiceError> {
        self.sessions
            .read()
            .map
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_owned()))
    }

    fn fresh_id(&self) -> String {
        let n = self.next_id.fetch_add(1, Ordering::SeqCst);
        format!("s{n:05}-{:08x}", rand::random::<u32>())
    }

    pub fn create_session(
        &self,
        category: &str,
        config: SessionConfig,
    ) -> Result<SessionSummary, ServiceError> {
        let plan = build_plan(&self.registry, category, &config)?;

        let id = self.fresh_id();
        let meta = SessionMeta {
            session_id: id.clone(),
            category: category.to_owned(),
            created_at_ms: self.clock.now_ms(),
            config,
        };
        let log = match &self.dir {
            Some(dir) => {
                persist::write_plan(dir, &id, &plan)?;
                let log = persist::open_append(&persist::events_path(dir, &id))?;
                // The index line is the commit point for a new session.
                let line = format!(
                    "{}\n",
                    serde_json::to_string(&meta).expect("meta serialises")
                );
                persist::append_line(self.index.lock().as_mut().expect("index open"), &line)?;
                Some(log)
            }
            None => None,
        };
        let session = Session::new(meta, plan, &self.eval);
        let summary = summarize(&session);
        let mut sessions = self.sessions.write();
        sessions.order.push(id.clone());
        sessions.map.insert(
            id,
            Arc::new(Mutex::new(Entry {
                session,
                records: Vec::new(),
                log,
            })),
        );
        log::info!(
            "created session {} ({category}, {} slots)",
            summary.session_id,
            summary.trial_length
        );
        Ok(summary)
    }

    pub fn summary(&self, id: &str) -> Result<SessionSummary, ServiceError> {
        Ok(summarize(&self.entry(id)?.lock().session))
    }

    /// Trial plan of a session, for offline re-scoring.
    pub fn plan(&self, id: &str) -> Result<StimulusPlan, ServiceError> {
        Ok(self.entry(id)?.lock().session.plan.clone())
    }

    pub fn records(&self, id: &str) -> Result<Vec<LogRecord>, ServiceError> {
        Ok(self.entry(id)?.lock().records.clone())
    }

    /// Every record of every session, sessions in creation order.
    pub fn all_records(&self) -> Vec<LogRecord> {
        let entries: Vec<_> = {
            let s = self.sessions.read();
            s.order.iter().map(|id| s.map[id].clone()).collect()
        };
        entries
            .iter()
            .flat_map(|e| e.lock().records.clone())
            .collect()
    }

    pub fn begin_demo(&self, id: &str) -> Result<SessionSummary, ServiceError> {
        self.transition(id, SessionState::Created, SessionState::Demo)
    }

    /// Starts the trial phase, skipping whatever is left of the demo.
    pub fn begin_trial(&self, id: &str) -> Result<SessionSummary, ServiceError> {
        self.transition(id, SessionState::Demo, SessionState::Running)
    }

    fn transition(
        &self,
        id: &str,
        from: SessionState,
        to: SessionState,
    ) -> Result<SessionSummary, ServiceError> {
        let entry = self.entry(id)?;
        let mut e = entry.lock();
        if e.session.state != from {
            return Err(ServiceError::InvalidTransition {
                session: id.to_owned(),
                from: e.session.state,
                to,
            });
        }
        self.commit(&mut e, state_change(id, from, to))?;
        Ok(summarize(&e.session))
    }

    /// Serves the next slot of the active phase. Past the last slot it
    /// returns an end marker and advances the state: the demo hands over to
    /// the trial, the trial finishes.
    pub fn next_stimulus(&self, id: &str) -> Result<NextStimulus, ServiceError> {
        let entry = self.entry(id)?;
        let mut e = entry.lock();
        let phase = e
            .session
            .active_phase()
            .ok_or_else(|| ServiceError::SessionNotRunning {
                session: id.to_owned(),
                state: e.session.state,
            })?;
        let (cursor, plan) = match phase {
            Phase::Demo => (e.session.demo_cursor, &e.session.demo_plan),
            Phase::Trial => (e.session.cursor, &e.session.plan),
        };
        if let Some(slot) = plan.slot(cursor) {
            let served = ServedSlot {
                phase,
                slot_index: cursor,
                image_id: slot.image_id.clone(),
                display_ms: self.eval.timing.display_ms,
                blank_ms: self.eval.timing.blank_ms,
            };
            let payload = StimulusPayload {
                phase,
                slot_index: Some(cursor),
                image_id: Some(served.image_id.clone()),
            };
            self.commit(&mut e, |ts| {
                LogRecord::new(id, RecordType::StimulusServed, &payload, ts)
            })?;
            return Ok(NextStimulus::Slot(served));
        }
        let payload = StimulusPayload {
            phase,
            slot_index: None,
            image_id: None,
        };
        self.commit(&mut e, |ts| {
            LogRecord::new(id, RecordType::StimulusServed, &payload, ts)
        })?;
        let (from, to) = match phase {
            Phase::Demo => (SessionState::Demo, SessionState::Running),
            Phase::Trial => (SessionState::Running, SessionState::Finished),
        };
        self.commit(&mut e, state_change(id, from, to))?;
        Ok(NextStimulus::End(EndOfSequence {
            phase,
            end_of_sequence: true,
        }))
    }

    /// Records a space press at `client_timestamp_ms`, measured from the
    /// start of the active phase. Presses outside the sequence or earlier
    /// than the previous trial press are rejected without being recorded.
    pub fn submit_response(
        &self,
        id: &str,
        client_timestamp_ms: u64,
    ) -> Result<ResponseAck, ServiceError> {
        let entry = self.entry(id)?;
        let mut e = entry.lock();
        let phase = e
            .session
            .active_phase()
            .ok_or_else(|| ServiceError::SessionNotRunning {
                session: id.to_owned(),
                state: e.session.state,
            })?;
        let feedback = e
            .session
            .feedback_for(phase, self.eval.timing, client_timestamp_ms)
            .ok_or_else(|| ServiceError::ResponseOutOfRange {
                session: id.to_owned(),
                timestamp_ms: client_timestamp_ms,
            })?;
        if phase == Phase::Trial {
            if let Some(previous_ms) = e.session.last_trial_response_ms {
                if client_timestamp_ms < previous_ms {
                    return Err(ServiceError::OutOfOrderResponse {
                        timestamp_ms: client_timestamp_ms,
                        previous_ms,
                    });
                }
            }
        }
        let payload = ResponsePayload {
            client_timestamp_ms,
            key: SPACE_KEY.to_owned(),
            phase,
        };
        let before = e.session.qc_monitor().verdict();
        self.commit(&mut e, |ts| {
            LogRecord::new(id, RecordType::Response, &payload, ts)
        })?;
        let mut disqualified = None;
        if let (None, Some(reason)) = (before, e.session.qc_monitor().verdict()) {
            log::info!("session {id} disqualified: {reason:?}");
            let verdict = QcVerdict::new(id, reason);
            self.commit(&mut e, |ts| {
                LogRecord::new(id, RecordType::Verdict, &verdict, ts)
            })?;
            self.commit(
                &mut e,
                state_change(id, SessionState::Running, SessionState::Disqualified),
            )?;
            disqualified = Some(reason);
        }
        Ok(ResponseAck {
            feedback,
            state: e.session.state,
            disqualified,
        })
    }

    /// Attributes the persisted responses and runs offline quality control.
    /// A finished session gets its verdict recorded on the first call; a
    /// disqualified one keeps the verdict recorded when it was disqualified.
    /// Calling it again returns the same result.
    pub fn finalize_and_score(&self, id: &str) -> Result<FinalizedSession, ServiceError> {
        let entry = self.entry(id)?;
        let mut e = entry.lock();
        let state = e.session.state;
        if !state.is_terminal() {
            return Err(ServiceError::SessionNotFinished {
                session: id.to_owned(),
                state,
            });
        }
        let evaluated = self.evaluate(&e);
        if e.session.verdict.is_none() {
            if state == SessionState::Disqualified {
                return Err(ServiceError::Corrupt(format!(
                    "session {id} disqualified without verdict"
                )));
            }
            if !evaluated.verdict.qualified {
                log::warn!(
                    "session {id} failed offline QC: {:?}",
                    evaluated.verdict.reason
                );
            }
            let verdict = evaluated.verdict.clone();
            self.commit(&mut e, |ts| {
                LogRecord::new(id, RecordType::Verdict, &verdict, ts)
            })?;
        }
        Ok(FinalizedSession {
            qc: e.session.verdict.clone().expect("verdict recorded"),
            outcomes: evaluated.outcomes.outcomes,
        })
    }

    /// Scores all finished, qualified sessions together. Does not modify the
    /// store: finished sessions that were never finalized are evaluated on
    /// the fly.
    pub fn export_dataset(&self, min_responses: usize) -> Result<ExportedDataset, ServiceError> {
        let entries: Vec<_> = {
            let s = self.sessions.read();
            s.order.iter().map(|id| s.map[id].clone()).collect()
        };
        let mut spec: Option<IntervalSpec> = None;
        let mut qualified: Vec<SessionOutcomes> = Vec::new();
        for entry in entries {
            let e = entry.lock();
            if e.session.state != SessionState::Finished {
                continue;
            }
            let evaluated = self.evaluate(&e);
            let ok = e
                .session
                .verdict
                .as_ref()
                .map_or(evaluated.verdict.qualified, |v| v.qualified);
            if !ok {
                continue;
            }
            let session_spec = &e.session.meta.config.intervals;
            match &spec {
                Some(s) if s != session_spec => return Err(ServiceError::MixedIntervalSpecs),
                Some(_) => {}
                None => spec = Some(session_spec.clone()),
            }
            qualified.push(evaluated.outcomes);
        }
        let spec = spec.ok_or(ServiceError::NoQualifiedSessions)?;
        let table = aggregate_scores(&qualified, &spec, min_responses)?;
        Ok(ExportedDataset {
            sessions: qualified.iter().map(|s| s.session_id.clone()).collect(),
            scores_csv: write_scores_csv(&table.scores),
            outcomes_jsonl: write_outcomes_jsonl(qualified.iter().flat_map(|s| &s.outcomes)),
            excluded: table.excluded,
        })
    }

    fn evaluate(&self, e: &Entry) -> icm_core::pipeline::EvaluatedSession {
        let events: Vec<ResponseEvent> = trial_responses(&e.records)
            .expect("stored records were validated on write")
            .into_iter()
            .next()
            .map(|(_, ev)| ev)
            .unwrap_or_default();
        evaluate_session(e.session.id(), &e.session.plan, &events, &self.eval)
    }

    /// Persists the record, then applies it.
    fn commit(
        &self,
        e: &mut Entry,
        make: impl FnOnce(u64) -> LogRecord,
    ) -> Result<(), ServiceError> {
        let ts = self.clock.now_ms().max(e.session.last_server_timestamp_ms);
        let record = make(ts);
        if let Some(log) = e.log.as_mut() {
            persist::append_line(log, &record.to_line())?;
        }
        e.session.apply(&record)?;
        e.records.push(record);
        Ok(())
    }
}

/// Samples `config.k` of the category's targets and schedules them against
/// all of its foils. The seed drives both the sample and the placement.
pub fn build_plan(
    registry: &ImageRegistry,
    category: &str,
    config: &SessionConfig,
) -> Result<StimulusPlan, ServiceError> {
    if !registry.contains_category(category) {
        return Err(ServiceError::UnknownCategory(category.to_owned()));
    }
    let targets = registry.images(category, Role::Target);
    if config.k > targets.len() {
        return Err(ServiceError::InsufficientTargets {
            category: category.to_owned(),
            requested: config.k,
            available: targets.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut picked = sample(&mut rng, targets.len(), config.k).into_vec();
    picked.sort_unstable();
    let chosen: Vec<_> = picked.into_iter().map(|i| targets[i].clone()).collect();
    let foils = registry.images(category, Role::Foil);
    Ok(plan_sequence(
        category,
        &chosen,
        &foils,
        &config.intervals,
        config.seed,
    )?)
}

fn state_change(
    id: &str,
    from: SessionState,
    to: SessionState,
) -> impl FnOnce(u64) -> LogRecord + '_ {
    move |ts| {
        LogRecord::new(
            id,
            RecordType::StateChange,
            &StateChangePayload {
                from: from.to_string(),
                to: to.to_string(),
            },
            ts,
        )
    }
}

fn summarize(s: &Session) -> SessionSummary {
    SessionSummary {
        session_id: s.id().to_owned(),
        category: s.meta.category.clone(),
        state: s.state,
        config: s.meta.config.clone(),
        trial_length: s.plan.len(),
        demo_length: s.demo_plan.len(),
        cursor: s.cursor,
        demo_cursor: s.demo_cursor,
        verdict: s.verdict.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ManualClock;
    use icm_core::scheduler::SlotKind;
    use icm_core::Outcome;

    fn store() -> SessionStore {
        SessionStore::in_memory(
            ImageRegistry::synthetic(&["teapot"], 20, 40),
            EvaluationConfig::default(),
        )
        .with_clock(Arc::new(ManualClock::new(1_000)))
    }

    fn config(k: usize) -> SessionConfig {
        SessionConfig {
            k,
            seed: 3,
            ..SessionConfig::default()
        }
    }

    fn run_through_demo(s: &SessionStore, id: &str) {
        s.begin_demo(id).unwrap();
        while let NextStimulus::Slot(_) = s.next_stimulus(id).unwrap() {}
        assert_eq!(s.summary(id).unwrap().state, SessionState::Running);
    }

    #[test]
    fn create_errors() {
        let s = store();
        assert!(matches!(
            s.create_session("phone", config(5)),
            Err(ServiceError::UnknownCategory(_))
        ));
        assert!(matches!(
            s.create_session("teapot", config(21)),
            Err(ServiceError::InsufficientTargets {
                requested: 21,
                available: 20,
                ..
            })
        ));
    }

    #[test]
    fn lifecycle() {
        let s = store();
        let id = s.create_session("teapot", config(10)).unwrap().session_id;
        assert!(matches!(
            s.next_stimulus(&id),
            Err(ServiceError::SessionNotRunning { .. })
        ));
        assert!(matches!(
            s.begin_trial(&id),
            Err(ServiceError::InvalidTransition { .. })
        ));
        run_through_demo(&s, &id);
        let plan = s.plan(&id).unwrap();
        for i in 0..plan.len() {
            match s.next_stimulus(&id).unwrap() {
                NextStimulus::Slot(slot) => {
                    assert_eq!(slot.slot_index, i);
                    assert_eq!(slot.image_id, plan.slots[i].image_id);
                }
                NextStimulus::End(_) => panic!("ended early"),
            }
        }
        assert!(matches!(
            s.next_stimulus(&id).unwrap(),
            NextStimulus::End(_)
        ));
        assert_eq!(s.summary(&id).unwrap().state, SessionState::Finished);
        let first = s.finalize_and_score(&id).unwrap();
        assert!(first.qc.qualified);
        assert_eq!(s.finalize_and_score(&id).unwrap(), first);
        // No presses: every repeat is a miss.
        let misses = first
            .outcomes
            .iter()
            .filter(|o| o.outcome == Outcome::Miss)
            .count();
        assert_eq!(misses, 10);
        assert!(first.outcomes.iter().all(|o| !o.pressed));
    }

    #[test]
    fn feedback_follows_slot_kind() {
        let s = store();
        let id = s.create_session("teapot", config(10)).unwrap().session_id;
        run_through_demo(&s, &id);
        let plan = s.plan(&id).unwrap();
        let timing = s.evaluation().timing;
        for (i, slot) in plan.slots.iter().enumerate().take(6) {
            let ack = s
                .submit_response(&id, timing.window_start(i) + 300)
                .unwrap();
            let expect = if slot.kind == SlotKind::TargetRepeat {
                Feedback::Correct
            } else {
                Feedback::Incorrect
            };
            assert_eq!(ack.feedback, expect);
        }
    }

    #[test]
    fn rejected_responses_are_not_recorded() {
        let s = store();
        let id = s.create_session("teapot", config(10)).unwrap().session_id;
        run_through_demo(&s, &id);
        let len = s.plan(&id).unwrap().len() as u64;
        let before = s.records(&id).unwrap().len();
        assert!(matches!(
            s.submit_response(&id, len * 2800),
            Err(ServiceError::ResponseOutOfRange { .. })
        ));
        s.submit_response(&id, 5000).unwrap();
        assert!(matches!(
            s.submit_response(&id, 4000),
            Err(ServiceError::OutOfOrderResponse { .. })
        ));
        assert_eq!(s.records(&id).unwrap().len(), before + 1);
    }

    #[test]
    fn timeout_disqualifies_online() {
        let s = store();
        let id = s.create_session("teapot", config(20)).unwrap().session_id;
        run_through_demo(&s, &id);
        s.submit_response(&id, 1000).unwrap();
        let ack = s.submit_response(&id, 61_001).unwrap();
        assert_eq!(ack.disqualified, Some(QcReason::ResponseTimeout));
        assert_eq!(ack.state, SessionState::Disqualified);
        assert!(matches!(
            s.submit_response(&id, 62_000),
            Err(ServiceError::SessionNotRunning { .. })
        ));
        let fin = s.finalize_and_score(&id).unwrap();
        assert_eq!(fin.qc.reason, QcReason::ResponseTimeout);
        assert_eq!(s.finalize_and_score(&id).unwrap(), fin);
        assert!(matches!(
            s.export_dataset(1),
            Err(ServiceError::NoQualifiedSessions)
        ));
    }

    #[test]
    fn empty_plan_session_finishes_at_once() {
        let s = store();
        let id = s.create_session("teapot", config(0)).unwrap().session_id;
        assert_eq!(s.summary(&id).unwrap().trial_length, 0);
        run_through_demo(&s, &id);
        assert!(matches!(
            s.next_stimulus(&id).unwrap(),
            NextStimulus::End(_)
        ));
        let fin = s.finalize_and_score(&id).unwrap();
        assert!(fin.qc.qualified && fin.outcomes.is_empty());
    }

    #[test]
    fn finalize_requires_terminal_state() {
        let s = store();
        let id = s.create_session("teapot", config(5)).unwrap().session_id;
        run_through_demo(&s, &id);
        assert!(matches!(
            s.finalize_and_score(&id),
            Err(ServiceError::SessionNotFinished { .. })
        ));
    }

    #[test]
    fn export_rejects_mixed_interval_specs() {
        let s = store();
        let a = s.create_session("teapot", config(5)).unwrap().session_id;
        let other = SessionConfig {
            intervals: IntervalSpec::new([4, 8], 8).unwrap(),
            ..config(5)
        };
        let b = s.create_session("teapot", other).unwrap().session_id;
        for id in [&a, &b] {
            run_through_demo(&s, id);
            while let NextStimulus::Slot(_) = s.next_stimulus(id).unwrap() {}
        }
        assert!(matches!(
            s.export_dataset(1),
            Err(ServiceError::MixedIntervalSpecs)
        ));
    }

    #[test]
    fn server_timestamps_are_monotone() {
        let clock = Arc::new(ManualClock::new(5_000));
        let s = SessionStore::in_memory(
            ImageRegistry::synthetic(&["teapot"], 5, 10),
            EvaluationConfig::default(),
        )
        .with_clock(clock.clone());
        let id = s.create_session("teapot", config(5)).unwrap().session_id;
        s.begin_demo(&id).unwrap();
        clock.set(10);
        s.next_stimulus(&id).unwrap();
        let ts: Vec<u64> = s
            .records(&id)
            .unwrap()
            .iter()
            .map(|r| r.server_timestamp_ms)
            .collect();
        assert_eq!(ts, vec![5_000, 5_000]);
    }
}
