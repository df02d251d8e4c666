//! Loading recorded sessions for offline analysis, either from a flat event
//! file scored against one plan or from a service store directory.

use std::path::Path;

use icm_core::eventlog::{parse_jsonl, trial_responses, Phase, RecordType, StimulusPayload};
use icm_core::pipeline::{score_sessions, EvaluationConfig, ScoredRun};
use icm_core::scheduler::{IntervalSpec, StimulusPlan};
use icm_core::scoring::ResponseEvent;
use icm_service::persist;

use crate::{read_file, CliError};

pub struct Session {
    pub id: String,
    pub plan: StimulusPlan,
    pub events: Vec<ResponseEvent>,
}

pub struct Corpus {
    pub sessions: Vec<Session>,
    pub spec: IntervalSpec,
}

impl Corpus {
    pub fn score(
        &self,
        eval: &EvaluationConfig,
        min_responses: usize,
    ) -> Result<ScoredRun, CliError> {
        let run = score_sessions(
            self.sessions
                .iter()
                .map(|s| (s.id.as_str(), &s.plan, s.events.as_slice())),
            &self.spec,
            eval,
            min_responses,
        )?;
        Ok(run)
    }
}

/// Every session in an event file, all sharing `plan`. Sessions without a
/// single trial press do not appear in such a file and are not scored.
pub fn from_events(
    events: &Path,
    plan_path: &Path,
    spec: IntervalSpec,
) -> Result<Corpus, CliError> {
    let plan = StimulusPlan::from_json(&read_file(plan_path)?)
        .map_err(|e| CliError::invalid(plan_path.display(), e))?;
    let records =
        parse_jsonl(&read_file(events)?).map_err(|e| CliError::invalid(events.display(), e))?;
    let sessions = trial_responses(&records)
        .map_err(|e| CliError::invalid(events.display(), e))?
        .into_iter()
        .map(|(id, events)| Session {
            id,
            plan: plan.clone(),
            events,
        })
        .collect();
    Ok(Corpus { sessions, spec })
}

/// Sessions of a store that ran to the end of their trial sequence, in
/// creation order. Abandoned sessions and sessions stopped by online
/// quality control never reach the end marker and are left out.
pub fn from_store(dir: &Path) -> Result<Corpus, CliError> {
    if !persist::index_path(dir).is_file() {
        return Err(CliError::Io {
            path: persist::index_path(dir),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no session index"),
        });
    }
    let mut spec: Option<IntervalSpec> = None;
    let mut sessions = Vec::new();
    for meta in persist::read_index(dir)? {
        let records = persist::read_events(dir, &meta.session_id)?;
        let completed = records.iter().any(|r| {
            r.record_type == RecordType::StimulusServed
                && r.payload_as::<StimulusPayload>()
                    .is_ok_and(|p| p.phase == Phase::Trial && p.slot_index.is_none())
        });
        if !completed {
            continue;
        }
        match &spec {
            Some(s) if *s != meta.config.intervals => {
                return Err(CliError::Invalid(
                    "sessions use different interval specs".into(),
                ));
            }
            Some(_) => {}
            None => spec = Some(meta.config.intervals.clone()),
        }
        let events = trial_responses(&records)
            .map_err(|e| CliError::invalid(&meta.session_id, e))?
            .into_iter()
            .next()
            .map(|(_, ev)| ev)
            .unwrap_or_default();
        sessions.push(Session {
            plan: persist::read_plan(dir, &meta.session_id)?,
            id: meta.session_id,
            events,
        });
    }
    let spec =
        spec.ok_or_else(|| CliError::Invalid(format!("{}: no completed sessions", dir.display())))?;
    Ok(Corpus { sessions, spec })
}
