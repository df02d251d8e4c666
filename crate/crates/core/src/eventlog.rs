//! JSONL event records.
//!
//! Every line is `{session_id, record_type, payload, server_timestamp_ms}`.
//! The live service persists these, and the simulant emits the same
//! records, so offline scoring cannot tell simulated from recorded sessions.

use std::collections::HashMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::ImageId;
use crate::scoring::{QcVerdict, ResponseEvent, SPACE_KEY};

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("{record_type:?} record has an invalid payload: {source}")]
    Payload {
        record_type: RecordType,
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordType {
    StateChange,
    StimulusServed,
    Response,
    Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Demo,
    Trial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub session_id: String,
    pub record_type: RecordType,
    pub payload: serde_json::Value,
    pub server_timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponsePayload {
    pub client_timestamp_ms: u64,
    pub key: String,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusPayload {
    pub phase: Phase,
    /// `None` marks the end of the phase's sequence.
    pub slot_index: Option<usize>,
    pub image_id: Option<ImageId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateChangePayload {
    pub from: String,
    pub to: String,
}

impl LogRecord {
    pub fn new(
        session_id: impl Into<String>,
        record_type: RecordType,
        payload: &impl Serialize,
        server_timestamp_ms: u64,
    ) -> Self {
        Self {
            session_id: session_id.into(),
            record_type,
            payload: serde_json::to_value(payload).expect("payload serialises"),
            server_timestamp_ms,
        }
    }

    pub fn trial_response(
        session_id: impl Into<String>,
        client_timestamp_ms: u64,
        server_timestamp_ms: u64,
    ) -> Self {
        Self::new(
            session_id,
            RecordType::Response,
            &ResponsePayload {
                client_timestamp_ms,
                key: SPACE_KEY.to_owned(),
                phase: Phase::Trial,
            },
            server_timestamp_ms,
        )
    }

    pub fn payload_as<T: DeserializeOwned>(&self) -> Result<T, EventLogError> {
        serde_json::from_value(self.payload.clone()).map_err(|source| EventLogError::Payload {
            record_type: self.record_type,
            source,
        })
    }

    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("record serialises");
        line.push('\n');
        line
    }
}

pub fn parse_jsonl(text: &str) -> Result<Vec<LogRecord>, EventLogError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| EventLogError::Parse {
                line: i + 1,
                source,
            })
        })
        .collect()
}

pub fn to_jsonl<'a>(records: impl IntoIterator<Item = &'a LogRecord>) -> String {
    records.into_iter().map(LogRecord::to_line).collect()
}

/// Trial-phase responses grouped by session, sessions in order of first
/// appearance.
pub fn trial_responses(
    records: &[LogRecord],
) -> Result<Vec<(String, Vec<ResponseEvent>)>, EventLogError> {
    let mut order: Vec<(String, Vec<ResponseEvent>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in records
        .iter()
        .filter(|r| r.record_type == RecordType::Response)
    {
        let payload: ResponsePayload = record.payload_as()?;
        if payload.phase != Phase::Trial {
            continue;
        }
        let slot = *index.entry(record.session_id.clone()).or_insert_with(|| {
            order.push((record.session_id.clone(), Vec::new()));
            order.len() - 1
        });
        order[slot].1.push(ResponseEvent {
            session_id: record.session_id.clone(),
            timestamp_ms: payload.client_timestamp_ms,
            key: payload.key,
        });
    }
    Ok(order)
}

/// Last verdict recorded for each session.
pub fn recorded_verdicts(
    records: &[LogRecord],
) -> Result<HashMap<String, QcVerdict>, EventLogError> {
    let mut out = HashMap::new();
    for r in records
        .iter()
        .filter(|r| r.record_type == RecordType::Verdict)
    {
        out.insert(r.session_id.clone(), r.payload_as()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_field_names() {
        let r = LogRecord::trial_response("s1", 1300, 99);
        let v: serde_json::Value = serde_json::from_str(r.to_line().trim()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "payload",
                "record_type",
                "server_timestamp_ms",
                "session_id"
            ]
        );
        assert_eq!(v["record_type"], "response");
        assert_eq!(v["payload"]["client_timestamp_ms"], 1300);
        assert_eq!(v["payload"]["phase"], "trial");
    }

    #[test]
    fn responses_grouped_in_first_seen_order() {
        let demo = LogRecord::new(
            "a",
            RecordType::Response,
            &ResponsePayload {
                client_timestamp_ms: 5,
                key: "space".into(),
                phase: Phase::Demo,
            },
            1,
        );
        let records = vec![
            LogRecord::trial_response("b", 10, 1),
            demo,
            LogRecord::trial_response("a", 20, 2),
            LogRecord::trial_response("b", 30, 3),
        ];
        let text = to_jsonl(&records);
        let parsed = parse_jsonl(&text).unwrap();
        assert_eq!(parsed, records);
        let grouped = trial_responses(&parsed).unwrap();
        assert_eq!(grouped.len(), 2);
        assert_eq!(grouped[0].0, "b");
        assert_eq!(grouped[0].1.len(), 2);
        assert_eq!(grouped[1].1, vec![ResponseEvent::space("a", 20)]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_jsonl("\n{bad\n").unwrap_err();
        assert!(matches!(err, EventLogError::Parse { line: 2, .. }));
    }
}
