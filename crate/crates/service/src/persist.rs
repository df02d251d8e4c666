//! On-disk layout of a session store:
//!
//! ```text
//! <dir>/index.jsonl                one SessionMeta per line, creation order
//! <dir>/sessions/<id>.plan.json    stimulus plan
//! <dir>/sessions/<id>.events.jsonl LogRecords, append-only
//! ```
//!
//! A line is durable once its newline is written. A partial trailing line
//! left by a crash is discarded on load.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use icm_core::eventlog::LogRecord;
use icm_core::scheduler::StimulusPlan;
use serde::de::DeserializeOwned;

use crate::error::ServiceError;
use crate::session::SessionMeta;

pub const INDEX_FILE: &str = "index.jsonl";
const SESSIONS_DIR: &str = "sessions";

pub fn index_path(dir: &Path) -> PathBuf {
    dir.join(INDEX_FILE)
}

pub fn plan_path(dir: &Path, session_id: &str) -> PathBuf {
    dir.join(SESSIONS_DIR)
        .join(format!("{session_id}.plan.json"))
}

pub fn events_path(dir: &Path, session_id: &str) -> PathBuf {
    dir.join(SESSIONS_DIR)
        .join(format!("{session_id}.events.jsonl"))
}

pub fn ensure_layout(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir.join(SESSIONS_DIR))
}

/// Parses a JSONL file. A malformed final line without a terminating
/// newline is treated as a torn write: it is dropped and the file is
/// truncated back to the last complete line.
fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ServiceError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let complete = line.ends_with('\n');
        let body = line.trim();
        if !body.is_empty() {
            match serde_json::from_str(body) {
                Ok(v) => out.push(v),
                Err(_) if !complete => {
                    log::warn!("{}: dropping torn trailing line", path.display());
                    OpenOptions::new()
                        .write(true)
                        .open(path)?
                        .set_len(offset as u64)?;
                    break;
                }
                Err(e) => {
                    return Err(ServiceError::Corrupt(format!("{}: {e}", path.display())));
                }
            }
        }
        offset += line.len();
    }
    Ok(out)
}

pub fn read_index(dir: &Path) -> Result<Vec<SessionMeta>, ServiceError> {
    read_jsonl(&index_path(dir))
}

pub fn read_events(dir: &Path, session_id: &str) -> Result<Vec<LogRecord>, ServiceError> {
    read_jsonl(&events_path(dir, session_id))
}

pub fn read_plan(dir: &Path, session_id: &str) -> Result<StimulusPlan, ServiceError> {
    let path = plan_path(dir, session_id);
    let text = fs::read_to_string(&path)?;
    StimulusPlan::from_json(&text)
        .map_err(|e| ServiceError::Corrupt(format!("{}: {e}", path.display())))
}

/// Writes the plan to a temporary file and renames it into place.
pub fn write_plan(dir: &Path, session_id: &str, plan: &StimulusPlan) -> io::Result<()> {
    let path = plan_path(dir, session_id);
    let tmp = path.with_extension("json.tmp");
    let mut f = File::create(&tmp)?;
    f.write_all(plan.to_json().as_bytes())?;
    f.sync_all()?;
    fs::rename(tmp, path)
}

pub fn open_append(path: &Path) -> io::Result<File> {
    OpenOptions::new().create(true).append(true).open(path)
}

pub fn append_line(file: &mut File, line: &str) -> io::Result<()> {
    debug_assert!(line.ends_with('\n'));
    file.write_all(line.as_bytes())?;
    file.flush()
}
