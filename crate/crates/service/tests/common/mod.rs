#![allow(dead_code)]

use icm_core::scoring::ResponseEvent;
use icm_service::session::NextStimulus;
use icm_service::{SessionState, SessionStore};

/// Runs a session the way the browser client would: skip the demo, then
/// serve each slot and submit the presses that fall inside its window.
/// Stops submitting once the session is disqualified.
pub fn drive(store: &SessionStore, id: &str, events: &[ResponseEvent]) -> SessionState {
    store.begin_demo(id).unwrap();
    store.begin_trial(id).unwrap();
    let window = store.evaluation().timing.window_ms();
    let mut pending = events.iter().peekable();
    loop {
        match store.next_stimulus(id) {
            Ok(NextStimulus::Slot(slot)) => {
                let end = (slot.slot_index as u64 + 1) * window;
                while let Some(e) = pending.next_if(|e| e.timestamp_ms < end) {
                    let ack = store.submit_response(id, e.timestamp_ms).unwrap();
                    if ack.state == SessionState::Disqualified {
                        return ack.state;
                    }
                }
            }
            Ok(NextStimulus::End(_)) => return store.summary(id).unwrap().state,
            Err(e) => panic!("{e}"),
        }
    }
}
