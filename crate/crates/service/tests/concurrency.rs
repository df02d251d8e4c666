use std::collections::HashSet;
use std::sync::Arc;
use std::thread;

use icm_core::pipeline::EvaluationConfig;
use icm_service::session::NextStimulus;
use icm_service::{ImageRegistry, SessionConfig, SessionStore};

fn store() -> Arc<SessionStore> {
    Arc::new(SessionStore::in_memory(
        ImageRegistry::synthetic(&["teapot", "phone"], 50, 100),
        EvaluationConfig::default(),
    ))
}

fn config(seed: u64) -> SessionConfig {
    SessionConfig {
        k: 40,
        seed,
        ..SessionConfig::default()
    }
}

#[test]
fn concurrent_next_never_serves_a_slot_twice() {
    let store = store();
    let id = store
        .create_session("teapot", config(1))
        .unwrap()
        .session_id;
    store.begin_demo(&id).unwrap();
    store.begin_trial(&id).unwrap();
    let len = store.summary(&id).unwrap().trial_length;

    let handles: Vec<_> = (0..8)
        .map(|_| {
            let (store, id) = (store.clone(), id.clone());
            thread::spawn(move || {
                let mut served = Vec::new();
                while let Ok(NextStimulus::Slot(slot)) = store.next_stimulus(&id) {
                    served.push(slot.slot_index);
                }
                served
            })
        })
        .collect();
    let all: Vec<usize> = handles
        .into_iter()
        .flat_map(|h| h.join().unwrap())
        .collect();
    assert_eq!(all.len(), len);
    assert_eq!(all.iter().copied().collect::<HashSet<_>>().len(), len);
}

#[test]
fn concurrent_sessions_lose_no_events() {
    let store = store();
    let ids: Vec<String> = (0..16)
        .map(|i| {
            let cat = if i % 2 == 0 { "teapot" } else { "phone" };
            let id = store.create_session(cat, config(i)).unwrap().session_id;
            store.begin_demo(&id).unwrap();
            store.begin_trial(&id).unwrap();
            id
        })
        .collect();
    assert_eq!(ids.iter().collect::<HashSet<_>>().len(), ids.len());

    let handles: Vec<_> = ids
        .iter()
        .map(|id| {
            let (store, id) = (store.clone(), id.clone());
            thread::spawn(move || {
                // A foil run can disqualify a session part way, so count
                // what the store accepted.
                let mut accepted = 0;
                for slot in 0..20u64 {
                    if store.submit_response(&id, slot * 2800 + 500).is_ok() {
                        accepted += 1;
                    }
                }
                accepted
            })
        })
        .collect();
    let accepted: Vec<usize> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    for (id, n) in ids.iter().zip(accepted) {
        let responses = store
            .records(id)
            .unwrap()
            .iter()
            .filter(|r| r.record_type == icm_core::eventlog::RecordType::Response)
            .count();
        assert_eq!(responses, n);
        assert!(n > 0);
    }
}
