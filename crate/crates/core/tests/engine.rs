mod common;

use std::io;
use std::sync::{Arc, Mutex};

use mediator::audit::{AuditBackend, AuditError, AuditStore, Divergence, UserResponse};
use mediator::context::{EventKind, SessionEvent};
use mediator::engine::{replay, EngineError, EngineOptions, InputLogHeader, RecoveryCommand};
use mediator::model::PostContent;
use mediator::recovery::{InboundChannel, InboundItem};
use mediator::{Engine, EngineInput, UserConfig};

fn events(at: i64, kinds: Vec<EventKind>) -> EngineInput {
    EngineInput::Events {
        session_id: "s".into(),
        at,
        events: kinds.into_iter().map(|k| SessionEvent::new("s", at, k)).collect(),
    }
}

#[test]
fn reopened_log_continues_at_seq_six() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("audit.jsonl");
    std::fs::copy(common::fixture("audit_5.jsonl"), &path).unwrap();
    let store = AuditStore::open(&path).unwrap();
    assert_eq!(store.next_seq(), 6);
    let mut engine = Engine::with_options(UserConfig::default(), EngineOptions { audit: store, ..Default::default() }).unwrap();
    let out = engine.apply(events(1_736_300_000_000, vec![EventKind::SessionStart])).unwrap();
    assert_eq!(out.seqs, vec![6]);
    assert_eq!(AuditStore::load(&path).unwrap().len(), 6);
}

#[test]
fn every_input_yields_one_record() {
    let mut engine = Engine::new(UserConfig::default()).unwrap();
    let t = 1_736_300_000_000;
    let inputs = vec![
        events(t, vec![EventKind::SessionStart]),
        EngineInput::FeedPage { session_id: "s".into(), at: t + 1, posts: vec![PostContent::new("p", "a", "news", "Hi.")] },
        EngineInput::Draft { session_id: "s".into(), at: t + 2, body: "lovely day".into() },
        EngineInput::Recovery { at: t + 3, command: RecoveryCommand::Activate },
        EngineInput::Inbound {
            at: t + 4,
            item: InboundItem {
                item_id: "m".into(),
                sender_id: "x".into(),
                channel: InboundChannel::DirectMessage,
                body: "hello".into(),
                toxicity: None,
            },
        },
    ];
    for (i, input) in inputs.into_iter().enumerate() {
        let out = engine.apply(input).unwrap();
        assert_eq!(out.seqs, vec![i as u64 + 1]);
    }
    assert_eq!(engine.audit().len(), 5);
}

#[test]
fn time_may_not_run_backwards() {
    let mut engine = Engine::new(UserConfig::default()).unwrap();
    engine.apply(events(1000, vec![EventKind::SessionStart])).unwrap();
    let err = engine.apply(events(999, vec![EventKind::Scroll { delta_px: 10.0 }])).unwrap_err();
    assert!(matches!(err, EngineError::TimeRegression { last: 1000, got: 999 }));
    assert!(err.is_client_error());
    assert_eq!(engine.audit().len(), 1);
}

#[test]
fn responses_are_write_once() {
    let mut engine = Engine::new(UserConfig::default()).unwrap();
    engine.apply(EngineInput::Draft { session_id: "s".into(), at: 1, body: "You are ALWAYS wrong".into() }).unwrap();
    engine.apply(EngineInput::Response { at: 2, seq: 1, response: UserResponse::Overridden }).unwrap();
    assert_eq!(engine.audit().get(1).unwrap().user_response, UserResponse::Overridden);
    let again = engine.apply(EngineInput::Response { at: 3, seq: 1, response: UserResponse::Accepted }).unwrap_err();
    assert!(matches!(again, EngineError::Audit(AuditError::ResponseAlreadySet(1))));
    let missing = engine.apply(EngineInput::Response { at: 4, seq: 9, response: UserResponse::Accepted }).unwrap_err();
    assert!(matches!(missing, EngineError::Audit(AuditError::UnknownSeq(9))));
}

struct FlakyDisk {
    budget: Arc<Mutex<usize>>,
}

impl AuditBackend for FlakyDisk {
    fn append_line(&mut self, _: &str) -> io::Result<()> {
        let mut left = self.budget.lock().unwrap();
        if *left == 0 {
            return Err(io::Error::other("disk full"));
        }
        *left -= 1;
        Ok(())
    }
}

#[test]
fn storage_failure_halts_processing() {
    let budget = Arc::new(Mutex::new(1));
    let store = AuditStore::new(Box::new(FlakyDisk { budget: budget.clone() }));
    let mut engine = Engine::with_options(UserConfig::default(), EngineOptions { audit: store, ..Default::default() }).unwrap();
    engine.apply(events(1, vec![EventKind::SessionStart])).unwrap();
    let err = engine.apply(events(2, vec![EventKind::Scroll { delta_px: 5.0 }])).unwrap_err();
    assert!(matches!(err, EngineError::Audit(AuditError::Storage(_))));
    *budget.lock().unwrap() = 10;
    let after = engine.apply(events(3, vec![EventKind::Scroll { delta_px: 5.0 }])).unwrap_err();
    assert!(matches!(after, EngineError::Halted(_)));
    assert_eq!(engine.audit().len(), 1);
}

#[test]
fn empty_log_replays_to_nothing() {
    let header = InputLogHeader { config: UserConfig::default(), facts: None };
    assert!(replay(&header, &[], &[], None).unwrap().is_empty());
}

#[test]
fn replay_detects_missing_and_extra_records() {
    let mut engine = Engine::new(UserConfig::default()).unwrap();
    let inputs = vec![events(1, vec![EventKind::SessionStart]), events(2, vec![EventKind::Scroll { delta_px: 3.0 }])];
    for i in &inputs {
        engine.apply(i.clone()).unwrap();
    }
    let stored = engine.audit().records().to_vec();
    let header = InputLogHeader { config: UserConfig::default(), facts: None };
    assert_eq!(replay(&header, &inputs, &stored, None).unwrap().len(), 2);

    let err = replay(&header, &inputs[..1], &stored, None).unwrap_err();
    assert_eq!(err.seq(), Some(2));
    assert!(matches!(err, mediator::engine::ReplayError::Divergence(Divergence::Missing { seq: 2 })));
    let err = replay(&header, &inputs, &stored[..1], None).unwrap_err();
    assert!(matches!(err, mediator::engine::ReplayError::Divergence(Divergence::Extra { seq: 2 })));
}
