//! Activates shelter mode, filters inbound items and exports the evidence.

use std::collections::BTreeSet;

use mediator::recovery::{InboundChannel, InboundItem, RecoveryEvent, RecoveryMode};

fn main() {
    let mut mode = RecoveryMode::new(BTreeSet::from(["best_friend".to_string()]));
    mode.apply(RecoveryEvent::UserActivate, 0);
    let items = [
        ("best_friend", "thinking of you, call me later", 0.0),
        ("stranger1", "you are a pathetic loser", 0.92),
        ("stranger2", "not sure I agree with your post", 0.2),
    ];
    for (i, (sender, body, toxicity)) in items.iter().enumerate() {
        let item = InboundItem {
            item_id: format!("m{i}"),
            sender_id: sender.to_string(),
            channel: InboundChannel::DirectMessage,
            body: body.to_string(),
            toxicity: Some(*toxicity),
        };
        let decision = mode.shelter(&item, *toxicity, 0.8, 1_000 * i as i64).expect("active");
        println!("{sender}: {decision:?}");
    }
    let report = mode.export_report(10_000);
    println!("evidence records {}, chain valid {}, held {}", report.records.len(), report.chain_valid, report.held_for_review);
    mode.apply(RecoveryEvent::UserDeactivate, 20_000);
    println!("phase {:?}", mode.state.phase);
}
