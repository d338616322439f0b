//! Simulates a session to disk, then replays its audit and a tampered copy.

use mediator::audit::AuditStore;
use mediator::engine::{replay, InputLog};
use mediator::sim::{simulate, Profile, SimOptions};

fn main() {
    let dir = std::env::temp_dir().join(format!("mediator-replay-{}", std::process::id()));
    simulate(&SimOptions::new(Profile::Doomscroller, 7, 10), Some(&dir)).expect("simulation runs");
    let (header, inputs) = InputLog::read(&dir.join("inputs.jsonl")).expect("input log");
    let mut stored = AuditStore::load(&dir.join("audit.jsonl")).expect("audit log");

    let records = replay(&header, &inputs, &stored, None).expect("clean replay");
    println!("replayed {} records", records.len());

    stored[3].explanation.push_str(" (edited)");
    match replay(&header, &inputs, &stored, None) {
        Ok(_) => println!("tampering went unnoticed"),
        Err(e) => println!("tampering caught: {e}"),
    }
    std::fs::remove_dir_all(&dir).ok();
}
