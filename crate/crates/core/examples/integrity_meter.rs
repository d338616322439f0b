//! Rates one post against a small fact table.

use mediator::integrity::{FactDb, FactRecord, IntegrityAssessor, Stance};
use mediator::PostContent;

fn main() {
    let record = |key: &str, stance| FactRecord {
        claim_key: key.into(),
        stance,
        source_url: format!("https://facts.example/{}", key.replace(' ', "-")),
        source_name: "Example Desk".into(),
    };
    let facts = FactDb::new([
        record("river flooded the old town", Stance::Supports),
        record("mayor resigned on monday", Stance::Contradicts),
    ]);
    let assessor = IntegrityAssessor::baseline(facts);
    let post = PostContent::new(
        "p1",
        "reporter",
        "news",
        "The river flooded the old town. The mayor resigned on Monday.",
    );
    let score = assessor.assess(&post);
    println!("{}", serde_json::to_string_pretty(&score).unwrap());
}
