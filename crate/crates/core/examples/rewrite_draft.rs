//! Flags a heated draft and offers calmer versions.

use mediator::rewriter::{analyze_draft, generate_rewrites};

fn main() {
    let draft = std::env::args().nth(1).unwrap_or_else(|| "You NEVER listen, this is TOTALLY ridiculous!!!".into());
    let analysis = analyze_draft(&draft);
    println!("risk {:.2} {:?}", analysis.risk, analysis.risk_categories);
    for s in generate_rewrites(&draft, &analysis) {
        println!("{:?}: {}", s.tone, s.text);
    }
    println!("original: {draft}");
}
