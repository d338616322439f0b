//! Scores two candidate interventions and prints the chosen one.

use mediator::{select_action, CandidateAction, InterventionKind, ObjectiveMode, UserConfig};

fn main() {
    let candidates = vec![
        CandidateAction { agency_penalty: 0.5, ..CandidateAction::new(1, InterventionKind::RewriteSuggestion, 0.8, 0.9) },
        CandidateAction { agency_penalty: 0.1, ..CandidateAction::new(2, InterventionKind::SoftPrompt, 0.6, 0.2) },
    ];
    for mode in [ObjectiveMode::Equation1, ObjectiveMode::Algorithm1] {
        let config = UserConfig { mode, ..UserConfig::default() };
        let decision = select_action(&candidates, &config).expect("valid candidates");
        println!("{mode:?}");
        for s in &decision.all_scored {
            println!("  action {} -> {:.3}", s.action_id, s.objective_value);
        }
        println!("  chose {}: {}", decision.chosen.action_id, decision.explanation);
    }
}
