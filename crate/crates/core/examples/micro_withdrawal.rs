//! Walks the pause cadence through a run of responses.

use mediator::context::SessionSignals;
use mediator::withdrawal::{continuation_risk, maybe_intervene, update_cadence, CadenceResponse, CadenceState};

fn main() {
    let signals = SessionSignals {
        scroll_velocity: 2400.0,
        repetition_index: 0.8,
        session_minutes: 55.0,
        late_night: true,
        goal_divergence: 0.7,
    };
    let risk = continuation_risk(&signals);
    println!("continuation risk {risk:.3}");

    let mut cadence = CadenceState::default();
    let mut now = 0;
    for response in [CadenceResponse::Dismissed, CadenceResponse::Dismissed, CadenceResponse::Accepted, CadenceResponse::Avoided] {
        match maybe_intervene(risk, &cadence, now, 0.6, "Still finding what you came for?") {
            Some(pause) => {
                cadence.mark_shown(now);
                cadence = update_cadence(cadence, response);
                println!(
                    "t={:>3} min \"{}\" risk {:.2}, {response:?}, next cooldown {} min",
                    now / 60_000,
                    pause.prompt,
                    pause.risk,
                    cadence.cooldown_minutes
                );
            }
            None => println!("t={:>3} min cooling down", now / 60_000),
        }
        now += cadence.cooldown_ms();
    }
}
