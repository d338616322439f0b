//! Scoring and selection of candidate interventions.
//!
//! Two objectives are available through [`ObjectiveMode`]:
//!
//! - `equation1` (default): `J = u − λ·Ω − β·[r > τ]·r`
//! - `algorithm1`: `J = λ·u + (1−λ)·r − Ω`, then `J −= β·r` when `r > τ`
//!   and the action requires intervention.
//!
//! The two disagree on the sign of the risk term. `algorithm1` is kept for
//! reproducing the pseudocode literally and carries no monotonicity
//! guarantee.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CandidateAction, InterventionKind, ObjectiveMode, UserConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecisionError {
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("duplicate action_id {0}")]
    DuplicateActionId(u32),
    #[error("action {action_id}: {field} is not finite")]
    NonFinite { action_id: u32, field: &'static str },
    #[error("action {action_id}: {field} = {value} is outside [0, 1]")]
    OutOfRange { action_id: u32, field: &'static str, value: f64 },
    #[error("config scalar {0} is not finite")]
    NonFiniteConfig(&'static str),
}

/// Additive breakdown of the objective. `J` is the left-to-right sum
/// `utility_term + agency_term + risk_term + safety_penalty`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreComponents {
    pub utility_term: f64,
    pub agency_term: f64,
    pub risk_term: f64,
    pub safety_penalty: f64,
}

impl ScoreComponents {
    pub fn total(&self) -> f64 {
        self.utility_term + self.agency_term + self.risk_term + self.safety_penalty
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAction {
    pub action_id: u32,
    pub kind: InterventionKind,
    pub objective_value: f64,
    pub penalty_applied: bool,
    pub components: ScoreComponents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub chosen: ScoredAction,
    /// Scores in input order.
    pub all_scored: Vec<ScoredAction>,
    pub explanation: String,
    pub override_available: bool,
}

fn check_scalar(action_id: u32, field: &'static str, value: f64) -> Result<(), DecisionError> {
    if !value.is_finite() {
        return Err(DecisionError::NonFinite { action_id, field });
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(DecisionError::OutOfRange { action_id, field, value });
    }
    Ok(())
}

fn check_action(a: &CandidateAction) -> Result<(), DecisionError> {
    check_scalar(a.action_id, "utility", a.utility)?;
    check_scalar(a.action_id, "agency_penalty", a.agency_penalty)?;
    check_scalar(a.action_id, "risk", a.risk)
}

pub fn score_action(a: &CandidateAction, config: &UserConfig) -> Result<ScoredAction, DecisionError> {
    for (name, v) in [("lambda", config.lambda), ("beta", config.beta), ("tau", config.tau)] {
        if !v.is_finite() {
            return Err(DecisionError::NonFiniteConfig(name));
        }
    }
    for (field, v) in [("utility", a.utility), ("agency_penalty", a.agency_penalty), ("risk", a.risk)] {
        if !v.is_finite() {
            return Err(DecisionError::NonFinite { action_id: a.action_id, field });
        }
    }
    let (lambda, beta, tau) = (config.lambda, config.beta, config.tau);
    let over_threshold = a.risk > tau;
    let (components, penalty_applied) = match config.mode {
        ObjectiveMode::Equation1 => (
            ScoreComponents {
                utility_term: a.utility,
                agency_term: -(lambda * a.agency_penalty),
                risk_term: 0.0,
                safety_penalty: if over_threshold { -(beta * a.risk) } else { 0.0 },
            },
            over_threshold,
        ),
        ObjectiveMode::Algorithm1 => {
            let penalize = over_threshold && a.intervention_required;
            (
                ScoreComponents {
                    utility_term: lambda * a.utility,
                    agency_term: -a.agency_penalty,
                    risk_term: (1.0 - lambda) * a.risk,
                    safety_penalty: if penalize { -(beta * a.risk) } else { 0.0 },
                },
                penalize,
            )
        }
    };
    Ok(ScoredAction {
        action_id: a.action_id,
        kind: a.kind,
        objective_value: components.total(),
        penalty_applied,
        components,
    })
}

/// Argmax of the objective; ties go to the lowest `action_id`.
pub fn select_action(candidates: &[CandidateAction], config: &UserConfig) -> Result<Decision, DecisionError> {
    if candidates.is_empty() {
        return Err(DecisionError::EmptyCandidates);
    }
    let mut seen = BTreeSet::new();
    for a in candidates {
        if !seen.insert(a.action_id) {
            return Err(DecisionError::DuplicateActionId(a.action_id));
        }
        check_action(a)?;
    }
    let all_scored = candidates.iter().map(|a| score_action(a, config)).collect::<Result<Vec<_>, _>>()?;

    let mut best = 0;
    for (i, s) in all_scored.iter().enumerate().skip(1) {
        let b = &all_scored[best];
        if s.objective_value > b.objective_value
            || (s.objective_value == b.objective_value && s.action_id < b.action_id)
        {
            best = i;
        }
    }
    let chosen = all_scored[best].clone();
    let explanation = explain(&chosen, &all_scored, config);
    Ok(Decision { chosen, all_scored, explanation, override_available: true })
}

fn runner_up<'a>(chosen: &ScoredAction, all: &'a [ScoredAction]) -> Option<&'a ScoredAction> {
    all.iter().filter(|s| s.action_id != chosen.action_id).fold(None, |acc, s| match acc {
        None => Some(s),
        Some(b) if s.objective_value > b.objective_value
            || (s.objective_value == b.objective_value && s.action_id < b.action_id) =>
        {
            Some(s)
        }
        keep => keep,
    })
}

fn explain(chosen: &ScoredAction, all: &[ScoredAction], config: &UserConfig) -> String {
    let mut text = format!(
        "Chose action {} ({}) with score {:.4}.",
        chosen.action_id, chosen.kind, chosen.objective_value
    );
    if chosen.penalty_applied {
        text.push_str(&format!(
            " Its risk exceeds your tolerance {:.2}, so a safety penalty of {:.4} applied.",
            config.tau, -chosen.components.safety_penalty
        ));
    }
    match runner_up(chosen, all) {
        None => text.push_str(" It was the only option."),
        Some(r) => {
            let (c, o) = (chosen.components, r.components);
            text.push_str(&format!(
                " Versus action {} ({}, score {:.4}): utility {:+.4}, agency {:+.4}, risk {:+.4}, safety penalty {:+.4}.",
                r.action_id,
                r.kind,
                r.objective_value,
                c.utility_term - o.utility_term,
                c.agency_term - o.agency_term,
                c.risk_term - o.risk_term,
                c.safety_penalty - o.safety_penalty,
            ));
            if r.objective_value == chosen.objective_value {
                text.push_str(" Tied; the lower action id wins.");
            }
        }
    }
    text.push_str(" You can override this choice.");
    text
}
