//! Per-tick conflict resolution across patterns.
//!
//! Tiers are evaluated in order: recovery (0), integrity cues (1),
//! withdrawal (2), curation and rewrite (3). Each candidate group is decided
//! independently; the first tier whose decisions include an interjection
//! delivers exactly one, and every other interjection is suppressed. Passive
//! cues always pass through.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::{select_action, Decision, DecisionError};
use crate::model::{CandidateAction, InterventionKind, UserConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Rewrite,
    Integrity,
    Curation,
    Withdrawal,
    Recovery,
}

impl Pattern {
    pub fn tier(self) -> u8 {
        match self {
            Pattern::Recovery => 0,
            Pattern::Integrity => 1,
            Pattern::Withdrawal => 2,
            Pattern::Curation | Pattern::Rewrite => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    EventBatch,
    FeedPage,
    DraftSubmitted,
    InboundItem,
    RecoveryCommand,
    ConfigUpdate,
    Timer,
}

/// Candidates one pattern offers for one target (a post, a draft, the
/// session itself).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGroup {
    pub pattern: Pattern,
    pub target: String,
    pub actions: Vec<CandidateAction>,
}

impl CandidateGroup {
    pub fn new(pattern: Pattern, target: impl Into<String>, actions: Vec<CandidateAction>) -> Self {
        Self { pattern, target: target.into(), actions }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tick {
    pub session_id: String,
    pub trigger: Trigger,
    pub timestamp: i64,
    pub groups: Vec<CandidateGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDecision {
    pub pattern: Pattern,
    pub target: String,
    pub decision: Decision,
}

/// An action that reached the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delivered {
    pub pattern: Pattern,
    pub target: String,
    pub action_id: u32,
    pub kind: InterventionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suppressed {
    pub action: Delivered,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub passive_cues: Vec<Delivered>,
    pub interjection: Option<Delivered>,
    pub decisions: Vec<GroupDecision>,
    pub suppressed: Vec<Suppressed>,
    pub explanations: Vec<String>,
}

impl Resolution {
    pub fn is_vacuous(&self) -> bool {
        self.interjection.is_none() && self.passive_cues.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TickError {
    #[error("{pattern:?} candidates for {target} lack a no_op option")]
    MissingNoOp { pattern: Pattern, target: String },
    #[error("{pattern:?} candidates for {target}: {source}")]
    Decision {
        pattern: Pattern,
        target: String,
        #[source]
        source: DecisionError,
    },
}

fn delivered(group: &CandidateGroup, decision: &Decision) -> Delivered {
    let chosen = &decision.chosen;
    let payload = group.actions.iter().find(|a| a.action_id == chosen.action_id).and_then(|a| a.payload.clone());
    Delivered { pattern: group.pattern, target: group.target.clone(), action_id: chosen.action_id, kind: chosen.kind, payload }
}

pub fn resolve_tick(tick: &Tick, config: &UserConfig) -> Result<Resolution, TickError> {
    let mut decided = Vec::with_capacity(tick.groups.len());
    for group in &tick.groups {
        if !group.actions.iter().any(|a| a.kind == InterventionKind::NoOp) {
            return Err(TickError::MissingNoOp { pattern: group.pattern, target: group.target.clone() });
        }
        let decision = select_action(&group.actions, config).map_err(|source| TickError::Decision {
            pattern: group.pattern,
            target: group.target.clone(),
            source,
        })?;
        decided.push((group, decision));
    }

    // Stable by tier, so groups keep their gathered order within a tier.
    let mut order: Vec<usize> = (0..decided.len()).collect();
    order.sort_by_key(|&i| decided[i].0.pattern.tier());

    let mut res = Resolution::default();
    let mut winner: Option<(usize, u8)> = None;
    // Within the winning tier the highest-scoring interjection wins; ties go
    // to the earlier group.
    for &i in &order {
        let (group, d) = &decided[i];
        if !d.chosen.kind.is_interjection() {
            continue;
        }
        let tier = group.pattern.tier();
        match winner {
            None => winner = Some((i, tier)),
            Some((w, wt)) if wt == tier && d.chosen.objective_value > decided[w].1.chosen.objective_value => {
                winner = Some((i, tier))
            }
            _ => {}
        }
    }

    for &i in &order {
        let (group, d) = &decided[i];
        let action = delivered(group, d);
        match d.chosen.kind {
            InterventionKind::NoOp => {}
            InterventionKind::PassiveCue => res.passive_cues.push(action),
            _ if winner.map(|(w, _)| w) == Some(i) => {
                res.explanations.push(format!("{:?} for {}: {}", group.pattern, group.target, d.explanation));
                res.interjection = Some(action);
            }
            _ => {
                let (w, wt) = winner.expect("an interjection exists");
                let by = &decided[w].0;
                let reason = if wt < group.pattern.tier() {
                    format!("preempted by higher-priority {:?} action on {}", by.pattern, by.target)
                } else {
                    format!("outscored by {:?} action on {}", by.pattern, by.target)
                };
                res.suppressed.push(Suppressed { action, reason });
            }
        }
    }
    if res.interjection.is_none() {
        res.explanations.push(if res.passive_cues.is_empty() {
            "Nothing needed your attention.".to_string()
        } else {
            format!("Delivered {} passive cue(s); nothing interrupted you.", res.passive_cues.len())
        });
    }
    for (group, d) in decided {
        res.decisions.push(GroupDecision { pattern: group.pattern, target: group.target.clone(), decision: d });
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use InterventionKind::*;

    fn tick(groups: Vec<CandidateGroup>) -> Tick {
        Tick { session_id: "s".into(), trigger: Trigger::EventBatch, timestamp: 0, groups }
    }

    fn cue_group(target: &str) -> CandidateGroup {
        CandidateGroup::new(
            Pattern::Integrity,
            target,
            vec![CandidateAction::no_op(0, 0.6, 0.2), CandidateAction::new(1, PassiveCue, 0.7, 0.1)],
        )
    }

    fn pause_group() -> CandidateGroup {
        CandidateGroup::new(
            Pattern::Withdrawal,
            "session",
            vec![CandidateAction::no_op(0, 0.7, 0.9), CandidateAction::new(1, InterstitialPause, 0.5, 0.45)],
        )
    }

    fn shelter_group() -> CandidateGroup {
        CandidateGroup::new(
            Pattern::Recovery,
            "r1",
            vec![
                CandidateAction::no_op(0, 0.5, 0.9),
                CandidateAction::new(1, HideFilter, 0.5, 0.0).with_agency_penalty(0.0),
            ],
        )
    }

    #[test]
    fn passive_only_tick() {
        let r = resolve_tick(&tick(vec![cue_group("p1"), cue_group("p2")]), &UserConfig::default()).unwrap();
        assert!(r.interjection.is_none());
        assert_eq!(r.passive_cues.len(), 2);
        assert_eq!(r.decisions.len(), 2);
    }

    #[test]
    fn recovery_preempts_withdrawal() {
        let t = tick(vec![pause_group(), shelter_group(), cue_group("p1")]);
        let r = resolve_tick(&t, &UserConfig::default()).unwrap();
        let i = r.interjection.unwrap();
        assert_eq!((i.pattern, i.kind), (Pattern::Recovery, HideFilter));
        assert_eq!(r.suppressed.len(), 1);
        assert_eq!(r.suppressed[0].action.kind, InterstitialPause);
        assert!(r.suppressed[0].reason.contains("preempted"));
        assert_eq!(r.passive_cues.len(), 1);
    }

    #[test]
    fn all_no_op_is_vacuous() {
        let g = CandidateGroup::new(Pattern::Curation, "page", vec![CandidateAction::no_op(0, 0.5, 0.0)]);
        let r = resolve_tick(&tick(vec![g]), &UserConfig::default()).unwrap();
        assert!(r.is_vacuous());
    }

    #[test]
    fn missing_no_op_rejects() {
        let g = CandidateGroup::new(Pattern::Rewrite, "d", vec![CandidateAction::new(0, SoftPrompt, 0.5, 0.0)]);
        assert!(matches!(resolve_tick(&tick(vec![g]), &UserConfig::default()), Err(TickError::MissingNoOp { .. })));
    }

    #[test]
    fn same_tier_highest_score_wins() {
        let rw = |target: &str, u: f64| {
            CandidateGroup::new(
                Pattern::Rewrite,
                target,
                vec![CandidateAction::no_op(0, 0.0, 0.0), CandidateAction::new(1, RewriteSuggestion, u, 0.0)],
            )
        };
        let r = resolve_tick(&tick(vec![rw("a", 0.6), rw("b", 0.9)]), &UserConfig::default()).unwrap();
        assert_eq!(r.interjection.unwrap().target, "b");
        assert!(r.suppressed[0].reason.contains("outscored"));
    }
}
