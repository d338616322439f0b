//! Reference implementations the tests compare the crate against. They are
//! written from the documented rules, not from the crate's code.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use mediator::model::{CandidateAction, ObjectiveMode, PostContent, UserConfig};
use mediator::recovery::{Phase, RecoveryEvent};
use rand::Rng;
use serde::Deserialize;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Objective value of one candidate.
pub fn objective(a: &CandidateAction, c: &UserConfig) -> f64 {
    let over = a.risk > c.tau;
    match c.mode {
        ObjectiveMode::Equation1 => {
            let penalty = if over { -(c.beta * a.risk) } else { 0.0 };
            a.utility + -(c.lambda * a.agency_penalty) + 0.0 + penalty
        }
        ObjectiveMode::Algorithm1 => {
            let penalty = if over && a.intervention_required { -(c.beta * a.risk) } else { 0.0 };
            c.lambda * a.utility + -a.agency_penalty + (1.0 - c.lambda) * a.risk + penalty
        }
    }
}

/// Linear scan: best objective, ties to the lowest action id.
pub fn argmax(candidates: &[CandidateAction], c: &UserConfig) -> u32 {
    let mut best: Option<(f64, u32)> = None;
    for a in candidates {
        let j = objective(a, c);
        best = match best {
            None => Some((j, a.action_id)),
            Some((bj, bid)) if j > bj || (j == bj && a.action_id < bid) => Some((j, a.action_id)),
            keep => keep,
        };
    }
    best.expect("non-empty").1
}

fn unit(rng: &mut impl Rng, coarse: bool) -> f64 {
    if coarse {
        f64::from(rng.gen_range(0..=4u8)) / 4.0
    } else {
        rng.gen::<f64>()
    }
}

/// A random candidate set. Values come from a coarse grid half the time so
/// exact ties occur often.
pub fn random_candidates(rng: &mut impl Rng) -> Vec<CandidateAction> {
    use mediator::model::InterventionKind;
    let n = rng.gen_range(2..=16);
    let coarse = rng.gen_bool(0.5);
    let mut ids: Vec<u32> = (0..40).collect();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let id = ids.swap_remove(rng.gen_range(0..ids.len()));
        let kind = InterventionKind::ALL[rng.gen_range(0..InterventionKind::ALL.len())];
        let mut a = CandidateAction::new(id, kind, unit(rng, coarse), unit(rng, coarse));
        a.agency_penalty = unit(rng, coarse);
        a.intervention_required = rng.gen_bool(0.5);
        out.push(a);
    }
    out
}

pub fn random_config(rng: &mut impl Rng, mode: ObjectiveMode) -> UserConfig {
    UserConfig {
        lambda: rng.gen_range(0.0..2.0),
        beta: rng.gen_range(0.0..4.0),
        tau: rng.gen::<f64>(),
        mode,
        ..UserConfig::default()
    }
}

/// Expected recovery transitions, one row per (phase, event) pair that
/// changes state.
pub fn expected_transition(phase: Phase, event: RecoveryEvent) -> Phase {
    use Phase::*;
    use RecoveryEvent::*;
    match (phase, event) {
        (Inactive, UserActivate) | (Suggested, UserActivate) => Active,
        (Inactive, DetectorSuggest) => Suggested,
        (Suggested, UserDecline) => Inactive,
        (Suggested, TimerExpire) => Inactive,
        (Active, UserDeactivate) => CoolingDown,
        (CoolingDown, TimerExpire) => Inactive,
        (p, _) => p,
    }
}

/// Cooldown after a scripted response, in minutes.
pub fn next_cooldown(current: f64, accepted: bool) -> f64 {
    if accepted {
        (current / 2.0).max(5.0)
    } else {
        (current * 2.0).min(60.0)
    }
}

#[derive(Debug, Deserialize)]
pub struct AnnotatedPost {
    pub post: PostContent,
    pub expected_claims: usize,
    pub expected_conflicts: usize,
}

pub fn annotated_posts() -> Vec<AnnotatedPost> {
    let text = std::fs::read_to_string(fixture("posts.json")).expect("posts fixture");
    serde_json::from_str(&text).expect("posts fixture parses")
}

pub fn fact_config() -> UserConfig {
    let mut c = UserConfig::default();
    c.resources.fact_db = Some(fixture("facts.jsonl"));
    c
}

/// A random feed page over a small category and author vocabulary.
pub fn random_page(rng: &mut impl Rng) -> Vec<PostContent> {
    const CATS: [&str; 5] = ["news", "sports", "memes", "politics", "education"];
    let n = rng.gen_range(0..25);
    (0..n)
        .map(|i| {
            let mut p = PostContent::new(
                format!("p{i}"),
                format!("u{}", rng.gen_range(0..6)),
                CATS[rng.gen_range(0..CATS.len())],
                "body",
            );
            if rng.gen_bool(0.2) {
                p.ad_category = Some(["gambling", "retail"][rng.gen_range(0..2)].to_string());
            }
            p
        })
        .collect()
}

pub fn random_intensities(rng: &mut impl Rng) -> BTreeMap<String, f64> {
    ["news", "sports", "memes", "politics", "education"]
        .iter()
        .map(|c| {
            let v = match rng.gen_range(0..4) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.gen::<f64>(),
            };
            (c.to_string(), v)
        })
        .collect()
}
