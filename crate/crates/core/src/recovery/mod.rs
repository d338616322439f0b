//! Recovery mode: a shelter state machine over inbound replies, mentions and
//! direct messages.
//!
//! | phase | event | next |
//! |---|---|---|
//! | inactive | user_activate | active |
//! | inactive | detector_suggest | suggested |
//! | suggested | user_activate | active |
//! | suggested | user_decline | inactive |
//! | suggested | timer_expire | inactive (suggestion lapses) |
//! | active | user_deactivate | cooling_down (30 min timer) |
//! | cooling_down | timer_expire | inactive |
//!
//! Every other pair leaves the state unchanged. Nothing but `user_activate`
//! enters `active`.

mod evidence;

pub use evidence::{
    record_digest, verify_chain, verify_lines, EvidenceChain, EvidenceError, EvidenceFile, EvidenceItem,
    EvidenceRecord, InboundChannel, GENESIS_HASH,
};

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{defaults, WordList};
use crate::text::tokenize;

pub const COOLING_DOWN_MS: i64 = 30 * 60_000;
pub const SUGGESTION_TTL_MS: i64 = 10 * 60_000;
pub const BRIGADE_WINDOW_MS: i64 = 10 * 60_000;
pub const BRIGADE_MIN_ITEMS: usize = 10;
pub const BRIGADE_TOXICITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Inactive,
    Suggested,
    Active,
    CoolingDown,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Inactive, Phase::Suggested, Phase::Active, Phase::CoolingDown];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryEvent {
    UserActivate,
    DetectorSuggest,
    UserDecline,
    UserDeactivate,
    TimerExpire,
}

impl RecoveryEvent {
    pub const ALL: [RecoveryEvent; 5] = [
        RecoveryEvent::UserActivate,
        RecoveryEvent::DetectorSuggest,
        RecoveryEvent::UserDecline,
        RecoveryEvent::UserDeactivate,
        RecoveryEvent::TimerExpire,
    ];
}

/// A locally enforced exit: the feed stays locked until `until`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitPlan {
    pub kind: ExitKind,
    pub until: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitKind {
    ShortMute,
    FeedPause,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryState {
    pub phase: Phase,
    pub activated_at: Option<i64>,
    pub allowlist: BTreeSet<String>,
    pub timer: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_plan: Option<ExitPlan>,
}

impl RecoveryState {
    pub fn new(allowlist: BTreeSet<String>) -> Self {
        Self { phase: Phase::Inactive, activated_at: None, allowlist, timer: None, exit_plan: None }
    }

    pub fn is_active(&self) -> bool {
        self.phase == Phase::Active
    }

    pub fn timer_due(&self, now: i64) -> bool {
        self.timer.is_some_and(|t| now >= t)
    }

    pub fn feed_locked(&self, now: i64) -> bool {
        self.exit_plan.as_ref().is_some_and(|p| now < p.until)
    }
}

impl Default for RecoveryState {
    fn default() -> Self {
        Self::new(BTreeSet::new())
    }
}

/// Returns the next state and whether the pair was defined.
pub fn transition(state: &RecoveryState, event: RecoveryEvent, now: i64) -> (RecoveryState, bool) {
    use Phase::*;
    use RecoveryEvent::*;
    let mut next = state.clone();
    match (state.phase, event) {
        (Inactive, UserActivate) | (Suggested, UserActivate) => {
            next.phase = Active;
            next.activated_at = Some(now);
            next.timer = None;
        }
        (Inactive, DetectorSuggest) => {
            next.phase = Suggested;
            next.timer = Some(now + SUGGESTION_TTL_MS);
        }
        (Suggested, UserDecline) | (Suggested, TimerExpire) | (CoolingDown, TimerExpire) => {
            next.phase = Inactive;
            next.activated_at = None;
            next.timer = None;
            next.exit_plan = None;
        }
        (Active, UserDeactivate) => {
            next.phase = CoolingDown;
            next.timer = Some(now + COOLING_DOWN_MS);
        }
        (phase, event) => {
            tracing::debug!(?phase, ?event, "recovery transition ignored");
            return (next, false);
        }
    }
    (next, true)
}

pub fn plan_exit(state: &RecoveryState, kind: ExitKind, minutes: u32, now: i64) -> Result<RecoveryState, RecoveryError> {
    if state.phase != Phase::Active {
        return Err(RecoveryError::NotActive(state.phase));
    }
    let mut next = state.clone();
    next.exit_plan = Some(ExitPlan { kind, until: now + i64::from(minutes) * 60_000 });
    Ok(next)
}

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("recovery mode is not active (phase {0:?})")]
    NotActive(Phase),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InboundItem {
    pub item_id: String,
    pub sender_id: String,
    pub channel: InboundChannel,
    pub body: String,
    /// Precomputed toxicity; the configured estimator fills it when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toxicity: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InboundDecision {
    Deliver,
    Hide,
    QueueSupportiveReview,
}

/// Allowlisted senders always get through; otherwise toxicity at or above
/// `toxicity_hide` hides the item and anything below is held for review.
pub fn filter_inbound(
    state: &RecoveryState,
    sender_id: &str,
    toxicity: f64,
    toxicity_hide: f64,
) -> Result<InboundDecision, RecoveryError> {
    if !state.is_active() {
        return Err(RecoveryError::NotActive(state.phase));
    }
    Ok(if state.allowlist.contains(sender_id) {
        InboundDecision::Deliver
    } else if toxicity >= toxicity_hide {
        InboundDecision::Hide
    } else {
        InboundDecision::QueueSupportiveReview
    })
}

pub trait ToxicityEstimator: Send + Sync {
    fn toxicity(&self, text: &str) -> f64;
}

/// `1 − 0.55^hits` over a toxic-language lexicon.
#[derive(Debug, Clone)]
pub struct LexiconToxicity {
    lexicon: WordList,
}

impl LexiconToxicity {
    pub fn new(lexicon: WordList) -> Self {
        Self { lexicon }
    }

    pub fn builtin() -> Self {
        Self::new(WordList::parse(defaults::TOXICITY))
    }
}

impl ToxicityEstimator for LexiconToxicity {
    fn toxicity(&self, text: &str) -> f64 {
        let hits = self.lexicon.count(&tokenize(text)) as i32;
        1.0 - 0.55f64.powi(hits)
    }
}

/// Pile-on detector: enough toxic items inside a sliding window.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BrigadeDetector {
    recent: VecDeque<i64>,
}

impl BrigadeDetector {
    pub fn observe(&mut self, at: i64, toxicity: f64) -> bool {
        if toxicity >= BRIGADE_TOXICITY {
            self.recent.push_back(at);
        }
        while self.recent.front().is_some_and(|&t| at - t >= BRIGADE_WINDOW_MS) {
            self.recent.pop_front();
        }
        self.recent.len() >= BRIGADE_MIN_ITEMS
    }

    pub fn recent(&self) -> usize {
        self.recent.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldItem {
    pub item: InboundItem,
    pub toxicity: f64,
}

/// What a report bundle contains: evidence in order plus chain status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub generated_at: i64,
    pub chain_valid: bool,
    pub records: Vec<EvidenceRecord>,
    pub held_for_review: usize,
}

/// Per-user recovery machinery.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMode {
    pub state: RecoveryState,
    pub evidence: EvidenceChain,
    pub review_queue: Vec<HeldItem>,
    pub detector: BrigadeDetector,
}

impl RecoveryMode {
    pub fn new(allowlist: BTreeSet<String>) -> Self {
        Self { state: RecoveryState::new(allowlist), ..Self::default() }
    }

    pub fn apply(&mut self, event: RecoveryEvent, now: i64) -> bool {
        let (next, defined) = transition(&self.state, event, now);
        self.state = next;
        defined
    }

    /// Filters one item while active, capturing evidence for hidden ones.
    pub fn shelter(&mut self, item: &InboundItem, toxicity: f64, toxicity_hide: f64, now: i64) -> Result<InboundDecision, RecoveryError> {
        let decision = filter_inbound(&self.state, &item.sender_id, toxicity, toxicity_hide)?;
        match decision {
            InboundDecision::Hide => {
                let snapshot = EvidenceItem {
                    item_id: item.item_id.clone(),
                    sender_id: item.sender_id.clone(),
                    channel: item.channel,
                    body: item.body.clone(),
                    toxicity,
                };
                self.evidence.capture_evidence(snapshot, now)?;
            }
            InboundDecision::QueueSupportiveReview => {
                self.review_queue.push(HeldItem { item: item.clone(), toxicity })
            }
            InboundDecision::Deliver => {}
        }
        Ok(decision)
    }

    pub fn export_report(&self, now: i64) -> ReportBundle {
        ReportBundle {
            generated_at: now,
            chain_valid: self.evidence.verify().is_ok(),
            records: self.evidence.records().to_vec(),
            held_for_review: self.review_queue.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Phase::*;
    use RecoveryEvent::*;

    fn at(phase: Phase) -> RecoveryState {
        let mut s = RecoveryState::default();
        s.phase = phase;
        if matches!(phase, Active | CoolingDown) {
            s.activated_at = Some(0);
        }
        s
    }

    #[test]
    fn one_tap_activation() {
        let (s, ok) = transition(&at(Inactive), UserActivate, 5);
        assert!(ok);
        assert_eq!((s.phase, s.activated_at), (Active, Some(5)));
    }

    #[test]
    fn undefined_pair_is_noop() {
        let (s, ok) = transition(&at(Inactive), TimerExpire, 5);
        assert!(!ok);
        assert_eq!(s, at(Inactive));
    }

    #[test]
    fn declining_a_suggestion() {
        let (s, _) = transition(&at(Inactive), DetectorSuggest, 0);
        assert_eq!(s.phase, Suggested);
        assert_eq!(transition(&s, UserDecline, 1).0.phase, Inactive);
    }

    #[test]
    fn deactivation_cools_down_for_thirty_minutes() {
        let (s, _) = transition(&at(Active), UserDeactivate, 1_000);
        assert_eq!((s.phase, s.timer), (CoolingDown, Some(1_000 + COOLING_DOWN_MS)));
        assert!(s.activated_at.is_some());
        let (s, _) = transition(&s, TimerExpire, 1_000 + COOLING_DOWN_MS);
        assert_eq!((s.phase, s.activated_at, s.timer), (Inactive, None, None));
    }

    #[test]
    fn activated_at_iff_active_or_cooling() {
        for p in Phase::ALL {
            for e in RecoveryEvent::ALL {
                let (s, _) = transition(&at(p), e, 7);
                assert_eq!(s.activated_at.is_some(), matches!(s.phase, Active | CoolingDown), "{p:?} {e:?}");
            }
        }
    }

    #[test]
    fn filter_rules() {
        let mut s = at(Active);
        s.allowlist.insert("friend".into());
        assert_eq!(filter_inbound(&s, "friend", 0.95, 0.8).unwrap(), InboundDecision::Deliver);
        assert_eq!(filter_inbound(&s, "stranger", 0.9, 0.8).unwrap(), InboundDecision::Hide);
        assert_eq!(filter_inbound(&s, "stranger", 0.8, 0.8).unwrap(), InboundDecision::Hide);
        assert_eq!(filter_inbound(&s, "stranger", 0.1, 0.8).unwrap(), InboundDecision::QueueSupportiveReview);
        assert!(matches!(filter_inbound(&at(Inactive), "x", 0.9, 0.8), Err(RecoveryError::NotActive(Inactive))));
    }

    #[test]
    fn hidden_items_become_evidence() {
        let mut m = RecoveryMode::default();
        m.apply(UserActivate, 0);
        let item = InboundItem {
            item_id: "r1".into(),
            sender_id: "troll".into(),
            channel: InboundChannel::Reply,
            body: "you are pathetic".into(),
            toxicity: None,
        };
        assert_eq!(m.shelter(&item, 0.9, 0.8, 10).unwrap(), InboundDecision::Hide);
        assert_eq!(m.shelter(&item, 0.2, 0.8, 11).unwrap(), InboundDecision::QueueSupportiveReview);
        assert_eq!(m.evidence.len(), 1);
        assert_eq!(m.review_queue.len(), 1);
        let report = m.export_report(20);
        assert!(report.chain_valid);
        assert_eq!(report.held_for_review, 1);
    }

    #[test]
    fn brigade_needs_ten_toxic_items_in_ten_minutes() {
        let mut d = BrigadeDetector::default();
        for i in 0..9 {
            assert!(!d.observe(i * 1_000, 0.6));
        }
        assert!(!d.observe(9_500, 0.4));
        assert!(d.observe(10_000, 0.5));
        let mut d = BrigadeDetector::default();
        for i in 0..10 {
            // One item per 70 s: the window never holds ten.
            assert!(!d.observe(i * 70_000, 0.9));
        }
    }

    #[test]
    fn lexicon_toxicity() {
        let t = LexiconToxicity::builtin();
        assert_eq!(t.toxicity("have a nice day"), 0.0);
        assert!((t.toxicity("you are pathetic") - 0.45).abs() < 1e-12);
        assert!(t.toxicity("shut up you pathetic worthless clown") > 0.8);
    }

    #[test]
    fn exit_plan_requires_active() {
        assert!(plan_exit(&at(Inactive), ExitKind::FeedPause, 30, 0).is_err());
        let s = plan_exit(&at(Active), ExitKind::FeedPause, 30, 0).unwrap();
        assert!(s.feed_locked(29 * 60_000));
        assert!(!s.feed_locked(30 * 60_000));
    }
}
