//! Feed curation from user-set category intensities, ad opt-outs, a quick
//! friends-only toggle and per-post overrides.
//!
//! Visibility of a post:
//!
//! 1. base = intensity of its category (0.5 with a warning when unknown);
//! 2. zero intensity hides the post outright, whatever the overrides say;
//! 3. `more_like_this` on any post of the category adds 0.2 (capped at 1),
//!    `less_like_this` subtracts 0.2 (floored at 0);
//! 4. muted authors, non-friends under `friends_only`, and blocked ad
//!    categories all force 0.
//!
//! A post with score 0 is hidden with an explanation naming the rule.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{CurationSettings, OverrideAction, PostContent, PostOverride, QuickToggle, UserConfig};

pub const UNKNOWN_CATEGORY_INTENSITY: f64 = 0.5;
pub const OVERRIDE_STEP: f64 = 0.2;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurationPolicy {
    pub intensities: BTreeMap<String, f64>,
    pub ad_blocklist: BTreeSet<String>,
    pub quick_toggle: QuickToggle,
    pub friends: BTreeSet<String>,
    pub post_overrides: BTreeMap<String, PostOverride>,
}

impl CurationPolicy {
    pub fn from_config(config: &UserConfig) -> Self {
        let CurationSettings { ad_blocklist, quick_toggle, friends, post_overrides } = config.curation.clone();
        Self { intensities: config.intensities.clone(), ad_blocklist, quick_toggle, friends, post_overrides }
    }

    pub fn with_intensity(mut self, category: &str, value: f64) -> Self {
        self.intensities.insert(category.to_string(), value);
        self
    }

    pub fn with_override(mut self, post_id: &str, action: OverrideAction) -> Self {
        self.post_overrides.insert(post_id.to_string(), PostOverride { action, category: None, author_id: None });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HideReason {
    AdCategoryBlocked,
    AuthorMuted,
    FriendsOnly,
    CategoryIntensityZero,
    ScoreZero,
}

impl HideReason {
    pub fn label(self) -> &'static str {
        match self {
            HideReason::AdCategoryBlocked => "ad category blocked",
            HideReason::AuthorMuted => "author muted",
            HideReason::FriendsOnly => "friends-only toggle",
            HideReason::CategoryIntensityZero => "category intensity 0",
            HideReason::ScoreZero => "lowered to 0 by less-like-this",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleItem {
    pub post_id: String,
    pub visibility_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenItem {
    pub post_id: String,
    pub reason: HideReason,
    pub explanation: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CuratedFeed {
    pub visible: Vec<VisibleItem>,
    pub hidden: Vec<HiddenItem>,
    pub warnings: Vec<String>,
}

/// Overrides resolved to the category and author they act on.
#[derive(Debug, Default)]
struct Resolved {
    boosted: BTreeSet<String>,
    demoted: BTreeSet<String>,
    muted: BTreeSet<String>,
    warnings: Vec<String>,
}

fn resolve(policy: &CurationPolicy, page: &[PostContent]) -> Resolved {
    let mut r = Resolved::default();
    for (post_id, o) in &policy.post_overrides {
        let on_page = page.iter().find(|p| &p.post_id == post_id);
        let category = on_page.map(|p| p.category.clone()).or_else(|| o.category.clone());
        let author = on_page.map(|p| p.author_id.clone()).or_else(|| o.author_id.clone());
        match o.action {
            OverrideAction::MoreLikeThis | OverrideAction::LessLikeThis => match category {
                Some(c) if o.action == OverrideAction::MoreLikeThis => {
                    r.boosted.insert(c);
                }
                Some(c) => {
                    r.demoted.insert(c);
                }
                None => r.warnings.push(format!("override on unknown post {post_id} ignored")),
            },
            OverrideAction::MuteAuthor => match author {
                Some(a) => {
                    r.muted.insert(a);
                }
                None => r.warnings.push(format!("mute override on unknown post {post_id} ignored")),
            },
        }
    }
    r
}

fn score(post: &PostContent, policy: &CurationPolicy, r: &Resolved, warnings: &mut Vec<String>) -> (f64, Option<HideReason>) {
    if let Some(ad) = &post.ad_category {
        if policy.ad_blocklist.contains(ad) {
            return (0.0, Some(HideReason::AdCategoryBlocked));
        }
    }
    if r.muted.contains(&post.author_id) {
        return (0.0, Some(HideReason::AuthorMuted));
    }
    if policy.quick_toggle == QuickToggle::FriendsOnly && !policy.friends.contains(&post.author_id) {
        return (0.0, Some(HideReason::FriendsOnly));
    }
    let base = match policy.intensities.get(&post.category) {
        Some(v) => *v,
        None => {
            warnings.push(format!(
                "post {}: unknown category '{}', using intensity {UNKNOWN_CATEGORY_INTENSITY}",
                post.post_id, post.category
            ));
            UNKNOWN_CATEGORY_INTENSITY
        }
    };
    if base <= 0.0 {
        return (0.0, Some(HideReason::CategoryIntensityZero));
    }
    let mut s = base;
    if r.boosted.contains(&post.category) {
        s = (s + OVERRIDE_STEP).min(1.0);
    }
    if r.demoted.contains(&post.category) {
        s = (s - OVERRIDE_STEP).max(0.0);
    }
    if s <= 0.0 {
        return (0.0, Some(HideReason::ScoreZero));
    }
    (s, None)
}

pub fn score_visibility(post: &PostContent, policy: &CurationPolicy) -> f64 {
    let r = resolve(policy, std::slice::from_ref(post));
    let mut warnings = Vec::new();
    let (s, _) = score(post, policy, &r, &mut warnings);
    for w in warnings {
        tracing::warn!("{w}");
    }
    s
}

fn explain(post: &PostContent, reason: HideReason) -> String {
    match reason {
        HideReason::AdCategoryBlocked => format!(
            "Hidden: ad category '{}' is switched off in your ad settings.",
            post.ad_category.as_deref().unwrap_or("")
        ),
        HideReason::AuthorMuted => format!("Hidden: you muted {}.", post.author_id),
        HideReason::FriendsOnly => format!("Hidden: friends-only is on and {} is not on your friends list.", post.author_id),
        HideReason::CategoryIntensityZero => {
            format!("Hidden: category intensity 0 for '{}'. Raise the slider to see these posts.", post.category)
        }
        HideReason::ScoreZero => {
            format!("Hidden: your less-like-this choices lowered '{}' to zero.", post.category)
        }
    }
}

pub fn curate_feed(page: &[PostContent], policy: &CurationPolicy) -> CuratedFeed {
    let r = resolve(policy, page);
    let mut warnings = r.warnings.clone();
    let mut visible: Vec<(usize, VisibleItem)> = Vec::new();
    let mut hidden = Vec::new();
    for (pos, post) in page.iter().enumerate() {
        match score(post, policy, &r, &mut warnings) {
            (_, Some(reason)) => hidden.push(HiddenItem {
                post_id: post.post_id.clone(),
                reason,
                explanation: explain(post, reason),
            }),
            (s, None) => visible.push((pos, VisibleItem { post_id: post.post_id.clone(), visibility_score: s })),
        }
    }
    visible.sort_by(|a, b| b.1.visibility_score.total_cmp(&a.1.visibility_score).then(a.0.cmp(&b.0)));
    CuratedFeed { visible: visible.into_iter().map(|(_, v)| v).collect(), hidden, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(id: &str, author: &str, cat: &str) -> PostContent {
        PostContent::new(id, author, cat, "body")
    }

    fn policy() -> CurationPolicy {
        CurationPolicy::default().with_intensity("politics", 1.0).with_intensity("sports", 1.0)
    }

    #[test]
    fn zero_intensity_scores_zero() {
        let p = policy().with_intensity("politics", 0.0);
        assert_eq!(score_visibility(&post("1", "a", "politics"), &p), 0.0);
    }

    #[test]
    fn full_intensity_is_identity() {
        assert_eq!(score_visibility(&post("1", "a", "sports"), &policy()), 1.0);
    }

    #[test]
    fn more_like_this_on_other_post_boosts_category() {
        let mut p = policy().with_intensity("sports", 0.5);
        p.post_overrides.insert(
            "other".into(),
            PostOverride { action: OverrideAction::MoreLikeThis, category: Some("sports".into()), author_id: None },
        );
        let s = score_visibility(&post("1", "a", "sports"), &p);
        assert!((s - 0.7).abs() < 1e-12);
    }

    #[test]
    fn unknown_category_defaults_to_half() {
        let feed = curate_feed(&[post("1", "a", "gardening")], &policy());
        assert_eq!(feed.visible[0].visibility_score, 0.5);
        assert_eq!(feed.warnings.len(), 1);
    }

    #[test]
    fn identity_when_everything_is_on() {
        let page = vec![post("1", "a", "sports"), post("2", "b", "politics"), post("3", "c", "sports")];
        let feed = curate_feed(&page, &policy());
        let ids: Vec<_> = feed.visible.iter().map(|v| v.post_id.as_str()).collect();
        assert_eq!(ids, vec!["1", "2", "3"]);
        assert!(feed.hidden.is_empty());
    }

    #[test]
    fn zeroed_category_is_hidden_with_reason() {
        let page = vec![post("p1", "a", "politics"), post("p2", "b", "sports")];
        let feed = curate_feed(&page, &policy().with_intensity("politics", 0.0));
        assert_eq!(feed.visible.len(), 1);
        assert_eq!(feed.visible[0].post_id, "p2");
        assert_eq!(feed.hidden[0].post_id, "p1");
        assert_eq!(feed.hidden[0].reason.label(), "category intensity 0");
        assert!(feed.hidden[0].explanation.contains("category intensity 0"));
    }

    #[test]
    fn muted_author_hidden_across_categories() {
        let page = vec![
            post("1", "alice", "sports"),
            post("2", "troll", "sports"),
            post("3", "troll", "politics"),
            post("4", "bob", "politics"),
        ];
        let p = policy().with_override("2", OverrideAction::MuteAuthor);
        let feed = curate_feed(&page, &p);
        let hidden: Vec<_> = feed.hidden.iter().map(|h| (h.post_id.as_str(), h.reason)).collect();
        assert_eq!(hidden, vec![("2", HideReason::AuthorMuted), ("3", HideReason::AuthorMuted)]);
        assert_eq!(feed.visible.len(), 2);
    }

    #[test]
    fn friends_only_and_ads() {
        let mut ad = post("ad", "brand", "sports");
        ad.ad_category = Some("gambling".into());
        let mut p = policy();
        p.ad_blocklist.insert("gambling".into());
        p.quick_toggle = QuickToggle::FriendsOnly;
        p.friends.insert("alice".into());
        let feed = curate_feed(&[post("1", "alice", "sports"), post("2", "bob", "sports"), ad], &p);
        let reasons: Vec<_> = feed.hidden.iter().map(|h| h.reason).collect();
        assert_eq!(reasons, vec![HideReason::FriendsOnly, HideReason::AdCategoryBlocked]);
    }

    #[test]
    fn unresolvable_override_is_ignored_with_warning() {
        let p = policy().with_override("ghost", OverrideAction::MuteAuthor);
        let feed = curate_feed(&[post("1", "a", "sports")], &p);
        assert_eq!(feed.visible.len(), 1);
        assert!(feed.warnings[0].contains("ghost"));
    }

    #[test]
    fn orders_by_score_then_position() {
        let p = policy().with_intensity("news", 0.3).with_intensity("memes", 0.8);
        let page = vec![post("1", "a", "news"), post("2", "b", "memes"), post("3", "c", "news"), post("4", "d", "sports")];
        let ids: Vec<_> = curate_feed(&page, &p).visible.into_iter().map(|v| v.post_id).collect();
        assert_eq!(ids, vec!["4", "2", "1", "3"]);
    }
}
