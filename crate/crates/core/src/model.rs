//! Shared domain types: user configuration, candidate actions, posts and the
//! agency-penalty table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Interventions ordered from least to most coercive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    NoOp,
    PassiveCue,
    SoftPrompt,
    RewriteSuggestion,
    ReorderDemote,
    InterstitialPause,
    HideFilter,
    BlockLock,
}

impl InterventionKind {
    pub const ALL: [InterventionKind; 8] = [
        InterventionKind::NoOp,
        InterventionKind::PassiveCue,
        InterventionKind::SoftPrompt,
        InterventionKind::RewriteSuggestion,
        InterventionKind::ReorderDemote,
        InterventionKind::InterstitialPause,
        InterventionKind::HideFilter,
        InterventionKind::BlockLock,
    ];

    /// Whether the safety penalty may apply in the pseudocode-literal mode.
    /// Passive cues place no constraint on behavior.
    pub fn intervention_required(self) -> bool {
        !matches!(self, InterventionKind::NoOp | InterventionKind::PassiveCue)
    }

    /// Attention-demanding kinds; at most one is delivered per tick.
    pub fn is_interjection(self) -> bool {
        self.intervention_required()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InterventionKind::NoOp => "no_op",
            InterventionKind::PassiveCue => "passive_cue",
            InterventionKind::SoftPrompt => "soft_prompt",
            InterventionKind::RewriteSuggestion => "rewrite_suggestion",
            InterventionKind::ReorderDemote => "reorder_demote",
            InterventionKind::InterstitialPause => "interstitial_pause",
            InterventionKind::HideFilter => "hide_filter",
            InterventionKind::BlockLock => "block_lock",
        }
    }
}

impl fmt::Display for InterventionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Agency cost of an intervention kind, nondecreasing in coerciveness.
pub fn agency_penalty_for(kind: InterventionKind) -> f64 {
    match kind {
        InterventionKind::NoOp => 0.0,
        InterventionKind::PassiveCue => 0.1,
        InterventionKind::SoftPrompt => 0.2,
        InterventionKind::RewriteSuggestion => 0.3,
        InterventionKind::ReorderDemote => 0.4,
        InterventionKind::InterstitialPause => 0.5,
        InterventionKind::HideFilter => 0.7,
        InterventionKind::BlockLock => 0.9,
    }
}

/// One intervention option for a content item or moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "CandidateActionRepr")]
pub struct CandidateAction {
    pub action_id: u32,
    pub kind: InterventionKind,
    pub utility: f64,
    pub agency_penalty: f64,
    pub risk: f64,
    pub intervention_required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateActionRepr {
    action_id: u32,
    kind: InterventionKind,
    utility: f64,
    #[serde(default)]
    agency_penalty: Option<f64>,
    risk: f64,
    #[serde(default)]
    intervention_required: Option<bool>,
    #[serde(default)]
    payload: Option<String>,
}

impl From<CandidateActionRepr> for CandidateAction {
    fn from(r: CandidateActionRepr) -> Self {
        Self {
            action_id: r.action_id,
            kind: r.kind,
            utility: r.utility,
            agency_penalty: r.agency_penalty.unwrap_or_else(|| agency_penalty_for(r.kind)),
            risk: r.risk,
            intervention_required: r
                .intervention_required
                .unwrap_or_else(|| r.kind.intervention_required()),
            payload: r.payload,
        }
    }
}

impl CandidateAction {
    /// Builds a candidate whose agency penalty and `intervention_required`
    /// flag follow from `kind`.
    pub fn new(action_id: u32, kind: InterventionKind, utility: f64, risk: f64) -> Self {
        Self {
            action_id,
            kind,
            utility,
            agency_penalty: agency_penalty_for(kind),
            risk,
            intervention_required: kind.intervention_required(),
            payload: None,
        }
    }

    pub fn no_op(action_id: u32, utility: f64, risk: f64) -> Self {
        Self::new(action_id, InterventionKind::NoOp, utility, risk)
    }

    pub fn with_payload(mut self, payload: impl Into<String>) -> Self {
        self.payload = Some(payload.into());
        self
    }

    pub fn with_agency_penalty(mut self, omega: f64) -> Self {
        self.agency_penalty = omega;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediaDescriptor {
    pub kind: String,
    #[serde(default)]
    pub url: String,
}

/// A post as delivered by the feed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostContent {
    pub post_id: String,
    pub author_id: String,
    pub body: String,
    pub category: String,
    #[serde(default)]
    pub media: Vec<MediaDescriptor>,
    #[serde(default)]
    pub timestamp: i64,
    /// Present on sponsored posts: the ad category used by opt-outs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ad_category: Option<String>,
}

impl PostContent {
    pub fn new(
        post_id: impl Into<String>,
        author_id: impl Into<String>,
        category: impl Into<String>,
        body: impl Into<String>,
    ) -> Self {
        Self {
            post_id: post_id.into(),
            author_id: author_id.into(),
            body: body.into(),
            category: category.into(),
            media: Vec::new(),
            timestamp: 0,
            ad_category: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMode {
    /// `J = u − λΩ − β·[r > τ]·r`.
    #[default]
    Equation1,
    /// The pseudocode-literal variant: `J = λu + (1−λ)r − Ω`, minus `β·r`
    /// when `r > τ` and the intervention is required.
    Algorithm1,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternToggles {
    pub rewriter: bool,
    pub integrity: bool,
    pub curator: bool,
    pub withdrawal: bool,
    pub recovery: bool,
}

impl Default for PatternToggles {
    fn default() -> Self {
        Self { rewriter: true, integrity: true, curator: true, withdrawal: true, recovery: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternThresholds {
    /// Continuation risk above which a pause may be offered.
    pub tau_p4: f64,
    /// Toxicity at or above which inbound items are hidden in recovery mode.
    pub toxicity_hide: f64,
}

impl Default for PatternThresholds {
    fn default() -> Self {
        Self { tau_p4: 0.6, toxicity_hide: 0.8 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuickToggle {
    #[default]
    None,
    FriendsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverrideAction {
    MoreLikeThis,
    LessLikeThis,
    MuteAuthor,
}

/// A per-post override. `category` and `author_id` are captured when the user
/// acts so the override still resolves after the post leaves the page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostOverride {
    pub action: OverrideAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurationSettings {
    pub ad_blocklist: BTreeSet<String>,
    pub quick_toggle: QuickToggle,
    pub friends: BTreeSet<String>,
    pub post_overrides: BTreeMap<String, PostOverride>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionSettings {
    /// Offset of the user's local time from UTC; never taken from the host.
    pub utc_offset_minutes: i32,
    pub goal_topic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportResource {
    pub title: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecoverySettings {
    pub allowlist: BTreeSet<String>,
    pub support_resources: Vec<SupportResource>,
}

/// Paths to lexicons and the fact database; built-in lists when absent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResourcePaths {
    pub fact_db: Option<PathBuf>,
    pub bias_left: Option<PathBuf>,
    pub bias_right: Option<PathBuf>,
    pub profanity: Option<PathBuf>,
    pub insults: Option<PathBuf>,
    pub intensifiers: Option<PathBuf>,
    pub toxicity: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
}

/// An external rewrite provider. Disabled unless present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSettings {
    /// `host:port` of an HTTP endpoint accepting `POST /rewrite`.
    pub endpoint: String,
    #[serde(default = "default_provider_timeout")]
    pub timeout_ms: u64,
}

fn default_provider_timeout() -> u64 {
    1500
}

pub const DEFAULT_CATEGORIES: [&str; 7] =
    ["education", "friends", "memes", "news", "personal", "politics", "sports"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    pub schema_version: u32,
    #[serde(default = "defaults::lambda")]
    pub lambda: f64,
    #[serde(default = "defaults::beta")]
    pub beta: f64,
    #[serde(default = "defaults::tau")]
    pub tau: f64,
    #[serde(default)]
    pub mode: ObjectiveMode,
    #[serde(default)]
    pub patterns: PatternToggles,
    #[serde(default)]
    pub thresholds: PatternThresholds,
    #[serde(default = "defaults::categories")]
    pub categories: BTreeSet<String>,
    #[serde(default)]
    pub intensities: BTreeMap<String, f64>,
    #[serde(default)]
    pub curation: CurationSettings,
    #[serde(default)]
    pub session: SessionSettings,
    #[serde(default)]
    pub recovery: RecoverySettings,
    #[serde(default)]
    pub resources: ResourcePaths,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<ProviderSettings>,
}

mod defaults {
    use std::collections::BTreeSet;

    pub fn lambda() -> f64 {
        0.5
    }
    pub fn beta() -> f64 {
        2.0
    }
    pub fn tau() -> f64 {
        0.6
    }
    pub fn categories() -> BTreeSet<String> {
        super::DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect()
    }
}

impl Default for UserConfig {
    fn default() -> Self {
        let categories = defaults::categories();
        let intensities = categories.iter().map(|c| (c.clone(), 1.0)).collect();
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            lambda: defaults::lambda(),
            beta: defaults::beta(),
            tau: defaults::tau(),
            mode: ObjectiveMode::Equation1,
            patterns: PatternToggles::default(),
            thresholds: PatternThresholds::default(),
            categories,
            intensities,
            curation: CurationSettings::default(),
            session: SessionSettings::default(),
            recovery: RecoverySettings::default(),
            resources: ResourcePaths::default(),
            provider: None,
        }
    }
}

impl UserConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn intensity(&self, category: &str) -> Option<f64> {
        self.intensities.get(category).copied()
    }

    pub fn with_intensity(mut self, category: &str, value: f64) -> Self {
        self.categories.insert(category.to_string());
        self.intensities.insert(category.to_string(), value);
        self
    }

    /// Hex SHA-256 over the canonical JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config is not valid JSON for this schema: {0}")]
    Parse(String),
    #[error("invalid config: {}", format_fields(.0))]
    Invalid(Vec<FieldError>),
}

fn format_fields(fields: &[FieldError]) -> String {
    fields.iter().map(|f| format!("{}: {}", f.field, f.message)).collect::<Vec<_>>().join("; ")
}

impl ConfigError {
    /// Names of the offending fields, in check order.
    pub fn fields(&self) -> Vec<&str> {
        match self {
            ConfigError::Parse(_) => Vec::new(),
            ConfigError::Invalid(f) => f.iter().map(|e| e.field.as_str()).collect(),
        }
    }
}

fn check_unit(errors: &mut Vec<FieldError>, field: &str, value: f64) {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        errors.push(FieldError { field: field.to_string(), message: format!("{value} is outside [0, 1]") });
    }
}

fn check_nonneg(errors: &mut Vec<FieldError>, field: &str, value: f64) {
    if !value.is_finite() || value < 0.0 {
        errors.push(FieldError {
            field: field.to_string(),
            message: format!("{value} must be a finite non-negative number"),
        });
    }
}

fn normalize_name(name: &str) -> String {
    name.trim().to_lowercase()
}

/// Checks every range constraint and returns the normalized config:
/// category names trimmed and lowercased, every vocabulary category given an
/// intensity (1.0 when unset), every intensity key added to the vocabulary.
pub fn validate_config(config: UserConfig) -> Result<UserConfig, ConfigError> {
    let mut errors = Vec::new();
    if config.schema_version != CONFIG_SCHEMA_VERSION {
        errors.push(FieldError {
            field: "schema_version".into(),
            message: format!("unsupported version {}, expected {CONFIG_SCHEMA_VERSION}", config.schema_version),
        });
    }
    check_nonneg(&mut errors, "lambda", config.lambda);
    check_nonneg(&mut errors, "beta", config.beta);
    check_unit(&mut errors, "tau", config.tau);
    check_unit(&mut errors, "thresholds.tau_p4", config.thresholds.tau_p4);
    check_unit(&mut errors, "thresholds.toxicity_hide", config.thresholds.toxicity_hide);

    let mut intensities = BTreeMap::new();
    for (name, value) in &config.intensities {
        let key = normalize_name(name);
        if key.is_empty() {
            errors.push(FieldError { field: "intensity".into(), message: "empty category name".into() });
            continue;
        }
        check_unit(&mut errors, &format!("intensity.{key}"), *value);
        intensities.insert(key, *value);
    }
    let mut categories: BTreeSet<String> = BTreeSet::new();
    for c in &config.categories {
        let key = normalize_name(c);
        if key.is_empty() {
            errors.push(FieldError { field: "categories".into(), message: "empty category name".into() });
        } else {
            categories.insert(key);
        }
    }
    categories.extend(intensities.keys().cloned());
    for c in &categories {
        intensities.entry(c.clone()).or_insert(1.0);
    }
    if let Some(p) = &config.provider {
        if p.endpoint.trim().is_empty() {
            errors.push(FieldError { field: "provider.endpoint".into(), message: "must not be empty".into() });
        }
    }

    if !errors.is_empty() {
        return Err(ConfigError::Invalid(errors));
    }
    Ok(UserConfig { categories, intensities, ..config })
}
