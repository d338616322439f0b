//! The deterministic pipeline: inputs in, audit records out.
//!
//! Every accepted [`EngineInput`] is appended to an optional input log and
//! produces exactly one audit record, except user responses, which patch an
//! existing record. A recovery timer falling due before an input gets its own
//! record first. Given the same config and input stream the audit log is
//! reproduced exactly, which is what [`replay`] checks.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{
    compare_records, AuditError, AuditRecord, AuditStore, Divergence, Outcome, PostIntegrity, TickStatus, UserResponse,
};
use crate::context::{ContextError, ContextMonitor, SessionEvent, SessionSignals};
use crate::coordinator::{resolve_tick, CandidateGroup, Pattern, Resolution, Tick, Trigger};
use crate::curator::{curate_feed, CuratedFeed, CurationPolicy, VisibleItem};
use crate::integrity::{BiasLexicon, FactDb, FactRecord, IntegrityAssessor, IntegrityScore};
use crate::lexicon::{Replacements, WordList};
use crate::model::{validate_config, CandidateAction, ConfigError, InterventionKind, PostContent, UserConfig};
use crate::net::{NetworkLayer, SystemNetwork};
use crate::recovery::{
    plan_exit, ExitKind, InboundDecision, InboundItem, LexiconToxicity, RecoveryError, RecoveryEvent, RecoveryMode,
    RecoveryState, ToxicityEstimator,
};
use crate::rewriter::{DraftAnalysis, HttpRewriteProvider, RewriteLexicons, RewriteOffer, Rewriter};
use crate::withdrawal::{
    continuation_risk, maybe_intervene, pause_candidates, update_cadence, CadenceResponse, CadenceState, PromptDeck,
};

/// Session label for inputs that are not tied to a browsing session.
pub const USER_SCOPE: &str = "user";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum RecoveryCommand {
    Activate,
    Deactivate,
    Decline,
    Exit { kind: ExitKind, minutes: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "input", rename_all = "snake_case")]
pub enum EngineInput {
    Events { session_id: String, at: i64, events: Vec<SessionEvent> },
    FeedPage { session_id: String, at: i64, posts: Vec<PostContent> },
    Draft { session_id: String, at: i64, body: String },
    Inbound { at: i64, item: InboundItem },
    Recovery { at: i64, command: RecoveryCommand },
    Response { at: i64, seq: u64, response: UserResponse },
    /// A pause timed out without any interaction.
    Expired { at: i64, seq: u64 },
    ConfigUpdate { at: i64, config: Box<UserConfig> },
}

impl EngineInput {
    pub fn at(&self) -> i64 {
        match self {
            EngineInput::Events { at, .. }
            | EngineInput::FeedPage { at, .. }
            | EngineInput::Draft { at, .. }
            | EngineInput::Inbound { at, .. }
            | EngineInput::Recovery { at, .. }
            | EngineInput::Response { at, .. }
            | EngineInput::Expired { at, .. }
            | EngineInput::ConfigUpdate { at, .. } => *at,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("engine halted after an audit failure: {0}")]
    Halted(String),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("input log: {0}")]
    InputLog(std::io::Error),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error("input at {got} precedes the previous input at {last}")]
    TimeRegression { last: i64, got: i64 },
    #[error("event for session {got} in a batch for session {expected}")]
    SessionMismatch { expected: String, got: String },
    #[error("cannot load resource: {0}")]
    Resource(String),
}

impl EngineError {
    /// Errors caused by the caller's input rather than by the engine.
    pub fn is_client_error(&self) -> bool {
        match self {
            EngineError::Context(_)
            | EngineError::Config(_)
            | EngineError::Recovery(RecoveryError::NotActive(_))
            | EngineError::TimeRegression { .. }
            | EngineError::SessionMismatch { .. } => true,
            EngineError::Audit(e) => {
                matches!(e, AuditError::UnknownSeq(_) | AuditError::ResponseAlreadySet(_) | AuditError::NoneResponse)
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessedPost {
    pub post_id: String,
    pub score: IntegrityScore,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Detail {
    None,
    Events { accepted: usize, signals: Option<SessionSignals>, risk: f64 },
    Feed { feed: CuratedFeed, integrity: Vec<AssessedPost>, locked: bool },
    Draft { analysis: DraftAnalysis, offer: Option<RewriteOffer> },
    Inbound { toxicity: f64, decision: Option<InboundDecision> },
    Recovery { state: RecoveryState },
    Response { record: Box<AuditRecord> },
    Config { config: Box<UserConfig> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineOutput {
    /// Seqs of the audit records this input created or patched.
    pub seqs: Vec<u64>,
    pub status: Option<TickStatus>,
    pub resolution: Option<Resolution>,
    pub detail: Detail,
}

/// First line of an input log: everything besides the inputs that the
/// engine was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputLogHeader {
    pub config: UserConfig,
    /// Fact records supplied directly rather than through a config path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facts: Option<Vec<FactRecord>>,
}

pub struct InputLog {
    file: File,
}

impl InputLog {
    pub fn create(path: &Path, header: &InputLogHeader) -> std::io::Result<Self> {
        let mut file = OpenOptions::new().create(true).write(true).truncate(true).open(path)?;
        let mut line = serde_json::to_vec(header).map_err(std::io::Error::other)?;
        line.push(b'\n');
        file.write_all(&line)?;
        file.sync_data()?;
        Ok(Self { file })
    }

    pub fn append(&mut self, input: &EngineInput) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(input).map_err(std::io::Error::other)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()
    }

    pub fn read(path: &Path) -> std::io::Result<(InputLogHeader, Vec<EngineInput>)> {
        let mut lines = BufReader::new(File::open(path)?).lines();
        let header = lines
            .next()
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "input log has no header"))??;
        let header: InputLogHeader = serde_json::from_str(&header).map_err(std::io::Error::other)?;
        let mut inputs = Vec::new();
        for line in lines {
            let line = line?;
            if !line.trim().is_empty() {
                inputs.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
            }
        }
        Ok((header, inputs))
    }
}

pub struct EngineOptions {
    pub net: Arc<dyn NetworkLayer>,
    pub facts: Option<Vec<FactRecord>>,
    pub audit: AuditStore,
    pub input_log: Option<PathBuf>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self { net: Arc::new(SystemNetwork), facts: None, audit: AuditStore::in_memory(), input_log: None }
    }
}

struct Resources {
    assessor: IntegrityAssessor,
    rewriter: Rewriter,
    toxicity: Box<dyn ToxicityEstimator>,
    prompts: PromptDeck,
}

fn load_resources(config: &UserConfig, facts: Option<&[FactRecord]>, net: &Arc<dyn NetworkLayer>) -> Result<Resources, EngineError> {
    let res = &config.resources;
    let err = |e: &dyn std::fmt::Display| EngineError::Resource(e.to_string());
    let words = |path: &Option<PathBuf>, builtin: WordList| -> Result<WordList, EngineError> {
        match path {
            Some(p) => WordList::load(p).map_err(|e| err(&e)),
            None => Ok(builtin),
        }
    };
    let db = match (facts, &res.fact_db) {
        (Some(records), _) => FactDb::new(records.iter().cloned()),
        (None, Some(p)) => FactDb::load(p).map_err(|e| err(&e))?,
        (None, None) => FactDb::default(),
    };
    let builtin_bias = BiasLexicon::builtin();
    let bias = BiasLexicon { left: words(&res.bias_left, builtin_bias.left)?, right: words(&res.bias_right, builtin_bias.right)? };
    let builtin_rw = RewriteLexicons::builtin();
    let intensifiers = match &res.intensifiers {
        Some(p) => Replacements::load(p).map_err(|e| err(&e))?,
        None => builtin_rw.intensifiers,
    };
    let lexicons = RewriteLexicons {
        profanity: words(&res.profanity, builtin_rw.profanity)?,
        insults: words(&res.insults, builtin_rw.insults)?,
        intensifiers,
        accusation_verbs: builtin_rw.accusation_verbs,
    };
    let mut rewriter = Rewriter { lexicons, ..Rewriter::default() };
    if let Some(p) = &config.provider {
        rewriter.provider = Some(Box::new(HttpRewriteProvider::new(p.endpoint.clone(), Arc::clone(net))));
        rewriter.deadline = Duration::from_millis(p.timeout_ms);
    }
    let toxicity: Box<dyn ToxicityEstimator> = match &res.toxicity {
        Some(p) => Box::new(LexiconToxicity::new(WordList::load(p).map_err(|e| err(&e))?)),
        None => Box::new(LexiconToxicity::builtin()),
    };
    let prompts = match &res.prompts {
        Some(p) => PromptDeck::parse(&std::fs::read_to_string(p).map_err(|e| err(&e))?),
        None => PromptDeck::builtin(),
    };
    Ok(Resources { assessor: IntegrityAssessor::new(db, Some(bias)), rewriter, toxicity, prompts })
}

fn wall_clock_ms() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as i64)
}

const SUGGEST_RECOVERY: &str = "A lot of hostile replies are arriving at once. Turn on recovery mode?";

pub struct Engine {
    config: UserConfig,
    digest: String,
    monitor: ContextMonitor,
    cadence: CadenceState,
    pauses_shown: u64,
    pending_pauses: BTreeSet<u64>,
    recovery: RecoveryMode,
    resources: Resources,
    facts: Option<Vec<FactRecord>>,
    audit: AuditStore,
    input_log: Option<InputLog>,
    net: Arc<dyn NetworkLayer>,
    last_at: Option<i64>,
    halted: Option<String>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("digest", &self.digest).field("audit", &self.audit).finish_non_exhaustive()
    }
}

impl Engine {
    pub fn new(config: UserConfig) -> Result<Self, EngineError> {
        Self::with_options(config, EngineOptions::default())
    }

    pub fn with_options(config: UserConfig, opts: EngineOptions) -> Result<Self, EngineError> {
        let config = validate_config(config)?;
        let resources = load_resources(&config, opts.facts.as_deref(), &opts.net)?;
        let input_log = match &opts.input_log {
            Some(p) => Some(
                InputLog::create(p, &InputLogHeader { config: config.clone(), facts: opts.facts.clone() })
                    .map_err(EngineError::InputLog)?,
            ),
            None => None,
        };
        Ok(Self {
            digest: config.digest(),
            recovery: RecoveryMode::new(config.recovery.allowlist.clone()),
            config,
            monitor: ContextMonitor::new(),
            cadence: CadenceState::default(),
            pauses_shown: 0,
            pending_pauses: BTreeSet::new(),
            resources,
            facts: opts.facts,
            audit: opts.audit,
            input_log,
            net: opts.net,
            last_at: None,
            halted: None,
        })
    }

    pub fn config(&self) -> &UserConfig {
        &self.config
    }

    pub fn config_digest(&self) -> &str {
        &self.digest
    }

    pub fn audit(&self) -> &AuditStore {
        &self.audit
    }

    pub fn cadence(&self) -> &CadenceState {
        &self.cadence
    }

    pub fn recovery(&self) -> &RecoveryMode {
        &self.recovery
    }

    pub fn monitor(&self) -> &ContextMonitor {
        &self.monitor
    }

    /// Logical time of the last accepted input.
    pub fn last_input_at(&self) -> Option<i64> {
        self.last_at
    }

    /// Stateless integrity assessment; no audit record.
    pub fn assess(&self, post: &PostContent) -> IntegrityScore {
        self.resources.assessor.assess(post)
    }

    /// Draft analysis without recording anything.
    pub fn analyze_draft(&self, body: &str) -> DraftAnalysis {
        self.resources.rewriter.analyze(body)
    }

    pub fn apply(&mut self, input: EngineInput) -> Result<EngineOutput, EngineError> {
        if let Some(why) = &self.halted {
            return Err(EngineError::Halted(why.clone()));
        }
        self.validate(&input)?;
        let result = self.run(input);
        if let Err(e @ (EngineError::Audit(AuditError::Storage(_)) | EngineError::InputLog(_))) = &result {
            tracing::error!(error = %e, "halting engine");
            self.halted = Some(e.to_string());
        }
        result
    }

    fn validate(&self, input: &EngineInput) -> Result<(), EngineError> {
        let at = input.at();
        if let Some(last) = self.last_at {
            if at < last {
                return Err(EngineError::TimeRegression { last, got: at });
            }
        }
        match input {
            EngineInput::Events { session_id, events, .. } => {
                let mut probe = self.monitor.clone();
                for e in events {
                    if &e.session_id != session_id {
                        return Err(EngineError::SessionMismatch { expected: session_id.clone(), got: e.session_id.clone() });
                    }
                    probe.ingest_event(e)?;
                }
            }
            EngineInput::Response { seq, response, .. } => {
                if *response == UserResponse::None {
                    return Err(AuditError::NoneResponse.into());
                }
                self.check_respondable(*seq)?;
            }
            EngineInput::Expired { seq, .. } => self.check_respondable(*seq)?,
            EngineInput::Recovery { command: RecoveryCommand::Exit { .. }, .. } => {
                if !self.recovery.state.is_active() {
                    return Err(RecoveryError::NotActive(self.recovery.state.phase).into());
                }
            }
            EngineInput::ConfigUpdate { config, .. } => {
                validate_config((**config).clone())?;
            }
            _ => {}
        }
        Ok(())
    }

    fn check_respondable(&self, seq: u64) -> Result<(), AuditError> {
        match self.audit.get(seq) {
            None => Err(AuditError::UnknownSeq(seq)),
            Some(r) if r.user_response != UserResponse::None => Err(AuditError::ResponseAlreadySet(seq)),
            Some(_) => Ok(()),
        }
    }

    fn run(&mut self, input: EngineInput) -> Result<EngineOutput, EngineError> {
        let at = input.at();
        if let Some(log) = &mut self.input_log {
            log.append(&input).map_err(EngineError::InputLog)?;
        }
        self.last_at = Some(at);
        let mut seqs = Vec::new();
        if self.recovery.state.timer_due(at) {
            let defined = self.recovery.apply(RecoveryEvent::TimerExpire, at);
            let outcome = Outcome::Recovery { event: "timer_expire".into(), phase: self.recovery.state.phase, defined };
            seqs.push(self.record(USER_SCOPE, Trigger::Timer, at, Vec::new(), outcome)?.0);
        }
        let mut out = match input {
            EngineInput::Events { session_id, at, events } => self.on_events(&session_id, at, &events)?,
            EngineInput::FeedPage { session_id, at, posts } => self.on_feed(&session_id, at, &posts)?,
            EngineInput::Draft { session_id, at, body } => self.on_draft(&session_id, at, &body)?,
            EngineInput::Inbound { at, item } => self.on_inbound(at, &item)?,
            EngineInput::Recovery { at, command } => self.on_recovery(at, command)?,
            EngineInput::Response { seq, response, .. } => self.on_response(seq, response, None)?,
            EngineInput::Expired { seq, .. } => {
                self.on_response(seq, UserResponse::Dismissed, Some(CadenceResponse::Avoided))?
            }
            EngineInput::ConfigUpdate { at, config } => self.on_config(at, *config)?,
        };
        seqs.append(&mut out.seqs);
        out.seqs = seqs;
        Ok(out)
    }

    fn resolve(&self, session_id: &str, trigger: Trigger, at: i64, groups: Vec<CandidateGroup>) -> Result<Resolution, String> {
        let tick = Tick { session_id: session_id.to_string(), trigger, timestamp: at, groups };
        resolve_tick(&tick, &self.config).map_err(|e| {
            tracing::warn!(error = %e, "tick rejected");
            e.to_string()
        })
    }

    /// Appends the record for a resolved (or rejected) tick.
    fn commit(
        &mut self,
        session_id: &str,
        trigger: Trigger,
        at: i64,
        res: Result<Resolution, String>,
        outcome: Outcome,
    ) -> Result<(u64, Option<Resolution>), EngineError> {
        let (mut rec, res) = match res {
            Ok(res) => {
                (AuditRecord::from_resolution(session_id, trigger, at, res.clone(), outcome, &self.digest), Some(res))
            }
            Err(reason) => (AuditRecord::rejected(session_id, trigger, at, reason, &self.digest), None),
        };
        rec.recorded_at = wall_clock_ms();
        let seq = self.audit.append(rec)?;
        Ok((seq, res))
    }

    fn record(
        &mut self,
        session_id: &str,
        trigger: Trigger,
        at: i64,
        groups: Vec<CandidateGroup>,
        outcome: Outcome,
    ) -> Result<(u64, Option<Resolution>), EngineError> {
        let res = self.resolve(session_id, trigger, at, groups);
        self.commit(session_id, trigger, at, res, outcome)
    }

    fn output(seq: u64, res: Option<Resolution>, detail: Detail) -> EngineOutput {
        let status = Some(if res.is_some() { TickStatus::Resolved } else { TickStatus::Rejected });
        EngineOutput { seqs: vec![seq], status, resolution: res, detail }
    }

    fn on_events(&mut self, session_id: &str, at: i64, events: &[SessionEvent]) -> Result<EngineOutput, EngineError> {
        for e in events {
            self.monitor.ingest_event(e)?;
        }
        let live = self.monitor.session(session_id).filter(|s| !s.ended);
        let signals = live.map(|s| s.signals(at, &self.config.session));
        let risk = signals.as_ref().map_or(0.0, continuation_risk);
        let mut groups = Vec::new();
        let mut pause = false;
        if self.config.patterns.withdrawal && signals.is_some() {
            let prompt = self.resources.prompts.pick(self.pauses_shown);
            if let Some(m) = maybe_intervene(risk, &self.cadence, at, self.config.thresholds.tau_p4, prompt) {
                groups.push(CandidateGroup::new(Pattern::Withdrawal, session_id, pause_candidates(&m)));
                pause = true;
            }
        }
        let outcome = Outcome::Session { signals: signals.clone(), risk, cooldown_minutes: self.cadence.cooldown_minutes };
        let (seq, res) = self.record(session_id, Trigger::EventBatch, at, groups, outcome)?;
        let shown = pause
            && res.as_ref().and_then(|r| r.interjection.as_ref()).is_some_and(|i| i.kind == InterventionKind::InterstitialPause);
        if shown {
            self.cadence.mark_shown(at);
            self.pauses_shown += 1;
            self.pending_pauses.insert(seq);
        }
        Ok(Self::output(seq, res, Detail::Events { accepted: events.len(), signals, risk }))
    }

    fn on_feed(&mut self, session_id: &str, at: i64, posts: &[PostContent]) -> Result<EngineOutput, EngineError> {
        let mut groups = Vec::new();
        let locked = self.recovery.state.feed_locked(at);
        let identity = CuratedFeed {
            visible: posts.iter().map(|p| VisibleItem { post_id: p.post_id.clone(), visibility_score: 1.0 }).collect(),
            hidden: Vec::new(),
            warnings: Vec::new(),
        };
        let curated = if locked {
            groups.push(CandidateGroup::new(
                Pattern::Recovery,
                "feed",
                vec![
                    CandidateAction::no_op(0, 0.3, 0.0),
                    CandidateAction::new(1, InterventionKind::BlockLock, 0.9, 0.0)
                        .with_agency_penalty(0.0)
                        .with_payload("Your feed is paused as you planned."),
                ],
            ));
            None
        } else if self.config.patterns.curator {
            let feed = curate_feed(posts, &CurationPolicy::from_config(&self.config));
            let changed = !feed.hidden.is_empty() || feed.visible.iter().zip(posts).any(|(v, p)| v.post_id != p.post_id);
            if changed {
                // Filtering the user configured costs them no autonomy.
                let kind = if feed.hidden.is_empty() { InterventionKind::ReorderDemote } else { InterventionKind::HideFilter };
                let summary = format!("{} shown, {} hidden by your feed settings", feed.visible.len(), feed.hidden.len());
                groups.push(CandidateGroup::new(
                    Pattern::Curation,
                    "page",
                    vec![
                        CandidateAction::no_op(0, 0.4, 0.0),
                        CandidateAction::new(1, kind, 0.9, 0.0).with_agency_penalty(0.0).with_payload(summary),
                    ],
                ));
            }
            Some(feed)
        } else {
            None
        };

        let shown_ids: Vec<String> = if locked {
            Vec::new()
        } else {
            curated.as_ref().unwrap_or(&identity).visible.iter().map(|v| v.post_id.clone()).collect()
        };
        let mut assessed = Vec::new();
        if self.config.patterns.integrity {
            for id in &shown_ids {
                let post = posts.iter().find(|p| &p.post_id == id).expect("visible ids come from the page");
                let score = self.resources.assessor.assess(post);
                let r = 1.0 - score.s_fact;
                groups.push(CandidateGroup::new(
                    Pattern::Integrity,
                    id.clone(),
                    vec![
                        CandidateAction::no_op(0, 0.6, r),
                        CandidateAction::new(1, InterventionKind::PassiveCue, 0.7, r * 0.5).with_payload(score.explanations.fact.clone()),
                    ],
                ));
                assessed.push(AssessedPost { post_id: id.clone(), score });
            }
        }

        let res = self.resolve(session_id, Trigger::FeedPage, at, groups);
        // Curation applies only if its action was delivered.
        let applied = res.as_ref().ok().and_then(|r| r.interjection.as_ref()).is_some_and(|i| i.pattern == Pattern::Curation);
        let feed = if locked {
            CuratedFeed { visible: Vec::new(), hidden: Vec::new(), warnings: vec!["feed paused by your exit plan".into()] }
        } else {
            match curated {
                Some(f) if applied => f,
                Some(f) => CuratedFeed { warnings: f.warnings, ..identity },
                None => identity,
            }
        };
        let outcome = Outcome::Feed {
            visible: feed.visible.iter().map(|v| v.post_id.clone()).collect(),
            hidden: feed.hidden.clone(),
            integrity: assessed
                .iter()
                .map(|a| PostIntegrity {
                    post_id: a.post_id.clone(),
                    s_fact: a.score.s_fact,
                    s_ai: a.score.s_ai,
                    s_bias: a.score.s_bias,
                })
                .collect(),
            locked,
        };
        let (seq, res) = self.commit(session_id, Trigger::FeedPage, at, res, outcome)?;
        Ok(Self::output(seq, res, Detail::Feed { feed, integrity: assessed, locked }))
    }

    fn on_draft(&mut self, session_id: &str, at: i64, body: &str) -> Result<EngineOutput, EngineError> {
        let analysis = self.resources.rewriter.analyze(body);
        let mut groups = Vec::new();
        let mut offer = None;
        if self.config.patterns.rewriter && analysis.risk > 0.0 {
            let o = self.resources.rewriter.offer(body, &analysis);
            let mut suggest = CandidateAction::new(1, InterventionKind::RewriteSuggestion, 0.6, analysis.risk * 0.5);
            if let Some(first) = o.suggestions.first() {
                suggest = suggest.with_payload(first.text.clone());
            }
            groups.push(CandidateGroup::new(
                Pattern::Rewrite,
                "draft",
                vec![CandidateAction::no_op(0, 0.6, analysis.risk), suggest],
            ));
            offer = Some(o);
        }
        let outcome = Outcome::Draft {
            risk: analysis.risk,
            risk_categories: analysis.risk_categories.clone(),
            suggestions: offer.as_ref().map_or(0, |o| o.suggestions.len()),
        };
        let (seq, res) = self.record(session_id, Trigger::DraftSubmitted, at, groups, outcome)?;
        Ok(Self::output(seq, res, Detail::Draft { analysis, offer }))
    }

    fn on_inbound(&mut self, at: i64, item: &InboundItem) -> Result<EngineOutput, EngineError> {
        let toxicity = item.toxicity.unwrap_or_else(|| self.resources.toxicity.toxicity(&item.body)).clamp(0.0, 1.0);
        let brigade = self.recovery.detector.observe(at, toxicity);
        let mut groups = Vec::new();
        let mut decision = None;
        let mut evidence_seq = None;
        let mut suggest = false;
        if self.config.patterns.recovery {
            if self.recovery.state.is_active() {
                let d = self.recovery.shelter(item, toxicity, self.config.thresholds.toxicity_hide, at)?;
                if d == InboundDecision::Hide {
                    evidence_seq = self.recovery.evidence.records().last().map(|r| r.seq);
                    groups.push(CandidateGroup::new(
                        Pattern::Recovery,
                        item.item_id.clone(),
                        vec![
                            CandidateAction::no_op(0, 0.5, toxicity),
                            CandidateAction::new(1, InterventionKind::HideFilter, 0.6, 0.0).with_agency_penalty(0.0),
                        ],
                    ));
                }
                decision = Some(d);
            } else if brigade && self.recovery.state.phase == crate::recovery::Phase::Inactive {
                groups.push(CandidateGroup::new(
                    Pattern::Recovery,
                    "recovery",
                    vec![
                        CandidateAction::no_op(0, 0.5, 0.8),
                        CandidateAction::new(1, InterventionKind::SoftPrompt, 0.5, 0.4).with_payload(SUGGEST_RECOVERY),
                    ],
                ));
                suggest = true;
            }
        }
        let outcome = Outcome::Inbound { item_id: item.item_id.clone(), toxicity, decision, evidence_seq, brigade };
        let (seq, res) = self.record(USER_SCOPE, Trigger::InboundItem, at, groups, outcome)?;
        if suggest && res.as_ref().and_then(|r| r.interjection.as_ref()).is_some_and(|i| i.kind == InterventionKind::SoftPrompt) {
            self.recovery.apply(RecoveryEvent::DetectorSuggest, at);
        }
        Ok(Self::output(seq, res, Detail::Inbound { toxicity, decision }))
    }

    fn on_recovery(&mut self, at: i64, command: RecoveryCommand) -> Result<EngineOutput, EngineError> {
        let event = match command {
            RecoveryCommand::Activate => "user_activate",
            RecoveryCommand::Deactivate => "user_deactivate",
            RecoveryCommand::Decline => "user_decline",
            RecoveryCommand::Exit { .. } => "exit_plan",
        };
        let defined = match command {
            RecoveryCommand::Activate => {
                self.recovery.state.allowlist = self.config.recovery.allowlist.clone();
                self.recovery.apply(RecoveryEvent::UserActivate, at)
            }
            RecoveryCommand::Deactivate => self.recovery.apply(RecoveryEvent::UserDeactivate, at),
            RecoveryCommand::Decline => self.recovery.apply(RecoveryEvent::UserDecline, at),
            RecoveryCommand::Exit { kind, minutes } => {
                self.recovery.state = plan_exit(&self.recovery.state, kind, minutes, at)?;
                true
            }
        };
        let outcome = Outcome::Recovery { event: event.into(), phase: self.recovery.state.phase, defined };
        let (seq, res) = self.record(USER_SCOPE, Trigger::RecoveryCommand, at, Vec::new(), outcome)?;
        Ok(Self::output(seq, res, Detail::Recovery { state: self.recovery.state.clone() }))
    }

    fn on_response(&mut self, seq: u64, response: UserResponse, cadence: Option<CadenceResponse>) -> Result<EngineOutput, EngineError> {
        let record = self.audit.record_user_response(seq, response)?.clone();
        if self.pending_pauses.remove(&seq) {
            let r = cadence.unwrap_or(match response {
                UserResponse::Accepted => CadenceResponse::Accepted,
                _ => CadenceResponse::Dismissed,
            });
            self.cadence = update_cadence(self.cadence, r);
        }
        Ok(EngineOutput { seqs: vec![seq], status: None, resolution: None, detail: Detail::Response { record: Box::new(record) } })
    }

    fn on_config(&mut self, at: i64, config: UserConfig) -> Result<EngineOutput, EngineError> {
        let config = validate_config(config)?;
        if config.resources != self.config.resources || config.provider != self.config.provider {
            self.resources = load_resources(&config, self.facts.as_deref(), &self.net)?;
        }
        let previous_digest = std::mem::replace(&mut self.digest, config.digest());
        self.config = config;
        if !self.recovery.state.is_active() {
            self.recovery.state.allowlist = self.config.recovery.allowlist.clone();
        }
        let (seq, res) = self.record(USER_SCOPE, Trigger::ConfigUpdate, at, Vec::new(), Outcome::Config { previous_digest })?;
        Ok(Self::output(seq, res, Detail::Config { config: Box::new(self.config.clone()) }))
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Divergence(#[from] Divergence),
    #[error("replay could not re-execute input {index}: {source}")]
    Engine {
        index: usize,
        #[source]
        source: EngineError,
    },
}

impl ReplayError {
    pub fn seq(&self) -> Option<u64> {
        match self {
            ReplayError::Divergence(d) => Some(d.seq()),
            ReplayError::Engine { .. } => None,
        }
    }
}

/// Re-executes `inputs` on a fresh engine and compares the result with
/// `stored`. Returns the replayed records.
pub fn replay(
    header: &InputLogHeader,
    inputs: &[EngineInput],
    stored: &[AuditRecord],
    config: Option<&UserConfig>,
) -> Result<Vec<AuditRecord>, ReplayError> {
    let config = config.cloned().unwrap_or_else(|| header.config.clone());
    let opts = EngineOptions { net: Arc::new(crate::net::OfflineNetwork), facts: header.facts.clone(), ..Default::default() };
    let mut engine = Engine::with_options(config, opts).map_err(|source| ReplayError::Engine { index: 0, source })?;
    for (index, input) in inputs.iter().enumerate() {
        engine.apply(input.clone()).map_err(|source| ReplayError::Engine { index, source })?;
    }
    let replayed = engine.audit.records().to_vec();
    compare_records(stored, &replayed)?;
    Ok(replayed)
}
