//! Seeded session simulator.
//!
//! A profile fixes when the session happens, how fast and how narrowly the
//! simulated user scrolls, and what lands in their inbox. The simulated user
//! answers every interjection that asks for a response, accepting with
//! probability `0.6·exp(−0.2·n)` where `n` counts the interjections seen so
//! far. All randomness comes from one ChaCha8 stream seeded by the caller.
//!
//! Report CSV (schema version 1), one row per run:
//!
//! ```text
//! schema_version,profile,seed,minutes,records,interventions_shown,accepted,overridden,dismissed,
//! pauses_shown,posts_hidden,fact_low,fact_mid,fact_full,mean_s_ai,recovery_activations,mean_cooldown_minutes
//! ```
//!
//! `fact_low` counts assessed posts with `s_fact < 0.5`, `fact_mid` those in
//! `[0.5, 1)`, `fact_full` those at exactly 1.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{AuditRecord, AuditStore, Outcome, UserResponse};
use crate::context::{EventKind, SessionEvent};
use crate::engine::{Engine, EngineError, EngineInput, EngineOptions, EngineOutput, InputLogHeader, RecoveryCommand};
use crate::integrity::{FactRecord, Stance};
use crate::model::{InterventionKind, PostContent, UserConfig};
use crate::net::NetworkLayer;
use crate::recovery::{InboundChannel, InboundItem};

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const STEP_MS: i64 = 10_000;
/// 2025-01-06 00:00 UTC, a Monday.
pub const SIM_EPOCH_MS: i64 = 1_736_121_600_000;
const SESSION: &str = "sim-session";
const MINUTE: i64 = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Doomscroller,
    GoalDirected,
    LateNight,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::Doomscroller, Profile::GoalDirected, Profile::LateNight];

    pub fn params(self) -> ProfileParams {
        match self {
            Profile::Doomscroller => ProfileParams {
                start_minute_utc: 23 * 60 + 45,
                scroll_px: (32_000.0, 45_000.0),
                focus: (4, 5),
                dominant_topic: "memes",
                benign_inbound_per_hour: 6,
                hostile_burst_minute: Some(10),
                draft_every_minutes: 10,
            },
            Profile::GoalDirected => ProfileParams {
                start_minute_utc: 12 * 60,
                scroll_px: (2_000.0, 4_000.0),
                focus: (3, 4),
                dominant_topic: "education",
                benign_inbound_per_hour: 4,
                hostile_burst_minute: None,
                draft_every_minutes: 20,
            },
            Profile::LateNight => ProfileParams {
                start_minute_utc: 30,
                scroll_px: (24_000.0, 34_000.0),
                focus: (3, 5),
                dominant_topic: "news",
                benign_inbound_per_hour: 3,
                hostile_burst_minute: Some(20),
                draft_every_minutes: 15,
            },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Doomscroller => "doomscroller",
            Profile::GoalDirected => "goal_directed",
            Profile::LateNight => "late_night",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Profile::ALL
            .into_iter()
            .find(|p| p.as_str() == s.replace('-', "_"))
            .ok_or_else(|| format!("unknown profile {s:?}; expected doomscroller, goal_directed or late_night"))
    }
}

/// Event distribution of a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileParams {
    pub start_minute_utc: i64,
    /// Uniform range of pixels scrolled per 10 s step.
    pub scroll_px: (f64, f64),
    /// `(k, n)`: k of every n impressions show the dominant topic, so every
    /// full impression window has the same repetition.
    pub focus: (u64, u64),
    pub dominant_topic: &'static str,
    pub benign_inbound_per_hour: u32,
    /// Minute at which twelve hostile replies arrive within one minute.
    pub hostile_burst_minute: Option<i64>,
    pub draft_every_minutes: i64,
}

pub fn accept_probability(interventions_so_far: u32) -> f64 {
    0.6 * (-0.2 * f64::from(interventions_so_far)).exp()
}

const OTHER_TOPICS: [&str; 5] = ["sports", "news", "friends", "politics", "personal"];

struct Template {
    category: &'static str,
    body: &'static str,
    ad: Option<&'static str>,
    author: &'static str,
}

const CATALOG: &[Template] = &[
    Template { category: "news", body: "The city council approved the new transit budget on Monday.", ad: None, author: "metro_desk" },
    Template { category: "news", body: "Drinking coffee cures the common cold. Doctors are stunned.", ad: None, author: "viral_health" },
    Template { category: "news", body: "The river bridge will close for repairs in March. Detours are posted online.", ad: None, author: "metro_desk" },
    Template { category: "news", body: "Unemployment fell to 3 percent last year. Wages rose faster than prices.", ad: None, author: "econ_watch" },
    Template { category: "education", body: "The library now lends telescopes to anyone with a card.", ad: None, author: "city_library" },
    Template { category: "education", body: "Learning a second language makes your brain shrink.", ad: None, author: "brain_facts" },
    Template { category: "politics", body: "Tax cuts for job creators will fix the economy, say supporters.", ad: None, author: "right_take" },
    Template { category: "politics", body: "We need climate justice and a living wage for every worker.", ad: None, author: "left_take" },
    Template { category: "memes", body: "when the coffee kicks in", ad: None, author: "meme_lord" },
    Template { category: "memes", body: "me at 3am reading about medieval bread", ad: None, author: "meme_lord" },
    Template { category: "sports", body: "The home team won the final in overtime.", ad: None, author: "sports_now" },
    Template { category: "sports", body: "Great match tonight!", ad: None, author: "sports_now" },
    Template { category: "friends", body: "Dinner at our place on Saturday, who is in?", ad: None, author: "alex" },
    Template { category: "personal", body: "I finally finished my first marathon today.", ad: None, author: "sam" },
    Template { category: "ads", body: "Spin now and win big tonight!", ad: Some("gambling"), author: "lucky_spins" },
    Template { category: "ads", body: "New running shoes, half price this week.", ad: Some("fitness"), author: "shoe_shop" },
];

const BENIGN_INBOUND: &[&str] =
    &["Great post, thanks for sharing!", "Totally agree with this.", "Where was this photo taken?", "Congrats on the marathon!"];

const HOSTILE_INBOUND: &[&str] = &[
    "shut up you pathetic loser",
    "nobody likes you, worthless clown",
    "you are a disgusting idiot, get lost",
    "what a stupid take, loser",
];

const DRAFTS: &[&str] = &[
    "YOU ALWAYS RUIN EVERYTHING",
    "Thanks everyone for the kind words today.",
    "You are a stupid idiot and you never listen.",
    "Does anyone have a good bread recipe?",
];

/// Fact records describing the simulated world.
pub fn world_facts() -> Vec<FactRecord> {
    let rec = |key: &str, stance: Stance, name: &str| FactRecord {
        claim_key: crate::text::normalize_key(key),
        stance,
        source_url: format!("https://factcheck.example/{}", name.to_lowercase().replace(' ', "-")),
        source_name: name.to_string(),
    };
    vec![
        rec("The city council approved the new transit budget on Monday", Stance::Supports, "City Record"),
        rec("Drinking coffee cures the common cold", Stance::Contradicts, "Health Check"),
        rec("The river bridge will close for repairs in March", Stance::Supports, "City Record"),
        rec("Unemployment fell to 3 percent last year", Stance::Contradicts, "Labor Stats"),
        rec("Wages rose faster than prices", Stance::Supports, "Labor Stats"),
        rec("The library now lends telescopes to anyone with a card", Stance::Supports, "City Record"),
        rec("Learning a second language makes your brain shrink", Stance::Contradicts, "Science Desk"),
        rec("The home team won the final in overtime", Stance::Supports, "Sports Wire"),
    ]
}

/// Default configuration for simulated users: gambling ads blocked, sports
/// switched off, two friends, one of them allowlisted for recovery mode.
pub fn sim_config() -> UserConfig {
    let mut c = UserConfig::default().with_intensity("sports", 0.0).with_intensity("ads", 1.0);
    c.curation.ad_blocklist.insert("gambling".into());
    c.curation.friends.extend(["alex".to_string(), "sam".to_string()]);
    c.recovery.allowlist.insert("alex".into());
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub profile: Profile,
    pub seed: u64,
    pub minutes: u32,
    pub records: usize,
    pub interventions_shown: u32,
    pub accepted: u32,
    pub overridden: u32,
    pub dismissed: u32,
    pub pauses_shown: u32,
    pub posts_hidden: u32,
    pub fact_low: u32,
    pub fact_mid: u32,
    pub fact_full: u32,
    pub mean_s_ai: f64,
    pub recovery_activations: u32,
    pub mean_cooldown_minutes: f64,
    /// Cooldown in effect when each pause was shown, in order.
    pub cooldown_trajectory: Vec<f64>,
}

/// Interjections the simulated user answers.
pub fn expects_response(kind: InterventionKind) -> bool {
    matches!(kind, InterventionKind::InterstitialPause | InterventionKind::RewriteSuggestion | InterventionKind::SoftPrompt)
}

/// Timestamps of shown pauses with the cooldown in effect when each was
/// shown.
pub fn pause_schedule(records: &[AuditRecord]) -> Vec<(i64, f64)> {
    records
        .iter()
        .filter(|r| r.interjection.as_ref().is_some_and(|i| i.kind == InterventionKind::InterstitialPause))
        .filter_map(|r| match &r.outcome {
            Outcome::Session { cooldown_minutes, .. } => Some((r.timestamp, *cooldown_minutes)),
            _ => None,
        })
        .collect()
}

impl SimReport {
    /// Derives every counter from the audit log alone.
    pub fn from_audit(profile: Profile, seed: u64, minutes: u32, records: &[AuditRecord]) -> Self {
        let mut r = SimReport {
            profile,
            seed,
            minutes,
            records: records.len(),
            interventions_shown: 0,
            accepted: 0,
            overridden: 0,
            dismissed: 0,
            pauses_shown: 0,
            posts_hidden: 0,
            fact_low: 0,
            fact_mid: 0,
            fact_full: 0,
            mean_s_ai: 0.0,
            recovery_activations: 0,
            mean_cooldown_minutes: 0.0,
            cooldown_trajectory: Vec::new(),
        };
        let (mut ai_sum, mut ai_n) = (0.0, 0u32);
        for rec in records {
            if let Some(i) = rec.interjection.as_ref().filter(|i| expects_response(i.kind)) {
                r.interventions_shown += 1;
                if i.kind == InterventionKind::InterstitialPause {
                    r.pauses_shown += 1;
                }
                match rec.user_response {
                    UserResponse::Accepted => r.accepted += 1,
                    UserResponse::Overridden => r.overridden += 1,
                    UserResponse::Dismissed => r.dismissed += 1,
                    UserResponse::None => {}
                }
            }
            match &rec.outcome {
                Outcome::Feed { hidden, integrity, .. } => {
                    r.posts_hidden += hidden.len() as u32;
                    for p in integrity {
                        if p.s_fact < 0.5 {
                            r.fact_low += 1;
                        } else if p.s_fact < 1.0 {
                            r.fact_mid += 1;
                        } else {
                            r.fact_full += 1;
                        }
                        if let Some(ai) = p.s_ai {
                            ai_sum += ai;
                            ai_n += 1;
                        }
                    }
                }
                Outcome::Recovery { event, defined: true, .. } if event == "user_activate" => r.recovery_activations += 1,
                _ => {}
            }
        }
        r.cooldown_trajectory = pause_schedule(records).into_iter().map(|(_, c)| c).collect();
        if ai_n > 0 {
            r.mean_s_ai = ai_sum / f64::from(ai_n);
        }
        if !r.cooldown_trajectory.is_empty() {
            r.mean_cooldown_minutes = r.cooldown_trajectory.iter().sum::<f64>() / r.cooldown_trajectory.len() as f64;
        }
        r
    }

    pub fn csv_header() -> &'static str {
        "schema_version,profile,seed,minutes,records,interventions_shown,accepted,overridden,dismissed,pauses_shown,posts_hidden,fact_low,fact_mid,fact_full,mean_s_ai,recovery_activations,mean_cooldown_minutes"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{CSV_SCHEMA_VERSION},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{},{:.6}",
            self.profile,
            self.seed,
            self.minutes,
            self.records,
            self.interventions_shown,
            self.accepted,
            self.overridden,
            self.dismissed,
            self.pauses_shown,
            self.posts_hidden,
            self.fact_low,
            self.fact_mid,
            self.fact_full,
            self.mean_s_ai,
            self.recovery_activations,
            self.mean_cooldown_minutes
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::csv_header(), self.csv_row())
    }

    pub fn summary(&self) -> String {
        let trajectory: Vec<String> = self.cooldown_trajectory.iter().map(|c| format!("{c}")).collect();
        format!(
            "Profile {} (seed {}), {} simulated minutes, {} audit records.\n\
             Interventions shown: {} ({} pauses). Accepted {}, kept original {}, dismissed {}.\n\
             Posts hidden by your feed settings: {}.\n\
             Integrity: {} posts with most claims contradicted, {} partly contradicted, {} with no contradicted claims; mean AI-likelihood {:.2}.\n\
             Recovery mode activations: {}.\n\
             Pause cooldowns (minutes): {}.\n",
            self.profile,
            self.seed,
            self.minutes,
            self.records,
            self.interventions_shown,
            self.pauses_shown,
            self.accepted,
            self.overridden,
            self.dismissed,
            self.posts_hidden,
            self.fact_low,
            self.fact_mid,
            self.fact_full,
            self.mean_s_ai,
            self.recovery_activations,
            if trajectory.is_empty() { "none".to_string() } else { trajectory.join(" → ") },
        )
    }
}

/// Counters the driver keeps while it runs, for reconciling with the audit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LiveCounters {
    pub interventions_shown: u32,
    pub accepted: u32,
    pub overridden: u32,
    pub dismissed: u32,
    pub recovery_activations: u32,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("cannot write simulation output: {0}")]
    Io(#[from] std::io::Error),
}

pub struct SimRun {
    pub report: SimReport,
    pub header: InputLogHeader,
    pub inputs: Vec<EngineInput>,
    pub records: Vec<AuditRecord>,
    pub live: LiveCounters,
}

struct Driver {
    engine: Engine,
    rng: ChaCha8Rng,
    inputs: Vec<EngineInput>,
    live: LiveCounters,
    impressions: u64,
    posts: u64,
    inbound: u64,
    paused_until: i64,
    recovery_since: Option<i64>,
}

impl Driver {
    fn apply(&mut self, input: EngineInput) -> Result<EngineOutput, EngineError> {
        self.inputs.push(input.clone());
        self.engine.apply(input)
    }

    /// The simulated user's reaction to whatever interjection `out` carries.
    fn react(&mut self, out: &EngineOutput, at: i64) -> Result<(), EngineError> {
        let Some(i) = out.resolution.as_ref().and_then(|r| r.interjection.as_ref()) else {
            return Ok(());
        };
        if !expects_response(i.kind) {
            return Ok(());
        }
        let seq = *out.seqs.last().expect("a tick has a record");
        let accept = self.rng.gen::<f64>() < accept_probability(self.live.interventions_shown);
        self.live.interventions_shown += 1;
        let reply = at + 1_000;
        match (i.kind, accept) {
            (InterventionKind::InterstitialPause, true) => {
                self.paused_until = at + 2 * MINUTE;
                self.respond(reply, seq, UserResponse::Accepted)?;
            }
            (InterventionKind::InterstitialPause, false) => {
                if self.rng.gen::<f64>() < 0.3 {
                    self.live.dismissed += 1;
                    self.apply(EngineInput::Expired { at: reply, seq })?;
                } else {
                    self.respond(reply, seq, UserResponse::Dismissed)?;
                }
            }
            (InterventionKind::RewriteSuggestion, true) => self.respond(reply, seq, UserResponse::Accepted)?,
            (InterventionKind::RewriteSuggestion, false) => self.respond(reply, seq, UserResponse::Overridden)?,
            (_, true) => {
                self.respond(reply, seq, UserResponse::Accepted)?;
                self.apply(EngineInput::Recovery { at: reply, command: RecoveryCommand::Activate })?;
                self.live.recovery_activations += 1;
                self.recovery_since = Some(reply);
            }
            (_, false) => {
                self.respond(reply, seq, UserResponse::Dismissed)?;
                self.apply(EngineInput::Recovery { at: reply, command: RecoveryCommand::Decline })?;
            }
        }
        Ok(())
    }

    fn respond(&mut self, at: i64, seq: u64, response: UserResponse) -> Result<(), EngineError> {
        match response {
            UserResponse::Accepted => self.live.accepted += 1,
            UserResponse::Overridden => self.live.overridden += 1,
            UserResponse::Dismissed => self.live.dismissed += 1,
            UserResponse::None => {}
        }
        self.apply(EngineInput::Response { at, seq, response }).map(|_| ())
    }

    fn impression_topic(&mut self, p: &ProfileParams) -> String {
        let (k, n) = p.focus;
        let i = self.impressions;
        self.impressions += 1;
        if i % n < k {
            p.dominant_topic.to_string()
        } else {
            let others: Vec<&str> = OTHER_TOPICS.iter().copied().filter(|t| *t != p.dominant_topic).collect();
            others[self.rng.gen_range(0..others.len())].to_string()
        }
    }

    fn page(&mut self, at: i64) -> Vec<PostContent> {
        (0..8)
            .map(|_| {
                let t = &CATALOG[self.rng.gen_range(0..CATALOG.len())];
                self.posts += 1;
                let mut post = PostContent::new(format!("p{}", self.posts), t.author, t.category, t.body);
                post.timestamp = at;
                post.ad_category = t.ad.map(str::to_string);
                post
            })
            .collect()
    }

    fn inbound(&mut self, at: i64, hostile: bool) -> Result<(), EngineError> {
        self.inbound += 1;
        let (body, sender) = if hostile {
            (HOSTILE_INBOUND[self.rng.gen_range(0..HOSTILE_INBOUND.len())], format!("troll{}", self.rng.gen_range(0..40)))
        } else {
            let friend = self.rng.gen_bool(0.5);
            (BENIGN_INBOUND[self.rng.gen_range(0..BENIGN_INBOUND.len())], if friend { "alex".into() } else { "reader".into() })
        };
        let item = InboundItem {
            item_id: format!("m{}", self.inbound),
            sender_id: sender,
            channel: if self.inbound % 3 == 0 { InboundChannel::Mention } else { InboundChannel::Reply },
            body: body.to_string(),
            toxicity: None,
        };
        let out = self.apply(EngineInput::Inbound { at, item })?;
        self.react(&out, at)
    }
}

/// Options for one run.
pub struct SimOptions {
    pub profile: Profile,
    pub seed: u64,
    pub minutes: u32,
    pub config: UserConfig,
    pub net: Arc<dyn NetworkLayer>,
}

impl SimOptions {
    pub fn new(profile: Profile, seed: u64, minutes: u32) -> Self {
        Self { profile, seed, minutes, config: sim_config(), net: Arc::new(crate::net::SystemNetwork) }
    }
}

/// Runs one simulated session. With `out`, the audit log and input log are
/// written there as `audit.jsonl` and `inputs.jsonl` (replacing old ones).
pub fn simulate(opts: &SimOptions, out: Option<&Path>) -> Result<SimRun, SimError> {
    let facts = world_facts();
    let mut engine_opts = EngineOptions { net: Arc::clone(&opts.net), facts: Some(facts.clone()), ..Default::default() };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let audit_path = dir.join("audit.jsonl");
        if audit_path.exists() {
            std::fs::remove_file(&audit_path)?;
        }
        engine_opts.audit = AuditStore::open(&audit_path).map_err(EngineError::from)?;
        engine_opts.input_log = Some(dir.join("inputs.jsonl"));
    }
    let engine = Engine::with_options(opts.config.clone(), engine_opts)?;
    let header = InputLogHeader { config: engine.config().clone(), facts: Some(facts) };
    let mut d = Driver {
        engine,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        inputs: Vec::new(),
        live: LiveCounters::default(),
        impressions: 0,
        posts: 0,
        inbound: 0,
        paused_until: i64::MIN,
        recovery_since: None,
    };
    let p = opts.profile.params();
    let start = SIM_EPOCH_MS + p.start_minute_utc * MINUTE;
    let steps = i64::from(opts.minutes) * MINUTE / STEP_MS;
    let inbound_chance = f64::from(p.benign_inbound_per_hour) * STEP_MS as f64 / (60.0 * MINUTE as f64);

    d.apply(EngineInput::Events {
        session_id: SESSION.into(),
        at: start,
        events: vec![SessionEvent::new(SESSION, start, EventKind::SessionStart)],
    })?;
    for step in 1..=steps {
        let t = start + step * STEP_MS;
        let minute = step * STEP_MS / MINUTE;

        if t >= d.paused_until {
            let px = d.rng.gen_range(p.scroll_px.0..p.scroll_px.1);
            let mut events = vec![
                SessionEvent::new(SESSION, t - 6_000, EventKind::Scroll { delta_px: px / 2.0 }),
                SessionEvent::new(SESSION, t - 1_000, EventKind::Scroll { delta_px: px / 2.0 }),
            ];
            for k in 0..2 {
                let topic = d.impression_topic(&p);
                let post_id = format!("imp{}", d.impressions);
                events.push(SessionEvent::new(SESSION, t - 500 + k, EventKind::PostImpression { post_id, topic, dwell_ms: 1_200 }));
            }
            let out = d.apply(EngineInput::Events { session_id: SESSION.into(), at: t, events })?;
            d.react(&out, t)?;
        }

        if step % 6 == 0 {
            let posts = d.page(t + 2_000);
            d.apply(EngineInput::FeedPage { session_id: SESSION.into(), at: t + 2_000, posts })?;
        }

        if step % (p.draft_every_minutes * 6) == 0 {
            let body = DRAFTS[((step / (p.draft_every_minutes * 6)) as usize - 1) % DRAFTS.len()];
            let out = d.apply(EngineInput::Draft { session_id: SESSION.into(), at: t + 3_000, body: body.into() })?;
            d.react(&out, t + 3_000)?;
        }

        if p.hostile_burst_minute.is_some_and(|m| minute == m) {
            d.inbound(t + 4_000, true)?;
            d.inbound(t + 6_000, true)?;
        } else if d.rng.gen::<f64>() < inbound_chance {
            d.inbound(t + 4_000, false)?;
        }

        if d.recovery_since.is_some_and(|s| t + 8_000 - s >= 10 * MINUTE) {
            d.apply(EngineInput::Recovery { at: t + 8_000, command: RecoveryCommand::Deactivate })?;
            d.recovery_since = None;
        }
    }
    let end = start + steps * STEP_MS + 9_000;
    d.apply(EngineInput::Events {
        session_id: SESSION.into(),
        at: end,
        events: vec![SessionEvent::new(SESSION, end, EventKind::SessionEnd)],
    })?;

    let records = d.engine.audit().records().to_vec();
    let report = SimReport::from_audit(opts.profile, opts.seed, opts.minutes, &records);
    if let Some(dir) = out {
        std::fs::write(dir.join("report.csv"), report.to_csv())?;
        std::fs::write(dir.join("summary.txt"), report.summary())?;
    }
    Ok(SimRun { report, header, inputs: d.inputs, records, live: d.live })
}

/// Runs several seeds, concurrently when `parallel` is set. Results come
/// back in seed order either way.
pub fn simulate_seeds(
    profile: Profile,
    seeds: &[u64],
    minutes: u32,
    config: &UserConfig,
    net: Arc<dyn NetworkLayer>,
    parallel: bool,
) -> Result<Vec<SimRun>, SimError> {
    let opts = |seed| SimOptions { profile, seed, minutes, config: config.clone(), net: Arc::clone(&net) };
    if !parallel {
        return seeds.iter().map(|&s| simulate(&opts(s), None)).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds.iter().map(|&s| {
            let o = opts(s);
            scope.spawn(move || simulate(&o, None))
        }).collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    })
}
