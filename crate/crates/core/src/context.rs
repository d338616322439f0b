//! Session event ingestion and the behavioral signals derived from it.

use std::collections::{BTreeMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SessionSettings;

pub const VELOCITY_HALF_LIFE_MS: f64 = 10_000.0;
pub const IMPRESSION_WINDOW: usize = 20;
pub const LATE_NIGHT_END_HOUR: i64 = 6;
const MS_PER_MINUTE: f64 = 60_000.0;
const MS_PER_DAY: i64 = 86_400_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    SessionStart,
    SessionEnd,
    Scroll { delta_px: f64 },
    PostImpression { post_id: String, topic: String, dwell_ms: u64 },
    PostOpen { post_id: String },
    Reaction { post_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub session_id: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp: i64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl SessionEvent {
    pub fn new(session_id: impl Into<String>, timestamp: i64, kind: EventKind) -> Self {
        Self { session_id: session_id.into(), timestamp, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSignals {
    /// Exponentially weighted scroll rate in px/s.
    pub scroll_velocity: f64,
    pub repetition_index: f64,
    pub session_minutes: f64,
    pub late_night: bool,
    pub goal_divergence: f64,
}

impl SessionSignals {
    pub fn zero() -> Self {
        Self { scroll_velocity: 0.0, repetition_index: 0.0, session_minutes: 0.0, late_night: false, goal_divergence: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session {0} already started")]
    AlreadyStarted(String),
    #[error("session {0} has ended")]
    Ended(String),
    #[error("session {session}: timestamp {got} precedes last seen {last}")]
    TimestampRegression { session: String, last: i64, got: i64 },
    #[error("scroll delta is not finite")]
    BadScroll,
}

/// Per-session state. Owned by exactly one writer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub started_at: i64,
    pub last_timestamp: i64,
    pub ended: bool,
    /// Decayed pixel mass at `last_scroll`.
    scroll_mass: f64,
    last_scroll: Option<i64>,
    window: VecDeque<String>,
    pub impressions: u64,
}

impl SessionState {
    fn new(session_id: &str, ts: i64) -> Self {
        Self {
            session_id: session_id.to_string(),
            started_at: ts,
            last_timestamp: ts,
            ended: false,
            scroll_mass: 0.0,
            last_scroll: None,
            window: VecDeque::with_capacity(IMPRESSION_WINDOW),
            impressions: 0,
        }
    }

    pub fn window(&self) -> impl Iterator<Item = &str> {
        self.window.iter().map(String::as_str)
    }

    fn decay(dt_ms: f64) -> f64 {
        0.5f64.powf(dt_ms / VELOCITY_HALF_LIFE_MS)
    }

    fn apply(&mut self, event: &SessionEvent) -> Result<(), ContextError> {
        if self.ended {
            return Err(ContextError::Ended(self.session_id.clone()));
        }
        if event.timestamp < self.last_timestamp {
            return Err(ContextError::TimestampRegression {
                session: self.session_id.clone(),
                last: self.last_timestamp,
                got: event.timestamp,
            });
        }
        match &event.kind {
            EventKind::SessionStart => return Err(ContextError::AlreadyStarted(self.session_id.clone())),
            EventKind::SessionEnd => self.ended = true,
            EventKind::Scroll { delta_px } => {
                if !delta_px.is_finite() {
                    return Err(ContextError::BadScroll);
                }
                let carried = match self.last_scroll {
                    Some(t) => self.scroll_mass * Self::decay((event.timestamp - t) as f64),
                    None => 0.0,
                };
                self.scroll_mass = carried + delta_px.abs();
                self.last_scroll = Some(event.timestamp);
            }
            EventKind::PostImpression { topic, .. } => {
                if self.window.len() == IMPRESSION_WINDOW {
                    self.window.pop_front();
                }
                self.window.push_back(topic.clone());
                self.impressions += 1;
            }
            EventKind::PostOpen { .. } | EventKind::Reaction { .. } => {}
        }
        self.last_timestamp = event.timestamp;
        Ok(())
    }

    /// Signals at `now`. Scroll mass decays continuously; with a constant
    /// scroll rate of R px/s the estimate converges to R.
    pub fn signals(&self, now: i64, settings: &SessionSettings) -> SessionSignals {
        let scroll_velocity = match self.last_scroll {
            Some(t) => {
                let mass = self.scroll_mass * Self::decay((now - t).max(0) as f64);
                mass * std::f64::consts::LN_2 / (VELOCITY_HALF_LIFE_MS / 1000.0)
            }
            None => 0.0,
        };
        let n = self.window.len();
        let (repetition_index, goal_divergence) = if n == 0 {
            (0.0, 0.0)
        } else {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for t in &self.window {
                *counts.entry(t.as_str()).or_default() += 1;
            }
            let max = counts.values().copied().max().unwrap_or(0);
            let divergence = match &settings.goal_topic {
                Some(goal) => self.window.iter().filter(|t| *t != goal).count() as f64 / n as f64,
                None => 0.0,
            };
            (max as f64 / n as f64, divergence)
        };
        let local = now + i64::from(settings.utc_offset_minutes) * 60_000;
        let hour = local.rem_euclid(MS_PER_DAY) / 3_600_000;
        SessionSignals {
            scroll_velocity,
            repetition_index,
            session_minutes: (now - self.started_at) as f64 / MS_PER_MINUTE,
            late_night: hour < LATE_NIGHT_END_HOUR,
            goal_divergence,
        }
    }
}

/// All live sessions. Distinct sessions never share state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextMonitor {
    sessions: BTreeMap<String, SessionState>,
}

impl ContextMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ingest_event(&mut self, event: &SessionEvent) -> Result<(), ContextError> {
        match (&event.kind, self.sessions.get_mut(&event.session_id)) {
            (EventKind::SessionStart, None) => {
                self.sessions.insert(event.session_id.clone(), SessionState::new(&event.session_id, event.timestamp));
                Ok(())
            }
            (EventKind::SessionStart, Some(s)) if s.ended => {
                if event.timestamp < s.last_timestamp {
                    return Err(ContextError::TimestampRegression {
                        session: s.session_id.clone(),
                        last: s.last_timestamp,
                        got: event.timestamp,
                    });
                }
                *s = SessionState::new(&event.session_id, event.timestamp);
                Ok(())
            }
            (_, Some(s)) => s.apply(event),
            (_, None) => Err(ContextError::UnknownSession(event.session_id.clone())),
        }
    }

    pub fn session(&self, id: &str) -> Option<&SessionState> {
        self.sessions.get(id)
    }

    pub fn derive_signals(&self, id: &str, now: i64, settings: &SessionSettings) -> Result<SessionSignals, ContextError> {
        self.sessions
            .get(id)
            .map(|s| s.signals(now, settings))
            .ok_or_else(|| ContextError::UnknownSession(id.to_string()))
    }
}

/// Append-only JSON-lines event log for one session.
pub struct EventLog {
    file: File,
}

impl EventLog {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        Ok(Self { file: OpenOptions::new().create(true).append(true).open(path)? })
    }

    pub fn append(&mut self, event: &SessionEvent) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(event).map_err(std::io::Error::other)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()
    }

    pub fn read_all(path: &Path) -> std::io::Result<Vec<SessionEvent>> {
        let reader = BufReader::new(File::open(path)?);
        let mut out = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T0: i64 = 1_736_150_400_000; // 2025-01-06T08:00:00Z

    fn ev(ts: i64, kind: EventKind) -> SessionEvent {
        SessionEvent::new("s", ts, kind)
    }

    fn impression(ts: i64, topic: &str) -> SessionEvent {
        ev(ts, EventKind::PostImpression { post_id: format!("p{ts}"), topic: topic.into(), dwell_ms: 800 })
    }

    #[test]
    fn start_then_scroll_accepted() {
        let mut m = ContextMonitor::new();
        m.ingest_event(&ev(T0, EventKind::SessionStart)).unwrap();
        m.ingest_event(&ev(T0 + 10, EventKind::Scroll { delta_px: 300.0 })).unwrap();
    }

    #[test]
    fn scroll_before_start_is_an_error() {
        let mut m = ContextMonitor::new();
        assert_eq!(
            m.ingest_event(&ev(T0, EventKind::Scroll { delta_px: 1.0 })),
            Err(ContextError::UnknownSession("s".into()))
        );
    }

    #[test]
    fn equal_timestamps_allowed_regression_rejected() {
        let mut m = ContextMonitor::new();
        m.ingest_event(&ev(T0, EventKind::SessionStart)).unwrap();
        m.ingest_event(&impression(T0 + 5, "a")).unwrap();
        m.ingest_event(&impression(T0 + 5, "b")).unwrap();
        assert!(matches!(m.ingest_event(&impression(T0 + 4, "c")), Err(ContextError::TimestampRegression { .. })));
        assert_eq!(m.session("s").unwrap().impressions, 2);
    }

    #[test]
    fn empty_window_signals() {
        let mut m = ContextMonitor::new();
        m.ingest_event(&ev(T0, EventKind::SessionStart)).unwrap();
        let s = m.derive_signals("s", T0, &SessionSettings::default()).unwrap();
        assert_eq!((s.repetition_index, s.goal_divergence, s.scroll_velocity), (0.0, 0.0, 0.0));
    }

    #[test]
    fn repetition_saturates_and_halves() {
        let mut m = ContextMonitor::new();
        m.ingest_event(&ev(T0, EventKind::SessionStart)).unwrap();
        for i in 0..20 {
            m.ingest_event(&impression(T0 + i, "memes")).unwrap();
        }
        let st = SessionSettings::default();
        assert_eq!(m.derive_signals("s", T0 + 20, &st).unwrap().repetition_index, 1.0);

        let mut m = ContextMonitor::new();
        m.ingest_event(&ev(T0, EventKind::SessionStart)).unwrap();
        for i in 0..20 {
            let topic = if i % 2 == 0 { "memes".to_string() } else { format!("t{i}") };
            m.ingest_event(&impression(T0 + i, &topic)).unwrap();
        }
        assert_eq!(m.derive_signals("s", T0 + 20, &st).unwrap().repetition_index, 0.5);
    }

    #[test]
    fn twenty_first_impression_evicts_first() {
        let mut m = ContextMonitor::new();
        m.ingest_event(&ev(T0, EventKind::SessionStart)).unwrap();
        m.ingest_event(&impression(T0 + 1, "first")).unwrap();
        for i in 0..19 {
            m.ingest_event(&impression(T0 + 2 + i, &format!("t{i}"))).unwrap();
        }
        assert_eq!(m.session("s").unwrap().window().next(), Some("first"));
        m.ingest_event(&impression(T0 + 30, "last")).unwrap();
        let s = m.session("s").unwrap();
        assert_eq!(s.window().count(), IMPRESSION_WINDOW);
        assert_eq!(s.window().next(), Some("t0"));
    }

    #[test]
    fn session_minutes_exact_and_goal_divergence() {
        let mut m = ContextMonitor::new();
        m.ingest_event(&ev(T0, EventKind::SessionStart)).unwrap();
        for (i, t) in ["news", "news", "memes", "sports"].iter().enumerate() {
            m.ingest_event(&impression(T0 + i as i64, t)).unwrap();
        }
        let st = SessionSettings { goal_topic: Some("news".into()), utc_offset_minutes: 0 };
        let s = m.derive_signals("s", T0 + 90_000, &st).unwrap();
        assert_eq!(s.session_minutes, 1.5);
        assert_eq!(s.goal_divergence, 0.5);
    }

    #[test]
    fn late_night_uses_configured_offset() {
        let mut m = ContextMonitor::new();
        m.ingest_event(&ev(T0, EventKind::SessionStart)).unwrap();
        // 08:00 UTC is 02:00 at UTC-6, 08:00 at UTC.
        assert!(!m.derive_signals("s", T0, &SessionSettings::default()).unwrap().late_night);
        let cst = SessionSettings { utc_offset_minutes: -360, goal_topic: None };
        assert!(m.derive_signals("s", T0, &cst).unwrap().late_night);
        // 06:00 local is outside the bucket.
        let at6 = SessionSettings { utc_offset_minutes: -120, goal_topic: None };
        assert!(!m.derive_signals("s", T0, &at6).unwrap().late_night);
    }

    #[test]
    fn constant_scroll_rate_converges() {
        let mut m = ContextMonitor::new();
        m.ingest_event(&ev(T0, EventKind::SessionStart)).unwrap();
        // 100 px every 100 ms is 1000 px/s.
        for i in 1..=3000 {
            m.ingest_event(&ev(T0 + i * 100, EventKind::Scroll { delta_px: 100.0 })).unwrap();
        }
        let v = m.derive_signals("s", T0 + 300_000, &SessionSettings::default()).unwrap().scroll_velocity;
        assert!((v - 1000.0).abs() < 5.0, "{v}");
        // Ten seconds of stillness halves it.
        let later = m.derive_signals("s", T0 + 310_000, &SessionSettings::default()).unwrap().scroll_velocity;
        assert!((later - v / 2.0).abs() < 1e-9);
    }

    #[test]
    fn replaying_log_reproduces_signals() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let events = vec![
            ev(T0, EventKind::SessionStart),
            ev(T0 + 500, EventKind::Scroll { delta_px: 420.0 }),
            impression(T0 + 900, "memes"),
            ev(T0 + 1_500, EventKind::Scroll { delta_px: -120.0 }),
        ];
        let mut log = EventLog::open(&path).unwrap();
        let mut live = ContextMonitor::new();
        for e in &events {
            log.append(e).unwrap();
            live.ingest_event(e).unwrap();
        }
        let mut replayed = ContextMonitor::new();
        for e in EventLog::read_all(&path).unwrap() {
            replayed.ingest_event(&e).unwrap();
        }
        let st = SessionSettings::default();
        assert_eq!(live.derive_signals("s", T0 + 2_000, &st), replayed.derive_signals("s", T0 + 2_000, &st));
    }
}
