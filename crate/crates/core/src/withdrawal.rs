//! Micro-withdrawal pauses: continuation risk and an adaptive cadence.

use serde::{Deserialize, Serialize};

use crate::context::SessionSignals;
use crate::lexicon::defaults;
use crate::model::{CandidateAction, InterventionKind};

pub const VELOCITY_NORM_PX_S: f64 = 3000.0;
pub const COOLDOWN_BASE_MIN: f64 = 15.0;
pub const COOLDOWN_MIN: f64 = 5.0;
pub const COOLDOWN_MAX: f64 = 60.0;
pub const MAX_DISPLAY_SECONDS: u32 = 10;

/// Weights over (velocity, repetition, late night, duration, goal divergence).
pub const RISK_WEIGHTS: [f64; 5] = [0.25, 0.25, 0.20, 0.20, 0.10];

pub fn continuation_risk(s: &SessionSignals) -> f64 {
    let norm_velocity = (s.scroll_velocity / VELOCITY_NORM_PX_S).clamp(0.0, 1.0);
    let late = if s.late_night { 1.0 } else { 0.0 };
    let duration = (s.session_minutes / 60.0).clamp(0.0, 1.0);
    let parts = [norm_velocity, s.repetition_index, late, duration, s.goal_divergence];
    RISK_WEIGHTS.iter().zip(parts).map(|(w, x)| w * x).sum::<f64>().clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CadenceResponse {
    None,
    Accepted,
    Dismissed,
    /// The pause expired without interaction; treated like a dismissal.
    Avoided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CadenceState {
    pub cooldown_minutes: f64,
    pub last_intervention: Option<i64>,
    pub last_response: CadenceResponse,
}

impl Default for CadenceState {
    fn default() -> Self {
        Self { cooldown_minutes: COOLDOWN_BASE_MIN, last_intervention: None, last_response: CadenceResponse::None }
    }
}

impl CadenceState {
    pub fn cooldown_ms(&self) -> i64 {
        (self.cooldown_minutes * 60_000.0).round() as i64
    }

    pub fn cooled_down(&self, now: i64) -> bool {
        match self.last_intervention {
            None => true,
            Some(t) => now - t >= self.cooldown_ms(),
        }
    }

    pub fn mark_shown(&mut self, now: i64) {
        self.last_intervention = Some(now);
    }
}

pub fn update_cadence(cadence: CadenceState, response: CadenceResponse) -> CadenceState {
    let cooldown_minutes = match response {
        CadenceResponse::Dismissed | CadenceResponse::Avoided => (cadence.cooldown_minutes * 2.0).min(COOLDOWN_MAX),
        CadenceResponse::Accepted => (cadence.cooldown_minutes / 2.0).max(COOLDOWN_MIN),
        CadenceResponse::None => cadence.cooldown_minutes,
    };
    CadenceState { cooldown_minutes, last_response: response, ..cadence }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PauseOption {
    Continue,
    Pause,
    OpenSavedItem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroIntervention {
    pub prompt: String,
    pub options: Vec<PauseOption>,
    pub max_display_seconds: u32,
    pub risk: f64,
}

/// Reflective prompts, cycled deterministically.
#[derive(Debug, Clone)]
pub struct PromptDeck {
    prompts: Vec<String>,
}

impl PromptDeck {
    pub fn parse(text: &str) -> Self {
        let prompts: Vec<String> =
            text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect();
        if prompts.is_empty() {
            return Self::builtin();
        }
        Self { prompts }
    }

    pub fn builtin() -> Self {
        Self::parse(defaults::PROMPTS)
    }

    pub fn pick(&self, n: u64) -> &str {
        &self.prompts[(n % self.prompts.len() as u64) as usize]
    }
}

impl Default for PromptDeck {
    fn default() -> Self {
        Self::builtin()
    }
}

pub fn maybe_intervene(
    risk: f64,
    cadence: &CadenceState,
    now: i64,
    tau_p4: f64,
    prompt: &str,
) -> Option<MicroIntervention> {
    (risk > tau_p4 && cadence.cooled_down(now)).then(|| MicroIntervention {
        prompt: prompt.to_string(),
        options: vec![PauseOption::Continue, PauseOption::Pause, PauseOption::OpenSavedItem],
        max_display_seconds: MAX_DISPLAY_SECONDS,
        risk,
    })
}

/// Share of continuation risk a pause is expected to remove.
pub const PAUSE_EFFICACY: f64 = 0.5;
const CONTINUE_UTILITY: f64 = 0.7;
const PAUSE_UTILITY: f64 = 0.5;

/// Decision candidates for a pause: carrying on (ids 0) and the pause
/// itself (id 1). Carrying on is always offered.
pub fn pause_candidates(intervention: &MicroIntervention) -> Vec<CandidateAction> {
    vec![
        CandidateAction::no_op(0, CONTINUE_UTILITY, intervention.risk),
        CandidateAction::new(1, InterventionKind::InterstitialPause, PAUSE_UTILITY, intervention.risk * (1.0 - PAUSE_EFFICACY))
            .with_payload(intervention.prompt.clone()),
    ]
}
