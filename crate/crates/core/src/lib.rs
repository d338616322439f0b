//! A user-owned mediation layer that sits between a content feed and its
//! presentation.
//!
//! Every intervention the layer may take is expressed as a
//! [`CandidateAction`](model::CandidateAction) carrying utility, agency-penalty
//! and risk estimates, scored by the [`decision`] engine and resolved across
//! patterns by the [`coordinator`]. Five patterns produce candidates:
//!
//! - [`rewriter`]: draft analysis and rewrite suggestions,
//! - [`integrity`]: the per-post integrity meter (fact, AI-likelihood, bias),
//! - [`curator`]: category intensities, ad opt-outs and per-post overrides,
//! - [`withdrawal`]: short reflective pauses with adaptive cadence,
//! - [`recovery`]: shelter mode with inbound filtering and an evidence chain.
//!
//! The [`engine`] wires the patterns, the [`context`] monitor and the
//! [`audit`] store into one deterministic pipeline; [`service`] exposes it over
//! loopback HTTP and [`sim`] drives it with seeded synthetic sessions.

pub mod audit;
pub mod context;
pub mod coordinator;
pub mod curator;
pub mod decision;
pub mod engine;
pub mod integrity;
pub mod lexicon;
pub mod model;
pub mod net;
pub mod recovery;
pub mod rewriter;
pub mod service;
pub mod sim;
pub mod text;
pub mod withdrawal;

pub use decision::{score_action, select_action, Decision, ScoredAction};
pub use engine::{Engine, EngineInput};
pub use model::{
    agency_penalty_for, validate_config, CandidateAction, InterventionKind, ObjectiveMode,
    PostContent, UserConfig,
};
