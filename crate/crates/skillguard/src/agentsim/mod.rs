//! Deterministic mock agent loop with permission gating, taint tracking, and
//! an egress policy.
//!
//! The simulator replaces the model's judgment with fixed rules: keyword
//! relevance decides whether a skill body loads, fenced commands run in
//! source order, and script behaviors come from scenario fixtures. That keeps
//! every run a pure function of the scenario file while preserving the
//! loading and permission semantics under study.

pub mod deck;
pub mod engine;
pub mod relevance;
pub mod scenario;
pub mod transcript;

pub use deck::{SimDeck, TaintedLine, TaintedText};
pub use engine::{load_phase, run_scenario, validate_exec_justification};
pub use relevance::{content_words, relevance};
pub use scenario::{
    classify_host, load_scenario, ApprovalScript, Behavior, DefaultDecision, EgressMode,
    EgressPolicy, HostClass, Scenario, ScriptSpec,
};
pub use transcript::{Event, SourceLine, Taint, TaintSpan, Transcript, Verdict};
