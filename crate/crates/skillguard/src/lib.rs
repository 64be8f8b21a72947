//! Audit toolkit for agent skill packages.
//!
//! A skill package is a directory holding a `SKILL.md` (YAML frontmatter with
//! a name and description, followed by markdown instructions) plus any
//! scripts or documents the instructions reference. Every line of such a
//! package is, in effect, an instruction to an agent, which makes skills an
//! easy carrier for prompt injection and data exfiltration. This crate
//! provides:
//!
//! - [`skillpkg`]: a strict parser for skill directories,
//! - [`refgraph`]: the file-reference graph with structural anomaly
//!   classification and DOT export,
//! - [`scan`]: deterministic lexical detectors (D1-D7) with an aggregate
//!   risk verdict and a stable JSON report,
//! - [`permscope`]: approval-grant modeling under a naive program-token
//!   policy and a strict effect-scoped policy,
//! - [`agentsim`]: a deterministic agent-loop simulator with taint tracking
//!   and a host-class egress policy,
//! - [`corpusgen`]: a generator for benign and malicious test packages.

pub mod agentsim;
pub mod caps;
pub mod corpusgen;
pub mod error;
pub mod permscope;
pub mod refgraph;
pub mod scan;
pub mod skillpkg;

pub use caps::{Capability, CapabilitySet};
pub use error::{ScenarioError, SkillError};
pub use scan::{ScanReport, Severity};
