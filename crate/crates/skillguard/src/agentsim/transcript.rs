use serde::{Deserialize, Serialize};

use crate::permscope::{CheckResult, Decision, ToolCall};

/// Taint label on a line of simulated data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Taint {
    Clean,
    TaskArtifact,
    Secret,
}

/// Workspace fixture line a taint label originated from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceLine {
    pub path: String,
    pub line: usize,
}

/// A tainted byte range in the final answer, with its copy-chain origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaintSpan {
    pub start: usize,
    pub end: usize,
    pub taint: Taint,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceLine>,
}

/// Exfiltration verdict of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    None,
    ViaNetwork,
    ViaLink,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::ViaNetwork => "via_network",
            Self::ViaLink => "via_link",
        }
    }
}

/// One entry in the ordered event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "event")]
pub enum Event {
    MetadataLoaded {
        skill: String,
        name: String,
        description: String,
    },
    BodyLoaded {
        skill: String,
    },
    AssetLoaded {
        skill: String,
        path: String,
    },
    Check {
        call: ToolCall,
        result: CheckResult,
    },
    Prompt {
        call: ToolCall,
        decision: Decision,
        /// False when the decision came from the scenario's default.
        scripted: bool,
    },
    Exec {
        call: ToolCall,
        outcome: String,
    },
    EgressAttempt {
        host: String,
        class: String,
        allowed: bool,
        payload_taint: Taint,
        /// Fixture lines whose secret content the payload carries.
        secret_sources: Vec<SourceLine>,
    },
    Output {
        text: String,
        taint_spans: Vec<TaintSpan>,
    },
    ExfiltrationVerdict {
        verdict: Verdict,
    },
}

/// Replayable event log of one scenario run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transcript {
    pub events: Vec<Event>,
    pub prompts: usize,
    pub egress_attempts: usize,
    pub egress_allowed: usize,
    pub verdict: Verdict,
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serialization cannot fail")
    }

    /// One-line summary for the CLI: prompt count, egress attempts, verdict.
    pub fn verdict_line(&self) -> String {
        let egress = if self.egress_attempts == 0 {
            "egress=0".to_string()
        } else if self.egress_allowed == self.egress_attempts {
            format!("egress={}/allowed", self.egress_attempts)
        } else if self.egress_allowed == 0 {
            format!("egress={}/blocked", self.egress_attempts)
        } else {
            format!(
                "egress={}/{} allowed",
                self.egress_attempts, self.egress_allowed
            )
        };
        format!(
            "prompts={} {} verdict={}",
            self.prompts,
            egress,
            self.verdict.name()
        )
    }

    pub fn output_text(&self) -> Option<&str> {
        self.events.iter().rev().find_map(|e| match e {
            Event::Output { text, .. } => Some(text.as_str()),
            _ => None,
        })
    }
}
