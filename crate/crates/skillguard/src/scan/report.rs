use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::caps::Capability;

/// Finding severity, ordered from least to most severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Low,
    Medium,
    High,
    Critical,
}

impl Severity {
    pub fn name(self) -> &'static str {
        match self {
            Self::Info => "info",
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
            Self::Critical => "critical",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The seven deterministic detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DetectorId {
    D1,
    D2,
    D3,
    D4,
    D5,
    D6,
    D7,
}

impl DetectorId {
    /// Highest severity the detector may assign.
    pub fn max_severity(self) -> Severity {
        match self {
            Self::D1 => Severity::High,
            Self::D2 => Severity::Critical,
            Self::D3 => Severity::Critical,
            Self::D4 => Severity::High,
            Self::D5 => Severity::Medium,
            Self::D6 => Severity::Low,
            Self::D7 => Severity::High,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::D1 => "D1",
            Self::D2 => "D2",
            Self::D3 => "D3",
            Self::D4 => "D4",
            Self::D5 => "D5",
            Self::D6 => "D6",
            Self::D7 => "D7",
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One detector hit with location and verbatim evidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub detector: DetectorId,
    pub severity: Severity,
    /// Path relative to the skill root, `/`-separated.
    pub path: String,
    /// 1-based inclusive line span.
    pub lines: (usize, usize),
    /// Exact substring of the file at the cited span, at most 240 bytes.
    pub evidence: String,
    pub rationale: String,
}

/// Capability sets derived from the description and from body plus
/// reachable files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub description: BTreeSet<Capability>,
    pub body: BTreeSet<Capability>,
}

/// A per-file read failure; the scan records it and continues.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanFileError {
    pub path: String,
    pub message: String,
}

/// Ordered scan result with an aggregate risk verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanReport {
    pub skill_root: String,
    /// Max severity across findings; `info` when there are none.
    pub risk: Severity,
    /// Tiebreak metadata when comparing reports of equal risk.
    pub finding_count: usize,
    /// Sorted by (path, start line, detector).
    pub findings: Vec<Finding>,
    pub capabilities: Capabilities,
    pub scanner_version: String,
    pub limitations: Vec<String>,
    pub scan_errors: Vec<ScanFileError>,
}

impl ScanReport {
    pub fn max_severity_at_or_above(&self, level: Severity) -> bool {
        self.findings.iter().any(|f| f.severity >= level)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}
