//! Scenario files: one TOML document carrying everything a run needs.
//!
//! Relative paths (`skill_root`, workspace `source`) resolve against the
//! scenario file's directory, so a generated corpus is relocatable.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::caps::CapabilitySet;
use crate::error::ScenarioError;
use crate::permscope::{Decision, DenyRule, Policy};

use super::deck::TaintedText;

/// Host classification policy for simulated outbound traffic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EgressPolicy {
    pub mode: EgressMode,
    /// Classes allowed to egress when `mode = allowlist`.
    #[serde(default)]
    pub allowed_classes: Vec<String>,
    /// Suffix lists per class.
    #[serde(default, rename = "classes")]
    pub host_classes: Vec<HostClass>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EgressMode {
    Open,
    Allowlist,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostClass {
    pub class: String,
    pub suffixes: Vec<String>,
}

impl EgressPolicy {
    pub fn open() -> Self {
        Self {
            mode: EgressMode::Open,
            allowed_classes: Vec::new(),
            host_classes: Vec::new(),
        }
    }

    /// The package-manager allowlist used by the web-style scenarios. The
    /// suffix list is a fixture, not a claim about any real product.
    pub fn package_managers_only() -> Self {
        Self {
            mode: EgressMode::Allowlist,
            allowed_classes: vec!["package_manager".to_string()],
            host_classes: vec![HostClass {
                class: "package_manager".to_string(),
                suffixes: [
                    "pypi.org",
                    "files.pythonhosted.org",
                    "registry.npmjs.org",
                    "crates.io",
                    "static.crates.io",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            }],
        }
    }
}

/// Longest-suffix host classification. Unmatched hosts are `unknown`;
/// a host is allowed iff the mode is open or its class is allow-listed.
pub fn classify_host(host: &str, policy: &EgressPolicy) -> (String, bool) {
    let mut best: Option<(&str, usize)> = None;
    for class in &policy.host_classes {
        for suffix in &class.suffixes {
            let matches = host == suffix || host.ends_with(&format!(".{suffix}"));
            if matches && best.map(|(_, len)| suffix.len() > len).unwrap_or(true) {
                best = Some((class.class.as_str(), suffix.len()));
            }
        }
    }
    let class = best.map(|(c, _)| c.to_string()).unwrap_or_else(|| "unknown".to_string());
    let allowed = match policy.mode {
        EgressMode::Open => true,
        EgressMode::Allowlist => policy.allowed_classes.contains(&class),
    };
    (class, allowed)
}

/// Default applied when the approval script is exhausted. Deliberately
/// excludes `allow_session`: an unlisted prompt never mints a standing grant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultDecision {
    Deny,
    AllowOnce,
}

impl From<DefaultDecision> for Decision {
    fn from(d: DefaultDecision) -> Self {
        match d {
            DefaultDecision::Deny => Decision::Deny,
            DefaultDecision::AllowOnce => Decision::AllowOnce,
        }
    }
}

/// Ordered decisions consumed at each prompt, with a final default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApprovalScript {
    #[serde(default)]
    pub script: Vec<Decision>,
    pub default: DefaultDecision,
}

/// What a declared script does when invoked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Behavior {
    /// Replace one line of a slide deck with new text.
    EditDeck {
        target: String,
        slide: usize,
        line: usize,
        new_text: String,
    },
    /// Read a workspace file and attempt to send it to a URL.
    Upload { source: String, url: String },
    /// Read a workspace file and do nothing else.
    ReadFile { target: String },
}

/// Declared effects and behavior for one script path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptSpec {
    pub effects: CapabilitySet,
    pub behavior: Behavior,
}

/// A fully resolved, runnable scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Primary skill first; extra skills load metadata and run if relevant.
    pub skill_roots: Vec<PathBuf>,
    pub task: String,
    pub approvals: ApprovalScript,
    pub policy: Policy,
    pub egress: EgressPolicy,
    pub workspace: BTreeMap<String, TaintedText>,
    pub scripts: BTreeMap<String, ScriptSpec>,
    pub deny_rules: Vec<DenyRule>,
    pub answer_template: String,
}

#[derive(Debug, Deserialize)]
struct WorkspaceEntry {
    path: String,
    #[serde(default)]
    content: Option<String>,
    /// Fixture file, relative to the scenario file.
    #[serde(default)]
    source: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ScriptEntry {
    path: String,
    effects: CapabilitySet,
    behavior: Behavior,
}

#[derive(Debug, Deserialize)]
struct ScenarioFile {
    skill_root: String,
    #[serde(default)]
    extra_skill_roots: Vec<String>,
    task: String,
    policy: Policy,
    answer_template: String,
    approvals: ApprovalScript,
    egress: EgressPolicy,
    #[serde(default)]
    workspace: Vec<WorkspaceEntry>,
    #[serde(default)]
    scripts: Vec<ScriptEntry>,
    #[serde(default)]
    deny_rules: Vec<DenyRule>,
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let raw = fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let file: ScenarioFile = toml::from_str(&raw).map_err(|e| ScenarioError::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));

    let mut workspace = BTreeMap::new();
    for entry in file.workspace {
        let content = match (entry.content, entry.source) {
            (Some(c), None) => c,
            (None, Some(src)) => {
                let fixture = base.join(&src);
                fs::read_to_string(&fixture).map_err(|e| ScenarioError::Io {
                    path: fixture.clone(),
                    source: e,
                })?
            }
            _ => {
                return Err(ScenarioError::Parse {
                    path: path.to_path_buf(),
                    reason: format!(
                        "workspace entry '{}' needs exactly one of 'content' or 'source'",
                        entry.path
                    ),
                })
            }
        };
        workspace.insert(
            entry.path.clone(),
            TaintedText::parse_fixture(&content, &entry.path),
        );
    }

    let mut scripts = BTreeMap::new();
    for entry in file.scripts {
        if entry.effects.is_empty() {
            return Err(ScenarioError::Parse {
                path: path.to_path_buf(),
                reason: format!("script '{}' declares no effects", entry.path),
            });
        }
        scripts.insert(
            entry.path,
            ScriptSpec {
                effects: entry.effects,
                behavior: entry.behavior,
            },
        );
    }

    let mut skill_roots = vec![base.join(&file.skill_root)];
    skill_roots.extend(file.extra_skill_roots.iter().map(|r| base.join(r)));

    Ok(Scenario {
        skill_roots,
        task: file.task,
        approvals: file.approvals,
        policy: file.policy,
        egress: file.egress,
        workspace,
        scripts,
        deny_rules: file.deny_rules,
        answer_template: file.answer_template,
    })
}
