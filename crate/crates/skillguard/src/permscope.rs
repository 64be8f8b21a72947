//! Approval grants for tool calls under two policies.
//!
//! The naive policy keys a grant on the program token alone, the weakest
//! model consistent with a "don't ask again" approval for one python command
//! silently covering a later, more dangerous python command. The strict
//! policy keys on (kind, program, first path-shaped argument or host) and
//! additionally requires the call's declared effects to be a subset of the
//! approved effects, so new egress always re-prompts.

use serde::{Deserialize, Serialize};

use crate::caps::CapabilitySet;
use crate::skillpkg::{is_path_shaped, normalize_rel, RefContext};

/// Kind of a simulated agent action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    ShellExec,
    FileRead,
    FileWrite,
    NetRequest,
}

/// A simulated tool call with effects declared by the scenario fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub kind: CallKind,
    /// For `shell_exec` the first token is the program.
    #[serde(default)]
    pub argv: Vec<String>,
    /// Path or host, when applicable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub effects: CapabilitySet,
}

impl ToolCall {
    pub fn program(&self) -> Option<&str> {
        match self.kind {
            CallKind::ShellExec => self.argv.first().map(String::as_str),
            _ => None,
        }
    }

    /// Human-readable call summary for transcripts.
    pub fn describe(&self) -> String {
        match self.kind {
            CallKind::ShellExec => self.argv.join(" "),
            CallKind::FileRead => format!("read {}", self.target.as_deref().unwrap_or("?")),
            CallKind::FileWrite => format!("write {}", self.target.as_deref().unwrap_or("?")),
            CallKind::NetRequest => format!("request {}", self.target.as_deref().unwrap_or("?")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Naive,
    Strict,
}

/// Scope key a grant is stored under. The naive policy fills `kind` and
/// `program`; the strict policy adds the canonicalized object.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScopeKey {
    pub kind: CallKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
}

fn first_path_shaped_arg(call: &ToolCall) -> Option<String> {
    let ctx = RefContext::default();
    call.argv
        .iter()
        .skip(1)
        .find(|a| !a.starts_with('-') && is_path_shaped(a, &ctx))
        .map(|a| normalize_rel(a).unwrap_or_else(|| a.clone()))
}

/// Computes the scope key for a call under a policy. Canonicalization
/// resolves `.`/`..` segments and preserves case.
pub fn normalize(call: &ToolCall, policy: Policy) -> ScopeKey {
    let program = call.program().map(str::to_string);
    match policy {
        Policy::Naive => ScopeKey {
            kind: call.kind,
            program,
            object: None,
        },
        Policy::Strict => {
            let object = match call.kind {
                CallKind::ShellExec => first_path_shaped_arg(call).or_else(|| {
                    call.target
                        .as_ref()
                        .map(|t| normalize_rel(t).unwrap_or_else(|| t.clone()))
                }),
                CallKind::NetRequest => call.target.clone(),
                CallKind::FileRead | CallKind::FileWrite => call
                    .target
                    .as_ref()
                    .map(|t| normalize_rel(t).unwrap_or_else(|| t.clone())),
            };
            ScopeKey {
                kind: call.kind,
                program,
                object,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Persistence {
    Once,
    Session,
}

/// A stored approval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grant {
    pub key: ScopeKey,
    /// Approved effects; consulted by the strict policy only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effects: Option<CapabilitySet>,
    pub persistence: Persistence,
    /// Transcript index of the approving prompt.
    pub origin: usize,
    /// Set when a once-grant has been used by its call.
    #[serde(default)]
    pub consumed: bool,
}

/// A standing deny rule; matches on kind and/or program.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenyRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<CallKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
}

impl DenyRule {
    fn matches(&self, call: &ToolCall) -> bool {
        if let Some(kind) = self.kind {
            if call.kind != kind {
                return false;
            }
        }
        if let Some(program) = &self.program {
            if call.program() != Some(program.as_str()) {
                return false;
            }
        }
        self.kind.is_some() || self.program.is_some()
    }
}

/// User decision at a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    AllowOnce,
    AllowSession,
    Deny,
}

/// Outcome of checking a call against the store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "result")]
pub enum CheckResult {
    AutoAllowed { grant_origin: usize },
    PromptRequired,
    DeniedByRule,
}

/// Ordered store of live grants under one policy. Append-only except for
/// consumption of once-grants; `check` is a pure function of the store.
#[derive(Debug, Clone)]
pub struct GrantStore {
    pub policy: Policy,
    grants: Vec<Grant>,
    deny_rules: Vec<DenyRule>,
}

impl GrantStore {
    pub fn new(policy: Policy) -> Self {
        Self {
            policy,
            grants: Vec::new(),
            deny_rules: Vec::new(),
        }
    }

    pub fn with_deny_rules(policy: Policy, deny_rules: Vec<DenyRule>) -> Self {
        Self {
            policy,
            grants: Vec::new(),
            deny_rules,
        }
    }

    pub fn grants(&self) -> &[Grant] {
        &self.grants
    }

    /// Decides a call: auto-allowed by a live grant, prompt required, or
    /// denied by a standing rule.
    pub fn check(&self, call: &ToolCall) -> CheckResult {
        if self.deny_rules.iter().any(|r| r.matches(call)) {
            return CheckResult::DeniedByRule;
        }
        let key = normalize(call, self.policy);
        for grant in &self.grants {
            if grant.consumed {
                continue;
            }
            if grant.key != key {
                continue;
            }
            match self.policy {
                Policy::Naive => {
                    return CheckResult::AutoAllowed {
                        grant_origin: grant.origin,
                    }
                }
                Policy::Strict => {
                    let approved = grant.effects.as_ref().expect("strict grants carry effects");
                    if call.effects.is_subset(approved) {
                        return CheckResult::AutoAllowed {
                            grant_origin: grant.origin,
                        };
                    }
                }
            }
        }
        CheckResult::PromptRequired
    }

    /// Records the decision for a call whose check required a prompt.
    /// Returns true when the call may proceed.
    pub fn record_decision(&mut self, call: &ToolCall, decision: Decision, origin: usize) -> bool {
        match decision {
            Decision::Deny => false,
            Decision::AllowOnce => {
                self.grants.push(Grant {
                    key: normalize(call, self.policy),
                    effects: matches!(self.policy, Policy::Strict).then(|| call.effects.clone()),
                    persistence: Persistence::Once,
                    origin,
                    consumed: true, // used by this very call
                });
                true
            }
            Decision::AllowSession => {
                self.grants.push(Grant {
                    key: normalize(call, self.policy),
                    effects: matches!(self.policy, Policy::Strict).then(|| call.effects.clone()),
                    persistence: Persistence::Session,
                    origin,
                    consumed: false,
                });
                true
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caps::{caps, Capability};

    fn shell(argv: &[&str], effects: &[Capability]) -> ToolCall {
        ToolCall {
            kind: CallKind::ShellExec,
            argv: argv.iter().map(|s| s.to_string()).collect(),
            target: None,
            effects: caps(effects),
        }
    }

    fn edit_call() -> ToolCall {
        shell(
            &["python", "scripts/edit_deck.py", "output.pptx"],
            &[Capability::FsRead, Capability::FsWrite],
        )
    }

    fn backup_call() -> ToolCall {
        shell(
            &["python", "scripts/file_backup.py", "output.pptx"],
            &[Capability::FsRead, Capability::NetEgress],
        )
    }

    #[test]
    fn naive_key_is_program_token() {
        let inline = shell(&["python", "-c", "edit the deck"], &[Capability::FsWrite]);
        let key = normalize(&inline, Policy::Naive);
        assert_eq!(key.program.as_deref(), Some("python"));
        assert_eq!(key.object, None);
        // Same key as the backup script: the carryover.
        assert_eq!(key, normalize(&backup_call(), Policy::Naive));
    }

    #[test]
    fn strict_keys_differ_per_script() {
        let a = normalize(&edit_call(), Policy::Strict);
        let b = normalize(&backup_call(), Policy::Strict);
        assert_ne!(a, b);
        assert_eq!(a.object.as_deref(), Some("scripts/edit_deck.py"));
        assert_eq!(b.object.as_deref(), Some("scripts/file_backup.py"));
    }

    #[test]
    fn strict_canonicalizes_dot_segments() {
        let messy = shell(
            &["python", "./scripts/../scripts/edit_deck.py"],
            &[Capability::FsRead],
        );
        let key = normalize(&messy, Policy::Strict);
        assert_eq!(key.object.as_deref(), Some("scripts/edit_deck.py"));
    }

    #[test]
    fn naive_session_grant_carries_over_to_backup_script() {
        let mut store = GrantStore::new(Policy::Naive);
        let first = shell(&["python", "-c", "edit"], &[Capability::FsWrite]);
        assert_eq!(store.check(&first), CheckResult::PromptRequired);
        assert!(store.record_decision(&first, Decision::AllowSession, 0));
        match store.check(&backup_call()) {
            CheckResult::AutoAllowed { grant_origin } => assert_eq!(grant_origin, 0),
            other => panic!("expected auto-allow, got {other:?}"),
        }
    }

    #[test]
    fn strict_prompts_again_on_new_effects() {
        let mut store = GrantStore::new(Policy::Strict);
        let edit = edit_call();
        assert_eq!(store.check(&edit), CheckResult::PromptRequired);
        store.record_decision(&edit, Decision::AllowSession, 0);
        // Same program, different script and effects: must prompt.
        assert_eq!(store.check(&backup_call()), CheckResult::PromptRequired);
        // Identical call with narrowed effects stays auto-allowed.
        let narrowed = shell(
            &["python", "scripts/edit_deck.py", "output.pptx"],
            &[Capability::FsRead],
        );
        assert!(matches!(store.check(&narrowed), CheckResult::AutoAllowed { .. }));
    }

    #[test]
    fn strict_same_key_superset_effects_prompts() {
        let mut store = GrantStore::new(Policy::Strict);
        let edit = edit_call();
        store.record_decision(&edit, Decision::AllowSession, 0);
        let mut widened = edit_call();
        widened.effects.insert(Capability::NetEgress);
        assert_eq!(store.check(&widened), CheckResult::PromptRequired);
    }

    #[test]
    fn empty_store_prompts() {
        let store = GrantStore::new(Policy::Naive);
        assert_eq!(store.check(&edit_call()), CheckResult::PromptRequired);
    }

    #[test]
    fn allow_once_does_not_persist() {
        let mut store = GrantStore::new(Policy::Naive);
        let call = edit_call();
        assert_eq!(store.check(&call), CheckResult::PromptRequired);
        assert!(store.record_decision(&call, Decision::AllowOnce, 0));
        assert_eq!(store.check(&call), CheckResult::PromptRequired);
    }

    #[test]
    fn deny_refuses_and_stores_nothing() {
        let mut store = GrantStore::new(Policy::Naive);
        let call = ToolCall {
            kind: CallKind::NetRequest,
            argv: vec![],
            target: Some("api.attacker-sink.test".into()),
            effects: caps(&[Capability::NetEgress]),
        };
        assert!(!store.record_decision(&call, Decision::Deny, 0));
        assert!(store.grants().is_empty());
    }

    #[test]
    fn standing_deny_rule_blocks_net_requests() {
        let store = GrantStore::with_deny_rules(
            Policy::Naive,
            vec![DenyRule {
                kind: Some(CallKind::NetRequest),
                program: None,
            }],
        );
        let call = ToolCall {
            kind: CallKind::NetRequest,
            argv: vec![],
            target: Some("pypi.org".into()),
            effects: caps(&[Capability::NetEgress]),
        };
        assert_eq!(store.check(&call), CheckResult::DeniedByRule);
    }

    #[test]
    fn strict_auto_implies_naive_auto_on_scenario_a() {
        // Containment witness: the backup call is auto under naive but
        // prompts under strict, after the same session approval history.
        let mut naive = GrantStore::new(Policy::Naive);
        let mut strict = GrantStore::new(Policy::Strict);
        let edit = edit_call();
        naive.record_decision(&edit, Decision::AllowSession, 0);
        strict.record_decision(&edit, Decision::AllowSession, 0);
        let backup = backup_call();
        assert!(matches!(naive.check(&backup), CheckResult::AutoAllowed { .. }));
        assert_eq!(strict.check(&backup), CheckResult::PromptRequired);
    }
}
