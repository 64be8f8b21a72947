//! Deterministic agent-loop simulator.
//!
//! Loading follows the skill lifecycle: metadata always loads, the body loads
//! only when the task is relevant, and referenced documents load when the
//! body names them. Fenced commands become tool calls gated by the grant
//! store; script behaviors come from the scenario fixture and never touch a
//! real network or filesystem. Runs are pure functions of the scenario.

use std::collections::{BTreeMap, BTreeSet};

use crate::caps::{Capability, CapabilitySet};
use crate::error::ScenarioError;
use crate::permscope::{CallKind, CheckResult, Decision, GrantStore, ToolCall};
use crate::refgraph::DEFAULT_MAX_DEPTH;
use crate::scan::detectors::find_urls;
use crate::skillpkg::{
    normalize_rel, parse_blocks, parse_skill_dir, read_text_lossy, BlockKind, BodyBlock,
    RefContext, Resolved, SkillPackage,
};

use super::deck::{SimDeck, TaintedLine, TaintedText};
use super::relevance::relevance;
use super::scenario::{classify_host, Behavior, Scenario, ScriptSpec};
use super::transcript::{Event, SourceLine, Taint, TaintSpan, Transcript, Verdict};

const EXEC_FENCE_TAGS: &[&str] = &["", "bash", "sh", "shell"];
const KNOWN_PROGRAMS: &[&str] = &[
    "python", "python3", "bash", "sh", "curl", "wget", "pip", "pip3", "cat", "head", "tail",
];

/// What a tool call does when it runs.
#[derive(Debug, Clone)]
enum Action {
    ReadFile { path: String },
    EditDeck { target: String, slide: usize, line: usize, new_text: String },
    Upload { source: String, url: String },
    CurlSend { files: Vec<String>, url: String },
    PipInstall { package: String },
    FetchUrl { url: String },
}

struct RunState {
    events: Vec<Event>,
    prompts: usize,
    egress_attempts: usize,
    egress_allowed: usize,
    store: GrantStore,
    approvals_cursor: usize,
    workspace: BTreeMap<String, TaintedText>,
    /// Most recently read or edited workspace file; placeholder source.
    last_file: Option<String>,
    /// Templated URLs collected from instruction text, in source order.
    link_directives: Vec<String>,
}

/// Minimal shell-style splitter: whitespace separation with single- and
/// double-quote grouping, no escapes.
fn shlex(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    for c in line.chars() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => current.push(c),
            None if c == '"' || c == '\'' => quote = Some(c),
            None if c.is_whitespace() => {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
            }
            None => current.push(c),
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn host_of(url: &str) -> String {
    let rest = url.split("://").nth(1).unwrap_or(url);
    rest.split(['/', '?', '#']).next().unwrap_or(rest).to_string()
}

fn caps_of(items: &[Capability]) -> CapabilitySet {
    items.iter().copied().collect()
}

/// Interprets one fence command as a tool call plus its action.
fn command_to_call(
    line: &str,
    scripts: &BTreeMap<String, ScriptSpec>,
) -> Result<(ToolCall, Action), ScenarioError> {
    let argv = shlex(line);
    let program = argv
        .first()
        .ok_or_else(|| ScenarioError::UnsupportedCommand(line.to_string()))?
        .clone();
    let make_call = |target: Option<String>, effects: CapabilitySet| ToolCall {
        kind: CallKind::ShellExec,
        argv: argv.clone(),
        target,
        effects,
    };
    match program.as_str() {
        "python" | "python3" | "bash" | "sh" => {
            let script_arg = argv
                .iter()
                .skip(1)
                .find(|a| !a.starts_with('-') && (a.ends_with(".py") || a.ends_with(".sh")));
            let Some(script_arg) = script_arg else {
                return Err(ScenarioError::UnsupportedCommand(line.to_string()));
            };
            let script = normalize_rel(script_arg).unwrap_or_else(|| script_arg.clone());
            let spec = scripts
                .get(&script)
                .ok_or_else(|| ScenarioError::UndeclaredScript(script.clone()))?;
            let action = match &spec.behavior {
                Behavior::EditDeck { target, slide, line, new_text } => Action::EditDeck {
                    target: target.clone(),
                    slide: *slide,
                    line: *line,
                    new_text: new_text.clone(),
                },
                Behavior::Upload { source, url } => Action::Upload {
                    source: source.clone(),
                    url: url.clone(),
                },
                Behavior::ReadFile { target } => Action::ReadFile {
                    path: target.clone(),
                },
            };
            Ok((make_call(Some(script), spec.effects.clone()), action))
        }
        "cat" | "head" | "tail" => {
            let path = argv
                .iter()
                .skip(1)
                .find(|a| !a.starts_with('-'))
                .ok_or_else(|| ScenarioError::UnsupportedCommand(line.to_string()))?
                .clone();
            Ok((
                make_call(Some(path.clone()), caps_of(&[Capability::FsRead])),
                Action::ReadFile { path },
            ))
        }
        "curl" => {
            let url = argv
                .iter()
                .find(|a| a.contains("://"))
                .ok_or_else(|| ScenarioError::UnsupportedCommand(line.to_string()))?
                .clone();
            let files: Vec<String> = argv
                .iter()
                .filter_map(|a| a.split_once('@').map(|(_, f)| f.to_string()))
                .collect();
            let mut effects = caps_of(&[Capability::NetEgress]);
            if !files.is_empty() {
                effects.insert(Capability::FsRead);
            }
            Ok((
                make_call(Some(host_of(&url)), effects),
                Action::CurlSend { files, url },
            ))
        }
        "wget" => {
            let url = argv
                .iter()
                .find(|a| a.contains("://"))
                .ok_or_else(|| ScenarioError::UnsupportedCommand(line.to_string()))?
                .clone();
            Ok((
                make_call(Some(host_of(&url)), caps_of(&[Capability::NetEgress])),
                Action::FetchUrl { url },
            ))
        }
        "pip" | "pip3" => {
            if argv.get(1).map(String::as_str) != Some("install") {
                return Err(ScenarioError::UnsupportedCommand(line.to_string()));
            }
            let package = argv
                .get(2)
                .cloned()
                .ok_or_else(|| ScenarioError::UnsupportedCommand(line.to_string()))?;
            Ok((
                make_call(Some("pypi.org".to_string()), caps_of(&[Capability::NetEgress])),
                Action::PipInstall { package },
            ))
        }
        _ => Err(ScenarioError::UnsupportedCommand(line.to_string())),
    }
}

impl RunState {
    fn next_decision(&mut self, scenario: &Scenario) -> (Decision, bool) {
        if let Some(d) = scenario.approvals.script.get(self.approvals_cursor) {
            self.approvals_cursor += 1;
            (*d, true)
        } else {
            (scenario.approvals.default.into(), false)
        }
    }

    fn attempt_egress(
        &mut self,
        url: &str,
        payload: Option<&TaintedText>,
        scenario: &Scenario,
    ) -> bool {
        let host = host_of(url);
        let (class, allowed) = classify_host(&host, &scenario.egress);
        let (payload_taint, secret_sources) = match payload {
            Some(text) => (text.max_taint(), text.secret_sources()),
            None => (Taint::Clean, Vec::new()),
        };
        self.egress_attempts += 1;
        if allowed {
            self.egress_allowed += 1;
        }
        self.events.push(Event::EgressAttempt {
            host,
            class,
            allowed,
            payload_taint,
            secret_sources,
        });
        allowed
    }

    fn run_action(&mut self, action: &Action, scenario: &Scenario) -> Result<String, ScenarioError> {
        match action {
            Action::ReadFile { path } => {
                let file = self
                    .workspace
                    .get(path)
                    .ok_or_else(|| ScenarioError::MissingWorkspaceFile(path.clone()))?;
                let n = file.lines.len();
                self.last_file = Some(path.clone());
                Ok(format!("read {n} lines from {path}"))
            }
            Action::EditDeck { target, slide, line, new_text } => {
                let file = self
                    .workspace
                    .get_mut(target)
                    .ok_or_else(|| ScenarioError::MissingWorkspaceFile(target.clone()))?;
                let deck = SimDeck::parse(file);
                let idx = deck.line_index(*slide, *line).ok_or_else(|| {
                    ScenarioError::BehaviorOutOfRange(format!(
                        "slide {slide} line {line} of {target}"
                    ))
                })?;
                file.lines[idx] = TaintedLine {
                    text: new_text.clone(),
                    taint: Taint::TaskArtifact,
                    origin: None,
                };
                self.last_file = Some(target.clone());
                Ok(format!("edited slide {slide} line {line} of {target}"))
            }
            Action::Upload { source, url } => {
                let file = self
                    .workspace
                    .get(source)
                    .cloned()
                    .ok_or_else(|| ScenarioError::MissingWorkspaceFile(source.clone()))?;
                self.last_file = Some(source.clone());
                let allowed = self.attempt_egress(url, Some(&file), scenario);
                let host = host_of(url);
                Ok(if allowed {
                    format!("uploaded {source} to {host}")
                } else {
                    format!("upload of {source} to {host} blocked by egress policy")
                })
            }
            Action::CurlSend { files, url } => {
                let mut payload = TaintedText::default();
                for f in files {
                    let file = self
                        .workspace
                        .get(f)
                        .ok_or_else(|| ScenarioError::MissingWorkspaceFile(f.clone()))?;
                    payload.lines.extend(file.lines.iter().cloned());
                    self.last_file = Some(f.clone());
                }
                let allowed = self.attempt_egress(url, Some(&payload), scenario);
                let host = host_of(url);
                Ok(if allowed {
                    format!("sent request to {host}")
                } else {
                    format!("request to {host} blocked by egress policy")
                })
            }
            Action::PipInstall { package } => {
                let allowed = self.attempt_egress("https://pypi.org/simple", None, scenario);
                Ok(if allowed {
                    format!("installed {package} from pypi.org")
                } else {
                    format!("install of {package} blocked by egress policy")
                })
            }
            Action::FetchUrl { url } => {
                let allowed = self.attempt_egress(url, None, scenario);
                let host = host_of(url);
                Ok(if allowed {
                    format!("fetched {host}")
                } else {
                    format!("fetch of {host} blocked by egress policy")
                })
            }
        }
    }

    fn execute_command(&mut self, line: &str, scenario: &Scenario) -> Result<(), ScenarioError> {
        let (call, action) = command_to_call(line, &scenario.scripts)?;
        let result = self.store.check(&call);
        self.events.push(Event::Check {
            call: call.clone(),
            result: result.clone(),
        });
        let proceed = match result {
            CheckResult::DeniedByRule => false,
            CheckResult::AutoAllowed { .. } => true,
            CheckResult::PromptRequired => {
                let (decision, scripted) = self.next_decision(scenario);
                let origin = self.events.len();
                self.events.push(Event::Prompt {
                    call: call.clone(),
                    decision,
                    scripted,
                });
                self.prompts += 1;
                self.store.record_decision(&call, decision, origin)
            }
        };
        if !proceed {
            return Ok(());
        }
        let outcome = self.run_action(&action, scenario)?;
        self.events.push(Event::Exec { call, outcome });
        Ok(())
    }

    /// Collects link directives (templated URLs) from one instruction line.
    fn collect_directives(&mut self, line: &str) {
        for (s, e) in find_urls(line) {
            let url = &line[s..e];
            if url.contains('{') && url.contains('}') {
                self.link_directives.push(url.to_string());
            }
        }
    }
}

/// Loads and processes one instruction file: fences execute in order, text
/// lines may pull in referenced in-tree markdown documents (depth-limited)
/// and contribute link directives. HTML comments are inert.
fn process_blocks(
    state: &mut RunState,
    scenario: &Scenario,
    pkg: &SkillPackage,
    skill_name: &str,
    blocks: &[BodyBlock],
    ctx: &RefContext,
    visited: &mut BTreeSet<String>,
    depth: usize,
) -> Result<(), ScenarioError> {
    for block in blocks {
        match block.kind {
            BlockKind::CodeFence => {
                let fence = block.fence.as_ref().expect("code fence carries fence info");
                if !EXEC_FENCE_TAGS.contains(&fence.language_tag.as_str()) {
                    continue;
                }
                for line in &fence.lines {
                    let trimmed = line.trim();
                    if trimmed.is_empty() || trimmed.starts_with('#') {
                        continue;
                    }
                    state.execute_command(trimmed, scenario)?;
                }
            }
            BlockKind::Text | BlockKind::Heading => {
                for line in block.content.split('\n') {
                    let line = line.strip_suffix('\r').unwrap_or(line);
                    state.collect_directives(line);
                    for (_, token) in crate::skillpkg::tokenize(line) {
                        if !token.ends_with(".md") || !crate::skillpkg::is_path_shaped(token, ctx) {
                            continue;
                        }
                        if let Resolved::InTree(path) = crate::skillpkg::resolve_token(token, ctx) {
                            if !ctx.assets.contains(&path)
                                || visited.contains(&path)
                                || depth >= DEFAULT_MAX_DEPTH
                            {
                                continue;
                            }
                            visited.insert(path.clone());
                            let (text, _) = read_text_lossy(&pkg.root.join(&path))?;
                            state.events.push(Event::AssetLoaded {
                                skill: skill_name.to_string(),
                                path: path.clone(),
                            });
                            let sub_blocks = parse_blocks(&text, 1);
                            process_blocks(
                                state, scenario, pkg, skill_name, &sub_blocks, ctx, visited,
                                depth + 1,
                            )?;
                        }
                    }
                }
            }
            BlockKind::HtmlComment => {}
        }
    }
    Ok(())
}

/// Backtick-quoted commands in the description whose first word is a known
/// program; the deterministic stand-in for an agent following a
/// description-embedded instruction.
fn description_commands(description: &str) -> Vec<String> {
    let mut commands = Vec::new();
    let mut rest = description;
    while let Some(open) = rest.find('`') {
        let after = &rest[open + 1..];
        let Some(close) = after.find('`') else { break };
        let candidate = &after[..close];
        if let Some(first) = candidate.split_whitespace().next() {
            if KNOWN_PROGRAMS.contains(&first) {
                commands.push(candidate.to_string());
            }
        }
        rest = &after[close + 1..];
    }
    commands
}

fn resolve_placeholder(
    name: &str,
    state: &RunState,
) -> Option<(String, Taint, Option<SourceLine>)> {
    let file = state.last_file.as_ref()?;
    let text = state.workspace.get(file)?;
    let line = match name {
        "last_slide" => text.lines.last()?,
        "first_slide" => text.lines.first()?,
        _ => return None,
    };
    Some((line.text.clone(), line.taint, line.origin.clone()))
}

/// Substitutes `{...}` placeholders in a directive URL, tracking taint spans
/// relative to the resolved string.
fn resolve_directive(directive: &str, state: &RunState) -> (String, Vec<TaintSpan>) {
    let mut out = String::new();
    let mut spans = Vec::new();
    let mut rest = directive;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let Some(close) = after.find('}') else {
            out.push_str(&rest[open..]);
            rest = "";
            break;
        };
        let name = &after[..close];
        match resolve_placeholder(name, state) {
            Some((value, taint, source)) => {
                let start = out.len();
                out.push_str(&value);
                spans.push(TaintSpan {
                    start,
                    end: out.len(),
                    taint,
                    source,
                });
            }
            None => {
                out.push('{');
                out.push_str(name);
                out.push('}');
            }
        }
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    (out, spans)
}

fn compose_output(state: &mut RunState, scenario: &Scenario) {
    let mut text = scenario.answer_template.clone();
    let mut spans = Vec::new();
    let directives = state.link_directives.clone();
    for directive in &directives {
        let (resolved, dir_spans) = resolve_directive(directive, state);
        text.push('\n');
        let offset = text.len();
        text.push_str(&resolved);
        spans.extend(dir_spans.into_iter().map(|s| TaintSpan {
            start: s.start + offset,
            end: s.end + offset,
            taint: s.taint,
            source: s.source,
        }));
    }
    state.events.push(Event::Output {
        text,
        taint_spans: spans,
    });
}

fn derive_verdict(events: &[Event]) -> Verdict {
    let network = events.iter().any(|e| {
        matches!(
            e,
            Event::EgressAttempt {
                allowed: true,
                payload_taint: Taint::Secret,
                ..
            }
        )
    });
    if network {
        return Verdict::ViaNetwork;
    }
    for event in events {
        let Event::Output { text, taint_spans } = event else {
            continue;
        };
        for (s, e) in find_urls(text) {
            let url = &text[s..e];
            let Some(q) = url.find('?') else { continue };
            let query_start = s + q + 1;
            let tainted_query = taint_spans.iter().any(|span| {
                span.taint == Taint::Secret && span.start < e.max(text.len()) && span.end > query_start
            });
            if tainted_query {
                return Verdict::ViaLink;
            }
        }
    }
    Verdict::None
}

/// Emits the load-phase prefix: metadata always, body only on relevance.
fn load_skills(
    scenario: &Scenario,
) -> Result<(Vec<Event>, Vec<(SkillPackage, bool)>), ScenarioError> {
    let mut events = Vec::new();
    let mut pkgs = Vec::new();
    for root in &scenario.skill_roots {
        let pkg = parse_skill_dir(root)?;
        events.push(Event::MetadataLoaded {
            skill: pkg.manifest.name.clone(),
            name: pkg.manifest.name.clone(),
            description: pkg.manifest.description.clone(),
        });
        pkgs.push(pkg);
    }
    for pkg in &pkgs {
        let relevant = relevance(&scenario.task, &pkg.manifest.name, &pkg.manifest.description);
        if relevant {
            events.push(Event::BodyLoaded {
                skill: pkg.manifest.name.clone(),
            });
        }
    }
    let flagged = pkgs
        .into_iter()
        .map(|pkg| {
            let relevant = relevance(&scenario.task, &pkg.manifest.name, &pkg.manifest.description);
            (pkg, relevant)
        })
        .collect();
    Ok((events, flagged))
}

/// The transcript prefix produced by skill loading alone.
pub fn load_phase(scenario: &Scenario) -> Result<Vec<Event>, ScenarioError> {
    Ok(load_skills(scenario)?.0)
}

/// Runs a scenario end to end. Deterministic: identical scenarios produce
/// identical transcripts.
pub fn run_scenario(scenario: &Scenario) -> Result<Transcript, ScenarioError> {
    let (load_events, pkgs) = load_skills(scenario)?;
    let mut state = RunState {
        events: load_events,
        prompts: 0,
        egress_attempts: 0,
        egress_allowed: 0,
        store: GrantStore::with_deny_rules(scenario.policy, scenario.deny_rules.clone()),
        approvals_cursor: 0,
        workspace: scenario.workspace.clone(),
        last_file: None,
        link_directives: Vec::new(),
    };

    for (pkg, relevant) in &pkgs {
        if !relevant {
            continue;
        }
        let ctx = pkg.ref_context();
        let mut visited = BTreeSet::new();
        process_blocks(
            &mut state,
            scenario,
            pkg,
            &pkg.manifest.name,
            &pkg.body.clone(),
            &ctx,
            &mut visited,
            0,
        )?;
        state.collect_directives(&pkg.manifest.description);
        for command in description_commands(&pkg.manifest.description) {
            state.execute_command(&command, scenario)?;
        }
    }

    compose_output(&mut state, scenario);
    let verdict = derive_verdict(&state.events);
    state.events.push(Event::ExfiltrationVerdict { verdict });

    Ok(Transcript {
        events: state.events,
        prompts: state.prompts,
        egress_attempts: state.egress_attempts,
        egress_allowed: state.egress_allowed,
        verdict,
    })
}

/// Checks the no-exec-without-approval invariant over an event list: every
/// exec is justified by an earlier auto-allowed check or an allow decision
/// for the same call, with no other check of that call in between.
pub fn validate_exec_justification(events: &[Event]) -> Result<(), String> {
    for (idx, event) in events.iter().enumerate() {
        let Event::Exec { call, .. } = event else {
            continue;
        };
        let mut justified = false;
        for earlier in events[..idx].iter().rev() {
            match earlier {
                Event::Prompt { call: c, decision, .. } if c == call => {
                    justified = *decision != Decision::Deny;
                    break;
                }
                Event::Check { call: c, result } if c == call => {
                    justified = matches!(result, CheckResult::AutoAllowed { .. });
                    break;
                }
                _ => {}
            }
        }
        if !justified {
            return Err(format!("exec at event {idx} has no justifying approval"));
        }
    }
    Ok(())
}
