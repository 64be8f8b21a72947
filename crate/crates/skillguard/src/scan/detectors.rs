//! The seven lexical detectors.
//!
//! Each detector is a pure function of decoded file text (plus parsed blocks
//! and resolved references where structure matters). Findings carry verbatim
//! evidence sliced from the cited location so reports can be re-verified
//! against the package bytes.

use std::collections::BTreeSet;

use crate::refgraph::RefGraph;
use crate::skillpkg::{BodyBlock, PathRef, Resolved};

use super::report::{DetectorId, Finding, Severity};
use super::vocab;

/// Everything the per-file detectors need about one file.
pub struct FileView<'a> {
    /// Path relative to the skill root; `SKILL.md` for the skill file.
    pub path: &'a str,
    pub text: &'a str,
    /// Line contents without terminators, index 0 = line 1.
    pub lines: Vec<&'a str>,
    pub blocks: &'a [BodyBlock],
    pub refs: &'a [PathRef],
    /// 1-based lines where UTF-8 replacement happened during decode.
    pub replacement_lines: &'a [usize],
}

impl<'a> FileView<'a> {
    pub fn split_lines(text: &str) -> Vec<&str> {
        text.split('\n')
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .collect()
    }
}

/// Truncates evidence to at most 240 bytes on a char boundary, keeping it an
/// exact substring of the source.
pub fn clip_evidence(text: &str) -> String {
    const MAX: usize = 240;
    if text.len() <= MAX {
        return text.to_string();
    }
    let mut end = MAX;
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    text[..end].to_string()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Finds `needle` in `haystack` with word boundaries on both ends.
/// `case_sensitive` controls comparison; multiword needles are allowed.
fn find_bounded(haystack: &str, needle: &str, case_sensitive: bool) -> bool {
    let (hay, pat) = if case_sensitive {
        (haystack.to_string(), needle.to_string())
    } else {
        (haystack.to_lowercase(), needle.to_lowercase())
    };
    let mut from = 0;
    while let Some(at) = hay[from..].find(&pat) {
        let start = from + at;
        let end = start + pat.len();
        let before_ok = start == 0 || !hay[..start].chars().next_back().map(is_word_char).unwrap_or(false);
        let after_ok = end == hay.len() || !hay[end..].chars().next().map(is_word_char).unwrap_or(false);
        if before_ok && after_ok {
            return true;
        }
        from = start + 1;
    }
    false
}

/// An imperative hook token present on a line, either as an ALL-CAPS word or
/// anywhere inside a strong-emphasis span on that line.
fn line_has_imperative(line: &str, emphasis_texts: &[&str]) -> Option<&'static str> {
    for token in vocab::imperative_tokens() {
        if find_bounded(line, token, true) {
            return Some(token);
        }
        for em in emphasis_texts {
            if find_bounded(em, token, false) {
                return Some(token);
            }
        }
    }
    None
}

fn has_script_extension(path: &str) -> bool {
    [".py", ".sh", ".js", ".rb"].iter().any(|e| path.ends_with(e))
}

/// D1: an emphasized or ALL-CAPS imperative within three lines of a
/// reference that invokes an existing in-tree script. Applied to the whole
/// `SKILL.md` (the description line included) and to reachable text assets.
pub fn detect_imperative_hook(
    view: &FileView<'_>,
    existing_assets: &BTreeSet<String>,
) -> Vec<Finding> {
    const WINDOW: usize = 3;

    let trigger_lines: BTreeSet<usize> = view
        .refs
        .iter()
        .filter(|r| match &r.resolved {
            Resolved::InTree(p) => existing_assets.contains(p) && has_script_extension(p),
            Resolved::OutOfTree => false,
        })
        .map(|r| r.source.line)
        .collect();
    if trigger_lines.is_empty() {
        return Vec::new();
    }

    let mut emphasis_by_line: std::collections::BTreeMap<usize, Vec<&str>> = Default::default();
    for block in view.blocks {
        for em in &block.emphasis_markers {
            emphasis_by_line.entry(em.line).or_default().push(em.text.as_str());
        }
    }

    let mut findings = Vec::new();
    for (idx, line) in view.lines.iter().enumerate() {
        let line_no = idx + 1;
        let emphasis = emphasis_by_line
            .get(&line_no)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let Some(token) = line_has_imperative(line, emphasis) else {
            continue;
        };
        let near = trigger_lines
            .iter()
            .any(|&t| t.abs_diff(line_no) <= WINDOW);
        if !near {
            continue;
        }
        findings.push(Finding {
            detector: DetectorId::D1,
            severity: Severity::High,
            path: view.path.to_string(),
            lines: (line_no, line_no),
            evidence: clip_evidence(line),
            rationale: format!(
                "Imperative hook '{token}' within {WINDOW} lines of a script invocation."
            ),
        });
    }
    findings
}

/// Byte spans of `http(s)://` literals on a line, ending at whitespace,
/// quotes, or closing brackets.
pub fn find_urls(line: &str) -> Vec<(usize, usize)> {
    let mut urls = Vec::new();
    for scheme in ["https://", "http://"] {
        let mut from = 0;
        while let Some(at) = line[from..].find(scheme) {
            let start = from + at;
            let end = line[start..]
                .find(|c: char| c.is_whitespace() || "\"'`<>)".contains(c))
                .map(|o| start + o)
                .unwrap_or(line.len());
            urls.push((start, end));
            from = end.max(start + scheme.len());
        }
    }
    urls.sort_unstable();
    urls.dedup();
    urls
}

fn line_has_egress_token(line: &str) -> Option<String> {
    if !find_urls(line).is_empty() {
        return Some("URL literal".to_string());
    }
    for verb in vocab::http_verbs() {
        if find_bounded(line, verb, true) {
            return Some(format!("HTTP verb '{verb}'"));
        }
    }
    for token in vocab::egress_tokens() {
        let hit = if token.chars().all(|c| c.is_ascii_alphabetic()) {
            find_bounded(line, token, false)
        } else {
            line.contains(token)
        };
        if hit {
            return Some(format!("egress token '{token}'"));
        }
    }
    None
}

fn text_has_fs_read(text: &str) -> bool {
    vocab::fs_read_tokens().iter().any(|t| text.contains(t))
}

pub fn text_has_fs_write(text: &str) -> bool {
    vocab::fs_write_tokens().iter().any(|t| text.contains(t))
}

/// D2: one finding per line carrying a URL literal, HTTP verb, or egress
/// vocabulary token. Critical when the same file also reads local files,
/// high otherwise.
pub fn detect_net_egress(view: &FileView<'_>) -> Vec<Finding> {
    let severity = if text_has_fs_read(view.text) {
        Severity::Critical
    } else {
        Severity::High
    };
    let mut findings = Vec::new();
    for (idx, line) in view.lines.iter().enumerate() {
        let Some(what) = line_has_egress_token(line) else {
            continue;
        };
        let rationale = if severity == Severity::Critical {
            format!("{what} in a file that also reads local files.")
        } else {
            format!("{what} indicates network egress.")
        };
        findings.push(Finding {
            detector: DetectorId::D2,
            severity,
            path: view.path.to_string(),
            lines: (idx + 1, idx + 1),
            evidence: clip_evidence(line),
            rationale,
        });
    }
    findings
}

fn query_is_templated(line: &str, url_start: usize, url_end: usize) -> bool {
    let url = &line[url_start..url_end];
    let Some(q) = url.find('?') else { return false };
    let query = &url[q + 1..];
    if query.contains('{') || query.contains("${") || query.contains("%s") || query.contains('<') {
        return true;
    }
    // Concatenation adjacency: a quoted URL ending at a value position,
    // immediately joined with `+`.
    let after = line[url_end..].trim_start_matches(['"', '\'', '`']);
    if url.ends_with('=') && after.trim_start().starts_with('+') {
        return true;
    }
    false
}

fn line_instructs_link_presentation(line: &str) -> bool {
    let lower = line.to_lowercase();
    let has_verb = ["include", "present", "show", "attach", "append", "add", "give"]
        .iter()
        .any(|v| find_bounded(&lower, v, true));
    let has_link_word =
        find_bounded(&lower, "link", true) || find_bounded(&lower, "url", true);
    has_verb && has_link_word && lower.contains("http")
}

/// D3: URLs whose query value is templated or concatenated from runtime
/// data, or instructions to put a link in the final answer. Critical.
pub fn detect_exfil_url(view: &FileView<'_>) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (idx, line) in view.lines.iter().enumerate() {
        let templated = find_urls(line)
            .into_iter()
            .find(|&(s, e)| query_is_templated(line, s, e));
        let rationale = if let Some((s, e)) = templated {
            format!(
                "URL query value is templated or concatenated from runtime data: '{}'.",
                clip_evidence(&line[s..e])
            )
        } else if line_instructs_link_presentation(line) {
            "Instruction asks the agent to present a link in its final answer.".to_string()
        } else {
            continue;
        };
        findings.push(Finding {
            detector: DetectorId::D3,
            severity: Severity::Critical,
            path: view.path.to_string(),
            lines: (idx + 1, idx + 1),
            evidence: clip_evidence(line),
            rationale,
        });
    }
    findings
}

/// Capabilities implied by the manifest description, from vocabulary.
pub fn description_capabilities(description: &str) -> BTreeSet<crate::caps::Capability> {
    let mut caps = BTreeSet::new();
    let lower = description.to_lowercase();
    for word in vocab::description_egress_words() {
        if find_bounded(&lower, word, true) {
            caps.insert(crate::caps::Capability::NetEgress);
            break;
        }
    }
    caps
}

/// D4: network egress present in the body or reachable scripts but absent
/// from the description's vocabulary. High.
pub fn detect_capability_divergence(
    description: &str,
    description_line: Option<usize>,
    skill_md_lines: &[&str],
    body_caps: &BTreeSet<crate::caps::Capability>,
) -> Vec<Finding> {
    let desc_caps = description_capabilities(description);
    if !body_caps.contains(&crate::caps::Capability::NetEgress)
        || desc_caps.contains(&crate::caps::Capability::NetEgress)
    {
        return Vec::new();
    }
    let line_no = description_line.unwrap_or(1);
    let evidence = skill_md_lines
        .get(line_no - 1)
        .map(|l| clip_evidence(l))
        .unwrap_or_default();
    vec![Finding {
        detector: DetectorId::D4,
        severity: Severity::High,
        path: "SKILL.md".to_string(),
        lines: (line_no, line_no),
        evidence,
        rationale: format!(
            "Body or reachable scripts perform network egress that the description '{}' does not disclose.",
            clip_evidence(description)
        ),
    }]
}

fn ref_raw_for_edge(g: &RefGraph, file: &str, line: usize, to: &str) -> String {
    g.file_refs
        .get(file)
        .into_iter()
        .flatten()
        .find(|r| {
            r.source.line == line
                && match &r.resolved {
                    Resolved::InTree(p) => p == to,
                    Resolved::OutOfTree => r.raw == to,
                }
        })
        .map(|r| r.raw.clone())
        .unwrap_or_else(|| to.to_string())
}

/// D5 (out-of-tree or dangling references, medium; depth truncation, info)
/// and D6 (orphan assets, low).
pub fn detect_structural(g: &RefGraph) -> Vec<Finding> {
    let mut findings = Vec::new();
    for edge in &g.out_of_tree {
        let raw = ref_raw_for_edge(g, &edge.from, edge.source.line, &edge.to);
        findings.push(Finding {
            detector: DetectorId::D5,
            severity: Severity::Medium,
            path: edge.source.file.clone(),
            lines: (edge.source.line, edge.source.line),
            evidence: clip_evidence(&raw),
            rationale: format!("Reference '{raw}' resolves outside the skill root."),
        });
    }
    for edge in &g.dangling {
        let raw = ref_raw_for_edge(g, &edge.from, edge.source.line, &edge.to);
        findings.push(Finding {
            detector: DetectorId::D5,
            severity: Severity::Medium,
            path: edge.source.file.clone(),
            lines: (edge.source.line, edge.source.line),
            evidence: clip_evidence(&raw),
            rationale: format!("Reference '{raw}' targets a file that does not exist."),
        });
    }
    for node in &g.depth_truncated {
        let Some(edge) = g.edges.iter().find(|e| &e.to == node) else {
            continue;
        };
        let raw = ref_raw_for_edge(g, &edge.from, edge.source.line, &edge.to);
        findings.push(Finding {
            detector: DetectorId::D5,
            severity: Severity::Info,
            path: edge.source.file.clone(),
            lines: (edge.source.line, edge.source.line),
            evidence: clip_evidence(&raw),
            rationale: format!(
                "Reference chain to '{node}' exceeds the depth limit of {}; not followed.",
                g.max_depth
            ),
        });
    }
    for orphan in &g.orphans {
        findings.push(Finding {
            detector: DetectorId::D6,
            severity: Severity::Low,
            path: orphan.clone(),
            lines: (1, 1),
            evidence: String::new(),
            rationale: format!(
                "Asset '{orphan}' is referenced by nothing in the package (possible staged payload)."
            ),
        });
    }
    findings
}

const BASE64_RUN_MIN: usize = 120;
const HEX_RUN_MIN: usize = 80;

fn is_base64_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '+' || c == '/' || c == '='
}

fn invisible_or_bidi(c: char) -> bool {
    matches!(
        c,
        '\u{200B}' | '\u{200C}' | '\u{200D}' | '\u{200E}' | '\u{200F}' | '\u{FEFF}' | '\u{00AD}'
            | '\u{202A}'..='\u{202E}'
            | '\u{2066}'..='\u{2069}'
            | '\u{061C}'
    )
}

fn encoded_run(line: &str) -> Option<(usize, usize, &'static str)> {
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if !is_base64_char(bytes[i] as char) {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && is_base64_char(bytes[i] as char) {
            i += 1;
        }
        let run = &line[start..i];
        let all_hex = run.chars().all(|c| c.is_ascii_hexdigit());
        if all_hex && run.len() >= HEX_RUN_MIN {
            return Some((start, i, "hex"));
        }
        if run.len() >= BASE64_RUN_MIN {
            return Some((start, i, "base64"));
        }
    }
    None
}

fn comment_spans(text: &str) -> Vec<(usize, usize)> {
    // (start line, end line), 1-based, over the whole file text.
    let lines: Vec<&str> = text.split('\n').collect();
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    for (idx, line) in lines.iter().enumerate() {
        let mut rest = *line;
        loop {
            match open {
                None => match rest.find("<!--") {
                    Some(at) => {
                        open = Some(idx + 1);
                        rest = &rest[at + 4..];
                    }
                    None => break,
                },
                Some(start) => match rest.find("-->") {
                    Some(at) => {
                        spans.push((start, idx + 1));
                        open = None;
                        rest = &rest[at + 3..];
                    }
                    None => break,
                },
            }
        }
    }
    if let Some(start) = open {
        spans.push((start, lines.len()));
    }
    spans
}

/// D7: encoded blobs, invisible or bidirectional control characters, HTML
/// comments carrying imperative tokens, and UTF-8 replacement characters.
/// Medium; escalated to high by the orchestrator when the same file also has
/// a D1 or D2 finding.
pub fn detect_obfuscation(view: &FileView<'_>) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (idx, line) in view.lines.iter().enumerate() {
        let line_no = idx + 1;
        if let Some((s, e, kind)) = encoded_run(line) {
            findings.push(Finding {
                detector: DetectorId::D7,
                severity: Severity::Medium,
                path: view.path.to_string(),
                lines: (line_no, line_no),
                evidence: clip_evidence(&line[s..e]),
                rationale: format!("{kind} run of {} characters.", e - s),
            });
        }
        if let Some(c) = line.chars().find(|&c| invisible_or_bidi(c)) {
            findings.push(Finding {
                detector: DetectorId::D7,
                severity: Severity::Medium,
                path: view.path.to_string(),
                lines: (line_no, line_no),
                evidence: clip_evidence(line),
                rationale: format!(
                    "Invisible or bidirectional control character U+{:04X}.",
                    c as u32
                ),
            });
        }
    }
    for (start, end) in comment_spans(view.text) {
        let span_text = view.lines[start - 1..end].join("\n");
        let token = vocab::imperative_tokens()
            .iter()
            .find(|t| find_bounded(&span_text, t, true));
        if let Some(token) = token {
            findings.push(Finding {
                detector: DetectorId::D7,
                severity: Severity::Medium,
                path: view.path.to_string(),
                lines: (start, end),
                evidence: clip_evidence(&span_text),
                rationale: format!("HTML comment contains imperative token '{token}'."),
            });
        }
    }
    for &line_no in view.replacement_lines {
        if line_no > view.lines.len() {
            continue;
        }
        findings.push(Finding {
            detector: DetectorId::D7,
            severity: Severity::Medium,
            path: view.path.to_string(),
            lines: (line_no, line_no),
            evidence: clip_evidence(view.lines[line_no - 1]),
            rationale: "Invalid UTF-8 replaced during decode.".to_string(),
        });
    }
    findings
}

/// Per-line egress signal, shared with capability extraction.
pub fn line_signals_egress(line: &str) -> bool {
    line_has_egress_token(line).is_some()
}
