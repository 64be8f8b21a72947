//! Lexical path-reference extraction and resolution.
//!
//! The grammar favors recall: any token with a path separator, a known script
//! extension, or an exact asset-name match is a reference. Resolution is a
//! pure function of the asset list, never of the live filesystem.

use std::collections::BTreeSet;

/// Extensions that make a bare token path-shaped.
pub const REF_EXTENSIONS: &[&str] = &[".py", ".sh", ".js", ".rb", ".md"];

/// Where a reference occurs: relative file plus 1-based line.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourceLoc {
    pub file: String,
    pub line: usize,
}

/// Resolution outcome for a reference.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Resolved {
    /// Normalized path relative to the skill root. May name a missing file;
    /// the graph layer reports those as dangling.
    InTree(String),
    /// Escapes the root, is absolute, or lands on a symlink.
    OutOfTree,
}

/// A path-shaped token found in skill text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathRef {
    /// The token as written.
    pub raw: String,
    pub resolved: Resolved,
    pub source: SourceLoc,
}

/// Context needed to resolve references without touching the filesystem.
#[derive(Debug, Clone, Default)]
pub struct RefContext {
    pub assets: BTreeSet<String>,
    pub symlinks: BTreeSet<String>,
}

const LEAD_STRIP: &[char] = &['`', '"', '\'', '(', ')', '[', ']', '{', '}', '<', '>', ',', ';', ':', '!', '?', '*', '#'];
const TRAIL_STRIP: &[char] = &['`', '"', '\'', '(', ')', '[', ']', '{', '}', '<', '>', ',', ';', ':', '!', '?', '*', '.', '#'];

/// Strips surrounding punctuation from a whitespace token.
pub fn strip_token(token: &str) -> &str {
    token.trim_start_matches(LEAD_STRIP).trim_end_matches(TRAIL_STRIP)
}

/// Whitespace-separated tokens of a line, stripped of surrounding
/// punctuation, with their 0-based byte columns.
pub fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut col = 0usize;
    for piece in line.split_whitespace() {
        // split_whitespace loses positions; recover by searching forward.
        let at = line[col..].find(piece).map(|o| col + o).unwrap_or(col);
        col = at + piece.len();
        let stripped = strip_token(piece);
        if !stripped.is_empty() {
            out.push((at, stripped));
        }
    }
    out
}

/// True when a token looks like a relative path per the reference grammar.
pub fn is_path_shaped(token: &str, ctx: &RefContext) -> bool {
    if token.contains("://") {
        return false;
    }
    if token.contains('/') {
        return true;
    }
    if REF_EXTENSIONS.iter().any(|ext| token.ends_with(ext)) {
        return true;
    }
    ctx.assets.contains(token) || ctx.assets.iter().any(|a| basename(a) == token)
}

fn basename(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

/// Lexically normalizes a relative path against the skill root. `None` when
/// the path is absolute or escapes the root.
pub fn normalize_rel(raw: &str) -> Option<String> {
    if raw.starts_with('/') || raw.starts_with('\\') {
        return None;
    }
    let mut stack: Vec<&str> = Vec::new();
    for part in raw.split(['/', '\\']) {
        match part {
            "" | "." => {}
            ".." => {
                if stack.pop().is_none() {
                    return None;
                }
            }
            other => stack.push(other),
        }
    }
    Some(stack.join("/"))
}

/// Resolves a stripped token against the package contents.
pub fn resolve_token(token: &str, ctx: &RefContext) -> Resolved {
    let Some(normalized) = normalize_rel(token) else {
        return Resolved::OutOfTree;
    };
    if normalized.is_empty() {
        return Resolved::OutOfTree;
    }
    if ctx.symlinks.contains(&normalized) {
        return Resolved::OutOfTree;
    }
    if normalized == "SKILL.md" || ctx.assets.contains(&normalized) {
        return Resolved::InTree(normalized);
    }
    if !token.contains('/') {
        // A bare name may exactly name an asset elsewhere in the tree.
        if let Some(matching) = ctx
            .assets
            .iter()
            .find(|a| basename(a) == normalized.as_str())
        {
            return Resolved::InTree(matching.clone());
        }
    }
    Resolved::InTree(normalized)
}

/// Extracts references from `(line_no, line)` pairs, deduplicating by
/// `(raw, line)` and keeping source order.
pub fn extract_refs_from_lines<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    file: &str,
    ctx: &RefContext,
) -> Vec<PathRef> {
    let mut seen = BTreeSet::new();
    let mut refs = Vec::new();
    for (line_no, line) in lines {
        for (_, token) in tokenize(line) {
            if !is_path_shaped(token, ctx) {
                continue;
            }
            if !seen.insert((token.to_string(), line_no)) {
                continue;
            }
            refs.push(PathRef {
                raw: token.to_string(),
                resolved: resolve_token(token, ctx),
                source: SourceLoc {
                    file: file.to_string(),
                    line: line_no,
                },
            });
        }
    }
    refs
}
