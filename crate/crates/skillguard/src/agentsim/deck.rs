//! Simulated workspace files with per-line taint.
//!
//! Fixture decks are plain text; a ` [secret]` line suffix marks the line as
//! secret. Slides are blank-line-separated groups of lines, a stand-in for
//! presentation structure that round-trips losslessly.

use serde::{Deserialize, Serialize};

use super::transcript::{SourceLine, Taint};

/// One line of a simulated file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaintedLine {
    pub text: String,
    pub taint: Taint,
    /// Fixture line the taint originated from; `None` for task-produced text.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<SourceLine>,
}

/// A simulated file: ordered lines with taint labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaintedText {
    pub lines: Vec<TaintedLine>,
}

const SECRET_MARKER: &str = "[secret]";

impl TaintedText {
    /// Parses fixture content; a trailing ` [secret]` marks the line secret.
    pub fn parse_fixture(content: &str, path: &str) -> Self {
        let raw_lines: Vec<&str> = content.split('\n').collect();
        // A trailing newline produces one empty trailing entry; drop it so the
        // file round-trips as lines.
        let effective = if raw_lines.last() == Some(&"") {
            &raw_lines[..raw_lines.len() - 1]
        } else {
            &raw_lines[..]
        };
        let lines = effective
            .iter()
            .enumerate()
            .map(|(idx, raw)| {
                let raw = raw.strip_suffix('\r').unwrap_or(raw);
                let trimmed = raw.trim_end();
                if let Some(stripped) = trimmed.strip_suffix(SECRET_MARKER) {
                    TaintedLine {
                        text: stripped.trim_end().to_string(),
                        taint: Taint::Secret,
                        origin: Some(SourceLine {
                            path: path.to_string(),
                            line: idx + 1,
                        }),
                    }
                } else {
                    TaintedLine {
                        text: raw.to_string(),
                        taint: Taint::Clean,
                        origin: Some(SourceLine {
                            path: path.to_string(),
                            line: idx + 1,
                        }),
                    }
                }
            })
            .collect();
        Self { lines }
    }

    /// Serializes back to fixture form, restoring ` [secret]` markers.
    pub fn to_fixture(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&line.text);
            if line.taint == Taint::Secret {
                out.push(' ');
                out.push_str(SECRET_MARKER);
            }
            out.push('\n');
        }
        out
    }

    /// Highest taint across all lines.
    pub fn max_taint(&self) -> Taint {
        self.lines.iter().map(|l| l.taint).max().unwrap_or(Taint::Clean)
    }

    /// Fixture origins of all secret lines, for egress chain recording.
    pub fn secret_sources(&self) -> Vec<SourceLine> {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.taint == Taint::Secret)
            .map(|(idx, l)| {
                l.origin.clone().unwrap_or(SourceLine {
                    path: String::new(),
                    line: idx + 1,
                })
            })
            .collect()
    }
}

/// Slide view over a tainted file: blank-line-separated groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimDeck {
    /// Per slide, the 0-based indices of its lines in the backing file.
    pub slides: Vec<Vec<usize>>,
}

impl SimDeck {
    pub fn parse(text: &TaintedText) -> Self {
        let mut slides = Vec::new();
        let mut current: Vec<usize> = Vec::new();
        for (idx, line) in text.lines.iter().enumerate() {
            if line.text.trim().is_empty() {
                if !current.is_empty() {
                    slides.push(std::mem::take(&mut current));
                }
            } else {
                current.push(idx);
            }
        }
        if !current.is_empty() {
            slides.push(current);
        }
        Self { slides }
    }

    /// 0-based backing index of 1-based (slide, line), if in range.
    pub fn line_index(&self, slide: usize, line: usize) -> Option<usize> {
        self.slides
            .get(slide.checked_sub(1)?)
            .and_then(|s| s.get(line.checked_sub(1)?))
            .copied()
    }
}
