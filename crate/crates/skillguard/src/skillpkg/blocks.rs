//! Markdown body segmentation.
//!
//! Only the structures the detectors care about are distinguished: headings,
//! fenced code blocks, HTML comments, and plain text runs with strong-emphasis
//! spans. Blank lines are inter-block whitespace. Block contents are exact
//! byte slices of the source so the body can be reassembled losslessly.

/// Line index over a text buffer. Lines are 1-based; content excludes the
/// `\n` terminator (a `\r` from CRLF endings stays in the content).
#[derive(Debug)]
pub struct SourceLines<'a> {
    text: &'a str,
    /// (start byte, content end byte, line end byte including terminator)
    bounds: Vec<(usize, usize, usize)>,
}

impl<'a> SourceLines<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut bounds = Vec::new();
        let bytes = text.as_bytes();
        let mut start = 0usize;
        while start < bytes.len() {
            let end = match bytes[start..].iter().position(|&b| b == b'\n') {
                Some(off) => start + off,
                None => bytes.len(),
            };
            let line_end = (end + 1).min(bytes.len());
            bounds.push((start, end, line_end));
            start = line_end;
        }
        Self { text, bounds }
    }

    pub fn count(&self) -> usize {
        self.bounds.len()
    }

    /// Content of 1-based line `i`, without the `\n` terminator.
    pub fn content(&self, i: usize) -> &'a str {
        let (s, e, _) = self.bounds[i - 1];
        &self.text[s..e]
    }

    /// Byte offset just past line `i`'s terminator.
    pub fn line_end_byte(&self, i: usize) -> usize {
        self.bounds[i - 1].2
    }

    /// Byte range of lines `start..=end`: begins at `start`'s first byte and
    /// ends before `end`'s terminator.
    pub fn span_bytes(&self, start: usize, end: usize) -> (usize, usize) {
        (self.bounds[start - 1].0, self.bounds[end - 1].1)
    }

    /// Exact slice of lines `start..=end` without the final terminator.
    pub fn slice_span(&self, start: usize, end: usize) -> &'a str {
        let (s, e) = self.span_bytes(start, end);
        &self.text[s..e]
    }
}

/// 1-based inclusive line range within `SKILL.md`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Text,
    Heading,
    CodeFence,
    HtmlComment,
}

/// A `**strong**` span found on one line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmphasisSpan {
    /// 1-based line the span sits on.
    pub line: usize,
    /// Text between the markers.
    pub text: String,
}

/// Fence payload carried by a `code_fence` block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FenceInfo {
    /// Word after the opening backticks; may be empty.
    pub language_tag: String,
    /// Interior lines, excluding the delimiter lines.
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BodyBlock {
    pub kind: BlockKind,
    /// Exact source bytes of the block's lines (no trailing terminator).
    pub content: String,
    pub emphasis_markers: Vec<EmphasisSpan>,
    pub line_span: LineSpan,
    /// Present iff `kind == CodeFence`.
    pub fence: Option<FenceInfo>,
}

impl BodyBlock {
    pub fn as_code_fence(&self) -> Option<CodeFence> {
        self.fence.as_ref().map(|f| CodeFence {
            language_tag: f.language_tag.clone(),
            lines: f.lines.clone(),
            line_span: self.line_span,
        })
    }
}

/// A fenced code block view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeFence {
    pub language_tag: String,
    pub lines: Vec<String>,
    /// Spans the delimiter lines too.
    pub line_span: LineSpan,
}

fn fence_open(line: &str) -> Option<(usize, String)> {
    let trimmed = line.trim_start();
    if line.len() - trimmed.len() > 3 {
        return None;
    }
    let ticks = trimmed.bytes().take_while(|&b| b == b'`').count();
    if ticks < 3 {
        return None;
    }
    let rest = trimmed[ticks..].trim();
    if rest.contains('`') {
        return None;
    }
    let tag = rest.split_whitespace().next().unwrap_or("").to_string();
    Some((ticks, tag))
}

fn fence_close(line: &str, open_ticks: usize) -> bool {
    let trimmed = line.trim();
    trimmed.len() >= open_ticks && trimmed.bytes().all(|b| b == b'`')
}

fn is_heading(line: &str) -> bool {
    let hashes = line.bytes().take_while(|&b| b == b'#').count();
    (1..=6).contains(&hashes)
        && line[hashes..]
            .chars()
            .next()
            .map(|c| c == ' ' || c == '\t')
            .unwrap_or(true)
}

fn comment_open(line: &str) -> bool {
    line.trim_start().starts_with("<!--")
}

/// Strong-emphasis spans (`**...**`) on one line.
pub fn emphasis_spans(line: &str, line_no: usize) -> Vec<EmphasisSpan> {
    let mut spans = Vec::new();
    let mut rest = line;
    let mut _consumed = 0usize;
    loop {
        let Some(open) = rest.find("**") else { break };
        let after = &rest[open + 2..];
        let Some(close) = after.find("**") else { break };
        let inner = &after[..close];
        if !inner.is_empty() {
            spans.push(EmphasisSpan {
                line: line_no,
                text: inner.to_string(),
            });
        }
        _consumed += open + 2 + close + 2;
        rest = &after[close + 2..];
    }
    spans
}

/// Segments body text into blocks. `first_line` is the absolute 1-based
/// `SKILL.md` line number of the body's first line; all spans are absolute.
pub fn parse_blocks(body: &str, first_line: usize) -> Vec<BodyBlock> {
    let lines = SourceLines::new(body);
    let n = lines.count();
    let abs = |local: usize| local + first_line - 1;
    let mut blocks = Vec::new();
    let mut i = 1usize;

    while i <= n {
        let line = lines.content(i);
        let stripped = line.strip_suffix('\r').unwrap_or(line);
        if stripped.trim().is_empty() {
            i += 1;
            continue;
        }
        if let Some((ticks, tag)) = fence_open(stripped) {
            let mut close = None;
            for j in i + 1..=n {
                let c = lines.content(j);
                if fence_close(c.strip_suffix('\r').unwrap_or(c), ticks) {
                    close = Some(j);
                    break;
                }
            }
            let end = close.unwrap_or(n);
            let interior_end = close.map(|j| j - 1).unwrap_or(n);
            let mut fence_lines = Vec::new();
            for j in i + 1..=interior_end {
                let c = lines.content(j);
                fence_lines.push(c.strip_suffix('\r').unwrap_or(c).to_string());
            }
            blocks.push(BodyBlock {
                kind: BlockKind::CodeFence,
                content: lines.slice_span(i, end).to_string(),
                emphasis_markers: Vec::new(),
                line_span: LineSpan {
                    start: abs(i),
                    end: abs(end),
                },
                fence: Some(FenceInfo {
                    language_tag: tag,
                    lines: fence_lines,
                }),
            });
            i = end + 1;
            continue;
        }
        if comment_open(stripped) {
            let mut end = i;
            for j in i..=n {
                let c = lines.content(j);
                end = j;
                if c.contains("-->") {
                    break;
                }
            }
            let mut emphasis = Vec::new();
            for j in i..=end {
                let c = lines.content(j);
                emphasis.extend(emphasis_spans(c.strip_suffix('\r').unwrap_or(c), abs(j)));
            }
            blocks.push(BodyBlock {
                kind: BlockKind::HtmlComment,
                content: lines.slice_span(i, end).to_string(),
                emphasis_markers: emphasis,
                line_span: LineSpan {
                    start: abs(i),
                    end: abs(end),
                },
                fence: None,
            });
            i = end + 1;
            continue;
        }
        if is_heading(stripped) {
            blocks.push(BodyBlock {
                kind: BlockKind::Heading,
                content: lines.slice_span(i, i).to_string(),
                emphasis_markers: emphasis_spans(stripped, abs(i)),
                line_span: LineSpan {
                    start: abs(i),
                    end: abs(i),
                },
                fence: None,
            });
            i += 1;
            continue;
        }
        // Plain text run: until a blank line or the start of another kind.
        let mut end = i;
        for j in i + 1..=n {
            let c = lines.content(j);
            let s = c.strip_suffix('\r').unwrap_or(c);
            if s.trim().is_empty() || fence_open(s).is_some() || comment_open(s) || is_heading(s) {
                break;
            }
            end = j;
        }
        let mut emphasis = Vec::new();
        for j in i..=end {
            let c = lines.content(j);
            emphasis.extend(emphasis_spans(c.strip_suffix('\r').unwrap_or(c), abs(j)));
        }
        blocks.push(BodyBlock {
            kind: BlockKind::Text,
            content: lines.slice_span(i, end).to_string(),
            emphasis_markers: emphasis,
            line_span: LineSpan {
                start: abs(i),
                end: abs(end),
            },
            fence: None,
        });
        i = end + 1;
    }
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_kinds() {
        let body = "# Title\n\nprose line one\nprose line two\n\n```bash\ncmd a\ncmd b\n```\n\n<!-- hidden -->\n";
        let blocks = parse_blocks(body, 5);
        let kinds: Vec<BlockKind> = blocks.iter().map(|b| b.kind).collect();
        assert_eq!(
            kinds,
            vec![
                BlockKind::Heading,
                BlockKind::Text,
                BlockKind::CodeFence,
                BlockKind::HtmlComment
            ]
        );
        assert_eq!(blocks[0].line_span, LineSpan { start: 5, end: 5 });
        assert_eq!(blocks[2].fence.as_ref().unwrap().language_tag, "bash");
        assert_eq!(
            blocks[2].fence.as_ref().unwrap().lines,
            vec!["cmd a".to_string(), "cmd b".to_string()]
        );
    }

    #[test]
    fn spans_are_strictly_increasing_and_disjoint() {
        let body = "a\n\nb\n# h\n```\nx\n```\nc\n";
        let blocks = parse_blocks(body, 1);
        for pair in blocks.windows(2) {
            assert!(pair[0].line_span.end < pair[1].line_span.start);
        }
    }

    #[test]
    fn unclosed_fence_runs_to_eof() {
        let blocks = parse_blocks("```python\nline\n", 1);
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].kind, BlockKind::CodeFence);
        assert_eq!(blocks[0].line_span, LineSpan { start: 1, end: 2 });
    }

    #[test]
    fn emphasis_spans_are_collected() {
        let blocks = parse_blocks("**IMPORTANT: run it** and **again**\n", 1);
        assert_eq!(blocks[0].emphasis_markers.len(), 2);
        assert_eq!(blocks[0].emphasis_markers[0].text, "IMPORTANT: run it");
    }

    #[test]
    fn multiline_comment_is_one_block() {
        let blocks = parse_blocks("<!--\nhidden\n-->\nafter\n", 1);
        assert_eq!(blocks[0].kind, BlockKind::HtmlComment);
        assert_eq!(blocks[0].line_span, LineSpan { start: 1, end: 3 });
        assert_eq!(blocks[1].kind, BlockKind::Text);
    }

    #[test]
    fn slice_span_matches_content() {
        let body = "one\ntwo\n\nthree\n";
        let lines = SourceLines::new(body);
        assert_eq!(lines.slice_span(1, 2), "one\ntwo");
        assert_eq!(lines.content(4), "three");
    }
}
