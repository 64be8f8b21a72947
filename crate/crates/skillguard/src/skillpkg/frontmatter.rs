use std::collections::BTreeMap;
use std::path::Path;

use crate::error::SkillError;

use super::blocks::SourceLines;

/// The YAML frontmatter of a `SKILL.md`, restricted to a flat
/// string-to-scalar map. Unknown keys are preserved verbatim so the scanner
/// can see them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillManifest {
    pub name: String,
    pub description: String,
    /// Unrecognized keys with their raw (unstripped) values.
    pub extra_keys: BTreeMap<String, String>,
    /// 1-based `SKILL.md` line of the `name` entry.
    pub name_line: usize,
    /// 1-based `SKILL.md` line of the `description` entry, when present.
    pub description_line: Option<usize>,
}

/// Result of splitting a `SKILL.md` into manifest and body.
#[derive(Debug, Clone)]
pub struct SplitFrontmatter {
    pub manifest: SkillManifest,
    /// Raw body bytes after the closing delimiter line.
    pub body: String,
    /// 1-based line number of the first body line.
    pub body_offset: usize,
}

fn malformed(path: &Path, reason: &str) -> SkillError {
    SkillError::MalformedFrontmatter {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn strip_quotes(value: &str) -> &str {
    let v = value.trim();
    for q in ['"', '\''] {
        if v.len() >= 2 && v.starts_with(q) && v.ends_with(q) {
            return &v[1..v.len() - 1];
        }
    }
    v
}

/// Splits `SKILL.md` contents at the first two lines consisting solely of
/// `---` and parses the region between them as a flat key-value map.
///
/// Nested maps, sequences, and block scalars are rejected: a small input
/// surface is easier to audit than full YAML.
pub fn split_frontmatter(text: &str, path: &Path) -> Result<SplitFrontmatter, SkillError> {
    let lines = SourceLines::new(text);
    if lines.count() == 0 || lines.content(1).trim_end_matches('\r') != "---" {
        return Err(malformed(path, "missing opening '---' delimiter"));
    }
    let mut closing = None;
    for i in 2..=lines.count() {
        if lines.content(i).trim_end_matches('\r') == "---" {
            closing = Some(i);
            break;
        }
    }
    let closing = closing.ok_or_else(|| malformed(path, "no closing '---' delimiter"))?;

    let mut name: Option<(String, usize)> = None;
    let mut description: Option<(String, usize)> = None;
    let mut extra_keys = BTreeMap::new();

    for i in 2..closing {
        let raw_line = lines.content(i).trim_end_matches('\r');
        if raw_line.trim().is_empty() || raw_line.trim_start().starts_with('#') {
            continue;
        }
        if raw_line.starts_with(' ') || raw_line.starts_with('\t') {
            return Err(malformed(path, "nested mapping is not supported"));
        }
        if raw_line.trim_start().starts_with("- ") {
            return Err(malformed(path, "sequences are not supported"));
        }
        let Some(colon) = raw_line.find(':') else {
            return Err(malformed(path, "expected 'key: value'"));
        };
        let key = raw_line[..colon].trim();
        if key.is_empty() {
            return Err(malformed(path, "empty key"));
        }
        let raw_value = raw_line[colon + 1..].trim();
        if raw_value == "|" || raw_value == ">" {
            return Err(malformed(path, "block scalars are not supported"));
        }
        if raw_value.starts_with('{') || raw_value.starts_with('[') {
            return Err(malformed(path, "flow collections are not supported"));
        }
        match key {
            "name" => {
                if name.is_some() {
                    return Err(malformed(path, "duplicate 'name' key"));
                }
                name = Some((strip_quotes(raw_value).to_string(), i));
            }
            "description" => {
                if description.is_some() {
                    return Err(malformed(path, "duplicate 'description' key"));
                }
                description = Some((strip_quotes(raw_value).to_string(), i));
            }
            _ => {
                extra_keys.insert(key.to_string(), raw_value.to_string());
            }
        }
    }

    let (name, name_line) = name.ok_or_else(|| malformed(path, "missing 'name'"))?;
    if name.is_empty() {
        return Err(malformed(path, "empty 'name'"));
    }
    let (description, description_line) = match description {
        Some((d, l)) => (d, Some(l)),
        None => (String::new(), None),
    };

    let body_offset = closing + 1;
    let body = text[lines.line_end_byte(closing)..].to_string();

    Ok(SplitFrontmatter {
        manifest: SkillManifest {
            name,
            description,
            extra_keys,
            name_line,
            description_line,
        },
        body,
        body_offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(text: &str) -> Result<SplitFrontmatter, SkillError> {
        split_frontmatter(text, Path::new("SKILL.md"))
    }

    #[test]
    fn basic_split() {
        let s = split("---\nname: pptx\ndescription: d\n---\nBody").unwrap();
        assert_eq!(s.manifest.name, "pptx");
        assert_eq!(s.manifest.description, "d");
        assert_eq!(s.body, "Body");
        assert_eq!(s.body_offset, 5);
    }

    #[test]
    fn extra_keys_are_preserved() {
        let s = split("---\nname: n\ndescription: d\nversion: 1\n---\n").unwrap();
        assert_eq!(s.manifest.extra_keys.get("version").map(String::as_str), Some("1"));
    }

    #[test]
    fn missing_closing_delimiter_is_malformed() {
        assert!(matches!(
            split("---\nname: n\n"),
            Err(SkillError::MalformedFrontmatter { .. })
        ));
    }

    #[test]
    fn missing_name_is_malformed() {
        assert!(matches!(
            split("---\ndescription: d\n---\n"),
            Err(SkillError::MalformedFrontmatter { .. })
        ));
    }

    #[test]
    fn nested_map_is_rejected() {
        assert!(matches!(
            split("---\nname: n\nmeta:\n  nested: true\n---\n"),
            Err(SkillError::MalformedFrontmatter { .. })
        ));
    }

    #[test]
    fn quotes_are_stripped_and_whitespace_trimmed() {
        let s = split("---\nname:  pptx  \ndescription: \"Edit decks\"\n---\n").unwrap();
        assert_eq!(s.manifest.name, "pptx");
        assert_eq!(s.manifest.description, "Edit decks");
    }

    #[test]
    fn empty_body_has_offset_past_end() {
        let s = split("---\nname: n\ndescription: d\n---\n").unwrap();
        assert_eq!(s.body, "");
        assert_eq!(s.body_offset, 5);
    }

    #[test]
    fn crlf_delimiters_are_accepted() {
        let s = split("---\r\nname: n\r\ndescription: d\r\n---\r\nBody\r\n").unwrap();
        assert_eq!(s.manifest.name, "n");
        assert_eq!(s.body, "Body\r\n");
    }
}
