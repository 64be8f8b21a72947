//! Parser for skill directories.
//!
//! A skill directory holds a `SKILL.md` (YAML frontmatter with `name` and
//! `description`, then a markdown instruction body) plus any assets the body
//! refers to. Parsing is pure with respect to directory contents: the same
//! bytes always produce a structurally identical [`SkillPackage`].

mod blocks;
mod frontmatter;
mod paths;

use std::collections::BTreeSet;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::error::SkillError;

pub use blocks::{parse_blocks, BlockKind, BodyBlock, CodeFence, EmphasisSpan, LineSpan, SourceLines};
pub use frontmatter::{split_frontmatter, SkillManifest, SplitFrontmatter};
pub use paths::{
    extract_refs_from_lines, is_path_shaped, normalize_rel, resolve_token, strip_token, tokenize,
    PathRef, RefContext, Resolved, SourceLoc, REF_EXTENSIONS,
};

/// One regular file under the skill root other than `SKILL.md`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Asset {
    /// Path relative to the skill root, `/`-separated.
    pub path: String,
    pub size: u64,
    /// True when the first 8 KiB contain a NUL byte. Binary assets are listed
    /// but never text-scanned.
    pub binary: bool,
}

/// Parsed, validated in-memory model of a skill directory.
#[derive(Debug, Clone)]
pub struct SkillPackage {
    pub root: PathBuf,
    pub manifest: SkillManifest,
    pub body: Vec<BodyBlock>,
    /// Every regular file under the root except `SKILL.md`, sorted by path.
    pub assets: Vec<Asset>,
    /// Path references found anywhere in `SKILL.md` (frontmatter values and
    /// body), in source order, deduplicated by `(raw, line)`.
    pub refs: Vec<PathRef>,
    /// Full decoded text of `SKILL.md`.
    pub skill_md: String,
    /// Raw body bytes (everything after the closing frontmatter delimiter).
    pub body_text: String,
    /// 1-based line number in `SKILL.md` of the first body line.
    pub body_offset: usize,
    /// Relative paths that are symlinks; treated as out-of-tree targets.
    pub symlinks: BTreeSet<String>,
    /// 1-based `SKILL.md` lines where invalid UTF-8 was replaced during decode.
    pub replacement_lines: Vec<usize>,
}

impl SkillPackage {
    /// Sorted set of asset paths, for reference resolution.
    pub fn asset_paths(&self) -> BTreeSet<String> {
        self.assets.iter().map(|a| a.path.clone()).collect()
    }

    pub fn ref_context(&self) -> RefContext {
        RefContext {
            assets: self.asset_paths(),
            symlinks: self.symlinks.clone(),
        }
    }

    /// All code fences in body order.
    pub fn code_fences(&self) -> Vec<CodeFence> {
        self.body.iter().filter_map(|b| b.as_code_fence()).collect()
    }

    /// Reassembles the body from block contents and inter-block whitespace.
    /// Equal to `body_text` byte for byte; the round-trip tests pin this.
    pub fn reconstruct_body(&self) -> String {
        let lines = SourceLines::new(&self.body_text);
        let mut out = String::new();
        let mut cursor = 0usize; // byte offset into body_text
        for block in &self.body {
            let local_start = block.line_span.start - self.body_offset + 1;
            let local_end = block.line_span.end - self.body_offset + 1;
            let (start_byte, end_byte) = lines.span_bytes(local_start, local_end);
            out.push_str(&self.body_text[cursor..start_byte]);
            out.push_str(&block.content);
            cursor = end_byte;
        }
        out.push_str(&self.body_text[cursor..]);
        out
    }
}

/// Decodes bytes as UTF-8, replacing invalid sequences and reporting the
/// 1-based lines where a replacement happened.
pub fn decode_lossy(bytes: &[u8]) -> (String, Vec<usize>) {
    match std::str::from_utf8(bytes) {
        Ok(s) => (s.to_string(), Vec::new()),
        Err(_) => {
            let text = String::from_utf8_lossy(bytes).into_owned();
            let mut lines = Vec::new();
            for (idx, line) in text.split('\n').enumerate() {
                if line.contains('\u{FFFD}') {
                    lines.push(idx + 1);
                }
            }
            (text, lines)
        }
    }
}

/// Reads a file and decodes it, recording replacement lines.
pub fn read_text_lossy(path: &Path) -> Result<(String, Vec<usize>), SkillError> {
    let bytes = fs::read(path).map_err(|e| SkillError::io(path, e))?;
    Ok(decode_lossy(&bytes))
}

fn sniff_binary(path: &Path) -> Result<bool, SkillError> {
    let mut file = fs::File::open(path).map_err(|e| SkillError::io(path, e))?;
    let mut buf = [0u8; 8192];
    let n = file.read(&mut buf).map_err(|e| SkillError::io(path, e))?;
    Ok(buf[..n].contains(&0))
}

/// Parses a skill directory into a validated [`SkillPackage`].
pub fn parse_skill_dir(root: &Path) -> Result<SkillPackage, SkillError> {
    let meta = fs::metadata(root).map_err(|e| SkillError::io(root, e))?;
    if !meta.is_dir() {
        return Err(SkillError::NotASkill(root.to_path_buf()));
    }
    let skill_md_path = root.join("SKILL.md");
    if !skill_md_path.is_file() {
        return Err(SkillError::NotASkill(root.to_path_buf()));
    }

    let (skill_md, replacement_lines) = read_text_lossy(&skill_md_path)?;
    let split = split_frontmatter(&skill_md, &skill_md_path)?;

    let mut assets = Vec::new();
    let mut symlinks = BTreeSet::new();
    for entry in WalkDir::new(root).follow_links(false).into_iter() {
        let entry = entry.map_err(|e| {
            let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf());
            let io = e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk error"));
            SkillError::io(path, io)
        })?;
        let rel = match entry.path().strip_prefix(root) {
            Ok(r) if !r.as_os_str().is_empty() => r,
            _ => continue,
        };
        let rel_str = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if entry.path_is_symlink() {
            symlinks.insert(rel_str);
            continue;
        }
        if !entry.file_type().is_file() || rel_str == "SKILL.md" {
            continue;
        }
        let size = entry
            .metadata()
            .map_err(|e| {
                SkillError::io(
                    entry.path(),
                    e.into_io_error().unwrap_or_else(|| std::io::Error::other("metadata error")),
                )
            })?
            .len();
        let binary = sniff_binary(entry.path())?;
        assets.push(Asset {
            path: rel_str,
            size,
            binary,
        });
    }
    assets.sort_by(|a, b| a.path.cmp(&b.path));

    let ctx = RefContext {
        assets: assets.iter().map(|a| a.path.clone()).collect(),
        symlinks: symlinks.clone(),
    };

    let body = parse_blocks(&split.body, split.body_offset);

    // Refs come from the whole SKILL.md: frontmatter values are instructions
    // too, and the attack location does not change what must be resolved.
    let skill_lines = SourceLines::new(&skill_md);
    let refs = extract_refs_from_lines(
        (1..=skill_lines.count()).map(|i| (i, skill_lines.content(i))),
        "SKILL.md",
        &ctx,
    );

    Ok(SkillPackage {
        root: root.to_path_buf(),
        manifest: split.manifest,
        body,
        assets,
        refs,
        skill_md,
        body_text: split.body,
        body_offset: split.body_offset,
        symlinks,
        replacement_lines,
    })
}

/// Extracts path references from parsed body blocks.
///
/// Every whitespace-separated token in text or fences that contains a path
/// separator, carries a known script extension, or exactly names an asset
/// becomes a reference. URLs are excluded. Deduplicated by `(raw, line)`.
pub fn extract_path_refs(blocks: &[BodyBlock], ctx: &RefContext) -> Vec<PathRef> {
    let mut line_iter = Vec::new();
    for block in blocks {
        let mut line_no = block.line_span.start;
        for line in block.content.split('\n') {
            line_iter.push((line_no, line.strip_suffix('\r').unwrap_or(line).to_string()));
            line_no += 1;
        }
    }
    extract_refs_from_lines(line_iter.iter().map(|(n, l)| (*n, l.as_str())), "SKILL.md", ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_skill(dir: &Path, skill_md: &str, files: &[(&str, &str)]) {
        fs::create_dir_all(dir).unwrap();
        fs::write(dir.join("SKILL.md"), skill_md).unwrap();
        for (rel, content) in files {
            let p = dir.join(rel);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent).unwrap();
            }
            fs::write(p, content).unwrap();
        }
    }

    #[test]
    fn parses_backup_script_skill() {
        let tmp = tempfile::tempdir().unwrap();
        write_skill(
            tmp.path(),
            "---\nname: pptx\ndescription: \"Edit PowerPoint presentations\"\n---\n\n```bash\npython scripts/file_backup.py output.pptx\n```\n",
            &[("scripts/file_backup.py", "print('backup')\n")],
        );
        let pkg = parse_skill_dir(tmp.path()).unwrap();
        assert_eq!(pkg.manifest.name, "pptx");
        assert_eq!(pkg.manifest.description, "Edit PowerPoint presentations");
        assert_eq!(pkg.code_fences().len(), 1);
        assert_eq!(pkg.assets.len(), 1);
        assert_eq!(pkg.refs.len(), 1);
        assert_eq!(pkg.refs[0].raw, "scripts/file_backup.py");
        assert_eq!(
            pkg.refs[0].resolved,
            Resolved::InTree("scripts/file_backup.py".into())
        );
    }

    #[test]
    fn empty_body_yields_no_blocks_or_refs() {
        let tmp = tempfile::tempdir().unwrap();
        write_skill(tmp.path(), "---\nname: n\ndescription: d\n---\n", &[]);
        let pkg = parse_skill_dir(tmp.path()).unwrap();
        assert!(pkg.body.is_empty());
        assert!(pkg.refs.is_empty());
        assert!(pkg.assets.is_empty());
    }

    #[test]
    fn missing_skill_md_is_not_a_skill() {
        let tmp = tempfile::tempdir().unwrap();
        match parse_skill_dir(tmp.path()) {
            Err(SkillError::NotASkill(_)) => {}
            other => panic!("expected NotASkill, got {other:?}"),
        }
    }

    #[test]
    fn out_of_tree_ref_is_flagged() {
        let tmp = tempfile::tempdir().unwrap();
        write_skill(
            tmp.path(),
            "---\nname: n\ndescription: d\n---\nSee ../../secrets/key.pem for details.\n",
            &[],
        );
        let pkg = parse_skill_dir(tmp.path()).unwrap();
        assert_eq!(pkg.refs.len(), 1);
        assert_eq!(pkg.refs[0].resolved, Resolved::OutOfTree);
    }

    #[test]
    fn prose_without_path_tokens_yields_no_refs() {
        let tmp = tempfile::tempdir().unwrap();
        write_skill(
            tmp.path(),
            "---\nname: n\ndescription: d\n---\nJust ordinary prose, nothing else.\n",
            &[],
        );
        let pkg = parse_skill_dir(tmp.path()).unwrap();
        assert!(pkg.refs.is_empty());
    }

    #[test]
    fn bare_script_name_resolves_to_asset_by_basename() {
        let tmp = tempfile::tempdir().unwrap();
        write_skill(
            tmp.path(),
            "---\nname: n\ndescription: d\n---\nInvoke the backup script using the `file_backup.py` script\n",
            &[("scripts/file_backup.py", "pass\n")],
        );
        let pkg = parse_skill_dir(tmp.path()).unwrap();
        assert_eq!(pkg.refs.len(), 1);
        assert_eq!(
            pkg.refs[0].resolved,
            Resolved::InTree("scripts/file_backup.py".into())
        );
    }

    #[test]
    fn binary_assets_are_sniffed() {
        let tmp = tempfile::tempdir().unwrap();
        write_skill(tmp.path(), "---\nname: n\ndescription: d\n---\n", &[]);
        fs::write(tmp.path().join("blob.bin"), b"abc\0def").unwrap();
        let pkg = parse_skill_dir(tmp.path()).unwrap();
        assert_eq!(pkg.assets.len(), 1);
        assert!(pkg.assets[0].binary);
    }

    #[test]
    fn reconstruction_matches_body_bytes() {
        let tmp = tempfile::tempdir().unwrap();
        let md = "---\nname: n\ndescription: d\n---\n\n# Head\n\ntext one\ntext two\n\n```bash\ncmd\n```\n\n<!-- note -->\ntrailing\n";
        write_skill(tmp.path(), md, &[]);
        let pkg = parse_skill_dir(tmp.path()).unwrap();
        assert_eq!(pkg.reconstruct_body(), pkg.body_text);
    }

    #[test]
    fn parse_is_deterministic() {
        let tmp = tempfile::tempdir().unwrap();
        write_skill(
            tmp.path(),
            "---\nname: n\ndescription: d\n---\nRun scripts/a.py then scripts/b.py\n",
            &[("scripts/a.py", "1\n"), ("scripts/b.py", "2\n")],
        );
        let a = parse_skill_dir(tmp.path()).unwrap();
        let b = parse_skill_dir(tmp.path()).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
