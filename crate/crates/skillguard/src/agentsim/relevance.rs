//! Deterministic relevance stand-in for the model's skill-selection judgment.
//!
//! A skill is relevant to a task when they share at least one content word
//! after lowercasing, stopword removal, and plural stemming, or when a
//! synonym-table entry links a task word to a manifest word.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

fn stopwords() -> &'static BTreeSet<&'static str> {
    static CELL: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    CELL.get_or_init(|| {
        include_str!("../../data/stopwords.txt")
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

/// Token to synonym-group index.
fn synonym_groups() -> &'static BTreeMap<&'static str, usize> {
    static CELL: OnceLock<BTreeMap<&'static str, usize>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut map = BTreeMap::new();
        for (group, line) in include_str!("../../data/synonyms.txt").lines().enumerate() {
            for token in line.split_whitespace() {
                map.insert(token, group);
            }
        }
        map
    })
}

fn stem(word: &str) -> &str {
    if word.len() > 3 && word.ends_with('s') && !word.ends_with("ss") {
        &word[..word.len() - 1]
    } else {
        word
    }
}

/// Lowercased, stemmed content words of a text.
pub fn content_words(text: &str) -> BTreeSet<String> {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.len() >= 2)
        .map(stem)
        .filter(|w| !stopwords().contains(w))
        .map(str::to_string)
        .collect()
}

/// True when the task shares a content word (or a synonym-group entry) with
/// the skill's name plus description.
pub fn relevance(task: &str, name: &str, description: &str) -> bool {
    let task_words = content_words(task);
    if task_words.is_empty() {
        return false;
    }
    let manifest_words = content_words(&format!("{name} {description}"));
    if task_words.intersection(&manifest_words).next().is_some() {
        return true;
    }
    let groups = synonym_groups();
    let task_groups: BTreeSet<usize> = task_words
        .iter()
        .filter_map(|w| groups.get(w.as_str()).copied())
        .collect();
    manifest_words
        .iter()
        .filter_map(|w| groups.get(w.as_str()).copied())
        .any(|g| task_groups.contains(&g))
}
