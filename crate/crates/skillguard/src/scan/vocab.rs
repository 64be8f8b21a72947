//! Detector vocabularies.
//!
//! Each list ships as a data file with one token per line so reviewers can
//! audit and extend it without reading code. Lines starting with `#` and
//! blank lines are ignored.

use std::sync::OnceLock;

fn parse(raw: &'static str) -> Vec<&'static str> {
    raw.lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

macro_rules! vocab {
    ($fn_name:ident, $file:literal) => {
        pub fn $fn_name() -> &'static [&'static str] {
            static CELL: OnceLock<Vec<&'static str>> = OnceLock::new();
            CELL.get_or_init(|| parse(include_str!(concat!("../../data/", $file))))
        }
    };
}

vocab!(imperative_tokens, "imperative_tokens.txt");
vocab!(egress_tokens, "egress_tokens.txt");
vocab!(http_verbs, "http_verbs.txt");
vocab!(fs_read_tokens, "fs_read_tokens.txt");
vocab!(fs_write_tokens, "fs_write_tokens.txt");
vocab!(description_egress_words, "description_egress_words.txt");
