//! End-to-end CLI tests: exit codes, output shapes, and flag behavior.

use std::path::Path;
use std::process::{Command, Output};

use skillguard::corpusgen::{self, VariantSpec};

fn skillguard(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skillguard"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn skillguard")
}

fn write_skill(dir: &Path, skill_md: &str, files: &[(&str, &str)]) {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("SKILL.md"), skill_md).unwrap();
    for (rel, content) in files {
        let p = dir.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).unwrap();
        }
        std::fs::write(p, content).unwrap();
    }
}

#[test]
fn scan_poisoned_skill_exits_2_and_lists_detectors() {
    let tmp = tempfile::tempdir().unwrap();
    corpusgen::generate(&VariantSpec::paper_shape(0), &tmp.path().join("skill")).unwrap();
    let out = skillguard(&["scan", "skill"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("D1"));
    assert!(stdout.contains("D2"));
    assert!(stdout.contains("risk       : critical"));
    assert!(stdout.contains("limitations:"));
}

#[test]
fn scan_benign_skill_exits_0() {
    let tmp = tempfile::tempdir().unwrap();
    corpusgen::generate_benign(
        skillguard::corpusgen::BenignKind::PptxEditor,
        &tmp.path().join("skill"),
    )
    .unwrap();
    let out = skillguard(&["scan", "skill"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn strict_flag_turns_medium_findings_into_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    // A package whose only finding is structural (D5 medium).
    write_skill(
        &tmp.path().join("skill"),
        "---\nname: escape\ndescription: Organize notes\n---\nCompare with ../../shared/template.py when unsure.\n",
        &[],
    );
    let relaxed = skillguard(&["scan", "skill"], tmp.path());
    assert_eq!(relaxed.status.code(), Some(0));
    let strict = skillguard(&["scan", "skill", "--strict"], tmp.path());
    assert_eq!(strict.status.code(), Some(3));
}

#[test]
fn scan_missing_path_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = skillguard(&["scan", "does-not-exist"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("error:"));
}

#[test]
fn scan_json_has_stable_field_order() {
    let tmp = tempfile::tempdir().unwrap();
    corpusgen::generate(&VariantSpec::paper_shape(0), &tmp.path().join("skill")).unwrap();
    let out = skillguard(&["scan", "skill", "--json"], tmp.path());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["risk"], "critical");
    assert!(stdout.trim_start().starts_with("{\n  \"skill_root\""));
    // Field order is part of the report contract; serde_json::Value re-sorts
    // keys, so check positions in the raw text.
    let expected_order = [
        "\"skill_root\"",
        "\"risk\"",
        "\"finding_count\"",
        "\"findings\"",
        "\"capabilities\"",
        "\"scanner_version\"",
        "\"limitations\"",
        "\"scan_errors\"",
    ];
    let positions: Vec<usize> = expected_order
        .iter()
        .map(|k| stdout.find(k).unwrap_or_else(|| panic!("{k} missing")))
        .collect();
    assert!(
        positions.windows(2).all(|w| w[0] < w[1]),
        "top-level fields out of order: {positions:?}"
    );
}

#[test]
fn scan_max_depth_records_truncation() {
    let tmp = tempfile::tempdir().unwrap();
    write_skill(
        &tmp.path().join("skill"),
        "---\nname: chain\ndescription: Organize notes\n---\nStart with a.md please.\n",
        &[("a.md", "Continue in b.md\n"), ("b.md", "done\n")],
    );
    let out = skillguard(&["scan", "skill", "--json", "--max-depth", "1"], tmp.path());
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let truncated = report["findings"]
        .as_array()
        .unwrap()
        .iter()
        .any(|f| f["severity"] == "info" && f["rationale"].as_str().unwrap().contains("depth limit"));
    assert!(truncated, "expected a depth-truncation finding");
}

#[test]
fn simulate_prints_the_verdict_line_and_writes_transcript() {
    let tmp = tempfile::tempdir().unwrap();
    corpusgen::generate_corpus(tmp.path(), 0).unwrap();
    let out = skillguard(
        &[
            "simulate",
            "scenarios/scenario_a.toml",
            "--transcript",
            "transcript.json",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "prompts=2 egress=1/allowed verdict=via_network\n"
    );
    let transcript: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("transcript.json")).unwrap())
            .unwrap();
    assert_eq!(transcript["verdict"], "via_network");
    assert_eq!(transcript["prompts"], 2);
    assert!(transcript["events"].as_array().unwrap().len() >= 8);
}

#[test]
fn simulate_bad_scenario_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("broken.toml"), "no = [").unwrap();
    let out = skillguard(&["simulate", "broken.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn graph_of_minimal_skill_has_two_nodes_one_edge() {
    let tmp = tempfile::tempdir().unwrap();
    write_skill(
        &tmp.path().join("skill"),
        "---\nname: pptx\ndescription: Edit PowerPoint presentations\n---\n```bash\npython scripts/file_backup.py output.pptx\n```\n",
        &[("scripts/file_backup.py", "pass\n")],
    );
    let out = skillguard(&["graph", "skill"], tmp.path());
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("digraph skill {"));
    assert_eq!(dot.matches(" -> ").count(), 1);
    assert!(dot.contains("\"SKILL.md\" [shape=box];"));
    assert!(dot.contains("\"scripts/file_backup.py\";"));
}

#[test]
fn graph_of_empty_skill_is_a_single_node() {
    let tmp = tempfile::tempdir().unwrap();
    write_skill(
        &tmp.path().join("skill"),
        "---\nname: lonely\ndescription: Organize notes\n---\nNo references here.\n",
        &[],
    );
    let out = skillguard(&["graph", "skill"], tmp.path());
    let dot = String::from_utf8(out.stdout).unwrap();
    assert_eq!(dot.matches(" -> ").count(), 0);
    assert_eq!(dot.matches("\";").count() + dot.matches("];").count(), 1);
}

#[test]
fn gen_corpus_reports_twenty_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let out = skillguard(&["gen-corpus", "corpus"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("generated 20 skill directories"));
    assert!(tmp.path().join("corpus/manifest.json").is_file());
    assert!(tmp.path().join("corpus/scenarios/scenario_a.toml").is_file());
    assert!(tmp.path().join("corpus/fixtures/sample_deck.txt").is_file());
}
