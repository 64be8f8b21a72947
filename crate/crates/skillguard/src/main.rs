//! Command-line front end: scan, simulate, graph, gen-corpus.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use skillguard::agentsim::{load_scenario, run_scenario};
use skillguard::corpusgen;
use skillguard::refgraph::{build_graph, to_dot, DEFAULT_MAX_DEPTH};
use skillguard::scan::{scan, ScanReport, Severity};
use skillguard::skillpkg::parse_skill_dir;

#[derive(Parser)]
#[command(
    name = "skillguard",
    version,
    about = "Audit agent skill packages: injection scan, reference graph, permission-flow simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a skill directory with detectors D1-D7.
    Scan {
        /// Skill directory (contains SKILL.md).
        path: PathBuf,
        /// Emit the JSON report instead of the table.
        #[arg(long)]
        json: bool,
        /// Exit 3 when findings reach medium severity.
        #[arg(long)]
        strict: bool,
        /// Transitive reference depth to follow.
        #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
        max_depth: usize,
    },
    /// Run a scenario file through the agent simulator.
    Simulate {
        /// Scenario TOML file.
        scenario: PathBuf,
        /// Write the JSON transcript here.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Print the file-reference graph in DOT format.
    Graph {
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
        max_depth: usize,
    },
    /// Generate the benign/malicious test corpus with scenarios.
    GenCorpus {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// 0 clean; 2 findings at or above high; 3 findings at or above medium with
/// --strict; 1 operational error.
fn scan_exit_code(report: &ScanReport, strict: bool) -> u8 {
    if report.max_severity_at_or_above(Severity::High) {
        2
    } else if strict && report.max_severity_at_or_above(Severity::Medium) {
        3
    } else {
        0
    }
}

fn render_table(report: &ScanReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("skill root : {}\n", report.skill_root));
    out.push_str(&format!(
        "risk       : {} ({} findings)\n",
        report.risk, report.finding_count
    ));
    if !report.findings.is_empty() {
        out.push_str("\nDETECTOR  SEVERITY  LOCATION                                EVIDENCE\n");
        for f in &report.findings {
            let location = format!("{}:{}-{}", f.path, f.lines.0, f.lines.1);
            let evidence: String = f.evidence.chars().take(60).collect();
            out.push_str(&format!(
                "{:<9} {:<9} {:<39} {}\n",
                f.detector.name(),
                f.severity.name(),
                location,
                evidence
            ));
        }
    }
    if !report.scan_errors.is_empty() {
        out.push_str("\nunreadable files:\n");
        for e in &report.scan_errors {
            out.push_str(&format!("  {}: {}\n", e.path, e.message));
        }
    }
    out.push_str("\nlimitations:\n");
    for l in &report.limitations {
        out.push_str(&format!("  - {l}\n"));
    }
    out
}

fn run() -> Result<u8, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Scan {
            path,
            json,
            strict,
            max_depth,
        } => {
            let pkg = parse_skill_dir(&path).map_err(|e| e.to_string())?;
            let graph = build_graph(&pkg, max_depth);
            let report = scan(&pkg, &graph);
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", render_table(&report));
            }
            Ok(scan_exit_code(&report, strict))
        }
        Command::Simulate {
            scenario,
            transcript,
        } => {
            let s = load_scenario(&scenario).map_err(|e| e.to_string())?;
            let t = run_scenario(&s).map_err(|e| e.to_string())?;
            if let Some(out) = transcript {
                std::fs::write(&out, t.to_json())
                    .map_err(|e| format!("writing {}: {e}", out.display()))?;
            }
            println!("{}", t.verdict_line());
            Ok(0)
        }
        Command::Graph { path, max_depth } => {
            let pkg = parse_skill_dir(&path).map_err(|e| e.to_string())?;
            let graph = build_graph(&pkg, max_depth);
            print!("{}", to_dot(&graph));
            Ok(0)
        }
        Command::GenCorpus { out_dir, seed } => {
            let manifest =
                corpusgen::generate_corpus(&out_dir, seed).map_err(|e| e.to_string())?;
            println!(
                "generated {} skill directories under {} (seed {})",
                manifest.entries.len(),
                out_dir.display(),
                seed
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
