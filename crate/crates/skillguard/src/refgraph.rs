//! File-reference graph of a skill package.
//!
//! Nodes are `SKILL.md`, every asset, and a sink node per out-of-tree or
//! missing target. Edges come from path references in `SKILL.md` and in every
//! text asset, so orphan status is purely structural. Reachability is a
//! depth-limited BFS from `SKILL.md`; anomalies (orphans, dangling edges,
//! out-of-tree reach, cycles, depth truncation) are data, not failures.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::skillpkg::{
    extract_refs_from_lines, read_text_lossy, PathRef, Resolved, SkillPackage, SourceLoc,
};

/// Transitive references are followed this many hops from `SKILL.md` unless
/// overridden; a bound keeps adversarial reference chains from widening the
/// audit surface indefinitely.
pub const DEFAULT_MAX_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeKind {
    SkillMd,
    Asset,
    OutOfTree,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub source: SourceLoc,
}

/// Decoded text of one asset, with UTF-8 replacement lines for the scanner.
#[derive(Debug, Clone)]
pub struct FileText {
    pub text: String,
    pub replacement_lines: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct RefGraph {
    /// All nodes, sorted by id.
    pub nodes: Vec<Node>,
    /// One edge per reference, in source order (`SKILL.md` first, then assets
    /// sorted by path; within a file, by line).
    pub edges: Vec<Edge>,
    /// Existing assets nothing points at: potential staged payloads.
    pub orphans: Vec<String>,
    /// Edges whose in-tree target does not exist.
    pub dangling: Vec<Edge>,
    /// Edges escaping the skill root (or landing on symlinks).
    pub out_of_tree: Vec<Edge>,
    /// Edges whose target can reach back to their origin.
    pub cycle_edges: Vec<Edge>,
    /// Nodes reachable from `SKILL.md` within `max_depth` hops.
    pub reachable: BTreeSet<String>,
    /// Existing nodes first discovered beyond the depth limit.
    pub depth_truncated: Vec<String>,
    pub max_depth: usize,
    /// References per file, for detectors that need per-file context.
    pub file_refs: BTreeMap<String, Vec<PathRef>>,
    /// Decoded text of every text asset (binary assets are skipped).
    pub texts: BTreeMap<String, FileText>,
    /// Assets that could not be read; the scan records and continues.
    pub read_errors: Vec<(String, String)>,
}

impl RefGraph {
    /// Nodes the agent can load starting from `SKILL.md`.
    pub fn reachable_set(&self) -> &BTreeSet<String> {
        &self.reachable
    }

    pub fn node_kind(&self, id: &str) -> Option<NodeKind> {
        self.nodes.iter().find(|n| n.id == id).map(|n| n.kind)
    }
}

/// Builds the reference graph. References are extracted from `SKILL.md` and
/// from every text asset; reachability is a BFS from `SKILL.md` bounded by
/// `max_depth` hops.
pub fn build_graph(pkg: &SkillPackage, max_depth: usize) -> RefGraph {
    let ctx = pkg.ref_context();
    let asset_set = pkg.asset_paths();

    let mut file_refs: BTreeMap<String, Vec<PathRef>> = BTreeMap::new();
    let mut texts: BTreeMap<String, FileText> = BTreeMap::new();
    let mut read_errors = Vec::new();

    file_refs.insert("SKILL.md".to_string(), pkg.refs.clone());

    for asset in &pkg.assets {
        if asset.binary {
            continue;
        }
        match read_text_lossy(&pkg.root.join(&asset.path)) {
            Ok((text, replacement_lines)) => {
                let lines: Vec<(usize, String)> = text
                    .split('\n')
                    .enumerate()
                    .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l).to_string()))
                    .collect();
                let refs = extract_refs_from_lines(
                    lines.iter().map(|(n, l)| (*n, l.as_str())),
                    &asset.path,
                    &ctx,
                );
                file_refs.insert(asset.path.clone(), refs);
                texts.insert(
                    asset.path.clone(),
                    FileText {
                        text,
                        replacement_lines,
                    },
                );
            }
            Err(e) => read_errors.push((asset.path.clone(), e.to_string())),
        }
    }

    // Assemble edges in deterministic source order, classifying as we go.
    let mut nodes: BTreeMap<String, NodeKind> = BTreeMap::new();
    nodes.insert("SKILL.md".to_string(), NodeKind::SkillMd);
    for asset in &pkg.assets {
        nodes.insert(asset.path.clone(), NodeKind::Asset);
    }
    let mut edges = Vec::new();
    let mut dangling = Vec::new();
    let mut out_of_tree = Vec::new();
    let mut ordered_files: Vec<&String> = file_refs.keys().collect();
    ordered_files.sort_by_key(|f| (f.as_str() != "SKILL.md", f.as_str()));
    for file in ordered_files {
        for r in &file_refs[file] {
            let edge = match &r.resolved {
                Resolved::InTree(p) => Edge {
                    from: file.clone(),
                    to: p.clone(),
                    source: r.source.clone(),
                },
                Resolved::OutOfTree => Edge {
                    from: file.clone(),
                    to: r.raw.clone(),
                    source: r.source.clone(),
                },
            };
            match &r.resolved {
                Resolved::OutOfTree => {
                    nodes.entry(edge.to.clone()).or_insert(NodeKind::OutOfTree);
                    out_of_tree.push(edge.clone());
                }
                Resolved::InTree(p) => {
                    if p != "SKILL.md" && !asset_set.contains(p) {
                        nodes.entry(p.clone()).or_insert(NodeKind::Missing);
                        dangling.push(edge.clone());
                    }
                }
            }
            edges.push(edge);
        }
    }

    // Adjacency over existing nodes only; sinks are never expanded.
    let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for edge in &edges {
        let target_exists =
            edge.to == "SKILL.md" || asset_set.contains(&edge.to);
        if target_exists {
            adjacency.entry(edge.from.as_str()).or_default().push(edge.to.as_str());
        }
    }

    let mut depth: BTreeMap<&str, usize> = BTreeMap::new();
    let mut truncated: BTreeSet<String> = BTreeSet::new();
    let mut queue = VecDeque::new();
    depth.insert("SKILL.md", 0);
    queue.push_back("SKILL.md");
    while let Some(current) = queue.pop_front() {
        let d = depth[current];
        for &next in adjacency.get(current).into_iter().flatten() {
            if depth.contains_key(next) {
                continue;
            }
            if d + 1 > max_depth {
                truncated.insert(next.to_string());
                continue;
            }
            depth.insert(next, d + 1);
            queue.push_back(next);
        }
    }
    let reachable: BTreeSet<String> = depth.keys().map(|s| s.to_string()).collect();
    let depth_truncated: Vec<String> = truncated
        .into_iter()
        .filter(|t| !reachable.contains(t))
        .collect();

    // In-degree over all edges; orphans are unreferenced existing assets.
    let mut indegree: BTreeMap<&str, usize> = BTreeMap::new();
    for edge in &edges {
        *indegree.entry(edge.to.as_str()).or_default() += 1;
    }
    let orphans: Vec<String> = pkg
        .assets
        .iter()
        .map(|a| a.path.clone())
        .filter(|p| indegree.get(p.as_str()).copied().unwrap_or(0) == 0)
        .collect();

    let cycle_edges = find_cycle_edges(&edges, &adjacency);

    let nodes: Vec<Node> = nodes
        .into_iter()
        .map(|(id, kind)| Node { id, kind })
        .collect();

    RefGraph {
        nodes,
        edges,
        orphans,
        dangling,
        out_of_tree,
        cycle_edges,
        reachable,
        depth_truncated,
        max_depth,
        file_refs,
        texts,
        read_errors,
    }
}

fn find_cycle_edges(edges: &[Edge], adjacency: &BTreeMap<&str, Vec<&str>>) -> Vec<Edge> {
    let reaches = |from: &str, target: &str| -> bool {
        let mut visited = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            if n == target {
                return true;
            }
            if !visited.insert(n.to_string()) {
                continue;
            }
            for &next in adjacency.get(n).into_iter().flatten() {
                stack.push(next);
            }
        }
        false
    };
    edges
        .iter()
        .filter(|e| e.from != e.to && reaches(&e.to, &e.from) || e.from == e.to)
        .cloned()
        .collect()
}

/// Renders the graph as deterministic DOT text for human review.
pub fn to_dot(g: &RefGraph) -> String {
    let mut out = String::from("digraph skill {\n  rankdir=LR;\n");
    for node in &g.nodes {
        let attrs = match node.kind {
            NodeKind::SkillMd => " [shape=box]",
            NodeKind::Asset if g.orphans.contains(&node.id) => " [label_suffix=orphan, style=dashed]",
            NodeKind::Asset => "",
            NodeKind::OutOfTree => " [style=dotted, color=red]",
            NodeKind::Missing => " [style=dashed, color=orange]",
        };
        let _ = writeln!(out, "  \"{}\"{};", node.id, attrs);
    }
    for edge in &g.edges {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}:{}\"];",
            edge.from, edge.to, edge.source.file, edge.source.line
        );
    }
    out.push_str("}\n");
    out
}
