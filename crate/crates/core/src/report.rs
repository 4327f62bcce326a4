//! Text tables, JSON reports and DOT exports.
//!
//! Every renderer is a pure function of its input, so identical reports
//! always produce identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::flatcompare::{ConsistencyCategory, ConsistencyFinding, FieldSelector, MultisetDiff};
use crate::fuzzy::FuzzyMatch;
use crate::graphcompare::{match_stats, BomGraph, MatchStats, MergedGraph, Presence};
use crate::model::BomDocument;

pub const SCHEMA_VERSION: &str = "1";

pub const BOTH_COLOR: &str = "#6baed6";
pub const LEFT_ONLY_COLOR: &str = "#fa9fb5";
pub const RIGHT_ONLY_COLOR: &str = "#ffd92f";
pub const FUZZY_EDGE_COLOR: &str = "#ffd92f";
pub const FUZZY_PENWIDTH: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceNames {
    pub left: String,
    pub right: String,
}

/// Result of comparing two documents.
///
/// JSON schema (version "1"): an object with keys `schema_version`,
/// `source_names` {`left`, `right`}, `field_diffs` (field name to
/// {`left_total`, `right_total`, `left_unique`, `right_unique`, `common`
/// {value: {`left`, `right`}}, `left_only` {value: count}, `right_only`}),
/// `fuzzy` [{`left`, `right`, `score`}], `graph` (null or a
/// [`GraphSummary`]), `findings` [{`category`, `left_ids`, `right_ids`,
/// `detail`}], `unhashed` (null or {`left`, `right`}), `license_coverage`
/// (null or {`left`, `right`} each {`licensed`, `total`}) and optionally
/// `generated_at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub schema_version: String,
    pub source_names: SourceNames,
    pub field_diffs: BTreeMap<FieldSelector, MultisetDiff>,
    pub fuzzy: Vec<FuzzyMatch>,
    pub graph: Option<GraphSummary>,
    pub findings: Vec<ConsistencyFinding>,
    /// Components per side skipped by the name/hash cross-check.
    pub unhashed: Option<UnhashedCounts>,
    #[serde(default)]
    pub license_coverage: Option<LicenseCoverage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnhashedCounts {
    pub left: usize,
    pub right: usize,
}

/// Components carrying at least one license, out of all components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub licensed: usize,
    pub total: usize,
}

impl Coverage {
    pub fn of(doc: &BomDocument) -> Self {
        Coverage {
            licensed: doc
                .components()
                .iter()
                .filter(|c| !c.licenses.is_empty())
                .count(),
            total: doc.components().len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseCoverage {
    pub left: Coverage,
    pub right: Coverage,
}

impl DiffReport {
    pub fn new(left: impl Into<String>, right: impl Into<String>) -> Self {
        DiffReport {
            schema_version: SCHEMA_VERSION.to_string(),
            source_names: SourceNames {
                left: left.into(),
                right: right.into(),
            },
            field_diffs: BTreeMap::new(),
            fuzzy: Vec::new(),
            graph: None,
            findings: Vec::new(),
            unhashed: None,
            license_coverage: None,
            generated_at: None,
        }
    }

    /// True when any only-bucket is non-empty, any non-identical fuzzy match
    /// or fuzzy link exists, or any finding is not a consensus.
    pub fn has_differences(&self) -> bool {
        self.field_diffs.values().any(MultisetDiff::has_differences)
            || self.fuzzy.iter().any(|m| m.left != m.right)
            || self.graph.as_ref().is_some_and(|g| {
                g.stats.left_only > 0 || g.stats.right_only > 0 || g.stats.fuzzy > 0
            })
            || self
                .findings
                .iter()
                .any(|f| f.category != ConsistencyCategory::Consensus)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRef {
    pub key: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRef {
    pub left: NodeRef,
    pub right: NodeRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRef {
    pub left: NodeRef,
    pub right: NodeRef,
    pub score: f64,
    pub hint: DifferenceCategory,
}

/// Serializable view of a [`MergedGraph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub stats: MatchStats,
    pub pairs: Vec<PairRef>,
    pub left_only: Vec<NodeRef>,
    pub right_only: Vec<NodeRef>,
    pub fuzzy_links: Vec<LinkRef>,
}

impl GraphSummary {
    pub fn from_merged(m: &MergedGraph) -> Self {
        let left = |i| node_ref(&m.left, i);
        let right = |i| node_ref(&m.right, i);
        GraphSummary {
            stats: match_stats(m),
            pairs: m
                .pairs
                .iter()
                .map(|&(l, r)| PairRef {
                    left: left(l),
                    right: right(r),
                })
                .collect(),
            left_only: m.left_only.iter().map(|&i| left(i)).collect(),
            right_only: m.right_only.iter().map(|&i| right(i)).collect(),
            fuzzy_links: classify_differences(m)
                .into_iter()
                .zip(&m.fuzzy_links)
                .map(|(hint, link)| LinkRef {
                    left: left(link.left),
                    right: right(link.right),
                    score: link.score,
                    hint: hint.category,
                })
                .collect(),
        }
    }
}

fn node_ref(g: &BomGraph, i: usize) -> NodeRef {
    let n = g.node(i);
    NodeRef {
        key: n.key.clone(),
        name: n.name.clone(),
    }
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let numeric: Vec<bool> = (0..widths.len())
        .map(|i| !rows.is_empty() && rows.iter().all(|r| r[i].parse::<f64>().is_ok()))
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .zip(&numeric)
            .map(|((c, w), num)| {
                if *num {
                    format!("{c:>w$}")
                } else {
                    format!("{c:<w$}")
                }
            })
            .collect();
        padded.join(" | ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

/// Text rendering: the comparison table (a list row and a unique row per
/// field, with columns left, right, left-only, right-only), followed by the
/// differing values, fuzzy matches, graph statistics and findings when the
/// report has any. A graph-only report skips the empty table.
pub fn render_table(report: &DiffReport) -> String {
    let (l, r) = (&report.source_names.left, &report.source_names.right);
    let header = vec![
        "Field".to_string(),
        l.clone(),
        r.clone(),
        format!("{l} (Only)"),
        format!("{r} (Only)"),
    ];
    let mut rows = Vec::new();
    for (field, diff) in &report.field_diffs {
        rows.push(vec![
            field.label().to_string(),
            diff.left_total.to_string(),
            diff.right_total.to_string(),
            diff.left_only_total().to_string(),
            diff.right_only_total().to_string(),
        ]);
        rows.push(vec![
            field.unique_label().to_string(),
            diff.left_unique.to_string(),
            diff.right_unique.to_string(),
            diff.left_only.len().to_string(),
            diff.right_only.len().to_string(),
        ]);
    }
    let mut out = String::new();
    if let Some(ts) = &report.generated_at {
        let _ = writeln!(out, "Generated: {ts}");
    }
    if !report.field_diffs.is_empty() || report.graph.is_none() {
        out.push_str(&table(&header, &rows));
    }

    for (field, diff) in &report.field_diffs {
        for (side, values) in [(l, &diff.left_only), (r, &diff.right_only)] {
            if values.is_empty() {
                continue;
            }
            let _ = writeln!(out, "\nOnly in {side} ({}):", field.label());
            for (value, count) in values {
                if *count == 1 {
                    let _ = writeln!(out, "  {value}");
                } else {
                    let _ = writeln!(out, "  {value} (x{count})");
                }
            }
        }
        let uneven: Vec<_> = diff
            .common
            .iter()
            .filter(|(_, c)| c.left != c.right)
            .collect();
        if !uneven.is_empty() {
            let _ = writeln!(out, "\nCount differences ({}):", field.label());
            for (value, c) in uneven {
                let _ = writeln!(out, "  {value}: {} vs {}", c.left, c.right);
            }
        }
    }

    if !report.fuzzy.is_empty() {
        let _ = writeln!(out, "\nFuzzy matches ({}):", report.fuzzy.len());
        let rows: Vec<Vec<String>> = report
            .fuzzy
            .iter()
            .map(|m| vec![m.left.clone(), m.right.clone(), format!("{:.4}", m.score)])
            .collect();
        out.push_str(&table(&[l.clone(), r.clone(), "Score".into()], &rows));
    }

    if let Some(g) = &report.graph {
        let s = g.stats;
        let _ = writeln!(
            out,
            "\nGraph: matched={} left_only={} right_only={} fuzzy={}",
            s.matched, s.left_only, s.right_only, s.fuzzy
        );
        if !g.fuzzy_links.is_empty() {
            let rows: Vec<Vec<String>> = g
                .fuzzy_links
                .iter()
                .map(|f| {
                    vec![
                        f.left.name.clone(),
                        f.right.name.clone(),
                        format!("{:.4}", f.score),
                        f.hint.to_string(),
                    ]
                })
                .collect();
            out.push('\n');
            out.push_str(&table(
                &[l.clone(), r.clone(), "Score".into(), "Hint".into()],
                &rows,
            ));
        }
        for (side, nodes) in [(l, &g.left_only), (r, &g.right_only)] {
            if !nodes.is_empty() {
                let _ = writeln!(out, "\nGraph nodes only in {side}:");
                for n in nodes {
                    let _ = writeln!(out, "  {} [{}]", n.name, n.key);
                }
            }
        }
    }

    if !report.findings.is_empty() {
        let _ = writeln!(out, "\nFindings:");
        for f in &report.findings {
            let tag = match f.category {
                ConsistencyCategory::SameNameDifferentHash => "same-name-different-hash",
                ConsistencyCategory::DifferentNameSameHash => "different-name-same-hash",
                ConsistencyCategory::Consensus => "consensus",
            };
            let _ = writeln!(out, "  [{tag}] {}", f.detail);
        }
    }
    if let Some(c) = report.license_coverage {
        let _ = writeln!(
            out,
            "\nComponents with a license: {} of {} in {l}, {} of {} in {r}",
            c.left.licensed, c.left.total, c.right.licensed, c.right.total
        );
    }
    if let Some(u) = report.unhashed {
        if u.left + u.right > 0 {
            let _ = writeln!(
                out,
                "\nComponents without hashes: {} in {l}, {} in {r}",
                u.left, u.right
            );
        }
    }
    out.trim_start_matches('\n').to_string()
}

/// Pretty-printed JSON with a trailing newline.
pub fn render_json(report: &DiffReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DotOptions {
    /// Optional graph caption.
    pub title: Option<String>,
}

/// DOT export of a merged graph: paired nodes blue, left-only pink,
/// right-only yellow, structural edges solid, fuzzy links thick yellow
/// undirected-style edges.
pub fn to_dot(m: &MergedGraph, opts: &DotOptions) -> String {
    let mut out = String::from("digraph merged {\n");
    if let Some(title) = &opts.title {
        let _ = writeln!(out, "  label=\"{}\";\n  labelloc=t;", escape(title));
    }
    out.push_str("  node [shape=box, style=filled];\n");
    for (i, node) in m.nodes.iter().enumerate() {
        let color = match node.presence {
            Presence::Both => BOTH_COLOR,
            Presence::LeftOnly => LEFT_ONLY_COLOR,
            Presence::RightOnly => RIGHT_ONLY_COLOR,
        };
        let _ = writeln!(
            out,
            "  n{i} [label=\"{}\", fillcolor=\"{color}\"];",
            escape(m.node_name(node))
        );
    }
    let structural: BTreeSet<(usize, usize)> =
        m.edges.iter().map(|e| (e.source, e.target)).collect();
    for (s, t) in structural {
        let _ = writeln!(out, "  n{s} -> n{t};");
    }
    for link in &m.fuzzy_links {
        let (Some(s), Some(t)) = (
            m.left_merged_index(link.left),
            m.right_merged_index(link.right),
        ) else {
            continue;
        };
        let _ = writeln!(
            out,
            "  n{s} -> n{t} [dir=none, color=\"{FUZZY_EDGE_COLOR}\", penwidth={FUZZY_PENWIDTH}, constraint=false, tooltip=\"{:.4}\"];",
            link.score
        );
    }
    out.push_str("}\n");
    out
}

/// DOT export of a single document graph.
pub fn graph_to_dot(g: &BomGraph) -> String {
    let mut out = String::from("digraph bom {\n  node [shape=box];\n");
    for (i, n) in g.nodes().iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label=\"{}\"];", escape(&n.name));
    }
    let edges: BTreeSet<(usize, usize)> = g.edges().iter().map(|e| (e.source, e.target)).collect();
    for (s, t) in edges {
        let _ = writeln!(out, "  n{s} -> n{t};");
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceCategory {
    /// One name is the other with extra specificity appended.
    PrefixSpecificity,
    /// Near-identical names, likely a recording mistake.
    LikelyTranscription,
    /// A different part.
    Substitution,
}

impl std::fmt::Display for DifferenceCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DifferenceCategory::PrefixSpecificity => "prefix-specificity",
            DifferenceCategory::LikelyTranscription => "likely-transcription",
            DifferenceCategory::Substitution => "substitution",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceHint {
    pub category: DifferenceCategory,
    pub left: String,
    pub right: String,
}

/// Heuristic label for each fuzzy link, in `fuzzy_links` order.
pub fn classify_differences(m: &MergedGraph) -> Vec<DifferenceHint> {
    m.fuzzy_links
        .iter()
        .map(|link| {
            let left = m.left.node(link.left).name.clone();
            let right = m.right.node(link.right).name.clone();
            DifferenceHint {
                category: classify_names(&left, &right),
                left,
                right,
            }
        })
        .collect()
}

const SEPARATORS: &[char] = &['-', '_', '.', ' ', '/', ':'];

pub fn classify_names(a: &str, b: &str) -> DifferenceCategory {
    let strip = |s: &str| -> String { s.chars().filter(|c| !SEPARATORS.contains(c)).collect() };
    let (sa, sb) = (strip(a), strip(b));
    let (short, long) = if sa.chars().count() <= sb.chars().count() {
        (&sa, &sb)
    } else {
        (&sb, &sa)
    };
    if !short.is_empty() && short != long && long.starts_with(short.as_str()) {
        return DifferenceCategory::PrefixSpecificity;
    }
    let (la, lb) = (a.chars().count(), b.chars().count());
    if la.abs_diff(lb) <= 1 && strsim::levenshtein(a, b) <= 2 {
        return DifferenceCategory::LikelyTranscription;
    }
    DifferenceCategory::Substitution
}
