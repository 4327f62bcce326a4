//! Attributed BOM graphs and their structure-constrained merge.
//!
//! The merge runs in two phases. Phase one walks both graphs depth-first
//! from their roots and pairs children of already-paired nodes when their
//! names are equal. Phase two looks only at children of paired nodes that
//! phase one left unpaired, and links them when their names are similar
//! enough. Similar names in unrelated parts of the two graphs are never
//! candidates, which is what keeps the fuzzy output short.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::fuzzy::{all_pairs_matches, jaro_winkler_unchecked, ConfigError, FuzzyConfig};
use crate::model::{BomDocument, ComponentId, RelationshipKind};

pub type NodeIndex = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    /// Unique within the graph: the component id, suffixed `#i` when the
    /// component's quantity was expanded into several instances.
    pub key: String,
    /// `None` for a synthetic root.
    pub component: Option<ComponentId>,
    pub name: String,
    pub version: Option<String>,
    pub purl: Option<String>,
    pub instance: u64,
}

impl GraphNode {
    pub fn is_synthetic(&self) -> bool {
        self.component.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphEdge {
    pub source: NodeIndex,
    pub target: NodeIndex,
    /// `None` marks an edge added so the root reaches an otherwise
    /// unreachable node. Such edges are compatible with either kind.
    pub kind: Option<RelationshipKind>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BomGraph {
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    root: NodeIndex,
    children: Vec<Vec<(NodeIndex, Option<RelationshipKind>)>>,
}

impl BomGraph {
    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn root(&self) -> NodeIndex {
        self.root
    }

    pub fn node(&self, i: NodeIndex) -> &GraphNode {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn children(&self, i: NodeIndex) -> &[(NodeIndex, Option<RelationshipKind>)] {
        &self.children[i]
    }

    fn index_children(&mut self) {
        let mut children = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            children[e.source].push((e.target, e.kind));
        }
        for list in &mut children {
            list.sort();
            list.dedup();
        }
        self.children = children;
    }

    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        seen[self.root] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.children[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

/// Converts a document into a rooted graph.
///
/// Each component becomes `quantity` node instances, in canonical order.
/// A relationship connects every instance of its source to every instance
/// of its target. The subject is the root; without one a synthetic root
/// named after the document is appended. Nodes the root cannot reach are
/// adopted by it: first those nothing points at, then, for leftover cycles,
/// the first unreachable node in order, until everything is reachable.
pub fn build_graph(doc: &BomDocument) -> BomGraph {
    let mut nodes = Vec::new();
    let mut instances: BTreeMap<&ComponentId, Vec<NodeIndex>> = BTreeMap::new();
    for c in doc.components() {
        let list = instances.entry(&c.id).or_default();
        for i in 0..c.quantity {
            let key = if c.quantity == 1 {
                c.id.to_string()
            } else {
                format!("{}#{i}", c.id)
            };
            list.push(nodes.len());
            nodes.push(GraphNode {
                key,
                component: Some(c.id.clone()),
                name: c.name.clone(),
                version: c.version.clone(),
                purl: c.purl.clone(),
                instance: i,
            });
        }
    }

    let mut edges = BTreeSet::new();
    for r in doc.relationships() {
        for &s in &instances[&r.source] {
            for &t in &instances[&r.target] {
                edges.insert(GraphEdge {
                    source: s,
                    target: t,
                    kind: Some(r.kind),
                });
            }
        }
    }

    let root = match doc.subject() {
        Some(subject) => instances[subject][0],
        None => {
            let keys: BTreeSet<&str> = nodes.iter().map(|n| n.key.as_str()).collect();
            let mut key = String::from("#root");
            while keys.contains(key.as_str()) {
                key.push('#');
            }
            let name = if doc.source_name().is_empty() {
                "(root)".to_string()
            } else {
                doc.source_name().to_string()
            };
            nodes.push(GraphNode {
                key,
                component: None,
                name,
                version: None,
                purl: None,
                instance: 0,
            });
            nodes.len() - 1
        }
    };

    let mut graph = BomGraph {
        nodes,
        edges: edges.into_iter().collect(),
        root,
        children: Vec::new(),
    };
    graph.index_children();
    adopt_unreachable(&mut graph);
    graph
}

fn adopt_unreachable(g: &mut BomGraph) {
    loop {
        let seen = g.reachable();
        if seen.iter().all(|s| *s) {
            return;
        }
        let mut has_parent = vec![false; g.nodes.len()];
        for e in &g.edges {
            has_parent[e.target] = true;
        }
        let orphans: Vec<NodeIndex> = (0..g.nodes.len())
            .filter(|&i| !seen[i] && !has_parent[i])
            .collect();
        let adopt = if orphans.is_empty() {
            vec![(0..g.nodes.len())
                .find(|&i| !seen[i])
                .expect("an unreachable node")]
        } else {
            orphans
        };
        for target in adopt {
            g.edges.push(GraphEdge {
                source: g.root,
                target,
                kind: None,
            });
        }
        g.edges.sort();
        g.index_children();
    }
}

fn kinds_compatible(a: Option<RelationshipKind>, b: Option<RelationshipKind>) -> bool {
    a.is_none() || b.is_none() || a == b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyLink {
    pub left: NodeIndex,
    pub right: NodeIndex,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Presence {
    Both,
    LeftOnly,
    RightOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedNode {
    pub presence: Presence,
    pub left: Option<NodeIndex>,
    pub right: Option<NodeIndex>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MergedEdge {
    /// Indices into [`MergedGraph::nodes`].
    pub source: usize,
    pub target: usize,
    pub kind: Option<RelationshipKind>,
    pub presence: Presence,
}

/// Union of two graphs. Every left node is either in a pair or left-only,
/// and likewise for the right.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedGraph {
    pub left: BomGraph,
    pub right: BomGraph,
    pub pairs: Vec<(NodeIndex, NodeIndex)>,
    pub left_only: Vec<NodeIndex>,
    pub right_only: Vec<NodeIndex>,
    /// Similar-name links, each between a left-only and a right-only node.
    pub fuzzy_links: Vec<FuzzyLink>,
    /// Pairs first, then left-only, then right-only nodes.
    pub nodes: Vec<MergedNode>,
    pub edges: Vec<MergedEdge>,
}

impl MergedGraph {
    /// Display name of a merged node (the left name for pairs).
    pub fn node_name(&self, node: &MergedNode) -> &str {
        match (node.left, node.right) {
            (Some(l), _) => &self.left.node(l).name,
            (None, Some(r)) => &self.right.node(r).name,
            (None, None) => unreachable!("merged node without members"),
        }
    }

    pub fn left_merged_index(&self, l: NodeIndex) -> Option<usize> {
        self.nodes.iter().position(|n| n.left == Some(l))
    }

    pub fn right_merged_index(&self, r: NodeIndex) -> Option<usize> {
        self.nodes.iter().position(|n| n.right == Some(r))
    }
}

pub fn merge_graphs(
    g1: &BomGraph,
    g2: &BomGraph,
    cfg: &FuzzyConfig,
) -> Result<MergedGraph, ConfigError> {
    cfg.validate()?;
    let mut l2r: Vec<Option<NodeIndex>> = vec![None; g1.len()];
    let mut r2l: Vec<Option<NodeIndex>> = vec![None; g2.len()];
    let mut pairs = Vec::new();

    // Phase 1: exact names, depth-first from the roots.
    l2r[g1.root] = Some(g2.root);
    r2l[g2.root] = Some(g1.root);
    pairs.push((g1.root, g2.root));
    let mut stack = vec![(g1.root, g2.root)];
    while let Some((u, v)) = stack.pop() {
        let mut found = Vec::new();
        for &(l, lk) in g1.children(u) {
            if l2r[l].is_some() {
                continue;
            }
            let name = &g1.node(l).name;
            let candidate = g2.children(v).iter().find(|&&(r, rk)| {
                r2l[r].is_none() && kinds_compatible(lk, rk) && g2.node(r).name == *name
            });
            if let Some(&(r, _)) = candidate {
                l2r[l] = Some(r);
                r2l[r] = Some(l);
                pairs.push((l, r));
                found.push((l, r));
            }
        }
        stack.extend(found.into_iter().rev());
    }

    // Phase 2: similar names among unpaired children of paired parents.
    let mut scores: HashMap<(&str, &str), f64> = HashMap::new();
    let mut candidates = BTreeSet::new();
    let mut scored = Vec::new();
    for &(u, v) in &pairs {
        for &(l, lk) in g1.children(u) {
            if l2r[l].is_some() {
                continue;
            }
            for &(r, rk) in g2.children(v) {
                if r2l[r].is_some() || !kinds_compatible(lk, rk) || !candidates.insert((l, r)) {
                    continue;
                }
                let (ln, rn) = (g1.node(l).name.as_str(), g2.node(r).name.as_str());
                let score = *scores
                    .entry((ln, rn))
                    .or_insert_with(|| jaro_winkler_unchecked(ln, rn, cfg));
                if score > cfg.threshold {
                    scored.push(FuzzyLink {
                        left: l,
                        right: r,
                        score,
                    });
                }
            }
        }
    }
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| g1.node(a.left).name.cmp(&g1.node(b.left).name))
            .then_with(|| g2.node(a.right).name.cmp(&g2.node(b.right).name))
            .then_with(|| (a.left, a.right).cmp(&(b.left, b.right)))
    });
    let mut used_left = BTreeSet::new();
    let mut used_right = BTreeSet::new();
    let fuzzy_links: Vec<FuzzyLink> = scored
        .into_iter()
        .filter(|link| {
            if used_left.contains(&link.left) || used_right.contains(&link.right) {
                return false;
            }
            used_left.insert(link.left);
            used_right.insert(link.right);
            true
        })
        .collect();

    pairs.sort();
    let left_only: Vec<NodeIndex> = (0..g1.len()).filter(|&i| l2r[i].is_none()).collect();
    let right_only: Vec<NodeIndex> = (0..g2.len()).filter(|&i| r2l[i].is_none()).collect();

    let mut nodes = Vec::with_capacity(pairs.len() + left_only.len() + right_only.len());
    let mut left_mid = vec![0; g1.len()];
    let mut right_mid = vec![0; g2.len()];
    for &(l, r) in &pairs {
        left_mid[l] = nodes.len();
        right_mid[r] = nodes.len();
        nodes.push(MergedNode {
            presence: Presence::Both,
            left: Some(l),
            right: Some(r),
        });
    }
    for &l in &left_only {
        left_mid[l] = nodes.len();
        nodes.push(MergedNode {
            presence: Presence::LeftOnly,
            left: Some(l),
            right: None,
        });
    }
    for &r in &right_only {
        right_mid[r] = nodes.len();
        nodes.push(MergedNode {
            presence: Presence::RightOnly,
            left: None,
            right: Some(r),
        });
    }

    let mut edge_presence: BTreeMap<(usize, usize, Option<RelationshipKind>), Presence> =
        BTreeMap::new();
    for e in g1.edges() {
        edge_presence.insert(
            (left_mid[e.source], left_mid[e.target], e.kind),
            Presence::LeftOnly,
        );
    }
    for e in g2.edges() {
        edge_presence
            .entry((right_mid[e.source], right_mid[e.target], e.kind))
            .and_modify(|p| *p = Presence::Both)
            .or_insert(Presence::RightOnly);
    }
    let edges = edge_presence
        .into_iter()
        .map(|((source, target, kind), presence)| MergedEdge {
            source,
            target,
            kind,
            presence,
        })
        .collect();

    Ok(MergedGraph {
        left: g1.clone(),
        right: g2.clone(),
        pairs,
        left_only,
        right_only,
        fuzzy_links,
        nodes,
        edges,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchStats {
    pub matched: usize,
    pub left_only: usize,
    pub right_only: usize,
    pub fuzzy: usize,
}

/// Partition sizes. A synthetic root counts as an ordinary node.
pub fn match_stats(m: &MergedGraph) -> MatchStats {
    MatchStats {
        matched: m.pairs.len(),
        left_only: m.left_only.len(),
        right_only: m.right_only.len(),
        fuzzy: m.fuzzy_links.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reduction {
    /// Similar distinct-name pairs over the two graphs' whole name sets.
    pub all_pairs: usize,
    /// Fuzzy links the structure-constrained merge keeps.
    pub constrained: usize,
}

/// Compares unconstrained name matching with the structure-constrained
/// merge. Exact-equal name pairs and synthetic roots are excluded from
/// `all_pairs`.
pub fn structure_constrained_reduction(
    g1: &BomGraph,
    g2: &BomGraph,
    cfg: &FuzzyConfig,
) -> Result<Reduction, ConfigError> {
    let names = |g: &BomGraph| -> BTreeSet<String> {
        g.nodes()
            .iter()
            .filter(|n| !n.is_synthetic())
            .map(|n| n.name.clone())
            .collect()
    };
    let all_pairs = all_pairs_matches(names(g1), names(g2), cfg, true)?.len();
    let constrained = merge_graphs(g1, g2, cfg)?.fuzzy_links.len();
    Ok(Reduction {
        all_pairs,
        constrained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BomFormat, Component, Relationship};

    fn id(s: &str) -> ComponentId {
        ComponentId::new(s).unwrap()
    }

    fn contains(a: &str, b: &str) -> Relationship {
        Relationship::new(id(a), id(b), RelationshipKind::Contains)
    }

    fn doc(
        subject: Option<&str>,
        comps: &[(&str, &str, u64)],
        rels: Vec<Relationship>,
    ) -> BomDocument {
        let comps = comps
            .iter()
            .map(|(i, n, q)| Component::new(id(i), *n).with_quantity(*q))
            .collect();
        BomDocument::new(
            BomFormat::GenericHbom,
            "",
            subject.map(id),
            comps,
            rels,
            "hb",
        )
        .unwrap()
    }

    #[test]
    fn two_node_chain() {
        let g = build_graph(&doc(
            Some("a"),
            &[("a", "A", 1), ("b", "B", 1)],
            vec![contains("a", "b")],
        ));
        assert_eq!(g.len(), 2);
        assert_eq!(g.node(g.root()).name, "A");
        assert_eq!(g.edges().len(), 1);
    }

    #[test]
    fn quantity_expands_into_instances() {
        let g = build_graph(&doc(
            Some("board"),
            &[("board", "board", 1), ("chip", "chip", 3)],
            vec![contains("board", "chip")],
        ));
        assert_eq!(g.len(), 4);
        assert_eq!(g.edges().len(), 3);
        let keys: Vec<_> = g.nodes().iter().map(|n| n.key.as_str()).collect();
        assert_eq!(keys, ["board", "chip#0", "chip#1", "chip#2"]);
        assert!(g.nodes().iter().filter(|n| n.name == "chip").count() == 3);
    }

    #[test]
    fn synthetic_root_adopts_disconnected_components() {
        let g = build_graph(&doc(None, &[("a", "a", 1), ("b", "b", 1)], vec![]));
        assert_eq!(g.len(), 3);
        assert!(g.node(g.root()).is_synthetic());
        assert_eq!(g.node(g.root()).name, "hb");
        assert_eq!(g.edges().len(), 2);
        assert!(g
            .edges()
            .iter()
            .all(|e| e.source == g.root() && e.kind.is_none()));
    }

    #[test]
    fn cycles_are_adopted() {
        let g = build_graph(&doc(
            None,
            &[("a", "a", 1), ("b", "b", 1)],
            vec![contains("a", "b"), contains("b", "a")],
        ));
        assert!(g.reachable().iter().all(|s| *s));
        assert_eq!(g.edges().len(), 3);
    }

    #[test]
    fn subject_adopts_stray_nodes() {
        let g = build_graph(&doc(
            Some("a"),
            &[("a", "a", 1), ("b", "b", 1), ("c", "c", 1)],
            vec![contains("a", "b")],
        ));
        assert_eq!(g.len(), 3);
        assert_eq!(g.node(g.root()).name, "a");
        assert!(g.reachable().iter().all(|s| *s));
    }

    fn hbom(extra: &[(&str, &str, u64)], rels: Vec<Relationship>) -> BomGraph {
        let mut comps = vec![("root", "product", 1), ("b1", "board", 1)];
        comps.extend_from_slice(extra);
        let mut all = vec![contains("root", "b1")];
        all.extend(rels);
        build_graph(&doc(Some("root"), &comps, all))
    }

    #[test]
    fn self_merge_is_a_fixed_point() {
        let g = hbom(
            &[("c", "chip", 2), ("r", "res", 1)],
            vec![contains("b1", "c"), contains("b1", "r")],
        );
        let m = merge_graphs(&g, &g, &FuzzyConfig::default()).unwrap();
        assert_eq!(
            match_stats(&m),
            MatchStats {
                matched: g.len(),
                left_only: 0,
                right_only: 0,
                fuzzy: 0
            }
        );
        assert!(m.edges.iter().all(|e| e.presence == Presence::Both));
    }

    #[test]
    fn transcription_error_becomes_fuzzy_link() {
        let l = hbom(&[("x", "IN3S00A", 1)], vec![contains("b1", "x")]);
        let r = hbom(&[("x", "IN3500", 1)], vec![contains("b1", "x")]);
        let m = merge_graphs(&l, &r, &FuzzyConfig::default()).unwrap();
        assert_eq!(m.fuzzy_links.len(), 1);
        let link = m.fuzzy_links[0];
        assert_eq!(l.node(link.left).name, "IN3S00A");
        assert_eq!(r.node(link.right).name, "IN3500");
        assert!(m.left_only.contains(&link.left));
        assert!(m.right_only.contains(&link.right));
    }

    #[test]
    fn extra_subtree_is_right_only() {
        let l = hbom(&[("c", "chip", 1)], vec![contains("b1", "c")]);
        let r = hbom(
            &[
                ("c", "chip", 1),
                ("b2", "expansion", 1),
                ("d", "dsp", 1),
                ("e", "eeprom", 2),
            ],
            vec![
                contains("b1", "c"),
                contains("root", "b2"),
                contains("b2", "d"),
                contains("b2", "e"),
            ],
        );
        let m = merge_graphs(&l, &r, &FuzzyConfig::default()).unwrap();
        let s = match_stats(&m);
        assert_eq!(
            (s.matched, s.left_only, s.right_only, s.fuzzy),
            (3, 0, 4, 0)
        );
    }

    #[test]
    fn same_name_children_pair_in_canonical_order() {
        let l = hbom(&[("c", "chip", 3)], vec![contains("b1", "c")]);
        let r = hbom(&[("c", "chip", 2)], vec![contains("b1", "c")]);
        let m = merge_graphs(&l, &r, &FuzzyConfig::default()).unwrap();
        let s = match_stats(&m);
        assert_eq!((s.matched, s.left_only, s.right_only), (4, 1, 0));
        assert_eq!(l.node(m.left_only[0]).key, "c#2");
    }

    #[test]
    fn edge_kinds_must_agree() {
        let l = build_graph(&doc(
            Some("a"),
            &[("a", "a", 1), ("b", "b", 1)],
            vec![Relationship::new(
                id("a"),
                id("b"),
                RelationshipKind::DependsOn,
            )],
        ));
        let r = build_graph(&doc(
            Some("a"),
            &[("a", "a", 1), ("b", "b", 1)],
            vec![contains("a", "b")],
        ));
        let m = merge_graphs(&l, &r, &FuzzyConfig::default()).unwrap();
        assert_eq!(match_stats(&m).matched, 1);
    }

    #[test]
    fn merge_terminates_on_cycles() {
        let rels = vec![contains("b1", "x"), contains("x", "y"), contains("y", "b1")];
        let l = hbom(&[("x", "x", 1), ("y", "y", 1)], rels.clone());
        let m = merge_graphs(&l, &l, &FuzzyConfig::default()).unwrap();
        assert_eq!(match_stats(&m).matched, 4);
    }

    #[test]
    fn greedy_assignment_uses_each_node_once() {
        let l = hbom(&[("x", "V17N", 1)], vec![contains("b1", "x")]);
        let r = hbom(
            &[("x", "V17N-ZB11", 1), ("y", "V17N-ZB12", 1)],
            vec![contains("b1", "x"), contains("b1", "y")],
        );
        let m = merge_graphs(&l, &r, &FuzzyConfig::default()).unwrap();
        assert_eq!(m.fuzzy_links.len(), 1);
        assert_eq!(r.node(m.fuzzy_links[0].right).name, "V17N-ZB11");
    }

    #[test]
    fn reduction_on_identical_graphs() {
        let g = hbom(&[("c", "chip", 1)], vec![contains("b1", "c")]);
        let red = structure_constrained_reduction(&g, &g, &FuzzyConfig::default()).unwrap();
        assert_eq!(
            red,
            Reduction {
                all_pairs: 0,
                constrained: 0
            }
        );
    }

    #[test]
    fn invalid_config_is_rejected() {
        let g = hbom(&[], vec![]);
        let bad = FuzzyConfig::default().with_threshold(2.0);
        assert!(merge_graphs(&g, &g, &bad).is_err());
    }
}
