//! Field extraction and list (multiset) / set comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use packageurl::PackageUrl;
use serde::{Deserialize, Serialize};

use crate::model::{BomDocument, Component, ComponentId, Hash};

/// Default organization exclusions: the Java platform namespaces.
pub const JAVA_STDLIB_PREFIXES: &[&str] = &["java.", "javax.", "jdk.", "sun.", "com.sun."];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSelector {
    Name,
    Purl,
    Cpe,
    Vendor,
    License,
    #[serde(rename = "hash")]
    HashDigest,
    #[serde(rename = "org")]
    Organization,
}

impl FieldSelector {
    pub const ALL: [FieldSelector; 7] = [
        FieldSelector::Name,
        FieldSelector::Purl,
        FieldSelector::Cpe,
        FieldSelector::Vendor,
        FieldSelector::License,
        FieldSelector::HashDigest,
        FieldSelector::Organization,
    ];

    /// Row label for the list comparison.
    pub fn label(self) -> &'static str {
        match self {
            FieldSelector::Name => "Name",
            FieldSelector::Purl => "Purls",
            FieldSelector::Cpe => "CPEs",
            FieldSelector::Vendor => "Vendors",
            FieldSelector::License => "Licenses",
            FieldSelector::HashDigest => "Hashes",
            FieldSelector::Organization => "Organizations",
        }
    }

    /// Row label for the set comparison.
    pub fn unique_label(self) -> &'static str {
        match self {
            FieldSelector::Name => "Unique Names",
            FieldSelector::Purl => "Unique Purls",
            FieldSelector::Cpe => "Unique CPEs",
            FieldSelector::Vendor => "Unique Vendors",
            FieldSelector::License => "Unique Licenses",
            FieldSelector::HashDigest => "Unique Hashes",
            FieldSelector::Organization => "Unique Organizations",
        }
    }
}

impl fmt::Display for FieldSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldSelector::Name => "name",
            FieldSelector::Purl => "purl",
            FieldSelector::Cpe => "cpe",
            FieldSelector::Vendor => "vendor",
            FieldSelector::License => "license",
            FieldSelector::HashDigest => "hash",
            FieldSelector::Organization => "org",
        })
    }
}

impl FromStr for FieldSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "name" => FieldSelector::Name,
            "purl" => FieldSelector::Purl,
            "cpe" => FieldSelector::Cpe,
            "vendor" => FieldSelector::Vendor,
            "license" => FieldSelector::License,
            "hash" => FieldSelector::HashDigest,
            "org" | "organization" => FieldSelector::Organization,
            other => return Err(format!("unknown field `{other}`")),
        })
    }
}

/// Value to occurrence count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Multiset(BTreeMap<String, u64>);

impl Multiset {
    pub fn new() -> Self {
        Multiset::default()
    }

    pub fn add(&mut self, value: impl Into<String>, count: u64) {
        if count > 0 {
            *self.0.entry(value.into()).or_insert(0) += count;
        }
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn unique(&self) -> usize {
        self.0.len()
    }

    pub fn count(&self, value: &str) -> u64 {
        self.0.get(value).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn values(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every value with count 1.
    pub fn to_set(&self) -> Multiset {
        Multiset(self.0.keys().map(|k| (k.clone(), 1)).collect())
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&str) -> bool) {
        self.0.retain(|k, _| keep(k));
    }
}

impl<S: Into<String>> FromIterator<S> for Multiset {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for v in iter {
            m.add(v, 1);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideCounts {
    pub left: u64,
    pub right: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultisetDiff {
    pub left_total: u64,
    pub right_total: u64,
    pub left_unique: usize,
    pub right_unique: usize,
    /// Values on both sides, with each side's count (which may differ).
    pub common: BTreeMap<String, SideCounts>,
    pub left_only: BTreeMap<String, u64>,
    pub right_only: BTreeMap<String, u64>,
}

impl MultisetDiff {
    /// Occurrences of left-only values, counting repeats.
    pub fn left_only_total(&self) -> u64 {
        self.left_only.values().sum()
    }

    pub fn right_only_total(&self) -> u64 {
        self.right_only.values().sum()
    }

    pub fn has_differences(&self) -> bool {
        !self.left_only.is_empty() || !self.right_only.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    /// Lowercase names before comparing. Off by default: case is signal.
    pub fold_case: bool,
}

pub fn extract_field(doc: &BomDocument, sel: FieldSelector) -> Multiset {
    extract_field_with(doc, sel, ExtractOptions::default())
}

/// Flattens one field of every component into a multiset, weighting each
/// value by the component's quantity. Absent fields contribute nothing.
pub fn extract_field_with(doc: &BomDocument, sel: FieldSelector, opts: ExtractOptions) -> Multiset {
    let mut out = Multiset::new();
    for c in doc.components() {
        for value in field_values(c, sel) {
            let value = if opts.fold_case && sel == FieldSelector::Name {
                value.to_lowercase()
            } else {
                value
            };
            out.add(value, c.quantity);
        }
    }
    out
}

fn field_values(c: &Component, sel: FieldSelector) -> Vec<String> {
    match sel {
        FieldSelector::Name => vec![c.name.clone()],
        FieldSelector::Purl => c.purl.iter().cloned().collect(),
        FieldSelector::Cpe => c.cpe.iter().cloned().collect(),
        FieldSelector::Vendor => c.vendor.iter().cloned().collect(),
        FieldSelector::License => c.licenses.clone(),
        FieldSelector::HashDigest => c.hashes.iter().map(Hash::to_string).collect(),
        FieldSelector::Organization => c
            .purl
            .as_deref()
            .and_then(extract_organization)
            .into_iter()
            .collect(),
    }
}

/// The first two dot-separated segments of a purl's namespace, falling back
/// to the package name when there is no namespace
/// (`pkg:maven/com.example.foo@1.2.3` gives `com.example`). A one-segment
/// source is returned whole.
pub fn extract_organization(purl: &str) -> Option<String> {
    let parsed = PackageUrl::from_str(purl).ok()?;
    let source = parsed
        .namespace()
        .filter(|ns| !ns.is_empty())
        .unwrap_or(parsed.name());
    let mut segments = source.split('.').filter(|s| !s.is_empty());
    let first = segments.next()?;
    Some(match segments.next() {
        Some(second) => format!("{first}.{second}"),
        None => first.to_string(),
    })
}

/// Exact value comparison that keeps occurrence counts.
pub fn multiset_diff(left: &Multiset, right: &Multiset) -> MultisetDiff {
    let mut diff = MultisetDiff {
        left_total: left.total(),
        right_total: right.total(),
        left_unique: left.unique(),
        right_unique: right.unique(),
        ..Default::default()
    };
    for (value, count) in left.iter() {
        match right.count(value) {
            0 => {
                diff.left_only.insert(value.to_string(), count);
            }
            r => {
                diff.common.insert(
                    value.to_string(),
                    SideCounts {
                        left: count,
                        right: r,
                    },
                );
            }
        }
    }
    for (value, count) in right.iter() {
        if left.count(value) == 0 {
            diff.right_only.insert(value.to_string(), count);
        }
    }
    diff
}

/// [`multiset_diff`] on unique values only.
pub fn set_diff(left: &Multiset, right: &Multiset) -> MultisetDiff {
    multiset_diff(&left.to_set(), &right.to_set())
}

/// Set comparison of purl-derived organizations, ignoring any organization
/// starting with one of `exclude_prefixes` on either side.
pub fn organization_delta<S: AsRef<str>>(
    left: &BomDocument,
    right: &BomDocument,
    exclude_prefixes: &[S],
) -> MultisetDiff {
    let filtered = |doc: &BomDocument| {
        let mut orgs = extract_field(doc, FieldSelector::Organization);
        orgs.retain(|org| !exclude_prefixes.iter().any(|p| excludes(p.as_ref(), org)));
        orgs
    };
    set_diff(&filtered(left), &filtered(right))
}

/// `com.sun.` excludes `com.sun.xml` and also the bare `com.sun`.
fn excludes(prefix: &str, org: &str) -> bool {
    org.starts_with(prefix) || prefix.strip_suffix('.') == Some(org)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyCategory {
    SameNameDifferentHash,
    DifferentNameSameHash,
    Consensus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyFinding {
    pub category: ConsistencyCategory,
    pub left_ids: Vec<ComponentId>,
    pub right_ids: Vec<ComponentId>,
    pub detail: String,
}

fn hashed(doc: &BomDocument) -> Vec<&Component> {
    doc.components()
        .iter()
        .filter(|c| !c.hashes.is_empty())
        .collect()
}

fn by_name<'a>(comps: &[&'a Component]) -> BTreeMap<String, Vec<&'a Component>> {
    let mut m: BTreeMap<String, Vec<&Component>> = BTreeMap::new();
    for c in comps {
        m.entry(c.name.clone()).or_default().push(*c);
    }
    m
}

/// Cross-checks component names against hash digests.
///
/// Same-named hashed components are grouped per name: a shared digest is
/// [`Consensus`](ConsistencyCategory::Consensus), none is
/// [`SameNameDifferentHash`](ConsistencyCategory::SameNameDifferentHash).
/// Components sharing a digest under different names produce one
/// [`DifferentNameSameHash`](ConsistencyCategory::DifferentNameSameHash)
/// finding per name pair. Digests are compared only under the same
/// algorithm. Components without hashes are ignored; see [`unhashed_count`].
pub fn cross_field_consistency(left: &BomDocument, right: &BomDocument) -> Vec<ConsistencyFinding> {
    let left = hashed(left);
    let right = hashed(right);
    let shares_digest =
        |a: &Component, b: &Component| a.hashes.iter().any(|h| b.hashes.contains(h));
    let shares_algorithm = |a: &Component, b: &Component| {
        a.hashes
            .iter()
            .any(|h| b.hashes.iter().any(|g| g.algorithm == h.algorithm))
    };

    let mut findings = Vec::new();

    let left_names = by_name(&left);
    let right_names = by_name(&right);
    for (name, ls) in &left_names {
        let Some(rs) = right_names.get(name) else {
            continue;
        };
        let agree = ls.iter().any(|l| rs.iter().any(|r| shares_digest(l, r)));
        if !agree && !ls.iter().any(|l| rs.iter().any(|r| shares_algorithm(l, r))) {
            continue;
        }
        let (category, detail) = if agree {
            (
                ConsistencyCategory::Consensus,
                format!("`{name}`: name and digest agree"),
            )
        } else {
            (
                ConsistencyCategory::SameNameDifferentHash,
                format!(
                    "`{name}`: same name, no shared digest (left {}; right {})",
                    digests(ls),
                    digests(rs)
                ),
            )
        };
        findings.push(ConsistencyFinding {
            category,
            left_ids: ids(ls),
            right_ids: ids(rs),
            detail,
        });
    }

    // (left name, right name) -> (left ids, right ids, shared digests)
    type Ids = BTreeSet<ComponentId>;
    let mut renamed: BTreeMap<(String, String), (Ids, Ids, BTreeSet<String>)> = BTreeMap::new();
    for l in &left {
        for r in &right {
            if l.name == r.name {
                continue;
            }
            let shared: Vec<&Hash> = l.hashes.iter().filter(|h| r.hashes.contains(h)).collect();
            if shared.is_empty() {
                continue;
            }
            let entry = renamed.entry((l.name.clone(), r.name.clone())).or_default();
            entry.0.insert(l.id.clone());
            entry.1.insert(r.id.clone());
            entry.2.extend(shared.iter().map(|h| h.to_string()));
        }
    }
    for ((lname, rname), (lids, rids, shared)) in renamed {
        let shared: Vec<_> = shared.into_iter().collect();
        findings.push(ConsistencyFinding {
            category: ConsistencyCategory::DifferentNameSameHash,
            left_ids: lids.into_iter().collect(),
            right_ids: rids.into_iter().collect(),
            detail: format!("`{lname}` and `{rname}` share {}", shared.join(", ")),
        });
    }
    findings
}

/// Components skipped by [`cross_field_consistency`] for lacking hashes.
pub fn unhashed_count(doc: &BomDocument) -> usize {
    doc.components()
        .iter()
        .filter(|c| c.hashes.is_empty())
        .count()
}

fn ids(comps: &[&Component]) -> Vec<ComponentId> {
    let mut ids: Vec<_> = comps.iter().map(|c| c.id.clone()).collect();
    ids.sort();
    ids
}

fn digests(comps: &[&Component]) -> String {
    let set: BTreeSet<String> = comps
        .iter()
        .flat_map(|c| c.hashes.iter().map(Hash::to_string))
        .collect();
    set.into_iter().collect::<Vec<_>>().join(", ")
}
