//! Normalized in-memory representation of a bill of materials.
//!
//! Every parser lowers its input into a [`BomDocument`]. Documents are
//! validated on construction and are immutable afterwards; downstream
//! comparisons only ever see the [canonical form](BomDocument::canonical_form),
//! so the order in which a source file lists components or relationships is
//! never observable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("component id must not be empty")]
    EmptyId,
    #[error("component {0} has an empty name")]
    EmptyName(ComponentId),
    #[error("component {0} has quantity 0")]
    ZeroQuantity(ComponentId),
    #[error("duplicate component id {0}")]
    DuplicateId(ComponentId),
    #[error("relationship endpoint {0} does not resolve to a component")]
    DanglingEndpoint(ComponentId),
    #[error("relationship from {0} to itself")]
    SelfLoop(ComponentId),
    #[error("subject {0} does not resolve to a component")]
    DanglingSubject(ComponentId),
}

/// Opaque handle for a component, unique within one document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ComponentId(String);

impl ComponentId {
    pub fn new(value: impl Into<String>) -> Result<Self, ModelError> {
        let value = value.into();
        if value.is_empty() {
            return Err(ModelError::EmptyId);
        }
        Ok(ComponentId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ComponentId {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        ComponentId::new(value)
    }
}

impl From<ComponentId> for String {
    fn from(id: ComponentId) -> Self {
        id.0
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A file digest. Algorithms are stored uppercased with the `SHA-` hyphen
/// removed (`SHA-256` and `sha256` both become `SHA256`); digests lowercased.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Hash {
    pub algorithm: String,
    pub digest: String,
}

impl Hash {
    pub fn new(algorithm: &str, digest: &str) -> Self {
        let mut algorithm = algorithm.trim().to_ascii_uppercase();
        if let Some(rest) = algorithm.strip_prefix("SHA-") {
            algorithm = format!("SHA{rest}");
        }
        Hash {
            algorithm,
            digest: digest.trim().to_ascii_lowercase(),
        }
    }
}

impl fmt::Display for Hash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.algorithm, self.digest)
    }
}

/// One normalized BOM entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub id: ComponentId,
    pub name: String,
    pub version: Option<String>,
    pub purl: Option<String>,
    pub cpe: Option<String>,
    pub vendor: Option<String>,
    pub licenses: Vec<String>,
    pub hashes: Vec<Hash>,
    pub quantity: u64,
    /// Source attributes with no dedicated field, kept verbatim.
    pub extra: BTreeMap<String, String>,
}

impl Component {
    pub fn new(id: ComponentId, name: impl Into<String>) -> Self {
        Component {
            id,
            name: name.into(),
            version: None,
            purl: None,
            cpe: None,
            vendor: None,
            licenses: Vec::new(),
            hashes: Vec::new(),
            quantity: 1,
            extra: BTreeMap::new(),
        }
    }

    pub fn with_version(mut self, version: impl Into<String>) -> Self {
        self.version = non_empty(Some(version.into()));
        self
    }

    pub fn with_purl(mut self, purl: impl Into<String>) -> Self {
        self.purl = non_empty(Some(purl.into()));
        self
    }

    pub fn with_vendor(mut self, vendor: impl Into<String>) -> Self {
        self.vendor = non_empty(Some(vendor.into()));
        self
    }

    pub fn with_license(mut self, license: impl Into<String>) -> Self {
        self.licenses.push(license.into());
        self
    }

    pub fn with_hash(mut self, algorithm: &str, digest: &str) -> Self {
        self.hashes.push(Hash::new(algorithm, digest));
        self
    }

    pub fn with_quantity(mut self, quantity: u64) -> Self {
        self.quantity = quantity;
        self
    }

    /// Coerces empty optional strings to `None`, trims the name and drops
    /// duplicate hashes.
    fn normalize(&mut self) {
        self.name = self.name.trim().to_string();
        for field in [
            &mut self.version,
            &mut self.purl,
            &mut self.cpe,
            &mut self.vendor,
        ] {
            *field = non_empty(field.take());
        }
        self.licenses.retain(|l| !l.trim().is_empty());
        let mut seen = BTreeSet::new();
        self.hashes
            .retain(|h| !h.digest.is_empty() && seen.insert(h.clone()));
    }

    fn sort_key(&self) -> (&str, Option<&str>, Option<&str>, &ComponentId) {
        (
            self.name.as_str(),
            self.version.as_deref(),
            self.purl.as_deref(),
            &self.id,
        )
    }
}

/// Empty or whitespace-only strings are treated as absent.
pub(crate) fn non_empty(value: Option<String>) -> Option<String> {
    value.and_then(|v| {
        let trimmed = v.trim();
        if trimmed.is_empty() {
            None
        } else if trimmed.len() == v.len() {
            Some(v)
        } else {
            Some(trimmed.to_string())
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationshipKind {
    DependsOn,
    Contains,
}

impl fmt::Display for RelationshipKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelationshipKind::DependsOn => "depends-on",
            RelationshipKind::Contains => "contains",
        })
    }
}

/// Directed edge, oriented parent to child.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relationship {
    pub source: ComponentId,
    pub target: ComponentId,
    pub kind: RelationshipKind,
}

impl Relationship {
    pub fn new(source: ComponentId, target: ComponentId, kind: RelationshipKind) -> Self {
        Relationship {
            source,
            target,
            kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BomFormat {
    CycloneDxJson,
    SpdxJson,
    GenericHbom,
}

impl fmt::Display for BomFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BomFormat::CycloneDxJson => "CycloneDX JSON",
            BomFormat::SpdxJson => "SPDX JSON",
            BomFormat::GenericHbom => "generic HBOM",
        })
    }
}

/// A parsed, validated BOM.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BomDocument {
    format: BomFormat,
    spec_version: String,
    subject: Option<ComponentId>,
    components: Vec<Component>,
    relationships: Vec<Relationship>,
    source_name: String,
}

impl BomDocument {
    /// Validates and normalizes the parts into a document in canonical form.
    ///
    /// Exact duplicate relationships are collapsed; every other invariant
    /// violation is an error.
    pub fn new(
        format: BomFormat,
        spec_version: impl Into<String>,
        subject: Option<ComponentId>,
        mut components: Vec<Component>,
        relationships: Vec<Relationship>,
        source_name: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let mut ids = BTreeSet::new();
        for component in &mut components {
            component.normalize();
            if component.name.is_empty() {
                return Err(ModelError::EmptyName(component.id.clone()));
            }
            if component.quantity == 0 {
                return Err(ModelError::ZeroQuantity(component.id.clone()));
            }
            if !ids.insert(component.id.clone()) {
                return Err(ModelError::DuplicateId(component.id.clone()));
            }
        }
        for rel in &relationships {
            if rel.source == rel.target {
                return Err(ModelError::SelfLoop(rel.source.clone()));
            }
            for end in [&rel.source, &rel.target] {
                if !ids.contains(end) {
                    return Err(ModelError::DanglingEndpoint(end.clone()));
                }
            }
        }
        if let Some(subject) = &subject {
            if !ids.contains(subject) {
                return Err(ModelError::DanglingSubject(subject.clone()));
            }
        }
        Ok(BomDocument {
            format,
            spec_version: spec_version.into(),
            subject,
            components,
            relationships,
            source_name: source_name.into(),
        }
        .canonical_form())
    }

    /// Sorts components by (name, version, purl, id) and relationships by
    /// (source, target, kind), dropping repeated relationships.
    pub fn canonical_form(mut self) -> Self {
        self.components
            .sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        self.relationships.sort();
        self.relationships.dedup();
        self
    }

    pub fn format(&self) -> BomFormat {
        self.format
    }

    pub fn spec_version(&self) -> &str {
        &self.spec_version
    }

    pub fn subject(&self) -> Option<&ComponentId> {
        self.subject.as_ref()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn relationships(&self) -> &[Relationship] {
        &self.relationships
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn component(&self, id: &ComponentId) -> Option<&Component> {
        self.components.iter().find(|c| &c.id == id)
    }

    /// Reassembles a document from parts that are already known to satisfy
    /// the invariants (the output of a transformation on a valid document).
    pub(crate) fn from_valid_parts(
        format: BomFormat,
        spec_version: String,
        subject: Option<ComponentId>,
        components: Vec<Component>,
        relationships: Vec<Relationship>,
        source_name: String,
    ) -> Self {
        BomDocument {
            format,
            spec_version,
            subject,
            components,
            relationships,
            source_name,
        }
        .canonical_form()
    }

    pub fn with_source_name(mut self, name: impl Into<String>) -> Self {
        self.source_name = name.into();
        self
    }

    /// Decomposes the document, e.g. to rebuild it after a transformation.
    pub fn into_parts(
        self,
    ) -> (
        BomFormat,
        String,
        Option<ComponentId>,
        Vec<Component>,
        Vec<Relationship>,
        String,
    ) {
        (
            self.format,
            self.spec_version,
            self.subject,
            self.components,
            self.relationships,
            self.source_name,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> ComponentId {
        ComponentId::new(s).unwrap()
    }

    fn doc(components: Vec<Component>, rels: Vec<Relationship>) -> Result<BomDocument, ModelError> {
        BomDocument::new(BomFormat::CycloneDxJson, "1.5", None, components, rels, "t")
    }

    #[test]
    fn sorts_components_by_name() {
        let d = doc(
            vec![Component::new(id("b"), "B"), Component::new(id("a"), "A")],
            vec![],
        )
        .unwrap();
        let names: Vec<_> = d.components().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["A", "B"]);
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let d = doc(
            vec![
                Component::new(id("2"), "x").with_version("2"),
                Component::new(id("1"), "x").with_version("1"),
                Component::new(id("3"), "a"),
            ],
            vec![
                Relationship::new(id("3"), id("2"), RelationshipKind::DependsOn),
                Relationship::new(id("3"), id("1"), RelationshipKind::DependsOn),
            ],
        )
        .unwrap();
        assert_eq!(d.clone().canonical_form(), d);
    }

    #[test]
    fn empty_strings_become_absent() {
        let mut c = Component::new(id("a"), " a ");
        c.version = Some(String::new());
        c.vendor = Some("  ".into());
        c.purl = Some(" pkg:npm/a@1 ".into());
        let d = doc(vec![c], vec![]).unwrap();
        let c = &d.components()[0];
        assert_eq!(c.name, "a");
        assert_eq!(c.version, None);
        assert_eq!(c.vendor, None);
        assert_eq!(c.purl.as_deref(), Some("pkg:npm/a@1"));
    }

    #[test]
    fn hash_normalization() {
        let h = Hash::new("sha-256", "ABCDEF");
        assert_eq!(h.algorithm, "SHA256");
        assert_eq!(h.digest, "abcdef");
        assert_eq!(Hash::new("md5", "AA").algorithm, "MD5");
        assert_eq!(Hash::new("SHA3-256", "aa").algorithm, "SHA3-256");
    }

    #[test]
    fn duplicate_hashes_are_dropped() {
        let c = Component::new(id("a"), "a")
            .with_hash("SHA-256", "AA")
            .with_hash("sha256", "aa");
        let d = doc(vec![c], vec![]).unwrap();
        assert_eq!(d.components()[0].hashes.len(), 1);
    }

    #[test]
    fn rejects_invariant_violations() {
        assert_eq!(ComponentId::new(""), Err(ModelError::EmptyId));
        assert!(matches!(
            doc(vec![Component::new(id("a"), " ")], vec![]),
            Err(ModelError::EmptyName(_))
        ));
        assert!(matches!(
            doc(vec![Component::new(id("a"), "a").with_quantity(0)], vec![]),
            Err(ModelError::ZeroQuantity(_))
        ));
        assert!(matches!(
            doc(
                vec![Component::new(id("a"), "a"), Component::new(id("a"), "b")],
                vec![]
            ),
            Err(ModelError::DuplicateId(_))
        ));
        assert!(matches!(
            doc(
                vec![Component::new(id("a"), "a")],
                vec![Relationship::new(
                    id("a"),
                    id("z"),
                    RelationshipKind::Contains
                )]
            ),
            Err(ModelError::DanglingEndpoint(_))
        ));
        assert!(matches!(
            doc(
                vec![Component::new(id("a"), "a")],
                vec![Relationship::new(
                    id("a"),
                    id("a"),
                    RelationshipKind::Contains
                )]
            ),
            Err(ModelError::SelfLoop(_))
        ));
    }

    #[test]
    fn duplicate_relationships_collapse() {
        let r = Relationship::new(id("a"), id("b"), RelationshipKind::DependsOn);
        let d = doc(
            vec![Component::new(id("a"), "a"), Component::new(id("b"), "b")],
            vec![r.clone(), r],
        )
        .unwrap();
        assert_eq!(d.relationships().len(), 1);
    }
}
