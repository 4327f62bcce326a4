//! Compare software and hardware bills of materials.
//!
//! Documents in CycloneDX JSON, SPDX JSON or a generic hardware CSV/JSON
//! layout are parsed into a common [`model::BomDocument`]. Two documents can
//! then be compared field by field ([`flatcompare`]), by name similarity
//! ([`fuzzy`]) or as dependency trees ([`graphcompare`]). [`report`] turns
//! the results into tables, JSON and Graphviz DOT.

pub mod flatcompare;
pub mod fuzzy;
pub mod graphcompare;
pub mod ingest;
pub mod model;
pub mod report;

pub use flatcompare::{FieldSelector, Multiset, MultisetDiff};
pub use fuzzy::{FuzzyConfig, FuzzyMatch};
pub use graphcompare::{build_graph, merge_graphs, BomGraph, MergedGraph};
pub use ingest::{detect_format, parse_document, IngestError, IngestOptions};
pub use model::{
    BomDocument, BomFormat, Component, ComponentId, Hash, Relationship, RelationshipKind,
};
pub use report::DiffReport;
