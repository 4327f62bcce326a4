//! Parsers for CycloneDX JSON, SPDX JSON and a generic HBOM table.
//!
//! All parsers share one pipeline: decode the source into components and
//! relationships, drop excluded components, optionally collapse duplicates,
//! then hand back the canonical form.

mod cyclonedx;
mod dedup;
mod hbom;
mod json;
mod spdx;

use std::collections::BTreeSet;
use std::str::FromStr;

use packageurl::PackageUrl;
use thiserror::Error;

use crate::model::{BomDocument, BomFormat, ModelError};

pub use cyclonedx::parse_cyclonedx;
pub use dedup::dedup_components;
pub use hbom::parse_hbom;
pub use spdx::parse_spdx;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is empty")]
    Empty,
    #[error("unrecognized BOM format")]
    UnknownFormat,
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("row {row}: parent `{parent}` does not resolve to a row")]
    DanglingParent { row: u64, parent: String },
    #[error("invalid ingest options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl IngestError {
    pub(crate) fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestOptions {
    /// Collapse components that share a purl and all recorded metadata.
    pub dedup: bool,
    /// Merge HBOM rows identical in (name, vendor, parent), summing quantity.
    pub fold_quantities: bool,
    /// Components whose name, or purl type, starts with any of these are
    /// removed along with their relationships. Case-sensitive.
    pub drop_name_prefixes: Vec<String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            dedup: true,
            fold_quantities: true,
            drop_name_prefixes: Vec::new(),
        }
    }
}

impl IngestOptions {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.drop_name_prefixes.iter().any(String::is_empty) {
            return Err(IngestError::InvalidOptions(
                "drop prefixes must be non-empty".into(),
            ));
        }
        Ok(())
    }
}

/// Identifies the format from content alone.
pub fn detect_format(bytes: &[u8]) -> Result<BomFormat, IngestError> {
    let text = strip_bom(bytes);
    let trimmed = text.trim_ascii_start();
    if trimmed.is_empty() {
        return Err(IngestError::Empty);
    }
    if trimmed[0] == b'{' {
        let Ok(value) = serde_json::from_slice::<serde_json::Value>(text) else {
            return Err(IngestError::UnknownFormat);
        };
        let Some(obj) = value.as_object() else {
            return Err(IngestError::UnknownFormat);
        };
        if obj.get("bomFormat").and_then(|v| v.as_str()) == Some("CycloneDX") {
            return Ok(BomFormat::CycloneDxJson);
        }
        if obj.contains_key("spdxVersion") {
            return Ok(BomFormat::SpdxJson);
        }
        if obj.contains_key("hbom") {
            return Ok(BomFormat::GenericHbom);
        }
        return Err(IngestError::UnknownFormat);
    }
    if hbom::looks_like_csv(text) {
        return Ok(BomFormat::GenericHbom);
    }
    Err(IngestError::UnknownFormat)
}

/// Detects the format and parses with the matching parser.
pub fn parse_document(
    bytes: &[u8],
    source_name: &str,
    opts: &IngestOptions,
) -> Result<BomDocument, IngestError> {
    let format = detect_format(bytes)?;
    parse_as(format, bytes, source_name, opts)
}

pub fn parse_as(
    format: BomFormat,
    bytes: &[u8],
    source_name: &str,
    opts: &IngestOptions,
) -> Result<BomDocument, IngestError> {
    let doc = match format {
        BomFormat::CycloneDxJson => parse_cyclonedx(bytes, opts)?,
        BomFormat::SpdxJson => parse_spdx(bytes, opts)?,
        BomFormat::GenericHbom => parse_hbom(bytes, opts)?,
    };
    Ok(doc.with_source_name(source_name))
}

pub(crate) fn strip_bom(bytes: &[u8]) -> &[u8] {
    bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes)
}

/// Shared tail of every parser: exclusion, dedup, canonical ordering.
pub(crate) fn finish(doc: BomDocument, opts: &IngestOptions) -> Result<BomDocument, IngestError> {
    opts.validate()?;
    let doc = drop_prefixed(doc, &opts.drop_name_prefixes);
    Ok(if opts.dedup {
        dedup_components(doc)
    } else {
        doc
    })
}

pub(crate) fn purl_type(purl: &str) -> Option<String> {
    if let Ok(parsed) = PackageUrl::from_str(purl) {
        return Some(parsed.ty().to_string());
    }
    let rest = purl.strip_prefix("pkg:")?;
    let ty = rest.trim_start_matches('/').split('/').next()?;
    (!ty.is_empty()).then(|| ty.to_ascii_lowercase())
}

fn drop_prefixed(doc: BomDocument, prefixes: &[String]) -> BomDocument {
    if prefixes.is_empty() {
        return doc;
    }
    let (format, spec_version, subject, components, relationships, source_name) = doc.into_parts();
    let (kept, dropped): (Vec<_>, Vec<_>) = components.into_iter().partition(|c| {
        let ty = c.purl.as_deref().and_then(purl_type);
        !prefixes.iter().any(|p| {
            c.name.starts_with(p.as_str())
                || ty.as_deref().is_some_and(|t| t.starts_with(p.as_str()))
        })
    });
    let dropped: BTreeSet<_> = dropped.into_iter().map(|c| c.id).collect();
    let relationships = relationships
        .into_iter()
        .filter(|r| !dropped.contains(&r.source) && !dropped.contains(&r.target))
        .collect();
    let subject = subject.filter(|s| !dropped.contains(s));
    BomDocument::from_valid_parts(
        format,
        spec_version,
        subject,
        kept,
        relationships,
        source_name,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_cyclonedx() {
        let f = detect_format(br#"{"bomFormat":"CycloneDX","specVersion":"1.5"}"#).unwrap();
        assert_eq!(f, BomFormat::CycloneDxJson);
    }

    #[test]
    fn detects_spdx() {
        let f = detect_format(br#"{"spdxVersion":"SPDX-2.3"}"#).unwrap();
        assert_eq!(f, BomFormat::SpdxJson);
    }

    #[test]
    fn detects_hbom_csv_and_json() {
        let f = detect_format(b"ref,name,parent,vendor,quantity\nb1,board,,,1\n").unwrap();
        assert_eq!(f, BomFormat::GenericHbom);
        let f = detect_format(br#"{"hbom":[]}"#).unwrap();
        assert_eq!(f, BomFormat::GenericHbom);
    }

    #[test]
    fn detection_failures() {
        assert!(matches!(detect_format(b""), Err(IngestError::Empty)));
        assert!(matches!(detect_format(b"  \n"), Err(IngestError::Empty)));
        assert!(matches!(
            detect_format(br#"{"foo":1}"#),
            Err(IngestError::UnknownFormat)
        ));
        assert!(matches!(
            detect_format(b"just some words"),
            Err(IngestError::UnknownFormat)
        ));
        assert!(matches!(
            detect_format(br#"{"bomFormat":"Other"}"#),
            Err(IngestError::UnknownFormat)
        ));
    }

    #[test]
    fn purl_types() {
        assert_eq!(
            purl_type("pkg:npm/%40angular/core@1.0.0").as_deref(),
            Some("npm")
        );
        assert_eq!(purl_type("pkg:maven/g/a@1").as_deref(), Some("maven"));
        assert_eq!(purl_type("nonsense"), None);
    }

    #[test]
    fn empty_drop_prefix_is_rejected() {
        let opts = IngestOptions {
            drop_name_prefixes: vec![String::new()],
            ..Default::default()
        };
        assert!(matches!(
            opts.validate(),
            Err(IngestError::InvalidOptions(_))
        ));
    }
}
