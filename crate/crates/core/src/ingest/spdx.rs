use std::collections::{BTreeMap, BTreeSet};

use super::json;
use super::{finish, IngestError, IngestOptions};
use crate::model::{
    non_empty, BomDocument, BomFormat, Component, ComponentId, Hash, Relationship, RelationshipKind,
};

const KNOWN_FIELDS: &[&str] = &[
    "SPDXID",
    "name",
    "versionInfo",
    "externalRefs",
    "supplier",
    "licenseConcluded",
    "licenseDeclared",
    "checksums",
];

/// Prefix of `extra` keys recording relationship types that map to no edge.
pub const UNMAPPED_RELATIONSHIP_PREFIX: &str = "spdx.relationship.";

/// Parses an SPDX 2.2/2.3 JSON document.
///
/// Only package-to-package `DEPENDS_ON` and `CONTAINS` relationships become
/// edges (oriented A to B for "A rel B"). Other relationship types between
/// packages are recorded on the source package under
/// [`UNMAPPED_RELATIONSHIP_PREFIX`]; relationships touching files,
/// snippets or external documents are ignored.
pub fn parse_spdx(bytes: &[u8], opts: &IngestOptions) -> Result<BomDocument, IngestError> {
    let root = json::parse_root(bytes)?;
    let spec_version = json::req_str(&root, "spdxVersion", "$")?;
    let document_id =
        json::opt_str(&root, "SPDXID", "$")?.unwrap_or_else(|| "SPDXRef-DOCUMENT".into());

    let mut components = Vec::new();
    let mut known = BTreeSet::new();
    if let Some(packages) = json::opt_array(&root, "packages", "$")? {
        for (i, pkg) in packages.iter().enumerate() {
            let path = json::index("$.packages", i);
            let obj = json::as_object(pkg, &path)?;
            let id = json::req_str(obj, "SPDXID", &path)?;
            if !known.insert(id.clone()) {
                return Err(IngestError::at(
                    json::child(&path, "SPDXID"),
                    format!("duplicate SPDXID `{id}`"),
                ));
            }
            components.push(parse_package(obj, &path, ComponentId::new(id)?)?);
        }
    }

    let mut described = BTreeSet::new();
    if let Some(ids) = json::opt_array(&root, "documentDescribes", "$")? {
        for (i, v) in ids.iter().enumerate() {
            let id = v.as_str().ok_or_else(|| {
                IngestError::at(json::index("$.documentDescribes", i), "expected a string")
            })?;
            if known.contains(id) {
                described.insert(id.to_string());
            }
        }
    }

    let mut relationships = Vec::new();
    let mut unmapped: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    if let Some(rels) = json::opt_array(&root, "relationships", "$")? {
        for (i, rel) in rels.iter().enumerate() {
            let path = json::index("$.relationships", i);
            let obj = json::as_object(rel, &path)?;
            let from = json::req_str(obj, "spdxElementId", &path)?;
            let kind = json::req_str(obj, "relationshipType", &path)?;
            let to = json::req_str(obj, "relatedSpdxElement", &path)?;
            match kind.as_str() {
                "DESCRIBES" if from == document_id && known.contains(&to) => {
                    described.insert(to);
                }
                "DESCRIBED_BY" if to == document_id && known.contains(&from) => {
                    described.insert(from);
                }
                _ if !(known.contains(&from) && known.contains(&to)) || from == to => {}
                "DEPENDS_ON" | "CONTAINS" => {
                    let kind = if kind == "CONTAINS" {
                        RelationshipKind::Contains
                    } else {
                        RelationshipKind::DependsOn
                    };
                    relationships.push(Relationship::new(
                        ComponentId::new(from)?,
                        ComponentId::new(to)?,
                        kind,
                    ));
                }
                _ => {
                    unmapped.entry((from, kind)).or_default().insert(to);
                }
            }
        }
    }
    for ((from, kind), targets) in unmapped {
        if let Some(c) = components.iter_mut().find(|c| c.id.as_str() == from) {
            let joined: Vec<_> = targets.into_iter().collect();
            c.extra.insert(
                format!("{UNMAPPED_RELATIONSHIP_PREFIX}{kind}"),
                joined.join(","),
            );
        }
    }

    let subject = described
        .into_iter()
        .next()
        .map(ComponentId::new)
        .transpose()?;
    let doc = BomDocument::new(
        BomFormat::SpdxJson,
        spec_version,
        subject,
        components,
        relationships,
        "",
    )?;
    finish(doc, opts)
}

fn parse_package(
    obj: &json::Object,
    path: &str,
    id: ComponentId,
) -> Result<Component, IngestError> {
    let mut c = Component::new(id, json::req_str(obj, "name", path)?);
    c.version = non_empty(json::opt_str(obj, "versionInfo", path)?);
    c.vendor = json::opt_str(obj, "supplier", path)?.and_then(|s| supplier_name(&s));

    if let Some(refs) = json::opt_array(obj, "externalRefs", path)? {
        let rpath = json::child(path, "externalRefs");
        for (i, r) in refs.iter().enumerate() {
            let epath = json::index(&rpath, i);
            let r = json::as_object(r, &epath)?;
            let ty = json::req_str(r, "referenceType", &epath)?;
            let locator = non_empty(json::opt_str(r, "referenceLocator", &epath)?);
            match ty.as_str() {
                "purl" if c.purl.is_none() => c.purl = locator,
                "cpe23Type" | "cpe22Type" if c.cpe.is_none() => c.cpe = locator,
                _ => {}
            }
        }
    }

    for key in ["licenseConcluded", "licenseDeclared"] {
        if let Some(license) = non_empty(json::opt_str(obj, key, path)?) {
            if !is_null_license(&license) && !c.licenses.contains(&license) {
                c.licenses.push(license);
            }
        }
    }

    if let Some(sums) = json::opt_array(obj, "checksums", path)? {
        let spath = json::child(path, "checksums");
        for (i, s) in sums.iter().enumerate() {
            let epath = json::index(&spath, i);
            let s = json::as_object(s, &epath)?;
            let alg = json::req_str(s, "algorithm", &epath)?;
            let value = json::req_str(s, "checksumValue", &epath)?;
            c.hashes.push(Hash::new(&alg, &value));
        }
    }

    c.extra = json::collect_extra(obj, KNOWN_FIELDS);
    Ok(c)
}

fn is_null_license(value: &str) -> bool {
    matches!(value, "NOASSERTION" | "NONE")
}

/// `Organization: Acme` and `Person: Jo` both yield the bare name.
fn supplier_name(raw: &str) -> Option<String> {
    let raw = raw.trim();
    if raw == "NOASSERTION" {
        return None;
    }
    let name = raw
        .strip_prefix("Organization:")
        .or_else(|| raw.strip_prefix("Person:"))
        .unwrap_or(raw);
    non_empty(Some(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> BomDocument {
        parse_spdx(src.as_bytes(), &IngestOptions::default()).unwrap()
    }

    #[test]
    fn single_package_described() {
        let doc = parse(
            r#"{"spdxVersion":"SPDX-2.3","SPDXID":"SPDXRef-DOCUMENT",
                "packages":[{"name":"p","SPDXID":"SPDXRef-p"}],
                "relationships":[{"spdxElementId":"SPDXRef-DOCUMENT","relationshipType":"DESCRIBES","relatedSpdxElement":"SPDXRef-p"}]}"#,
        );
        assert_eq!(doc.subject().unwrap().as_str(), "SPDXRef-p");
        assert_eq!(doc.spec_version(), "SPDX-2.3");
        assert!(doc.relationships().is_empty());
    }

    #[test]
    fn noassertion_license_is_empty() {
        let doc = parse(
            r#"{"spdxVersion":"SPDX-2.3","packages":[
                {"name":"p","SPDXID":"SPDXRef-p","licenseConcluded":"NOASSERTION","licenseDeclared":"NONE"},
                {"name":"q","SPDXID":"SPDXRef-q","licenseConcluded":"MIT","licenseDeclared":"MIT"}]}"#,
        );
        assert!(doc.components()[0].licenses.is_empty());
        assert_eq!(doc.components()[1].licenses, ["MIT"]);
    }

    #[test]
    fn depends_on_and_contains_edges() {
        let doc = parse(
            r#"{"spdxVersion":"SPDX-2.3","packages":[
                {"name":"a","SPDXID":"SPDXRef-a"},{"name":"b","SPDXID":"SPDXRef-b"},{"name":"c","SPDXID":"SPDXRef-c"}],
                "relationships":[
                  {"spdxElementId":"SPDXRef-a","relationshipType":"DEPENDS_ON","relatedSpdxElement":"SPDXRef-b"},
                  {"spdxElementId":"SPDXRef-a","relationshipType":"CONTAINS","relatedSpdxElement":"SPDXRef-c"},
                  {"spdxElementId":"SPDXRef-a","relationshipType":"DEV_DEPENDENCY_OF","relatedSpdxElement":"SPDXRef-c"},
                  {"spdxElementId":"SPDXRef-a","relationshipType":"CONTAINS","relatedSpdxElement":"SPDXRef-File-1"}]}"#,
        );
        let rels = doc.relationships();
        assert_eq!(rels.len(), 2);
        assert_eq!(rels[0].kind, RelationshipKind::DependsOn);
        assert_eq!(rels[0].target.as_str(), "SPDXRef-b");
        assert_eq!(rels[1].kind, RelationshipKind::Contains);
        let a = &doc.components()[0];
        assert_eq!(a.extra["spdx.relationship.DEV_DEPENDENCY_OF"], "SPDXRef-c");
    }

    #[test]
    fn package_fields() {
        let doc = parse(
            r#"{"spdxVersion":"SPDX-2.2","packages":[{"name":"guava","SPDXID":"SPDXRef-g",
                "versionInfo":"32.0","supplier":"Organization: Google LLC",
                "downloadLocation":"NOASSERTION",
                "externalRefs":[
                  {"referenceCategory":"SECURITY","referenceType":"cpe23Type","referenceLocator":"cpe:2.3:a:google:guava:32.0:*:*:*:*:*:*:*"},
                  {"referenceCategory":"PACKAGE-MANAGER","referenceType":"purl","referenceLocator":"pkg:maven/com.google.guava/guava@32.0"}],
                "checksums":[{"algorithm":"SHA1","checksumValue":"ABC"}]}]}"#,
        );
        let c = &doc.components()[0];
        assert_eq!(c.version.as_deref(), Some("32.0"));
        assert_eq!(c.vendor.as_deref(), Some("Google LLC"));
        assert_eq!(
            c.purl.as_deref(),
            Some("pkg:maven/com.google.guava/guava@32.0")
        );
        assert!(c.cpe.as_deref().unwrap().starts_with("cpe:2.3:a:google"));
        assert_eq!(c.hashes, [Hash::new("SHA1", "abc")]);
        assert_eq!(c.extra["downloadLocation"], "NOASSERTION");
    }

    #[test]
    fn errors_carry_paths() {
        let err = parse_spdx(
            br#"{"spdxVersion":"SPDX-2.3","packages":[{"name":"p"}]}"#,
            &IngestOptions::default(),
        )
        .unwrap_err();
        assert_eq!(
            err.to_string(),
            "$.packages[0].SPDXID: required field is missing or empty"
        );
    }
}
