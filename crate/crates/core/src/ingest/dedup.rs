use std::collections::BTreeMap;

use crate::model::{BomDocument, ComponentId, Hash, Relationship};

type DedupKey = (
    String,
    String,
    Option<String>,
    Option<String>,
    Vec<String>,
    Vec<Hash>,
);

/// Collapses components that agree on purl, name, version, vendor, licenses
/// and hashes into the one with the smallest id, re-pointing every edge at
/// the survivor. Components without a purl are never merged.
pub fn dedup_components(doc: BomDocument) -> BomDocument {
    let (format, spec_version, subject, components, relationships, source_name) = doc.into_parts();

    let mut survivors: BTreeMap<DedupKey, ComponentId> = BTreeMap::new();
    for c in &components {
        if let Some(key) = dedup_key(c) {
            survivors
                .entry(key)
                .and_modify(|id| {
                    if c.id < *id {
                        *id = c.id.clone();
                    }
                })
                .or_insert_with(|| c.id.clone());
        }
    }

    let mut remap: BTreeMap<ComponentId, ComponentId> = BTreeMap::new();
    let mut kept = Vec::with_capacity(components.len());
    for c in components {
        match dedup_key(&c).and_then(|k| survivors.get(&k)) {
            Some(survivor) if *survivor != c.id => {
                remap.insert(c.id, survivor.clone());
            }
            _ => kept.push(c),
        }
    }
    if remap.is_empty() {
        return BomDocument::from_valid_parts(
            format,
            spec_version,
            subject,
            kept,
            relationships,
            source_name,
        );
    }

    let resolve = |id: ComponentId| remap.get(&id).cloned().unwrap_or(id);
    let relationships = relationships
        .into_iter()
        .map(|r| Relationship::new(resolve(r.source), resolve(r.target), r.kind))
        .filter(|r| r.source != r.target)
        .collect();
    let subject = subject.map(resolve);
    BomDocument::from_valid_parts(
        format,
        spec_version,
        subject,
        kept,
        relationships,
        source_name,
    )
}

fn dedup_key(c: &crate::model::Component) -> Option<DedupKey> {
    let purl = c.purl.clone()?;
    let mut licenses = c.licenses.clone();
    licenses.sort();
    let mut hashes = c.hashes.clone();
    hashes.sort();
    Some((
        purl,
        c.name.clone(),
        c.version.clone(),
        c.vendor.clone(),
        licenses,
        hashes,
    ))
}
