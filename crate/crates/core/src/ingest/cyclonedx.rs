use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use super::json::{self, Object};
use super::{finish, IngestError, IngestOptions};
use crate::model::{
    non_empty, BomDocument, BomFormat, Component, ComponentId, Hash, Relationship, RelationshipKind,
};

const KNOWN_FIELDS: &[&str] = &[
    "bom-ref",
    "name",
    "version",
    "purl",
    "cpe",
    "supplier",
    "manufacturer",
    "licenses",
    "hashes",
    "components",
    "properties",
];

struct RawComponent<'a> {
    obj: &'a Object,
    path: String,
    parent: Option<usize>,
}

fn flatten<'a>(
    items: &'a [Value],
    path: &str,
    parent: Option<usize>,
    out: &mut Vec<RawComponent<'a>>,
) -> Result<(), IngestError> {
    for (i, item) in items.iter().enumerate() {
        let path = json::index(path, i);
        push_raw(item, path, parent, out)?;
    }
    Ok(())
}

fn push_raw<'a>(
    item: &'a Value,
    path: String,
    parent: Option<usize>,
    out: &mut Vec<RawComponent<'a>>,
) -> Result<(), IngestError> {
    let obj = json::as_object(item, &path)?;
    let me = out.len();
    let nested = json::opt_array(obj, "components", &path)?;
    out.push(RawComponent {
        obj,
        path: path.clone(),
        parent,
    });
    if let Some(nested) = nested {
        flatten(nested, &json::child(&path, "components"), Some(me), out)?;
    }
    Ok(())
}

/// Parses a CycloneDX JSON document (1.4 to 1.6 field subset).
///
/// `components[]` (and nested assemblies) become components, nested
/// assemblies add `Contains` edges, `dependencies[]` add `DependsOn` edges,
/// and `metadata.component` becomes the subject. When a dependency graph is
/// present the subject is linked to every component nothing else points at.
pub fn parse_cyclonedx(bytes: &[u8], opts: &IngestOptions) -> Result<BomDocument, IngestError> {
    let root = json::parse_root(bytes)?;
    let spec_version = json::opt_str(&root, "specVersion", "$")?.unwrap_or_default();

    let mut raw = Vec::new();
    let mut subject_index = None;
    if let Some(metadata) = json::opt_object(&root, "metadata", "$")? {
        if let Some(subject) = metadata.get("component").filter(|v| !v.is_null()) {
            subject_index = Some(0);
            push_raw(subject, "$.metadata.component".into(), None, &mut raw)?;
        }
    }
    if let Some(items) = json::opt_array(&root, "components", "$")? {
        flatten(items, "$.components", None, &mut raw)?;
    }

    let ids = assign_ids(&raw)?;
    let by_ref: BTreeMap<&str, &ComponentId> = raw
        .iter()
        .zip(&ids)
        .filter_map(|(r, id)| {
            r.obj
                .get("bom-ref")
                .and_then(Value::as_str)
                .filter(|s| !s.is_empty())
                .map(|s| (s, id))
        })
        .collect();

    let mut components = Vec::with_capacity(raw.len());
    let mut relationships = Vec::new();
    for (r, id) in raw.iter().zip(&ids) {
        components.push(parse_component(r.obj, &r.path, id.clone())?);
        if let Some(parent) = r.parent {
            relationships.push(Relationship::new(
                ids[parent].clone(),
                id.clone(),
                RelationshipKind::Contains,
            ));
        }
    }

    let dependencies = json::opt_array(&root, "dependencies", "$")?;
    if let Some(deps) = dependencies {
        for (i, dep) in deps.iter().enumerate() {
            let path = json::index("$.dependencies", i);
            let obj = json::as_object(dep, &path)?;
            let from = json::req_str(obj, "ref", &path)?;
            let from = *by_ref.get(from.as_str()).ok_or_else(|| {
                IngestError::at(
                    json::child(&path, "ref"),
                    format!("unknown bom-ref `{from}`"),
                )
            })?;
            let Some(targets) = json::opt_array(obj, "dependsOn", &path)? else {
                continue;
            };
            for (j, target) in targets.iter().enumerate() {
                let tpath = json::index(&json::child(&path, "dependsOn"), j);
                let target = target
                    .as_str()
                    .ok_or_else(|| IngestError::at(&tpath, "expected a string"))?;
                let to = *by_ref.get(target).ok_or_else(|| {
                    IngestError::at(&tpath, format!("unknown bom-ref `{target}`"))
                })?;
                if from != to {
                    relationships.push(Relationship::new(
                        from.clone(),
                        to.clone(),
                        RelationshipKind::DependsOn,
                    ));
                }
            }
        }
    }

    let subject = subject_index.map(|i| ids[i].clone());
    if let (Some(subject), Some(_)) = (&subject, dependencies) {
        let pointed_at: BTreeSet<&ComponentId> = relationships.iter().map(|r| &r.target).collect();
        let roots: Vec<ComponentId> = ids
            .iter()
            .filter(|id| *id != subject && !pointed_at.contains(id))
            .cloned()
            .collect();
        for root in roots {
            relationships.push(Relationship::new(
                subject.clone(),
                root,
                RelationshipKind::DependsOn,
            ));
        }
    }

    let doc = BomDocument::new(
        BomFormat::CycloneDxJson,
        spec_version,
        subject,
        components,
        relationships,
        "",
    )?;
    finish(doc, opts)
}

/// Explicit `bom-ref`s win; components without one get an id derived from
/// their content so that the result does not depend on array position.
fn assign_ids(raw: &[RawComponent<'_>]) -> Result<Vec<ComponentId>, IngestError> {
    let mut used = BTreeSet::new();
    let mut ids: Vec<Option<ComponentId>> = Vec::with_capacity(raw.len());
    for r in raw {
        let explicit = json::opt_str(r.obj, "bom-ref", &r.path)?.filter(|s| !s.is_empty());
        match explicit {
            Some(bom_ref) => {
                if !used.insert(bom_ref.clone()) {
                    return Err(IngestError::at(
                        json::child(&r.path, "bom-ref"),
                        format!("duplicate bom-ref `{bom_ref}`"),
                    ));
                }
                ids.push(Some(ComponentId::new(bom_ref)?));
            }
            None => ids.push(None),
        }
    }
    // Collisions are numbered in content order so input order never leaks
    // into the ids.
    let mut pending = Vec::new();
    for (i, r) in raw.iter().enumerate() {
        if ids[i].is_some() {
            continue;
        }
        let name = json::req_str(r.obj, "name", &r.path)?;
        let base = match (
            non_empty(json::opt_str(r.obj, "purl", &r.path)?),
            non_empty(json::opt_str(r.obj, "version", &r.path)?),
        ) {
            (Some(purl), _) => purl,
            (None, Some(version)) => format!("{name}@{version}"),
            (None, None) => name,
        };
        let content = serde_json::to_string(r.obj).unwrap_or_default();
        pending.push((base, content, i));
    }
    pending.sort();
    for (base, _, i) in pending {
        let slot = &mut ids[i];
        let mut candidate = base.clone();
        let mut n = 2;
        while used.contains(&candidate) {
            candidate = format!("{base}#{n}");
            n += 1;
        }
        used.insert(candidate.clone());
        *slot = Some(ComponentId::new(candidate)?);
    }
    Ok(ids
        .into_iter()
        .map(|id| id.expect("every slot assigned"))
        .collect())
}

fn parse_component(obj: &Object, path: &str, id: ComponentId) -> Result<Component, IngestError> {
    let mut c = Component::new(id, json::req_str(obj, "name", path)?);
    c.version = non_empty(json::opt_str(obj, "version", path)?);
    c.purl = non_empty(json::opt_str(obj, "purl", path)?);
    c.cpe = non_empty(json::opt_str(obj, "cpe", path)?);
    c.vendor =
        organization_name(obj, "supplier", path)?.or(organization_name(obj, "manufacturer", path)?);

    if let Some(licenses) = json::opt_array(obj, "licenses", path)? {
        let lpath = json::child(path, "licenses");
        for (i, entry) in licenses.iter().enumerate() {
            let epath = json::index(&lpath, i);
            let entry = json::as_object(entry, &epath)?;
            let value = match json::opt_object(entry, "license", &epath)? {
                Some(license) => {
                    let lp = json::child(&epath, "license");
                    json::opt_str(license, "id", &lp)?.or(json::opt_str(license, "name", &lp)?)
                }
                None => json::opt_str(entry, "expression", &epath)?,
            };
            if let Some(value) = non_empty(value) {
                c.licenses.push(value);
            }
        }
    }

    if let Some(hashes) = json::opt_array(obj, "hashes", path)? {
        let hpath = json::child(path, "hashes");
        for (i, entry) in hashes.iter().enumerate() {
            let epath = json::index(&hpath, i);
            let entry = json::as_object(entry, &epath)?;
            let alg = json::req_str(entry, "alg", &epath)?;
            let content = json::req_str(entry, "content", &epath)?;
            c.hashes.push(Hash::new(&alg, &content));
        }
    }

    c.extra = json::collect_extra(obj, KNOWN_FIELDS);
    if let Some(properties) = json::opt_array(obj, "properties", path)? {
        let ppath = json::child(path, "properties");
        for (i, entry) in properties.iter().enumerate() {
            let epath = json::index(&ppath, i);
            let entry = json::as_object(entry, &epath)?;
            let name = json::req_str(entry, "name", &epath)?;
            let value = entry
                .get("value")
                .map(json::scalar_text)
                .unwrap_or_default();
            c.extra.insert(format!("property:{name}"), value);
        }
    }
    Ok(c)
}

fn organization_name(obj: &Object, key: &str, path: &str) -> Result<Option<String>, IngestError> {
    Ok(match json::opt_object(obj, key, path)? {
        Some(org) => non_empty(json::opt_str(org, "name", &json::child(path, key))?),
        None => None,
    })
}
