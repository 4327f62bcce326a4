//! Generic hardware BOM table.
//!
//! CSV with a header row; `ref` and `name` are required columns, `parent`,
//! `vendor` and `quantity` optional, anything else lands in `extra`. The JSON
//! variant is `{"hbom": [{"ref": ..., "name": ..., ...}, ...]}`. A row's
//! `parent` names another row's `ref` and yields a `Contains` edge from the
//! parent. Rows without a parent are top-level; no subject component is
//! synthesized, so the implicit product root appears only in the graph view.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use super::json;
use super::{finish, IngestError, IngestOptions};
use crate::model::{
    non_empty, BomDocument, BomFormat, Component, ComponentId, Relationship, RelationshipKind,
};

#[derive(Debug, Clone)]
struct Row {
    line: u64,
    reference: String,
    name: String,
    parent: Option<String>,
    vendor: Option<String>,
    quantity: u64,
    extra: BTreeMap<String, String>,
}

pub(crate) fn looks_like_csv(bytes: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(bytes) else {
        return false;
    };
    let Some(header) = text.lines().find(|l| !l.trim().is_empty()) else {
        return false;
    };
    let columns: Vec<String> = header.split(',').map(normalize_header).collect();
    columns.iter().any(|c| c == "ref") && columns.iter().any(|c| c == "name")
}

fn normalize_header(h: &str) -> String {
    h.trim().trim_matches('"').trim().to_ascii_lowercase()
}

pub fn parse_hbom(bytes: &[u8], opts: &IngestOptions) -> Result<BomDocument, IngestError> {
    let bytes = super::strip_bom(bytes);
    let trimmed = bytes.trim_ascii_start();
    let (spec_version, rows) = if trimmed.first() == Some(&b'{') {
        parse_json_rows(bytes)?
    } else {
        (String::new(), parse_csv_rows(bytes)?)
    };
    build(rows, spec_version, opts)
}

fn parse_csv_rows(bytes: &[u8]) -> Result<Vec<Row>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::Row {
            row: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(normalize_header)
        .collect();
    for required in ["ref", "name"] {
        if !headers.iter().any(|h| h == required) {
            return Err(IngestError::Row {
                row: 1,
                message: format!("missing required column `{required}`"),
            });
        }
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::Row {
            row: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let fields = headers
            .iter()
            .zip(record.iter())
            .map(|(h, v)| (h.clone(), v.to_string()))
            .collect();
        rows.push(row_from_fields(line, fields)?);
    }
    Ok(rows)
}

fn parse_json_rows(bytes: &[u8]) -> Result<(String, Vec<Row>), IngestError> {
    let root = json::parse_root(bytes)?;
    let version = json::opt_str(&root, "version", "$")?.unwrap_or_default();
    let items = json::opt_array(&root, "hbom", "$")?
        .ok_or_else(|| IngestError::at("$.hbom", "required field is missing"))?;
    let mut rows = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let row = i as u64 + 1;
        let obj = item.as_object().ok_or_else(|| IngestError::Row {
            row,
            message: "expected an object".into(),
        })?;
        let fields = obj
            .iter()
            .filter(|(_, v)| !v.is_null())
            .map(|(k, v)| {
                let text = match v {
                    Value::String(s) => s.trim().to_string(),
                    other => other.to_string(),
                };
                (k.to_ascii_lowercase(), text)
            })
            .collect();
        rows.push(row_from_fields(row, fields)?);
    }
    Ok((version, rows))
}

fn row_from_fields(line: u64, mut fields: BTreeMap<String, String>) -> Result<Row, IngestError> {
    let mut take = |key: &str| non_empty(fields.remove(key));
    let reference = take("ref").ok_or_else(|| IngestError::Row {
        row: line,
        message: "empty `ref`".into(),
    })?;
    let name = take("name").ok_or_else(|| IngestError::Row {
        row: line,
        message: "empty `name`".into(),
    })?;
    let parent = take("parent");
    let vendor = take("vendor");
    let quantity = match take("quantity") {
        None => 1,
        Some(q) => match q.parse::<u64>() {
            Ok(n) if n >= 1 => n,
            _ => {
                return Err(IngestError::Row {
                    row: line,
                    message: format!("quantity must be an integer >= 1, got `{q}`"),
                })
            }
        },
    };
    if parent.as_deref() == Some(reference.as_str()) {
        return Err(IngestError::Row {
            row: line,
            message: format!("`{reference}` lists itself as parent"),
        });
    }
    fields.retain(|_, v| !v.is_empty());
    Ok(Row {
        line,
        reference,
        name,
        parent,
        vendor,
        quantity,
        extra: fields,
    })
}

fn build(
    rows: Vec<Row>,
    spec_version: String,
    opts: &IngestOptions,
) -> Result<BomDocument, IngestError> {
    let mut seen = BTreeSet::new();
    for row in &rows {
        if !seen.insert(row.reference.as_str()) {
            return Err(IngestError::Row {
                row: row.line,
                message: format!("duplicate ref `{}`", row.reference),
            });
        }
    }
    for row in &rows {
        if let Some(parent) = &row.parent {
            if !seen.contains(parent.as_str()) {
                return Err(IngestError::DanglingParent {
                    row: row.line,
                    parent: parent.clone(),
                });
            }
        }
    }

    let rows = if opts.fold_quantities {
        fold_quantities(rows)
    } else {
        rows
    };

    let mut components = Vec::with_capacity(rows.len());
    let mut relationships = Vec::new();
    for row in rows {
        let id = ComponentId::new(row.reference)?;
        if let Some(parent) = row.parent {
            relationships.push(Relationship::new(
                ComponentId::new(parent)?,
                id.clone(),
                RelationshipKind::Contains,
            ));
        }
        let mut c = Component::new(id, row.name).with_quantity(row.quantity);
        c.vendor = row.vendor;
        c.extra = row.extra;
        components.push(c);
    }
    let doc = BomDocument::new(
        BomFormat::GenericHbom,
        spec_version,
        None,
        components,
        relationships,
        "",
    )?;
    finish(doc, opts)
}

/// Merges rows identical in (name, vendor, parent) into the row with the
/// smallest ref, summing quantities and re-parenting children of the merged
/// rows. Repeats until stable, since re-parenting can create new groups.
fn fold_quantities(mut rows: Vec<Row>) -> Vec<Row> {
    loop {
        let mut groups: BTreeMap<(String, Option<String>, Option<String>), Vec<usize>> =
            BTreeMap::new();
        for (i, row) in rows.iter().enumerate() {
            groups
                .entry((row.name.clone(), row.vendor.clone(), row.parent.clone()))
                .or_default()
                .push(i);
        }
        let mut renamed: BTreeMap<String, String> = BTreeMap::new();
        let mut removed = BTreeSet::new();
        for members in groups.values().filter(|m| m.len() > 1) {
            let survivor = *members
                .iter()
                .min_by(|a, b| rows[**a].reference.cmp(&rows[**b].reference))
                .expect("non-empty group");
            let total: u64 = members.iter().map(|i| rows[*i].quantity).sum();
            rows[survivor].quantity = total;
            for &i in members {
                if i != survivor {
                    renamed.insert(rows[i].reference.clone(), rows[survivor].reference.clone());
                    removed.insert(i);
                }
            }
        }
        if removed.is_empty() {
            return rows;
        }
        rows = rows
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(_, mut row)| {
                if let Some(p) = row.parent.as_ref().and_then(|p| renamed.get(p)) {
                    row.parent = Some(p.clone());
                }
                row
            })
            .collect();
    }
}
