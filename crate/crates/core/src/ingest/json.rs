//! Small helpers for walking `serde_json::Value` trees with error paths
//! like `$.components[3].name`.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

use super::IngestError;

pub(crate) type Object = Map<String, Value>;

pub(crate) fn parse_root(bytes: &[u8]) -> Result<Object, IngestError> {
    let value: Value = serde_json::from_slice(super::strip_bom(bytes))
        .map_err(|e| IngestError::at("$", format!("invalid JSON: {e}")))?;
    match value {
        Value::Object(obj) => Ok(obj),
        _ => Err(IngestError::at("$", "expected a JSON object")),
    }
}

pub(crate) fn child(path: &str, key: &str) -> String {
    format!("{path}.{key}")
}

pub(crate) fn index(path: &str, i: usize) -> String {
    format!("{path}[{i}]")
}

/// Absent and `null` both read as `None`; any non-string is an error.
pub(crate) fn opt_str(obj: &Object, key: &str, path: &str) -> Result<Option<String>, IngestError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(IngestError::at(child(path, key), "expected a string")),
    }
}

pub(crate) fn req_str(obj: &Object, key: &str, path: &str) -> Result<String, IngestError> {
    opt_str(obj, key, path)?
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| IngestError::at(child(path, key), "required field is missing or empty"))
}

pub(crate) fn opt_array<'a>(
    obj: &'a Object,
    key: &str,
    path: &str,
) -> Result<Option<&'a Vec<Value>>, IngestError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Array(a)) => Ok(Some(a)),
        Some(_) => Err(IngestError::at(child(path, key), "expected an array")),
    }
}

pub(crate) fn opt_object<'a>(
    obj: &'a Object,
    key: &str,
    path: &str,
) -> Result<Option<&'a Object>, IngestError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Object(o)) => Ok(Some(o)),
        Some(_) => Err(IngestError::at(child(path, key), "expected an object")),
    }
}

pub(crate) fn as_object<'a>(value: &'a Value, path: &str) -> Result<&'a Object, IngestError> {
    value
        .as_object()
        .ok_or_else(|| IngestError::at(path, "expected an object"))
}

/// Copies every key not in `known` into a string map. Strings are kept as
/// is, other values as compact JSON.
pub(crate) fn collect_extra(obj: &Object, known: &[&str]) -> BTreeMap<String, String> {
    obj.iter()
        .filter(|(k, v)| !known.contains(&k.as_str()) && !v.is_null())
        .map(|(k, v)| (k.clone(), scalar_text(v)))
        .collect()
}

pub(crate) fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
