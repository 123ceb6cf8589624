//! JSON config loading with `key=value` overrides.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use unlearn_core::Error;

pub fn config_error(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Reads a JSON object from `path`. A missing path yields an empty object so
/// every field can come from overrides.
pub fn load_object(path: Option<&Path>) -> Result<Map<String, Value>, Error> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error("config", format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(config_error("config", "top level must be a JSON object")),
        Err(e) => Err(config_error("config", format!("{}: {e}", path.display()))),
    }
}

/// Applies `key=value` pairs. Values that parse as JSON keep their type,
/// anything else is taken as a string.
pub fn apply_overrides(map: &mut Map<String, Value>, sets: &[String]) -> Result<(), Error> {
    for set in sets {
        let (key, raw) = set
            .split_once('=')
            .ok_or_else(|| config_error("set", format!("expected key=value, got `{set}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(config_error("set", format!("empty key in `{set}`")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        map.insert(key.to_string(), value);
    }
    Ok(())
}

/// Canonicalizes a string field through `FromStr` so aliases and unknown
/// names are reported against the field rather than as a bare serde error.
pub fn canonicalize<T>(map: &mut Map<String, Value>, key: &str) -> Result<(), Error>
where
    T: std::str::FromStr<Err = Error> + serde::Serialize,
{
    if let Some(Value::String(s)) = map.get(key) {
        let parsed: T = s.parse()?;
        map.insert(key.to_string(), serde_json::to_value(parsed)?);
    }
    Ok(())
}

/// Deserializes with serde's messages turned into field-named config errors.
pub fn from_object<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, Error> {
    serde_json::from_value(Value::Object(map)).map_err(|e| {
        let msg = e.to_string();
        config_error(&field_of(&msg).unwrap_or_else(|| "config".into()), msg)
    })
}

/// The first backquoted name in a serde message, e.g. "missing field `lr`".
fn field_of(msg: &str) -> Option<String> {
    if !(msg.contains("missing field") || msg.contains("unknown field")) {
        return None;
    }
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}
