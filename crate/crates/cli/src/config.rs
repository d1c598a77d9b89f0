use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::Invalid;

/// Loads a JSON config file; it must hold a single object.
pub fn load(path: &Path) -> Result<Map<String, Value>, Invalid> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Invalid(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Invalid(format!("config {} is not a JSON object", path.display()))),
        Err(e) => Err(Invalid(format!("config {}: {e}", path.display()))),
    }
}

/// Layers defaults, then config-file values, then explicit flags.
///
/// `flags` serializes only the options the user actually passed. The global
/// `--tol` applies to every command that has a `tol` field.
pub fn resolve<T>(
    file: Option<&Map<String, Value>>,
    flags: &impl Serialize,
    tol: Option<f64>,
) -> Result<T, Invalid>
where
    T: Default + Serialize + DeserializeOwned,
{
    let bad = |e: serde_json::Error| Invalid(format!("configuration: {e}"));
    let Value::Object(mut merged) = serde_json::to_value(T::default()).map_err(bad)? else {
        unreachable!("config records serialize to objects");
    };
    let known: Vec<String> = merged.keys().cloned().collect();
    if let Some(file) = file {
        for (k, v) in file {
            if !known.contains(k) {
                return Err(Invalid(format!("unknown config key {k:?} for this command")));
            }
            merged.insert(k.clone(), v.clone());
        }
    }
    if let (Some(tol), true) = (tol, merged.contains_key("tol")) {
        merged.insert("tol".into(), tol.into());
    }
    if let Value::Object(flags) = serde_json::to_value(flags).map_err(bad)? {
        merged.extend(flags.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(Value::Object(merged)).map_err(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(default)]
    struct Demo {
        a: f64,
        b: usize,
        tol: f64,
    }

    #[derive(Serialize)]
    struct Flags {
        #[serde(skip_serializing_if = "Option::is_none")]
        b: Option<usize>,
    }

    #[test]
    fn precedence() {
        let file: Map<String, Value> = serde_json::from_str(r#"{"a": 2.0, "b": 3}"#).unwrap();
        let d: Demo = resolve(Some(&file), &Flags { b: Some(7) }, Some(1e-9)).unwrap();
        assert_eq!(d, Demo { a: 2.0, b: 7, tol: 1e-9 });
        let d: Demo = resolve(None, &Flags { b: None }, None).unwrap();
        assert_eq!(d, Demo::default());
    }

    #[test]
    fn unknown_key_rejected() {
        let file: Map<String, Value> = serde_json::from_str(r#"{"c": 1}"#).unwrap();
        assert!(resolve::<Demo>(Some(&file), &Flags { b: None }, None).is_err());
    }
}
