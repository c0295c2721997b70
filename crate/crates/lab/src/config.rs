//! Layered settings: built-in defaults, then a TOML file, then flags.
//!
//! The TOML file has one table per subcommand (`[train]`, `[score]`, ...).
//! Flags are collected as a sparse map (unset flags are absent) and
//! merged last.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{LabError, Result};
use crate::fsio;

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Resolves settings `T` for `section`. `flags` must serialize unset
/// options as absent.
pub fn resolve<T, F>(section: &str, file: Option<&Path>, flags: &F) -> Result<T>
where
    T: Serialize + DeserializeOwned + Default,
    F: Serialize,
{
    let mut value = serde_json::to_value(T::default()).expect("defaults serialize");
    if let Some(path) = file {
        let path = fsio::resolve(path);
        let text = fsio::read_text(&path)?;
        let doc: toml::Table = toml::from_str(&text).map_err(|e| LabError::Usage(format!("{}: {e}", path.display())))?;
        for key in doc.keys() {
            if !SECTIONS.contains(&key.as_str()) {
                return Err(LabError::Usage(format!("{}: unknown section [{key}]", path.display())));
            }
        }
        if let Some(table) = doc.get(section) {
            let v = serde_json::to_value(table).map_err(|e| LabError::Usage(e.to_string()))?;
            merge(&mut value, v);
        }
    }
    let flag_value = serde_json::to_value(flags).expect("flags serialize");
    if let Value::Object(m) = flag_value {
        let set: Map<String, Value> = m.into_iter().filter(|(_, v)| !v.is_null()).collect();
        merge(&mut value, Value::Object(set));
    }
    serde_json::from_value(value).map_err(|e| LabError::Usage(format!("[{section}] settings: {e}")))
}

pub const SECTIONS: &[&str] = &["prepare", "train", "score", "analyze", "report", "count-deps", "verify-beam"];
