//! Effective parameters: built-in defaults, overlaid by a TOML file (or the
//! params of a previous manifest), overlaid by command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Where the middle layer comes from.
#[derive(Debug, Default)]
pub enum ConfigSource {
    #[default]
    None,
    /// TOML document; the table named after the experiment is used.
    Toml(toml::Table),
    /// `params` of a manifest written by an earlier run.
    Manifest { experiment: String, params: Map<String, Value> },
}

impl ConfigSource {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let doc: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let experiment = doc.get("experiment").and_then(Value::as_str);
            let params = doc.get("params").and_then(Value::as_object);
            match (experiment, params) {
                (Some(x), Some(p)) => Ok(Self::Manifest { experiment: x.to_string(), params: p.clone() }),
                _ => Err(CliError::Usage(format!("{} is not a manifest", path.display()))),
            }
        } else {
            let table: toml::Table =
                toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            Ok(Self::Toml(table))
        }
    }

    fn layer(&self, experiment: &str) -> Result<Map<String, Value>, CliError> {
        match self {
            Self::None => Ok(Map::new()),
            Self::Toml(t) => match t.get(experiment) {
                None => Ok(Map::new()),
                Some(v) => match serde_json::to_value(v) {
                    Ok(Value::Object(m)) => Ok(m),
                    _ => Err(CliError::Usage(format!("[{experiment}] must be a table"))),
                },
            },
            Self::Manifest { experiment: x, params } => {
                if x != experiment {
                    return Err(CliError::Usage(format!("manifest is for `{x}`, not `{experiment}`")));
                }
                Ok(params.clone())
            }
        }
    }
}

fn overlay(base: &mut Map<String, Value>, top: Map<String, Value>) {
    for (k, v) in top {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
}

/// Merges `defaults`, the config layer for `experiment`, and `flags` (whose
/// `None` fields are skipped). Unknown keys are usage errors.
pub fn resolve<P, F>(experiment: &str, defaults: &P, source: &ConfigSource, flags: &F) -> Result<P, CliError>
where
    P: Serialize + DeserializeOwned,
    F: Serialize,
{
    let Value::Object(mut merged) = to_value(defaults)? else {
        unreachable!("parameter sets serialize to objects")
    };
    let known: Vec<String> = merged.keys().cloned().collect();
    let layer = source.layer(experiment)?;
    if let Some(k) = layer.keys().find(|k| !known.contains(k)) {
        return Err(CliError::Usage(format!("unknown {experiment} parameter `{k}`")));
    }
    overlay(&mut merged, layer);
    if let Value::Object(f) = to_value(flags)? {
        overlay(&mut merged, f);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("{experiment}: {e}")))
}

fn to_value<T: Serialize>(x: &T) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Usage(e.to_string()))
}
