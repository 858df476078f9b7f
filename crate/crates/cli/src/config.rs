//! Config files: a JSON object whose keys are the long flag names in
//! snake_case. Flags given on the command line win over file keys.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Overlays the non-null fields of `flags` on the config file and parses the
/// result back into the same shape.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> Result<T> {
    let mut merged = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            match serde_json::from_str::<Value>(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
            {
                Value::Object(m) => m,
                _ => bail!("config {} must hold a JSON object", path.display()),
            }
        }
        None => Map::new(),
    };
    let Value::Object(given) = serde_json::to_value(flags)? else {
        bail!("flags did not serialize to an object");
    };
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).context("invalid configuration")
}

/// Output directory: the explicit flag, else `$ASSORTNET_OUT`, else `out`.
pub fn out_dir(flag: Option<&PathBuf>) -> PathBuf {
    flag.cloned()
        .or_else(|| std::env::var_os("ASSORTNET_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    struct Args {
        n: Option<usize>,
        seed: Option<u64>,
        name: Option<String>,
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"n": 5, "seed": 3}"#).unwrap();
        let flags = Args {
            seed: Some(9),
            ..Args::default()
        };
        let r = resolve(&flags, Some(&path)).unwrap();
        assert_eq!(
            r,
            Args {
                n: Some(5),
                seed: Some(9),
                name: None
            }
        );
    }

    #[test]
    fn unknown_shapes_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, "[1, 2]").unwrap();
        assert!(resolve(&Args::default(), Some(&path)).is_err());
        std::fs::write(&path, r#"{"n": "five"}"#).unwrap();
        assert!(resolve(&Args::default(), Some(&path)).is_err());
    }
}
