//! Catalog files and truncation defaults.
//!
//! Catalogs are UTF-8 JSON documents; rationals are encoded as `"p/q"`
//! strings (or plain integers).  Loading runs every validation rule, so a
//! catalog in memory is always consistent.

use std::path::Path;

use crate::algebra::Truncation;
use crate::catalog::OrbitCatalog;
use crate::rat::rat_int;
use crate::{Error, Result};

/// Parses and validates a catalog from JSON text.
pub fn catalog_from_json(text: &str) -> Result<OrbitCatalog> {
    let catalog: OrbitCatalog = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!(
            "catalog parse error at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    catalog.validate()?;
    Ok(catalog)
}

/// Loads a catalog file.
pub fn load_catalog(path: impl AsRef<Path>) -> Result<OrbitCatalog> {
    let text = std::fs::read_to_string(path.as_ref())?;
    catalog_from_json(&text)
}

/// Serializes a catalog deterministically (sorted maps, fixed field order).
pub fn catalog_to_json(catalog: &OrbitCatalog) -> String {
    serde_json::to_string_pretty(catalog).expect("catalog serialization cannot fail")
}

/// The built-in truncation defaults, `T=3, W=4, K=2`.
pub fn default_truncation() -> Truncation {
    Truncation::new(rat_int(3), 4, 2)
}

/// Parses `"T=3,W=4,K=2"` as used by the `SFT_TRUNCATION_DEFAULTS`
/// environment variable; unspecified fields keep their defaults.
pub fn parse_truncation_spec(spec: &str) -> Result<Truncation> {
    let mut truncation = default_truncation();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad truncation entry {part:?}")))?;
        match key.trim() {
            "T" => truncation.max_action = crate::rat::parse_rat(value)?,
            "W" => {
                truncation.max_word_len = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad word length {value:?}")))?
            }
            "K" => {
                truncation.max_t_degree = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad t-degree {value:?}")))?
            }
            other => {
                return Err(Error::Parse(format!(
                    "unknown truncation key {other:?} (expected T, W or K)"
                )))
            }
        }
    }
    Ok(truncation)
}

/// Truncation from the environment, or the built-in defaults.
pub fn truncation_from_env() -> Result<Truncation> {
    match std::env::var("SFT_TRUNCATION_DEFAULTS") {
        Ok(spec) => parse_truncation_spec(&spec),
        Err(_) => Ok(default_truncation()),
    }
}
