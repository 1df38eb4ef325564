use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use chainid_core::Constants;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub flags: Value,
    pub constants: Constants,
    pub seed: Option<u64>,
    pub version: String,
    /// SHA-256 of every input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, flags: &impl Serialize, constants: &Constants, seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            subcommand: subcommand.into(),
            flags: serde_json::to_value(flags)?,
            constants: constants.clone(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            inputs: BTreeMap::new(),
        })
    }

    /// Reads an input file and records its digest.
    pub fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }
}

/// Rounds a float to `SIGNIFICANT_DIGITS` significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float")
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(xs) => Value::Array(xs.into_iter().map(round_value).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Serializes a report with its manifest. Non-finite floats are written as
/// `null`.
pub fn render(manifest: &RunManifest, result: &impl Serialize) -> Result<String> {
    let mut doc = Map::new();
    doc.insert("manifest".into(), round_value(serde_json::to_value(manifest)?));
    doc.insert("result".into(), round_value(serde_json::to_value(result)?));
    Ok(serde_json::to_string_pretty(&Value::Object(doc))? + "\n")
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
