//! Model configuration files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "factors": [
//!     { "type": "matrix", "states": ["o", "a"], "root": "o",
//!       "rows": { "o": { "a": 1 }, "a": { "o": "1/1" } }, "transitive": true },
//!     { "type": "builtin", "name": "Z2-SRW" }
//!   ],
//!   "weights": ["4/5", 0.2]
//! }
//! ```
//!
//! Probabilities are JSON numbers or strings holding a decimal or a fraction
//! `p/q`. Weights and rows may be off from 1 by at most 1e-9 and are then
//! rescaled; anything further off is rejected.

use std::collections::BTreeMap;
use std::fmt;

use escape_rate::{Factor, FiniteFactor, LatticeKind, ModelSpec};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u64 = 1;
pub const SUM_TOL: f64 = 1e-9;

/// A problem with the configuration, addressed by field path
/// (`factors[0].rows.A`) or by line and column for syntax errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub location: String,
    pub message: String,
}

impl ConfigError {
    fn at(location: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl std::error::Error for ConfigError {}

type Res<T> = Result<T, ConfigError>;

/// A parsed configuration ready to run.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub model: ModelSpec,
    pub name: Option<String>,
    /// Hex SHA-256 of the raw file bytes.
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn load_file(path: &std::path::Path) -> Res<LoadedConfig> {
    let bytes = std::fs::read(path)
        .map_err(|e| ConfigError::at(path.display().to_string(), format!("cannot read: {e}")))?;
    parse_bytes(&bytes)
}

pub fn parse_bytes(bytes: &[u8]) -> Res<LoadedConfig> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| {
        ConfigError::at(
            format!("line {}, column {}", e.line(), e.column()),
            format!("invalid JSON: {e}"),
        )
    })?;
    let (model, name) = parse_value(&value)?;
    Ok(LoadedConfig {
        model,
        name,
        sha256: sha256_hex(bytes),
    })
}

fn object<'a>(v: &'a Value, path: &str) -> Res<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| ConfigError::at(path, "expected an object"))
}

fn array<'a>(v: &'a Value, path: &str) -> Res<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| ConfigError::at(path, "expected an array"))
}

fn string<'a>(v: &'a Value, path: &str) -> Res<&'a str> {
    v.as_str()
        .ok_or_else(|| ConfigError::at(path, "expected a string"))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Res<&'a Value> {
    obj.get(key)
        .ok_or_else(|| ConfigError::at(path, format!("missing field \"{key}\"")))
}

fn only_keys(obj: &Map<String, Value>, allowed: &[&str], path: &str) -> Res<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ConfigError::at(path, format!("unknown field \"{k}\""))),
        None => Ok(()),
    }
}

/// A probability: JSON number, decimal string, or fraction string `p/q`.
pub fn parse_probability(v: &Value, path: &str) -> Res<f64> {
    let x = match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| ConfigError::at(path, "number out of range"))?,
        Value::String(s) => parse_fraction(s).ok_or_else(|| {
            ConfigError::at(path, format!("\"{s}\" is neither a decimal nor a fraction p/q"))
        })?,
        _ => return Err(ConfigError::at(path, "expected a number or a fraction string")),
    };
    if !x.is_finite() || x < 0.0 {
        return Err(ConfigError::at(path, format!("{x} is not a probability")));
    }
    Ok(x)
}

/// `"2/5"` is divided once in floating point, so it is the correctly rounded
/// value of the fraction.
fn parse_fraction(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: u64 = p.trim().parse().ok()?;
            let q: u64 = q.trim().parse().ok()?;
            if q == 0 {
                return None;
            }
            Some(p as f64 / q as f64)
        }
        None => s.parse().ok(),
    }
}

fn check_sum(values: &mut [f64], path: &str, what: &str) -> Res<()> {
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(ConfigError::at(
            path,
            format!("{what} sum to {sum}, expected 1 (tolerance {SUM_TOL:e})"),
        ));
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
    Ok(())
}

pub fn parse_value(v: &Value) -> Res<(ModelSpec, Option<String>)> {
    let root = object(v, "$")?;
    only_keys(root, &["schema_version", "name", "description", "factors", "weights"], "$")?;
    match field(root, "schema_version", "$")?.as_u64() {
        Some(SCHEMA_VERSION) => {}
        _ => {
            return Err(ConfigError::at(
                "schema_version",
                format!("unsupported version, expected {SCHEMA_VERSION}"),
            ))
        }
    }
    let name = match root.get("name") {
        Some(n) => Some(string(n, "name")?.to_string()),
        None => None,
    };
    if let Some(d) = root.get("description") {
        string(d, "description")?;
    }

    let factors_v = array(field(root, "factors", "$")?, "factors")?;
    let mut factors = Vec::with_capacity(factors_v.len());
    for (i, f) in factors_v.iter().enumerate() {
        factors.push(parse_factor(f, &format!("factors[{i}]"))?);
    }

    let weights_v = array(field(root, "weights", "$")?, "weights")?;
    if weights_v.len() != factors.len() {
        return Err(ConfigError::at(
            "weights",
            format!("{} weights for {} factors", weights_v.len(), factors.len()),
        ));
    }
    let mut weights = Vec::with_capacity(weights_v.len());
    for (i, w) in weights_v.iter().enumerate() {
        let p = format!("weights[{i}]");
        let x = parse_probability(w, &p)?;
        if x <= 0.0 {
            return Err(ConfigError::at(p, "weights must be positive"));
        }
        weights.push(x);
    }
    check_sum(&mut weights, "weights", "weights")?;

    let model = ModelSpec::new(factors, weights).map_err(|e| ConfigError::at("factors", e.to_string()))?;
    Ok((model, name))
}

fn parse_factor(v: &Value, path: &str) -> Res<Factor> {
    let obj = object(v, path)?;
    let kind = string(field(obj, "type", path)?, &format!("{path}.type"))?;
    match kind {
        "builtin" => {
            only_keys(obj, &["type", "name"], path)?;
            let p = format!("{path}.name");
            match string(field(obj, "name", path)?, &p)? {
                "Z1-SRW" => Ok(Factor::lattice(LatticeKind::Z1)),
                "Z2-SRW" => Ok(Factor::lattice(LatticeKind::Z2)),
                "flip" => Ok(Factor::flip()),
                other => Err(ConfigError::at(
                    p,
                    format!("unknown builtin \"{other}\" (expected Z1-SRW, Z2-SRW or flip)"),
                )),
            }
        }
        "matrix" => parse_matrix(obj, path).map(Factor::Finite),
        other => Err(ConfigError::at(
            format!("{path}.type"),
            format!("unknown factor type \"{other}\" (expected matrix or builtin)"),
        )),
    }
}

fn parse_matrix(obj: &Map<String, Value>, path: &str) -> Res<FiniteFactor> {
    only_keys(obj, &["type", "states", "root", "rows", "transitive"], path)?;
    let states_path = format!("{path}.states");
    let mut labels = Vec::new();
    let mut index = BTreeMap::new();
    for (k, s) in array(field(obj, "states", path)?, &states_path)?.iter().enumerate() {
        let label = string(s, &format!("{states_path}[{k}]"))?.to_string();
        if index.insert(label.clone(), k).is_some() {
            return Err(ConfigError::at(
                format!("{states_path}[{k}]"),
                format!("duplicate state \"{label}\""),
            ));
        }
        labels.push(label);
    }
    let n = labels.len();
    if n < 2 {
        return Err(ConfigError::at(states_path, "a factor needs at least 2 states"));
    }

    let root_path = format!("{path}.root");
    let root_label = string(field(obj, "root", path)?, &root_path)?;
    let root = *index
        .get(root_label)
        .ok_or_else(|| ConfigError::at(&root_path, format!("unknown state \"{root_label}\"")))?;

    let transitive = match obj.get("transitive") {
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(ConfigError::at(format!("{path}.transitive"), "expected a boolean")),
        None => false,
    };

    let rows_path = format!("{path}.rows");
    let rows_obj = object(field(obj, "rows", path)?, &rows_path)?;
    if let Some(k) = rows_obj.keys().find(|k| !index.contains_key(*k)) {
        return Err(ConfigError::at(&rows_path, format!("row for unknown state \"{k}\"")));
    }
    let mut rows = vec![vec![0.0; n]; n];
    for (x, label) in labels.iter().enumerate() {
        let row_path = format!("{rows_path}.{label}");
        let row = rows_obj
            .get(label)
            .ok_or_else(|| ConfigError::at(&rows_path, format!("missing row for state \"{label}\"")))?;
        for (target, p) in object(row, &row_path)? {
            let entry_path = format!("{row_path}.{target}");
            let y = *index
                .get(target)
                .ok_or_else(|| ConfigError::at(&entry_path, format!("unknown state \"{target}\"")))?;
            if y == x {
                return Err(ConfigError::at(entry_path, "self-loops are not allowed"));
            }
            rows[x][y] = parse_probability(p, &entry_path)?;
        }
        check_sum(&mut rows[x], &row_path, "probabilities")?;
    }

    FiniteFactor::new(labels, root, rows, transitive).map_err(|e| ConfigError::at(path, e.to_string()))
}
