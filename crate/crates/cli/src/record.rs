//! Run records: a command's result together with everything needed to reproduce it.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Version string written into every record.
pub const SOFTWARE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// SHA-256 of one input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &str, bytes: &[u8]) -> Self {
        Self {
            path: path.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

/// A command's result with its inputs, configuration and seed.
///
/// With one worker thread, rerunning the same command with the recorded seed and
/// configuration yields a byte-identical record (wall-clock time is only included when
/// requested).
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord<T: Serialize> {
    pub command: String,
    pub version: &'static str,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub config: Value,
    pub report: T,
    /// Wall-clock seconds for the whole command, only when timing was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

impl<T: Serialize> RunRecord<T> {
    pub fn new(
        command: &str,
        seed: u64,
        inputs: Vec<InputDigest>,
        config: &impl Serialize,
        report: T,
    ) -> Self {
        Self {
            command: command.to_string(),
            version: SOFTWARE_VERSION,
            seed,
            inputs,
            config: serde_json::to_value(config).expect("configurations serialize"),
            report,
            elapsed_seconds: None,
        }
    }

    /// Pretty JSON followed by a newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("records serialize");
        s.push('\n');
        s
    }

    /// One `key: value` line per scalar, with nested keys joined by dots.
    pub fn to_text(&self) -> String {
        render_text(&serde_json::to_value(self).expect("records serialize"))
    }
}

/// Flattens a JSON value into `key: value` lines; null entries are omitted.
pub fn render_text(value: &Value) -> String {
    let mut out = String::new();
    flatten(value, "", &mut out);
    out
}

fn flatten(value: &Value, prefix: &str, out: &mut String) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Null => {}
        Value::Object(map) => {
            for (k, v) in map {
                flatten(v, &key(k), out);
            }
        }
        Value::Array(items) if items.iter().all(|v| !v.is_object() && !v.is_array()) => {
            let joined: Vec<String> = items.iter().map(scalar).collect();
            let _ = writeln!(out, "{prefix}: [{}]", joined.join(", "));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(v, &key(&i.to_string()), out);
            }
        }
        other => {
            let _ = writeln!(out, "{prefix}: {}", scalar(other));
        }
    }
}

fn scalar(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
