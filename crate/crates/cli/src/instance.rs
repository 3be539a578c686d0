//! Reading and writing instance files.
//!
//! An instance is a JSON document with a `"format"` version, a model kind, vertex
//! labels, an edge list and the model parameters:
//!
//! ```json
//! {"format":1,"model":"hardcore","vertices":["a","b"],"edges":[["a","b"]],"lambda":{"a":1.0,"b":1.0}}
//! {"format":1,"model":"ising","vertices":["a","b"],"edges":[["a","b"]],"J":[["a","b",0.25]],"h":{"a":"inf","b":0.0}}
//! ```
//!
//! Infinite Ising fields are written as the strings `"inf"` and `"-inf"`. Ising edges
//! without a `J` entry have coupling zero. [`emit_instance`] writes the canonical form:
//! fixed key order, edges and couplings listed once in vertex order, every parameter
//! explicit.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use gibbs_tv::model::{Field, HardcoreModel, IsingModel, Pinning, Spin, SpinSystem};
use gibbs_tv::Graph;
use serde_json::{Map, Value};
use thiserror::Error;

/// The only supported value of the `"format"` field.
pub const FORMAT_VERSION: u64 = 1;

/// A parsed instance: the model together with its vertex labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub labels: Vec<String>,
    pub model: SpinSystem,
}

/// Why an instance could not be read.
#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}field `{field}`: {message}", line.map(|l| format!("line {l}, ")).unwrap_or_default())]
    Schema {
        field: String,
        line: Option<usize>,
        message: String,
    },
}

impl InstanceError {
    fn schema(
        text: &str,
        path: &[&str],
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        InstanceError::Schema {
            field: field.into(),
            line: locate(text, path),
            message: message.into(),
        }
    }
}

/// Line of the last of `needles`, each searched for after the previous one.
fn locate(text: &str, needles: &[&str]) -> Option<usize> {
    let mut offset = 0;
    for needle in needles {
        offset += text[offset..].find(needle)?;
    }
    Some(text[..offset].matches('\n').count() + 1)
}

fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// Reads an instance from a file, or from standard input when `path` is `-`.
pub fn read_instance(path: &Path) -> Result<(Instance, Vec<u8>), InstanceError> {
    let io = |source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    };
    let bytes = if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf).map_err(io)?;
        buf
    } else {
        std::fs::read(path).map_err(io)?
    };
    let text = String::from_utf8_lossy(&bytes);
    Ok((parse_instance(&text)?, bytes))
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let value: Value = serde_json::from_str(text).map_err(|e| InstanceError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| InstanceError::schema(text, &[], "<root>", "expected an object"))?;
    let err = |path: &[&str], field: &str, message: String| {
        InstanceError::schema(text, path, field, message)
    };

    let format = obj
        .get("format")
        .ok_or_else(|| err(&[], "format", "missing".into()))?;
    if format.as_u64() != Some(FORMAT_VERSION) {
        return Err(err(
            &["\"format\""],
            "format",
            format!("unsupported version {format}, expected {FORMAT_VERSION}"),
        ));
    }
    let kind = match obj.get("model").and_then(Value::as_str) {
        Some(k @ ("hardcore" | "ising")) => k,
        Some(other) => {
            return Err(err(
                &["\"model\""],
                "model",
                format!(
                    "unknown model {}, expected hardcore or ising",
                    quoted(other)
                ),
            ))
        }
        None => {
            return Err(err(
                &["\"model\""],
                "model",
                "missing or not a string".into(),
            ))
        }
    };
    let allowed: &[&str] = if kind == "hardcore" {
        &["format", "model", "vertices", "edges", "lambda"]
    } else {
        &["format", "model", "vertices", "edges", "J", "h"]
    };
    if let Some(key) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        let needle = quoted(key);
        return Err(err(
            &[&needle],
            key,
            format!("not allowed in a {kind} instance"),
        ));
    }

    let labels = parse_labels(text, obj)?;
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let vertex = |path: &[&str], field: &str, v: &Value| -> Result<usize, InstanceError> {
        let label = v
            .as_str()
            .ok_or_else(|| err(path, field, format!("vertex reference {v} is not a string")))?;
        index
            .get(label)
            .copied()
            .ok_or_else(|| err(path, field, format!("unknown vertex {}", quoted(label))))
    };

    let edge_list = obj
        .get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| err(&["\"edges\""], "edges", "missing or not an array".into()))?;
    let mut edges = Vec::with_capacity(edge_list.len());
    for (i, e) in edge_list.iter().enumerate() {
        let field = format!("edges[{i}]");
        let pair = e.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
            err(
                &["\"edges\""],
                &field,
                "expected a pair of vertex labels".into(),
            )
        })?;
        let (u, v) = (
            vertex(&["\"edges\""], &field, &pair[0])?,
            vertex(&["\"edges\""], &field, &pair[1])?,
        );
        edges.push((u, v));
    }
    let graph = Graph::new(labels.len(), &edges)
        .map_err(|e| err(&["\"edges\""], "edges", e.to_string()))?;

    let model = if kind == "hardcore" {
        let lambda = parse_vertex_map(text, obj, "lambda", &labels, |v| v.as_f64())?;
        HardcoreModel::new(graph, lambda.clone())
            .map(SpinSystem::from)
            .map_err(|e| {
                let bad = lambda
                    .iter()
                    .position(|&l| !(l >= 0.0 && l.is_finite()))
                    .unwrap_or(0);
                let needle = quoted(&labels[bad]);
                err(
                    &["\"lambda\"", &needle],
                    &format!("lambda.{}", labels[bad]),
                    e.to_string(),
                )
            })?
    } else {
        let fields = parse_vertex_map(text, obj, "h", &labels, |v| match v {
            Value::String(s) if s == "inf" => Some(Field::PosInf),
            Value::String(s) if s == "-inf" => Some(Field::NegInf),
            other => other.as_f64().map(Field::Finite),
        })?;
        let mut coupling: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let triples = match obj.get("J") {
            None => Vec::new(),
            Some(Value::Array(a)) => a.clone(),
            Some(_) => {
                return Err(err(
                    &["\"J\""],
                    "J",
                    "expected an array of [u, v, J] triples".into(),
                ))
            }
        };
        for (i, t) in triples.iter().enumerate() {
            let field = format!("J[{i}]");
            let parts = t
                .as_array()
                .filter(|p| p.len() == 3)
                .ok_or_else(|| err(&["\"J\""], &field, "expected [u, v, J]".into()))?;
            let (u, v) = (
                vertex(&["\"J\""], &field, &parts[0])?,
                vertex(&["\"J\""], &field, &parts[1])?,
            );
            let j = parts[2].as_f64().filter(|x| x.is_finite()).ok_or_else(|| {
                err(
                    &["\"J\""],
                    &field,
                    format!("coupling {} is not a finite number", parts[2]),
                )
            })?;
            if !graph.has_edge(u, v) {
                return Err(err(
                    &["\"J\""],
                    &field,
                    format!("{} - {} is not an edge", labels[u], labels[v]),
                ));
            }
            let key = (u.min(v), u.max(v));
            match coupling.get(&key) {
                Some(&previous) if previous != j => {
                    return Err(err(
                        &["\"J\""],
                        &field,
                        format!(
                            "asymmetric J: {} - {} is given as {previous} and {j}",
                            labels[u], labels[v]
                        ),
                    ))
                }
                _ => {
                    coupling.insert(key, j);
                }
            }
        }
        let couplings: Vec<(usize, usize, f64)> = graph
            .edges()
            .map(|(u, v)| (u, v, coupling.get(&(u, v)).copied().unwrap_or(0.0)))
            .collect();
        IsingModel::new(graph, &couplings, fields)
            .map(SpinSystem::from)
            .map_err(|e| err(&["\"J\""], "J", e.to_string()))?
    };
    Ok(Instance { labels, model })
}

fn parse_labels(text: &str, obj: &Map<String, Value>) -> Result<Vec<String>, InstanceError> {
    let list = obj
        .get("vertices")
        .and_then(Value::as_array)
        .ok_or_else(|| {
            InstanceError::schema(
                text,
                &["\"vertices\""],
                "vertices",
                "missing or not an array",
            )
        })?;
    let mut labels = Vec::with_capacity(list.len());
    for (i, v) in list.iter().enumerate() {
        let label = v.as_str().ok_or_else(|| {
            InstanceError::schema(
                text,
                &["\"vertices\""],
                format!("vertices[{i}]"),
                format!("label {v} is not a string"),
            )
        })?;
        if labels.iter().any(|l| l == label) {
            return Err(InstanceError::schema(
                text,
                &["\"vertices\""],
                format!("vertices[{i}]"),
                format!("duplicate label {}", quoted(label)),
            ));
        }
        labels.push(label.to_string());
    }
    Ok(labels)
}

fn parse_vertex_map<T: Copy>(
    text: &str,
    obj: &Map<String, Value>,
    name: &str,
    labels: &[String],
    convert: impl Fn(&Value) -> Option<T>,
) -> Result<Vec<T>, InstanceError> {
    let key = quoted(name);
    let map = obj.get(name).and_then(Value::as_object).ok_or_else(|| {
        InstanceError::schema(
            text,
            &[&key],
            name,
            "missing or not an object keyed by vertex label",
        )
    })?;
    if let Some(unknown) = map.keys().find(|k| !labels.contains(k)) {
        let needle = quoted(unknown);
        return Err(InstanceError::schema(
            text,
            &[&key, &needle],
            format!("{name}.{unknown}"),
            "unknown vertex",
        ));
    }
    labels
        .iter()
        .map(|label| {
            let needle = quoted(label);
            let field = format!("{name}.{label}");
            let value = map
                .get(label)
                .ok_or_else(|| InstanceError::schema(text, &[&key], &field, "missing"))?;
            convert(value).ok_or_else(|| {
                InstanceError::schema(
                    text,
                    &[&key, &needle],
                    &field,
                    format!("invalid value {value}"),
                )
            })
        })
        .collect()
}

/// Writes the canonical form of an instance, ending with a newline.
pub fn emit_instance(instance: &Instance) -> String {
    let labels = &instance.labels;
    let graph = instance.model.graph();
    let edges: Vec<Value> = graph
        .edges()
        .map(|(u, v)| Value::from(vec![labels[u].clone(), labels[v].clone()]))
        .collect();
    let mut doc = Map::new();
    doc.insert("format".into(), FORMAT_VERSION.into());
    match &instance.model {
        SpinSystem::Hardcore(m) => {
            doc.insert("model".into(), "hardcore".into());
            doc.insert("vertices".into(), labels.clone().into());
            doc.insert("edges".into(), edges.into());
            let lambda: Map<String, Value> = labels
                .iter()
                .zip(m.fugacities())
                .map(|(l, &x)| (l.clone(), Value::from(x)))
                .collect();
            doc.insert("lambda".into(), lambda.into());
        }
        SpinSystem::Ising(m) => {
            doc.insert("model".into(), "ising".into());
            doc.insert("vertices".into(), labels.clone().into());
            doc.insert("edges".into(), edges.into());
            let couplings: Vec<Value> = m
                .coupling_triples()
                .into_iter()
                .map(|(u, v, j)| {
                    Value::from(vec![
                        Value::from(labels[u].clone()),
                        labels[v].clone().into(),
                        j.into(),
                    ])
                })
                .collect();
            doc.insert("J".into(), couplings.into());
            let fields: Map<String, Value> = labels
                .iter()
                .zip(m.fields())
                .map(|(l, &h)| {
                    let v = match h {
                        Field::PosInf => Value::from("inf"),
                        Field::NegInf => Value::from("-inf"),
                        Field::Finite(x) => Value::from(x),
                    };
                    (l.clone(), v)
                })
                .collect();
            doc.insert("h".into(), fields.into());
        }
    }
    let mut out = serde_json::to_string_pretty(&Value::Object(doc)).expect("values serialize");
    out.push('\n');
    out
}

impl Instance {
    /// Wraps a model with labels `0, 1, ..., n - 1`.
    pub fn with_index_labels(model: SpinSystem) -> Self {
        let labels = (0..model.vertex_count()).map(|i| i.to_string()).collect();
        Self { labels, model }
    }

    /// The index of a vertex label.
    pub fn vertex(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Resolves a comma-separated list of labels.
    pub fn subset(&self, list: &str) -> Result<Vec<usize>, InstanceError> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|label| {
                self.vertex(label).ok_or_else(|| InstanceError::Schema {
                    field: "--subset".into(),
                    line: None,
                    message: format!("unknown vertex {}", quoted(label)),
                })
            })
            .collect()
    }

    /// Resolves a pinning written as `label=+,label=-` (`+1`, `1`, `-1` are also accepted).
    pub fn pinning(&self, list: &str) -> Result<Pinning, InstanceError> {
        let bad = |message: String| InstanceError::Schema {
            field: "--pin".into(),
            line: None,
            message,
        };
        let mut pairs = Vec::new();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (label, spin) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("expected label=spin, got {}", quoted(item))))?;
            let v = self
                .vertex(label.trim())
                .ok_or_else(|| bad(format!("unknown vertex {}", quoted(label.trim()))))?;
            let spin = match spin.trim() {
                "+" | "+1" | "1" => Spin::Plus,
                "-" | "-1" => Spin::Minus,
                other => return Err(bad(format!("spin must be + or -, got {}", quoted(other)))),
            };
            pairs.push((v, spin));
        }
        Pinning::from_pairs(self.labels.len(), &pairs).map_err(|e| bad(e.to_string()))
    }

    /// Checks that two instances share labels and graph, as a pair for distance estimation.
    pub fn ensure_pair(&self, other: &Instance) -> Result<(), InstanceError> {
        if self.labels != other.labels {
            return Err(InstanceError::Schema {
                field: "vertices".into(),
                line: None,
                message: "the two instances list different vertex labels".into(),
            });
        }
        self.model
            .ensure_comparable(&other.model)
            .map_err(|e| InstanceError::Schema {
                field: "model".into(),
                line: None,
                message: e.to_string(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EDGE: &str = r#"{"format":1,"model":"hardcore","vertices":["a","b"],"edges":[["a","b"]],"lambda":{"a":1.0,"b":1.0}}"#;

    #[test]
    fn minimal_hardcore_file() {
        let inst = parse_instance(EDGE).unwrap();
        assert_eq!(inst.labels, ["a", "b"]);
        let m = inst.model.as_hardcore().unwrap();
        assert_eq!(m.graph().edge_count(), 1);
        assert_eq!(m.fugacities(), &[1.0, 1.0]);
    }

    #[test]
    fn infinite_fields_parse() {
        let text = r#"{"format":1,"model":"ising","vertices":["a","b"],"edges":[["a","b"]],"J":[["b","a",0.25]],"h":{"a":"inf","b":0}}"#;
        let inst = parse_instance(text).unwrap();
        let m = inst.model.as_ising().unwrap();
        assert_eq!(m.fields(), &[Field::PosInf, Field::Finite(0.0)]);
        assert_eq!(m.coupling(0, 1), 0.25);
        assert!(!inst.model.is_soft());
    }

    #[test]
    fn negative_fugacity_names_the_field() {
        let text = "{\"format\":1,\"model\":\"hardcore\",\"vertices\":[\"x\"],\"edges\":[],\n\"lambda\":{\"x\":-1}}";
        let e = parse_instance(text).unwrap_err();
        let message = e.to_string();
        assert!(message.contains("lambda.x"), "{message}");
        assert!(message.contains("line 2"), "{message}");
    }

    #[test]
    fn diagnostics_for_bad_documents() {
        let cases = [
            (
                r#"{"format":1,"model":"hardcore","vertices":["a"],"edges":[["a","z"]],"lambda":{"a":1}}"#,
                "unknown vertex \"z\"",
            ),
            (
                r#"{"format":1,"model":"ising","vertices":["a","b"],"edges":[["a","b"]],"J":[["a","b",1],["b","a",2]],"h":{"a":0,"b":0}}"#,
                "asymmetric J",
            ),
            (
                r#"{"format":2,"model":"hardcore","vertices":[],"edges":[],"lambda":{}}"#,
                "unsupported version",
            ),
            (
                r#"{"format":1,"model":"hardcore","vertices":["a"],"edges":[],"lambda":{"a":1},"h":{}}"#,
                "not allowed",
            ),
            (
                r#"{"format":1,"model":"hardcore","vertices":["a"],"edges":[],"lambda":{}}"#,
                "lambda.a",
            ),
            (
                r#"{"format":1,"model":"ising","vertices":["a"],"edges":[],"h":{"a":"+inf"}}"#,
                "h.a",
            ),
            (
                r#"{"format":1,"model":"hardcore","vertices":["a","a"],"edges":[],"lambda":{"a":1}}"#,
                "duplicate label",
            ),
        ];
        for (text, needle) in cases {
            let message = parse_instance(text).unwrap_err().to_string();
            assert!(
                message.contains(needle),
                "{message} should mention {needle}"
            );
        }
        let syntax = parse_instance("{\"format\":1,\n\"model\":}").unwrap_err();
        assert!(matches!(syntax, InstanceError::Syntax { line: 2, .. }));
    }

    #[test]
    fn canonical_form_round_trips() {
        let text = r#"{"h":{"b":-0.5,"c":0.25,"a":"-inf"},"format":1,"model":"ising","vertices":["a","b","c"],"edges":[["c","b"],["a","b"]],"J":[["c","b",0.1]]}"#;
        let first = parse_instance(text).unwrap();
        let emitted = emit_instance(&first);
        let second = parse_instance(&emitted).unwrap();
        assert_eq!(first, second);
        assert_eq!(emitted, emit_instance(&second));
        assert!(emitted.contains("\"-inf\""));
    }

    #[test]
    fn subsets_and_pinnings_resolve_labels() {
        let inst = parse_instance(EDGE).unwrap();
        assert_eq!(inst.subset("b, a").unwrap(), vec![1, 0]);
        let pin = inst.pinning("a=+").unwrap();
        assert_eq!(pin.pinned().collect::<Vec<_>>(), vec![(0, Spin::Plus)]);
        assert!(inst.pinning("q=+").is_err());
        assert!(inst.pinning("a=up").is_err());
    }
}
