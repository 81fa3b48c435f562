//! Report documents: an ordered tree rendered either as JSON or as flat
//! `path value...` lines. Every double is written with 17 significant digits.

use std::fmt::Write as _;

use serde_json::{Map, Number, Value};

use crate::document::{fmt_f64, SimplexDocument};

/// A double as a JSON number with 17 significant digits. Non-finite values,
/// which JSON cannot carry, become the strings `inf`, `-inf` and `nan`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(
            fmt_f64(x)
                .parse::<Number>()
                .expect("formatted double is valid JSON"),
        )
    } else {
        Value::String(x.to_string().to_lowercase())
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Echo of an input document in the JSON input encoding, so it can be fed back.
pub fn document_echo(doc: &SimplexDocument) -> Value {
    let mut m = Map::new();
    m.insert("model".into(), Value::String(doc.geometry.to_string()));
    m.insert(
        "vertices".into(),
        Value::Array(doc.vertices.iter().map(|v| nums(v)).collect()),
    );
    if !doc.metadata.is_empty() {
        m.insert(
            "metadata".into(),
            Value::Object(
                doc.metadata
                    .iter()
                    .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                    .collect(),
            ),
        );
    }
    Value::Object(m)
}

#[derive(Debug, Clone)]
pub struct Report {
    root: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut root = Map::new();
        root.insert("command".into(), Value::String(command.into()));
        root.insert("status".into(), Value::String("ok".into()));
        Self { root }
    }

    pub fn set(&mut self, key: &str, value: Value) -> &mut Self {
        self.root.insert(key.into(), value);
        self
    }

    pub fn set_status(&mut self, status: &str) {
        self.root
            .insert("status".into(), Value::String(status.into()));
    }

    pub fn status(&self) -> &str {
        self.root
            .get("status")
            .and_then(Value::as_str)
            .unwrap_or("ok")
    }

    pub fn error_message(&self) -> Option<&str> {
        self.root.get("error")?.get("message")?.as_str()
    }

    /// Marks the report failed with an error code and message.
    pub fn fail(&mut self, code: &str, message: impl Into<String>) {
        self.set_status(code);
        let mut e = Map::new();
        e.insert("code".into(), Value::String(code.into()));
        e.insert("message".into(), Value::String(message.into()));
        self.root.insert("error".into(), Value::Object(e));
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            let mut s = serde_json::to_string_pretty(&Value::Object(self.root.clone()))
                .expect("report is serializable");
            s.push('\n');
            s
        } else {
            let mut out = String::new();
            for (k, v) in &self.root {
                flatten(k, v, &mut out);
            }
            out
        }
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn flatten(path: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                flatten(&format!("{path}.{k}"), child, out);
            }
        }
        Value::Array(items) => {
            let scalars: Option<Vec<String>> = items.iter().map(scalar).collect();
            match scalars {
                Some(s) if s.is_empty() => {
                    let _ = writeln!(out, "{path}");
                }
                Some(s) => {
                    let _ = writeln!(out, "{path} {}", s.join(" "));
                }
                None => {
                    for (i, child) in items.iter().enumerate() {
                        flatten(&format!("{path}.{}", i + 1), child, out);
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "{path} {}", scalar(other).unwrap_or_default());
        }
    }
}
