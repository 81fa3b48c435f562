//! Simplex input documents.
//!
//! Two encodings are accepted and detected from the first non-blank character.
//!
//! Line format (one statement per line, `#` starts a comment):
//!
//! ```text
//! model hyperbolic
//! vertex 1 0 0
//! vertex 1.5430806348152437, 1.1752011936438014, 0
//! vertex 1.5430806348152437  0  1.1752011936438014
//! meta name right-angled triangle
//! ```
//!
//! JSON format:
//!
//! ```text
//! {"model": "spherical", "vertices": [[1,0,0],[0,1,0],[0,0,1]], "metadata": {"name": "octant"}}
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use kplane_core::Geometry;
use serde::Deserialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexDocument {
    pub geometry: Geometry,
    pub vertices: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ParseError {}

fn err(line: Option<usize>, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

/// Splits a coordinate list on commas and/or whitespace.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{t}' is not a finite number"))
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDocument {
    model: String,
    vertices: Vec<Vec<f64>>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

pub fn parse_document(text: &str) -> Result<SimplexDocument, ParseError> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_lines(text)
    }
}

fn parse_json(text: &str) -> Result<SimplexDocument, ParseError> {
    let doc: JsonDocument =
        serde_json::from_str(text).map_err(|e| err(Some(e.line()), e.to_string()))?;
    let geometry = doc
        .model
        .parse::<Geometry>()
        .map_err(|e| err(None, e.to_string()))?;
    let rows = doc.vertices.into_iter().map(|v| (None, v)).collect();
    finish(geometry, rows, doc.metadata)
}

fn parse_lines(text: &str) -> Result<SimplexDocument, ParseError> {
    let mut geometry = None;
    let mut rows = Vec::new();
    let mut metadata = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (keyword, rest) = line
            .split_once(char::is_whitespace)
            .map(|(k, r)| (k, r.trim()))
            .unwrap_or((line, ""));
        match keyword {
            "model" => {
                if geometry.is_some() {
                    return Err(err(Some(line_no), "model given twice"));
                }
                geometry = Some(
                    rest.parse::<Geometry>()
                        .map_err(|e| err(Some(line_no), e.to_string()))?,
                );
            }
            "vertex" => {
                let coords = parse_numbers(rest)
                    .map_err(|m| err(Some(line_no), format!("vertex {}: {m}", rows.len() + 1)))?;
                rows.push((Some(line_no), coords));
            }
            "meta" => {
                let (key, value) = rest
                    .split_once(char::is_whitespace)
                    .map(|(k, v)| (k, v.trim()))
                    .unwrap_or((rest, ""));
                if key.is_empty() {
                    return Err(err(Some(line_no), "meta needs a key"));
                }
                metadata.insert(key.to_string(), value.to_string());
            }
            other => return Err(err(Some(line_no), format!("unknown statement '{other}'"))),
        }
    }
    let geometry = geometry.ok_or_else(|| err(None, "missing 'model' line"))?;
    finish(geometry, rows, metadata)
}

fn finish(
    geometry: Geometry,
    rows: Vec<(Option<usize>, Vec<f64>)>,
    metadata: BTreeMap<String, String>,
) -> Result<SimplexDocument, ParseError> {
    let count = rows.len();
    if count < 2 {
        return Err(err(
            None,
            format!("need at least 2 vertices, found {count}"),
        ));
    }
    for (i, (line, coords)) in rows.iter().enumerate() {
        if coords.len() != count {
            return Err(err(
                *line,
                format!(
                    "vertex {} has {} coordinates but the document has {count} vertices \
                     (an n-simplex needs n+1 vertices in R^(n+1))",
                    i + 1,
                    coords.len()
                ),
            ));
        }
    }
    Ok(SimplexDocument {
        geometry,
        vertices: rows.into_iter().map(|(_, c)| c).collect(),
        metadata,
    })
}

/// Formats a double with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl SimplexDocument {
    /// Canonical line-format rendering; parsing it reproduces the document exactly.
    pub fn canonical_text(&self) -> String {
        let mut out = format!("model {}\n", self.geometry);
        for v in &self.vertices {
            let coords: Vec<String> = v.iter().map(|&x| fmt_f64(x)).collect();
            let _ = writeln!(out, "vertex {}", coords.join(" "));
        }
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "meta {k} {v}");
        }
        out
    }

    /// SHA-256 of [`Self::canonical_text`], hex encoded.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical_text().as_bytes());
        hash.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "\
# right-angled hyperbolic triangle
model hyperbolic
vertex 1 0 0
vertex 1.5430806348152437, 1.1752011936438014, 0
vertex 1.5430806348152437 0 1.1752011936438014   # p3
meta name triangle
";

    #[test]
    fn parses_line_format() {
        let doc = parse_document(TRIANGLE).unwrap();
        assert_eq!(doc.geometry, Geometry::Hyperbolic);
        assert_eq!(doc.vertices.len(), 3);
        assert_eq!(doc.vertices[1][1], 1.1752011936438014);
        assert_eq!(doc.metadata["name"], "triangle");
    }

    #[test]
    fn parses_json() {
        let doc = parse_document(
            r#"{"model":"spherical","vertices":[[1,0,0],[0,1,0],[0,0,1]],"metadata":{"name":"octant"}}"#,
        )
        .unwrap();
        assert_eq!(doc.geometry, Geometry::Spherical);
        assert_eq!(doc.vertices[2], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn wrong_length_names_the_row() {
        let text = "model spherical\nvertex 1 0 0 0\nvertex 0 1 0 0\nvertex 0 0 1 0\n";
        let e = parse_document(text).unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("vertex 1"));

        let ragged = "model spherical\nvertex 1 0 0\nvertex 0 1\nvertex 0 0 1\n";
        let e = parse_document(ragged).unwrap_err();
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn other_errors() {
        assert!(parse_document("vertex 1 0\nvertex 0 1\n").is_err());
        assert!(parse_document("model euclidean\n").is_err());
        assert_eq!(
            parse_document("model spherical\nvertex 1 x\n")
                .unwrap_err()
                .line,
            Some(2)
        );
        assert!(parse_document("model spherical\nfoo\n").is_err());
        assert!(parse_document("model spherical\nvertex nan 0\nvertex 0 1\n").is_err());
        assert!(
            parse_document(r#"{"model":"spherical","vertices":[[1,0],[0,1]],"extra":1}"#).is_err()
        );
    }

    #[test]
    fn canonical_text_round_trips() {
        let doc = parse_document(TRIANGLE).unwrap();
        let again = parse_document(&doc.canonical_text()).unwrap();
        assert_eq!(doc, again);
        assert_eq!(doc.digest(), again.digest());
        assert_eq!(doc.digest().len(), 64);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1f64.cosh(), -2.5e-300, 6.02214076e23] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
