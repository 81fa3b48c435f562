use std::collections::BTreeMap;

use kplane_core::checks::{run_checks, CheckOptions, CheckReport};
use kplane_core::oracle::{oracle_project, random_simplex};
use kplane_core::projection::{
    altitude, distance_to_face, face_bordered_minor, face_minor, facet_altitude, facet_foot,
    orthogonality_residual, project_to_face, span_residual, vertex_foot,
};
use kplane_core::{
    Error, FaceSelector, Geometry, Model, OracleOptions, Point, Simplex, Tolerances,
};
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::document::{parse_numbers, SimplexDocument};
use crate::report::{document_echo, num, nums, Report};

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Globals {
    pub tol_scale: f64,
    pub seed: u64,
}

impl Globals {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances::default().scaled(self.tol_scale)
    }

    pub fn check_options(&self, seed: u64) -> CheckOptions {
        CheckOptions {
            seed,
            oracle: OracleOptions {
                seed,
                ..Default::default()
            },
            ..CheckOptions::default().scaled(self.tol_scale)
        }
    }

    fn echo(&self) -> Value {
        obj([
            ("tol", num(self.tol_scale)),
            ("seed", Value::from(self.seed)),
        ])
    }
}

/// An error in how the command was invoked (exit code 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

fn obj<const N: usize>(entries: [(&str, Value); N]) -> Value {
    Value::Object(
        entries
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
    )
}

fn one_based(indices: &[usize]) -> Value {
    Value::Array(indices.iter().map(|&i| Value::from(i + 1)).collect())
}

/// Error text with user-facing (1-based) vertex numbers.
pub fn describe(e: &Error) -> String {
    match e {
        Error::OffManifold { index, residual } => {
            format!(
                "vertex {} is off the manifold (residual {residual:.3e})",
                index + 1
            )
        }
        Error::WrongSheet { index, first } => {
            format!(
                "vertex {} lies on the lower sheet (x1 = {first})",
                index + 1
            )
        }
        other => other.to_string(),
    }
}

fn fail(report: &mut Report, e: &Error) {
    report.fail(e.code(), describe(e));
}

pub fn parse_face(text: &str) -> Result<Vec<usize>, UsageError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| UsageError(format!("face index '{t}' is not a nonnegative integer")))
        })
        .collect()
}

fn start(command: &str, doc: &SimplexDocument, globals: &Globals, args: Value) -> Report {
    let mut report = Report::new(command);
    report.set(
        "inputs",
        obj([
            ("digest", Value::String(format!("sha256:{}", doc.digest()))),
            ("document", document_echo(doc)),
            ("args", args),
            ("globals", globals.echo()),
        ]),
    );
    report
}

fn build(doc: &SimplexDocument, globals: &Globals) -> Result<Simplex, Error> {
    let model = Model::new(doc.geometry, doc.vertices.len());
    Simplex::with_tolerances(model, doc.vertices.clone(), globals.tolerances())
}

fn matrix_rows<'a, R>(rows: impl Iterator<Item = R>) -> Value
where
    R: IntoIterator<Item = &'a f64>,
{
    Value::Array(
        rows.map(|r| nums(&r.into_iter().copied().collect::<Vec<_>>()))
            .collect(),
    )
}

pub fn validate(doc: &SimplexDocument, globals: &Globals) -> Report {
    let mut report = start("validate", doc, globals, Value::Object(Map::new()));
    let model = Model::new(doc.geometry, doc.vertices.len());
    let residuals: Vec<f64> = doc
        .vertices
        .iter()
        .map(|v| model.membership_residual(v))
        .collect();
    report.set("residuals", obj([("membership", nums(&residuals))]));
    match build(doc, globals) {
        Ok(s) => {
            report.set(
                "results",
                obj([
                    ("model", Value::String(doc.geometry.to_string())),
                    ("dimension", Value::from(s.dim())),
                    ("det_edge", num(s.det_edge())),
                    ("det_gram", num(s.det_gram())),
                    ("edge_matrix", matrix_rows(s.edge_matrix().row_iter())),
                    ("gram_matrix", matrix_rows(s.gram_matrix().row_iter())),
                ]),
            );
        }
        Err(e) => fail(&mut report, &e),
    }
    report
}

pub fn project(
    doc: &SimplexDocument,
    globals: &Globals,
    face_text: &str,
    point_text: &str,
    check: bool,
) -> Result<Report, UsageError> {
    let face_idx = parse_face(face_text)?;
    let point = parse_numbers(point_text).map_err(|m| UsageError(format!("--point: {m}")))?;
    let mut report = start(
        "project",
        doc,
        globals,
        obj([
            (
                "face",
                Value::Array(face_idx.iter().map(|&i| Value::from(i)).collect()),
            ),
            ("point", nums(&point)),
            ("check", Value::Bool(check)),
        ]),
    );
    let tol = globals.tolerances();
    let mut results = Map::new();
    let outcome = (|| -> Result<(), Failure> {
        let s = build(doc, globals)?;
        let face = FaceSelector::from_one_based(&face_idx)?;
        face.check_for(&s)?;
        let p = query_point(s.model(), point.clone(), &tol)?;
        results.insert(
            "distance_by_minors".into(),
            num(distance_to_face(&s, &face, &p, &tol)?),
        );
        results.insert("minors".into(), minors_used(&s, &face));
        let r = project_to_face(&s, &face, &p, &tol)?;
        results.insert("foot".into(), nums(r.foot.coords()));
        results.insert("distance".into(), num(r.distance));
        results.insert(
            "lambda".into(),
            Value::Object(
                r.lambda
                    .iter()
                    .map(|(&k, &v)| ((k + 1).to_string(), num(v)))
                    .collect(),
            ),
        );
        results.insert(
            "residuals".into(),
            obj([
                (
                    "membership",
                    num(s.model().membership_residual(r.foot.coords())),
                ),
                (
                    "orthogonality",
                    num(orthogonality_residual(&s, &face, &p, &r)),
                ),
                (
                    "foot_in_plane",
                    num(span_residual(&s, &face, r.foot.coords())),
                ),
            ]),
        );
        if check {
            let opts = globals.check_options(globals.seed);
            let o = oracle_project(&s, &face, &p, &opts.oracle)?;
            let distance_dev = (o.distance - r.distance).abs();
            let foot_dev = s.model().distance(&o.foot, &r.foot, &tol)?;
            let agree =
                distance_dev <= opts.oracle_distance_tol && foot_dev <= opts.oracle_foot_tol;
            results.insert(
                "oracle".into(),
                obj([
                    ("foot", nums(o.foot.coords())),
                    ("distance", num(o.distance)),
                    ("distance_deviation", num(distance_dev)),
                    ("foot_deviation", num(foot_dev)),
                    ("agree", Value::Bool(agree)),
                ]),
            );
        }
        Ok(())
    })();
    // partial results (e.g. the pi/2 distance of an undefined foot) are kept
    if !results.is_empty() {
        report.set("results", Value::Object(results));
    }
    if let Err(f) = outcome {
        report.fail(f.code, f.message);
    }
    Ok(report)
}

/// A reportable failure: an error code plus a user-facing message.
struct Failure {
    code: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: e.code(),
            message: describe(&e),
        }
    }
}

fn query_point(model: &Model, coords: Vec<f64>, tol: &Tolerances) -> Result<Point, Failure> {
    if coords.len() != model.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.ambient_dim(),
            found: coords.len(),
        }
        .into());
    }
    model.point(coords, tol).map_err(|e| match e {
        Error::OffManifold { residual, .. } => Failure {
            code: e.code(),
            message: format!("query point is off the manifold (residual {residual:.3e})"),
        },
        Error::WrongSheet { first, .. } => Failure {
            code: e.code(),
            message: format!("query point lies on the lower sheet (x1 = {first})"),
        },
        other => other.into(),
    })
}

fn minors_used(s: &Simplex, face: &FaceSelector) -> Value {
    let complement = face.complement(s.dim());
    let mut bordered = Vec::new();
    for &a in &complement {
        for &b in &complement {
            bordered.push(obj([
                ("s", Value::from(a + 1)),
                ("t", Value::from(b + 1)),
                ("value", num(face_bordered_minor(s, face, a, b))),
            ]));
        }
    }
    obj([
        ("face_minor", num(face_minor(s, face))),
        ("det_edge", num(s.det_edge())),
        ("bordered", Value::Array(bordered)),
    ])
}

pub fn altitudes(
    doc: &SimplexDocument,
    globals: &Globals,
    face_text: Option<&str>,
) -> Result<Report, UsageError> {
    let face_idx = face_text.map(parse_face).transpose()?;
    let mut report = start(
        "altitudes",
        doc,
        globals,
        obj([(
            "face",
            face_idx
                .as_ref()
                .map(|f| Value::Array(f.iter().map(|&i| Value::from(i)).collect()))
                .unwrap_or(Value::Null),
        )]),
    );
    let tol = globals.tolerances();
    let outcome = (|| -> Result<Vec<Value>, Error> {
        let s = build(doc, globals)?;
        let n = s.dim();
        let mut rows = Vec::new();
        match &face_idx {
            None => {
                for j in 0..=n {
                    let face = FaceSelector::facet(j, n)?;
                    let value = facet_altitude(&s, j, &tol)?;
                    let undefined =
                        matches!(facet_foot(&s, j, &tol), Err(Error::ProjectionUndefined(_)));
                    rows.push(altitude_row(j, &face, value, undefined));
                }
            }
            Some(idx) => {
                let face = FaceSelector::from_one_based(idx)?;
                face.check_for(&s)?;
                for j in face.complement(n) {
                    let value = altitude(&s, &face, j, &tol)?;
                    let undefined = matches!(
                        vertex_foot(&s, &face, j, &tol),
                        Err(Error::ProjectionUndefined(_))
                    );
                    rows.push(altitude_row(j, &face, value, undefined));
                }
            }
        }
        Ok(rows)
    })();
    match outcome {
        Ok(rows) => {
            report.set("results", obj([("altitudes", Value::Array(rows))]));
        }
        Err(e) => fail(&mut report, &e),
    }
    Ok(report)
}

fn altitude_row(j: usize, face: &FaceSelector, value: f64, undefined: bool) -> Value {
    obj([
        ("vertex", Value::from(j + 1)),
        ("face", one_based(face.indices())),
        ("altitude", num(value)),
        ("foot_undefined", Value::Bool(undefined)),
    ])
}

/// Parameters of `check --random`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub geometry: Geometry,
    pub n: usize,
    pub seed: u64,
    pub count: usize,
}

impl RandomSpec {
    pub fn parse(values: &[String]) -> Result<Self, UsageError> {
        let [model, n, seed, count] = values else {
            return Err(UsageError("--random takes MODEL N SEED COUNT".into()));
        };
        let geometry = model.parse::<Geometry>().map_err(UsageError)?;
        let n: usize = n.parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
            UsageError(format!("--random: N must be a positive integer, got '{n}'"))
        })?;
        let seed: u64 = seed.parse().map_err(|_| {
            UsageError(format!(
                "--random: SEED must be an unsigned integer, got '{seed}'"
            ))
        })?;
        let count: usize = count.parse().map_err(|_| {
            UsageError(format!(
                "--random: COUNT must be an unsigned integer, got '{count}'"
            ))
        })?;
        Ok(Self {
            geometry,
            n,
            seed,
            count,
        })
    }
}

fn invariant_table(report: &CheckReport) -> Value {
    Value::Array(
        report
            .invariants
            .iter()
            .map(|r| {
                let mut row = Map::new();
                row.insert("name".into(), Value::String(r.name.into()));
                row.insert("residual".into(), num(r.residual));
                row.insert("tolerance".into(), num(r.tolerance));
                row.insert("evaluated".into(), Value::from(r.evaluated));
                row.insert("pass".into(), Value::Bool(r.pass()));
                if let Some(e) = &r.error {
                    row.insert("error".into(), Value::String(e.clone()));
                }
                Value::Object(row)
            })
            .collect(),
    )
}

fn failure_list(report: &CheckReport) -> Value {
    Value::Array(
        report
            .failures()
            .map(|r| {
                Value::String(format!(
                    "{} residual {}",
                    r.name,
                    crate::document::fmt_f64(r.residual)
                ))
            })
            .collect(),
    )
}

pub fn check_document(doc: &SimplexDocument, globals: &Globals) -> Report {
    let mut report = start("check", doc, globals, Value::Object(Map::new()));
    match build(doc, globals) {
        Ok(s) => {
            let r = run_checks(&s, &globals.check_options(globals.seed));
            report.set("invariants", invariant_table(&r));
            report.set("undefined_feet", Value::from(r.undefined_feet));
            if !r.passed() {
                report.set("failures", failure_list(&r));
                report.set_status("InvariantFailure");
            }
        }
        Err(e) => fail(&mut report, &e),
    }
    report
}

/// Simplex `i` is generated from seed `spec.seed + i`; its sampling seed is
/// that value plus the global `--seed`.
pub fn check_random(spec: &RandomSpec, globals: &Globals) -> Report {
    let mut report = Report::new("check");
    report.set(
        "inputs",
        obj([
            (
                "random",
                obj([
                    ("model", Value::String(spec.geometry.to_string())),
                    ("n", Value::from(spec.n)),
                    ("seed", Value::from(spec.seed)),
                    ("count", Value::from(spec.count)),
                ]),
            ),
            ("globals", globals.echo()),
        ]),
    );

    let tol = globals.tolerances();
    let outcomes: Vec<(u64, Result<CheckReport, Error>)> = (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let seed = spec.seed.wrapping_add(i as u64);
            let result = random_simplex(spec.geometry, spec.n, seed).and_then(|s| {
                let vertices = s.vertices().iter().map(|v| v.coords().to_vec()).collect();
                let s = Simplex::with_tolerances(*s.model(), vertices, tol)?;
                Ok(run_checks(
                    &s,
                    &globals.check_options(seed.wrapping_add(globals.seed)),
                ))
            });
            (seed, result)
        })
        .collect();

    let mut total = CheckReport::default();
    let mut per_simplex = Vec::with_capacity(outcomes.len());
    let mut all_pass = true;
    for (seed, outcome) in &outcomes {
        let mut row = BTreeMap::new();
        row.insert("seed".to_string(), Value::from(*seed));
        match outcome {
            Ok(r) => {
                total.merge(r);
                all_pass &= r.passed();
                row.insert("pass".into(), Value::Bool(r.passed()));
                if !r.passed() {
                    row.insert("failures".into(), failure_list(r));
                }
            }
            Err(e) => {
                all_pass = false;
                row.insert("pass".into(), Value::Bool(false));
                row.insert(
                    "error".into(),
                    Value::String(format!("{}: {}", e.code(), describe(e))),
                );
            }
        }
        per_simplex.push(Value::Object(row.into_iter().collect()));
    }
    report.set("invariants", invariant_table(&total));
    report.set("undefined_feet", Value::from(total.undefined_feet));
    report.set("simplices", Value::Array(per_simplex));
    if !all_pass {
        report.set("failures", failure_list(&total));
        report.set_status("InvariantFailure");
    }
    report
}
