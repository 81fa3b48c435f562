use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const DIAGONAL: &str = "0.57735026918962576,0.57735026918962576,0.57735026918962576";

fn data(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/data");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn kplane(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_kplane"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    if let Some(text) = stdin {
        child
            .stdin
            .take()
            .unwrap()
            .write_all(text.as_bytes())
            .unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().unwrap()
}

fn json(args: &[&str], stdin: Option<&str>) -> (i32, Value) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = kplane(&all, stdin);
    let text = String::from_utf8(out.stdout).unwrap();
    let value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (out.status.code().unwrap(), value)
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn validate_octant() {
    let (code, r) = json(&["validate", &data("octant.txt")], None);
    assert_eq!(code, 0);
    assert_eq!(r["status"], "ok");
    assert_eq!(f(&r["results"]["det_edge"]), 1.0);
    assert_eq!(r["inputs"]["document"]["metadata"]["name"], "octant");
    assert!(r["inputs"]["digest"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
}

#[test]
fn duplicated_vertex_is_degenerate() {
    let doc = "model spherical\nvertex 1 0 0\nvertex 1 0 0\nvertex 0 0 1\n";
    let (code, r) = json(&["validate", "-"], Some(doc));
    assert_eq!(code, 1);
    assert_eq!(r["status"], "DegenerateSimplex");
}

#[test]
fn wrong_row_length_is_a_parse_error() {
    let doc = "model spherical\nvertex 1 0 0 0\nvertex 0 1 0 0\nvertex 0 0 1 0\n";
    let out = kplane(&["validate", "-"], Some(doc));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("line 2") && stderr.contains("vertex 1"),
        "{stderr}"
    );
}

#[test]
fn off_manifold_vertex() {
    let doc = "model spherical\nvertex 1.001 0 0\nvertex 0 1 0\nvertex 0 0 1\n";
    let (code, r) = json(&["validate", "-"], Some(doc));
    assert_eq!(code, 1);
    assert_eq!(r["status"], "OffManifold");
    let (code, r) = json(&["check", "-"], Some(doc));
    assert_eq!(code, 1);
    assert_eq!(r["status"], "OffManifold");
}

#[test]
fn project_octant_diagonal() {
    let (code, r) = json(
        &[
            "project",
            &data("octant.txt"),
            "--face",
            "1,2",
            "--point",
            DIAGONAL,
            "--check",
        ],
        None,
    );
    assert_eq!(code, 0);
    let res = &r["results"];
    assert!((f(&res["distance"]) - 0.6154797086703873).abs() < 1e-15);
    assert!((f(&res["distance_by_minors"]) - 0.6154797086703873).abs() < 1e-15);
    let foot: Vec<f64> = res["foot"].as_array().unwrap().iter().map(f).collect();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (a, b) in foot.iter().zip([h, h, 0.0]) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!(f(&res["lambda"]["3"]).is_finite());
    assert_eq!(res["oracle"]["agree"], true);
    assert!(f(&res["oracle"]["distance_deviation"]) <= 1e-6);
}

#[test]
fn project_vertex_has_zero_distance() {
    let (code, r) = json(
        &[
            "project",
            &data("triangle.txt"),
            "--face",
            "1,2",
            "--point",
            "1,0,0",
        ],
        None,
    );
    assert_eq!(code, 0);
    assert_eq!(f(&r["results"]["distance"]), 0.0);
}

#[test]
fn project_errors() {
    let octant = data("octant.txt");
    let (code, r) = json(
        &["project", &octant, "--face", "1,4", "--point", DIAGONAL],
        None,
    );
    assert_eq!((code, r["status"].as_str()), (1, Some("BadFace")));

    let (code, r) = json(
        &["project", &octant, "--face", "1,2", "--point", "0,0,1"],
        None,
    );
    assert_eq!(
        (code, r["status"].as_str()),
        (1, Some("ProjectionUndefined"))
    );
    assert_eq!(
        f(&r["results"]["distance_by_minors"]),
        std::f64::consts::FRAC_PI_2
    );

    let (code, r) = json(
        &["project", &octant, "--face", "1,2", "--point", "1,1,0"],
        None,
    );
    assert_eq!((code, r["status"].as_str()), (1, Some("OffManifold")));

    let out = kplane(
        &["project", &octant, "--face", "1,x", "--point", DIAGONAL],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn altitudes() {
    let (code, r) = json(&["altitudes", &data("octant.txt")], None);
    assert_eq!(code, 0);
    let rows = r["results"]["altitudes"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert_eq!(f(&row["altitude"]), std::f64::consts::FRAC_PI_2);
        assert_eq!(row["foot_undefined"], true);
    }

    let (code, r) = json(&["altitudes", &data("triangle.txt"), "--face", "1,2"], None);
    assert_eq!(code, 0);
    let rows = r["results"]["altitudes"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["vertex"], 3);
    assert!((f(&rows[0]["altitude"]) - 1.0).abs() < 1e-14);
}

#[test]
fn check_octant_passes_with_zero_identity_residuals() {
    let (code, r) = json(&["check", &data("octant.txt")], None);
    assert_eq!(code, 0);
    for inv in r["invariants"].as_array().unwrap() {
        assert_eq!(inv["pass"], true, "{inv}");
        if ["lemma1", "lemma2", "schur_path"].contains(&inv["name"].as_str().unwrap()) {
            assert_eq!(f(&inv["residual"]), 0.0);
        }
    }
}

#[test]
fn check_random_spherical_passes() {
    let (code, r) = json(&["check", "--random", "spherical", "3", "5", "4"], None);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["status"], "ok");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(kplane(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(kplane(&["check"], None).status.code(), Some(2));
    assert_eq!(
        kplane(&["check", "--random", "euclidean", "3", "1", "1"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        kplane(&["validate", "/nonexistent/file"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        kplane(&["--tol", "-1", "validate", &data("octant.txt")], None)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn json_and_line_inputs_agree() {
    let json_doc = r#"{"model": "spherical", "vertices": [[1,0,0],[0,1,0],[0,0,1]], "metadata": {"name": "octant"}}"#;
    let args = ["project", "-", "--face", "1,2", "--point", DIAGONAL];
    let (_, from_json) = json(&args, Some(json_doc));
    let line_doc = std::fs::read_to_string(data("octant.txt")).unwrap();
    let (_, from_lines) = json(&args, Some(&line_doc));
    assert_eq!(
        from_json["inputs"]["digest"],
        from_lines["inputs"]["digest"]
    );
    assert_eq!(from_json["results"], from_lines["results"]);
}

#[test]
fn echoed_document_reproduces_results() {
    let args = ["project", "-", "--face", "1,3", "--point", "1.2,0.3,0.6"];
    let triangle = std::fs::read_to_string(data("triangle.txt")).unwrap();
    let point = {
        // a point on the hyperboloid with the given spatial part
        let (y, z): (f64, f64) = (0.3, 0.6);
        format!("{},{y},{z}", (1.0 + y * y + z * z).sqrt())
    };
    let mut args = args.to_vec();
    args[5] = &point;
    let (code, first) = json(&args, Some(&triangle));
    assert_eq!(code, 0);
    let echo = serde_json::to_string(&first["inputs"]["document"]).unwrap();
    let (_, second) = json(&args, Some(&echo));
    assert_eq!(first["inputs"]["digest"], second["inputs"]["digest"]);
    assert_eq!(
        serde_json::to_string(&first["results"]).unwrap(),
        serde_json::to_string(&second["results"]).unwrap()
    );
}

#[test]
fn text_output_is_path_value_lines() {
    let out = kplane(&["validate", &data("octant.txt")], None);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "status ok"));
    assert!(text
        .lines()
        .any(|l| l == "results.det_edge 1.0000000000000000e+0"));
}
