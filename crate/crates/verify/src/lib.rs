//! Acceptance criteria for the projection library and the `kplane` binary.
//!
//! Populations:
//!
//! * matrix identities: `random_simplex(model, n, seed)` for both models,
//!   `n` in 2..=8 and `seed` in 0..200;
//! * projections: `random_simplex(model, n, seed)` for both models, `n` in
//!   2..=6 and `seed` in 0..100. The face and the query point (hyperbolic
//!   radius up to 2) come from `SeededRng::new(TRIPLE_STREAM + seed)`, the
//!   oracle runs with default options and `seed`.

use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use kplane_core::linalg::{bordered_minor, det, schur_complement, select};
use kplane_core::oracle::{random_face, random_plane_point, random_point};
use kplane_core::projection::{
    altitude, distance_to_face, facet_altitude, facet_foot, orthogonality_residual,
    project_to_face, project_to_hyperplane, vertex_foot,
};
use kplane_core::simplex::{verify_lemma1, verify_lemma2};
use kplane_core::{
    oracle_project, random_simplex, Error, FaceSelector, Geometry, Model, OracleOptions, Point,
    ProjectionResult, SeededRng, Simplex, Tolerances,
};
use nalgebra::DMatrix;

pub const MODELS: [Geometry; 2] = [Geometry::Hyperbolic, Geometry::Spherical];
pub const TRIPLE_STREAM: u64 = 1 << 32;

pub const IDENTITY_TOL: f64 = 1e-8;
pub const ORACLE_DISTANCE_TOL: f64 = 1e-6;
pub const ORACLE_FOOT_TOL: f64 = 1e-5;
pub const MEMBERSHIP_TOL: f64 = 1e-9;
pub const ORTHOGONALITY_TOL: f64 = 1e-8;
pub const COHERENCE_TOL: f64 = 1e-9;
pub const MINIMALITY_SLACK: f64 = 1e-9;
pub const MINIMALITY_SAMPLES: usize = 100;

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Option<Duration>,
}

impl Verdict {
    pub fn line(&self) -> String {
        let limit = self
            .limit
            .map(|l| format!(", limit {} s", l.as_secs()))
            .unwrap_or_default();
        format!(
            "{} criterion {} {}: {} ({:.1} s{limit})",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64(),
        )
    }
}

/// Worst value seen so far together with where it occurred.
#[derive(Debug, Clone, Default)]
struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn see(&mut self, value: f64, at: impl FnOnce() -> String) {
        if value > self.value || value.is_nan() && !self.value.is_nan() {
            self.value = value;
            self.at = at();
        }
    }

    fn show(&self) -> String {
        if self.at.is_empty() {
            format!("{:.2e}", self.value)
        } else {
            format!("{:.2e} at {}", self.value, self.at)
        }
    }
}

fn verdict(
    id: u8,
    title: &'static str,
    start: Instant,
    limit: Option<Duration>,
    ok: bool,
    detail: String,
) -> Verdict {
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let detail = if in_time {
        detail
    } else {
        format!("{detail}; over the time limit")
    };
    Verdict {
        id,
        title,
        pass: ok && in_time,
        detail,
        elapsed,
        limit,
    }
}

fn identity_population() -> impl Iterator<Item = (Geometry, usize, u64)> {
    MODELS
        .into_iter()
        .flat_map(|g| (2..=8).flat_map(move |n| (0..200).map(move |seed| (g, n, seed))))
}

fn label(g: Geometry, n: usize, seed: u64) -> String {
    format!("{g} n={n} seed={seed}")
}

fn identity_detail(total: usize, failed: &[(f64, f64)], worst: &Worst) -> String {
    let mut d = format!(
        "{} of {total} simplices within {IDENTITY_TOL:.0e}, worst residual {}",
        total - failed.len(),
        worst.show()
    );
    if !failed.is_empty() {
        let ratio = failed.iter().map(|(r, f)| r / f).fold(0.0, f64::max);
        let lowest = failed.iter().map(|(_, f)| *f).fold(f64::INFINITY, f64::min);
        d += &format!(
            "; each failure is within {ratio:.0} x its rounding floor (floors from {lowest:.1e} up)"
        );
    }
    d
}

/// `M^-1 = T G T` and `G^-1 = T M T`.
pub fn inverse_scaling_identities() -> Verdict {
    let start = Instant::now();
    let (mut total, mut failed, mut worst) = (0, Vec::new(), Worst::default());
    for (g, n, seed) in identity_population() {
        total += 1;
        let s = random_simplex(g, n, seed).expect("generator succeeds");
        let r = verify_lemma1(&s, IDENTITY_TOL).expect("valid simplex");
        let residual = r.max_residual().max(r.scaling_discrepancy);
        worst.see(residual, || label(g, n, seed));
        if !r.pass {
            failed.push((residual, s.rounding_floor()));
        }
    }
    let detail = identity_detail(total, &failed, &worst);
    verdict(
        1,
        "inverse scaling identities",
        start,
        Some(Duration::from_secs(10)),
        failed.is_empty(),
        detail,
    )
}

/// Largest gap between `m_t^s / m^{k+1}` and the Schur complement entries at split `k`.
pub fn schur_path_residual(m: &DMatrix<f64>, k: usize) -> kplane_core::Result<f64> {
    let n = m.nrows() - 1;
    let face: Vec<usize> = (0..=k).collect();
    let rest: Vec<usize> = (k + 1..=n).collect();
    let lead = det(&select(m, &face, &face));
    let schur = schur_complement(m, &rest, 0.0)?;
    let mut worst: f64 = 0.0;
    for &s in &rest {
        for &t in &rest {
            let ratio = bordered_minor(m, &face, s, t) / lead;
            worst = worst.max((ratio - schur.get(s, t).expect("in block")).abs());
        }
    }
    Ok(worst)
}

/// The four block identities and the determinant-ratio path at every split.
pub fn block_identities() -> Verdict {
    let start = Instant::now();
    let (mut total, mut failed, mut worst) = (0, Vec::new(), Worst::default());
    for (g, n, seed) in identity_population() {
        total += 1;
        let s = random_simplex(g, n, seed).expect("generator succeeds");
        let mut residual: f64 = 0.0;
        for k in 0..n {
            let r = verify_lemma2(&s, k, IDENTITY_TOL).map(|r| r.max_residual());
            let p = schur_path_residual(s.edge_matrix(), k);
            residual = residual
                .max(r.unwrap_or(f64::INFINITY))
                .max(p.unwrap_or(f64::INFINITY));
        }
        worst.see(residual, || label(g, n, seed));
        if residual > IDENTITY_TOL || residual.is_nan() {
            failed.push((residual, s.rounding_floor()));
        }
    }
    let detail = identity_detail(total, &failed, &worst);
    verdict(
        2,
        "block identities and determinant-ratio path",
        start,
        Some(Duration::from_secs(30)),
        failed.is_empty(),
        detail,
    )
}

/// One sampled (simplex, face, point) triple.
pub struct Triple {
    pub geometry: Geometry,
    pub n: usize,
    pub seed: u64,
    pub simplex: Simplex,
    pub face: FaceSelector,
    pub point: Point,
    rng: SeededRng,
}

impl Triple {
    pub fn new(geometry: Geometry, n: usize, seed: u64) -> Self {
        let simplex = random_simplex(geometry, n, seed).expect("generator succeeds");
        let mut rng = SeededRng::new(TRIPLE_STREAM + seed);
        let face = random_face(n, &mut rng);
        let point = random_point(geometry, n, 0.0, 2.0, &mut rng);
        Self {
            geometry,
            n,
            seed,
            simplex,
            face,
            point,
            rng,
        }
    }

    fn label(&self) -> String {
        let face: Vec<String> = self
            .face
            .indices()
            .iter()
            .map(|i| (i + 1).to_string())
            .collect();
        format!(
            "{} face {}",
            label(self.geometry, self.n, self.seed),
            face.join(",")
        )
    }
}

pub fn triples() -> impl Iterator<Item = Triple> {
    MODELS
        .into_iter()
        .flat_map(|g| (2..=6).flat_map(move |n| (0..100).map(move |seed| Triple::new(g, n, seed))))
}

/// Closed-form projection against the brute-force oracle.
pub fn projection_correctness() -> Verdict {
    let start = Instant::now();
    let tol = Tolerances::default();
    let (mut compared, mut undefined, mut bad) = (0, 0, 0);
    let (mut dist, mut foot) = (Worst::default(), Worst::default());
    let mut errors = Vec::new();
    for t in triples() {
        let model = t.simplex.model();
        let closed = match project_to_face(&t.simplex, &t.face, &t.point, &tol) {
            Ok(r) => r,
            Err(Error::ProjectionUndefined(_)) => {
                undefined += 1;
                continue;
            }
            Err(e) => {
                errors.push(format!("{}: {e}", t.label()));
                continue;
            }
        };
        let opts = OracleOptions {
            seed: t.seed,
            ..OracleOptions::default()
        };
        match oracle_project(&t.simplex, &t.face, &t.point, &opts) {
            Ok(o) => {
                compared += 1;
                let dd = (o.distance - closed.distance).abs();
                let fd = model
                    .distance(&o.foot, &closed.foot, &tol)
                    .unwrap_or(f64::INFINITY);
                dist.see(dd, || t.label());
                foot.see(fd, || t.label());
                if !(dd <= ORACLE_DISTANCE_TOL && fd <= ORACLE_FOOT_TOL) {
                    bad += 1;
                }
            }
            Err(e) => errors.push(format!("{}: {e}", t.label())),
        }
    }
    let ok = bad == 0 && errors.is_empty();
    let mut detail = format!(
        "{compared} triples compared, {undefined} spherical undefined feet excluded, {bad} out of tolerance; worst distance gap {}, worst foot gap {}",
        dist.show(),
        foot.show()
    );
    if let Some(e) = errors.first() {
        detail += &format!("; {} errors, first: {e}", errors.len());
    }
    verdict(
        3,
        "projection agrees with the oracle",
        start,
        Some(Duration::from_secs(300)),
        ok,
        detail,
    )
}

fn foot_checks(
    simplex: &Simplex,
    face: &FaceSelector,
    p: &Point,
    r: &ProjectionResult,
    membership: &mut Worst,
    orthogonality: &mut Worst,
    at: impl Fn() -> String,
) {
    membership.see(simplex.model().membership_residual(r.foot.coords()), &at);
    orthogonality.see(orthogonality_residual(simplex, face, p, r), &at);
}

/// Every produced foot lies on the manifold and the residual `p - c foot`
/// is orthogonal to the face.
pub fn orthogonality_and_membership() -> Verdict {
    let start = Instant::now();
    let tol = Tolerances::default();
    let (mut feet, mut membership, mut orthogonality) = (0, Worst::default(), Worst::default());
    let mut errors = Vec::new();
    for t in triples() {
        if let Ok(r) = collect(
            project_to_face(&t.simplex, &t.face, &t.point, &tol),
            &mut errors,
            &t,
        ) {
            feet += 1;
            foot_checks(
                &t.simplex,
                &t.face,
                &t.point,
                &r,
                &mut membership,
                &mut orthogonality,
                || t.label(),
            );
        }
        for j in 0..=t.n {
            let facet = FaceSelector::facet(j, t.n).expect("valid facet");
            if let Ok(r) = collect(
                project_to_hyperplane(&t.simplex, j, &t.point, &tol),
                &mut errors,
                &t,
            ) {
                feet += 1;
                foot_checks(
                    &t.simplex,
                    &facet,
                    &t.point,
                    &r,
                    &mut membership,
                    &mut orthogonality,
                    || format!("{} hyperplane {}", label(t.geometry, t.n, t.seed), j + 1),
                );
            }
        }
    }
    let ok = membership.value <= MEMBERSHIP_TOL
        && orthogonality.value <= ORTHOGONALITY_TOL
        && errors.is_empty();
    let mut detail = format!(
        "{feet} feet, worst manifold residual {}, worst orthogonality residual {}",
        membership.show(),
        orthogonality.show()
    );
    if let Some(e) = errors.first() {
        detail += &format!("; {} errors, first: {e}", errors.len());
    }
    verdict(4, "orthogonality and membership", start, None, ok, detail)
}

/// Undefined spherical feet are skipped; any other error is kept.
fn collect<T>(r: kplane_core::Result<T>, errors: &mut Vec<String>, t: &Triple) -> Result<T, ()> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::ProjectionUndefined(_)) => Err(()),
        Err(e) => {
            errors.push(format!("{}: {e}", t.label()));
            Err(())
        }
    }
}

fn gap(a: &ProjectionResult, b: &ProjectionResult) -> f64 {
    (a.foot.as_vector() - b.foot.as_vector())
        .amax()
        .max((a.distance - b.distance).abs())
}

fn paired(
    a: kplane_core::Result<ProjectionResult>,
    b: kplane_core::Result<ProjectionResult>,
) -> kplane_core::Result<Option<f64>> {
    match (a, b) {
        (Ok(a), Ok(b)) => Ok(Some(gap(&a, &b))),
        (Err(Error::ProjectionUndefined(_)), Err(Error::ProjectionUndefined(_))) => Ok(None),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// Specialized paths against the general projection.
pub fn specialization_coherence() -> Verdict {
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut hyperplane = Worst::default();
    let mut vertex = Worst::default();
    let mut alt = Worst::default();
    let mut facet_alt = Worst::default();
    let mut compared = 0;
    let mut errors = Vec::new();
    let mut note =
        |r: kplane_core::Result<Option<f64>>, w: &mut Worst, at: &dyn Fn() -> String| match r {
            Ok(Some(v)) => {
                compared += 1;
                w.see(v, at);
            }
            Ok(None) => {}
            Err(e) => errors.push(format!("{}: {e}", at())),
        };
    for t in triples() {
        let s = &t.simplex;
        let at = || t.label();
        for j in 0..=t.n {
            let facet = FaceSelector::facet(j, t.n).expect("valid facet");
            let pj = s.vertex(j);
            note(
                paired(
                    project_to_face(s, &facet, &t.point, &tol),
                    project_to_hyperplane(s, j, &t.point, &tol),
                ),
                &mut hyperplane,
                &at,
            );
            note(
                paired(project_to_face(s, &facet, pj, &tol), facet_foot(s, j, &tol)),
                &mut vertex,
                &at,
            );
            let fa = altitude(s, &facet, j, &tol)
                .and_then(|a| facet_altitude(s, j, &tol).map(|f| Some((a - f).abs())));
            note(fa, &mut facet_alt, &at);
        }
        for j in t.face.complement(t.n) {
            let pj = s.vertex(j);
            note(
                paired(
                    project_to_face(s, &t.face, pj, &tol),
                    vertex_foot(s, &t.face, j, &tol),
                ),
                &mut vertex,
                &at,
            );
            let a = altitude(s, &t.face, j, &tol)
                .and_then(|a| distance_to_face(s, &t.face, pj, &tol).map(|d| Some((a - d).abs())));
            note(a, &mut alt, &at);
        }
    }
    let worst = [&hyperplane, &vertex, &alt, &facet_alt]
        .iter()
        .map(|w| w.value)
        .fold(0.0, f64::max);
    let ok = worst <= COHERENCE_TOL && errors.is_empty();
    let mut detail = format!(
        "{compared} comparisons; worst hyperplane {}, vertex {}, altitude {}, facet altitude {}",
        hyperplane.show(),
        vertex.show(),
        alt.show(),
        facet_alt.show()
    );
    if let Some(e) = errors.first() {
        detail += &format!("; {} errors, first: {e}", errors.len());
    }
    verdict(5, "specialization coherence", start, None, ok, detail)
}

/// Octant and right-angled triangle values, closed form and oracle.
pub fn known_values() -> Verdict {
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut failures = Vec::new();
    let mut expect = |what: &str, got: kplane_core::Result<f64>, want: f64, within: f64| match got {
        Ok(v) if (v - want).abs() <= within => {}
        Ok(v) => failures.push(format!("{what} = {v} (expected {want})")),
        Err(e) => failures.push(format!("{what}: {e}")),
    };

    let octant = Simplex::new(
        Model::spherical(3),
        vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ],
    )
    .expect("octant is valid");
    for j in 0..3 {
        expect(
            "octant facet altitude",
            facet_altitude(&octant, j, &tol),
            FRAC_PI_2,
            1e-12,
        );
        let facet = FaceSelector::facet(j, 2).expect("valid facet");
        expect(
            "octant altitude",
            altitude(&octant, &facet, j, &tol),
            FRAC_PI_2,
            1e-12,
        );
    }
    let c = 1.0 / 3f64.sqrt();
    let diagonal = Point::new_unchecked(vec![c, c, c]);
    let f12 = FaceSelector::from_one_based(&[1, 2]).expect("valid face");
    let octant_distance = (2.0f64 / 3.0).sqrt().acos();
    expect(
        "octant projection",
        project_to_face(&octant, &f12, &diagonal, &tol).map(|r| r.distance),
        octant_distance,
        1e-12,
    );
    expect(
        "octant oracle",
        oracle_project(&octant, &f12, &diagonal, &OracleOptions::default()).map(|r| r.distance),
        octant_distance,
        ORACLE_DISTANCE_TOL,
    );

    let (ch, sh) = (1f64.cosh(), 1f64.sinh());
    let triangle = Simplex::new(
        Model::hyperbolic(3),
        vec![vec![1.0, 0.0, 0.0], vec![ch, sh, 0.0], vec![ch, 0.0, sh]],
    )
    .expect("triangle is valid");
    expect(
        "triangle altitude",
        altitude(&triangle, &f12, 2, &tol),
        1.0,
        1e-12,
    );
    expect(
        "triangle oracle",
        oracle_project(
            &triangle,
            &f12,
            triangle.vertex(2),
            &OracleOptions::default(),
        )
        .map(|r| r.distance),
        1.0,
        ORACLE_DISTANCE_TOL,
    );

    let ok = failures.is_empty();
    let detail = if ok {
        "octant altitudes pi/2, octant projection arccos(sqrt(2/3)), triangle altitude 1, closed form and oracle".to_string()
    } else {
        failures.join("; ")
    };
    verdict(6, "known values", start, None, ok, detail)
}

/// No sampled point of the plane is closer than the foot.
pub fn minimality() -> Verdict {
    let start = Instant::now();
    let tol = Tolerances::default();
    let (mut feet, mut samples, mut shortfall) = (0, 0, Worst::default());
    for mut t in triples() {
        let Ok(r) = project_to_face(&t.simplex, &t.face, &t.point, &tol) else {
            continue;
        };
        feet += 1;
        let model = t.simplex.model();
        for _ in 0..MINIMALITY_SAMPLES {
            let Some(x) = random_plane_point(&t.simplex, &t.face, &mut t.rng) else {
                continue;
            };
            let d = model.distance(&t.point, &x, &tol).unwrap_or(f64::INFINITY);
            samples += 1;
            shortfall.see((r.distance - d).max(0.0), || t.label());
        }
    }
    let ok = shortfall.value <= MINIMALITY_SLACK && samples > 0;
    let detail = format!(
        "{feet} feet, {samples} plane samples, worst shortfall {}",
        shortfall.show()
    );
    verdict(7, "minimality", start, None, ok, detail)
}

/// `check --random hyperbolic 4 42 20` exits 0; a vertex moved by 1e-3 makes
/// `validate` exit 1 with OffManifold.
pub fn cli_contract() -> Verdict {
    let start = Instant::now();
    let check = kplane_cli::execute(["kplane", "check", "--random", "hyperbolic", "4", "42", "20"]);
    let check_ok = check.code == 0;

    let path = std::env::temp_dir().join(format!("kplane-acceptance-{}.txt", std::process::id()));
    let doc = "model spherical\nvertex 1.001 0 0\nvertex 0 1 0\nvertex 0 0 1\n";
    let corrupt = std::fs::write(&path, doc).map(|()| {
        let out = kplane_cli::execute([
            "kplane",
            "validate",
            path.to_str().expect("utf-8 temp path"),
        ]);
        let _ = std::fs::remove_file(&path);
        out
    });
    let corrupt_ok = matches!(&corrupt, Ok(o) if o.code == 1 && o.stdout.lines().any(|l| l == "status OffManifold"));

    let check_detail = if check_ok {
        "check --random hyperbolic 4 42 20 exits 0".to_string()
    } else {
        let failed: Vec<&str> = check
            .stdout
            .lines()
            .filter(|l| l.starts_with("failures"))
            .collect();
        format!(
            "check --random hyperbolic 4 42 20 exits {} ({})",
            check.code,
            if failed.is_empty() {
                check.stderr.trim().to_string()
            } else {
                failed.join("; ")
            }
        )
    };
    let corrupt_detail = match &corrupt {
        Ok(o) => format!(
            "corrupted validate exits {}{}",
            o.code,
            if corrupt_ok { " with OffManifold" } else { "" }
        ),
        Err(e) => format!("could not write temp file: {e}"),
    };
    verdict(
        8,
        "command line contract",
        start,
        None,
        check_ok && corrupt_ok,
        format!("{check_detail}; {corrupt_detail}"),
    )
}

pub fn all() -> Vec<Verdict> {
    vec![
        inverse_scaling_identities(),
        block_identities(),
        projection_correctness(),
        orthogonality_and_membership(),
        specialization_coherence(),
        known_values(),
        minimality(),
        cli_contract(),
    ]
}
