//! The invariant suite: every identity between the edge matrix, the Gram
//! matrix, the normals and the projection paths, evaluated on one simplex.
//!
//! Each invariant reports its worst residual over everything it looked at.

use nalgebra::DMatrix;

use crate::error::Error;
use crate::forms::{Point, Tolerances};
use crate::linalg::{
    bordered_minor, det, inverse, max_abs, max_abs_diff, schur_complement, select,
};
use crate::oracle::{oracle_project, random_face, random_plane_point, random_point, OracleOptions};
use crate::projection::{
    altitude, complement_gram_inverse_by_minors, distance_to_face, facet_altitude, facet_foot,
    orthogonality_residual, project_to_face, project_to_hyperplane, span_residual, vertex_foot,
    FaceSelector, ProjectionResult,
};
use crate::rng::SeededRng;
use crate::simplex::{cofactor_normals, verify_lemma1, verify_lemma2, Simplex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    /// Matrix identities (inverse scaling, block inverses, Schur paths, normals).
    pub identity_tol: f64,
    /// Agreement between the specialized and general projection paths.
    pub coherence_tol: f64,
    pub oracle_distance_tol: f64,
    pub oracle_foot_tol: f64,
    pub orthogonality_tol: f64,
    pub membership_tol: f64,
    pub minimality_slack: f64,
    pub minimality_samples: usize,
    /// Random (face, point) pairs drawn per simplex.
    pub samples: usize,
    /// Query points are drawn at hyperbolic radius up to this value.
    pub max_query_radius: f64,
    pub seed: u64,
    pub oracle: OracleOptions,
    /// Skip the oracle comparison entirely.
    pub skip_oracle: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            identity_tol: 1e-8,
            coherence_tol: 1e-9,
            oracle_distance_tol: 1e-6,
            oracle_foot_tol: 1e-5,
            orthogonality_tol: 1e-8,
            membership_tol: 1e-9,
            minimality_slack: 1e-9,
            minimality_samples: 100,
            samples: 3,
            max_query_radius: 2.0,
            seed: 0,
            oracle: OracleOptions::default(),
            skip_oracle: false,
        }
    }
}

impl CheckOptions {
    /// Multiplies every tolerance by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.identity_tol *= factor;
        self.coherence_tol *= factor;
        self.oracle_distance_tol *= factor;
        self.oracle_foot_tol *= factor;
        self.orthogonality_tol *= factor;
        self.membership_tol *= factor;
        self.minimality_slack *= factor;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantResult {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    /// Number of individual comparisons folded into `residual`.
    pub evaluated: usize,
    /// First error that prevented an evaluation, if any.
    pub error: Option<String>,
}

impl InvariantResult {
    pub fn pass(&self) -> bool {
        self.error.is_none() && self.residual <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub invariants: Vec<InvariantResult>,
    /// Sampled spherical queries whose foot is undefined (distance pi/2).
    pub undefined_feet: usize,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.invariants.iter().all(InvariantResult::pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InvariantResult> {
        self.invariants.iter().filter(|r| !r.pass())
    }

    pub fn get(&self, name: &str) -> Option<&InvariantResult> {
        self.invariants.iter().find(|r| r.name == name)
    }

    /// Folds `other` into `self`, keeping the worst residual per invariant.
    pub fn merge(&mut self, other: &CheckReport) {
        for r in &other.invariants {
            match self.invariants.iter_mut().find(|x| x.name == r.name) {
                Some(x) => {
                    x.residual = x.residual.max(r.residual);
                    x.evaluated += r.evaluated;
                    if x.error.is_none() {
                        x.error = r.error.clone();
                    }
                }
                None => self.invariants.push(r.clone()),
            }
        }
        self.undefined_feet += other.undefined_feet;
    }
}

pub const LEMMA1: &str = "lemma1";
pub const LEMMA2: &str = "lemma2";
pub const SCHUR_PATH: &str = "schur_path";
pub const VERTEX_NORMAL_DUALITY: &str = "vertex_normal_duality";
pub const GRAM_MINOR_IDENTITY: &str = "gram_minor_identity";
pub const COFACTOR_NORMALS: &str = "cofactor_normals";
pub const GRAM_INVERSE_BY_MINORS: &str = "gram_inverse_by_minors";
pub const ORACLE_DISTANCE: &str = "oracle_distance";
pub const ORACLE_FOOT: &str = "oracle_foot";
pub const MEMBERSHIP: &str = "membership";
pub const ORTHOGONALITY: &str = "orthogonality";
pub const FOOT_IN_PLANE: &str = "foot_in_plane";
pub const MINIMALITY: &str = "minimality";
pub const MINOR_DISTANCE: &str = "minor_distance";
pub const HYPERPLANE_COHERENCE: &str = "hyperplane_coherence";
pub const VERTEX_COHERENCE: &str = "vertex_coherence";
pub const ALTITUDE_COHERENCE: &str = "altitude_coherence";
pub const FACET_ALTITUDE_COHERENCE: &str = "facet_altitude_coherence";

struct Collector {
    report: CheckReport,
}

impl Collector {
    fn slot(&mut self, name: &'static str, tolerance: f64) -> &mut InvariantResult {
        if let Some(i) = self.report.invariants.iter().position(|r| r.name == name) {
            return &mut self.report.invariants[i];
        }
        self.report.invariants.push(InvariantResult {
            name,
            residual: 0.0,
            tolerance,
            evaluated: 0,
            error: None,
        });
        self.report.invariants.last_mut().expect("just pushed")
    }

    fn record(&mut self, name: &'static str, tolerance: f64, residual: f64) {
        let slot = self.slot(name, tolerance);
        // NaN must fail, so it is kept rather than lost in max()
        slot.residual = if residual.is_nan() {
            f64::NAN
        } else {
            slot.residual.max(residual)
        };
        slot.evaluated += 1;
    }

    fn fail(&mut self, name: &'static str, tolerance: f64, err: &Error) {
        let slot = self.slot(name, tolerance);
        slot.residual = f64::INFINITY;
        slot.evaluated += 1;
        if slot.error.is_none() {
            slot.error = Some(format!("{}: {err}", err.code()));
        }
    }

    fn outcome(&mut self, name: &'static str, tolerance: f64, residual: Result<f64, Error>) {
        match residual {
            Ok(r) => self.record(name, tolerance, r),
            Err(e) => self.fail(name, tolerance, &e),
        }
    }
}

fn feet_gap(a: &ProjectionResult, b: &ProjectionResult) -> f64 {
    (a.foot.as_vector() - b.foot.as_vector())
        .amax()
        .max((a.distance - b.distance).abs())
}

/// Runs the matrix identities and, on sampled faces and points, every
/// projection invariant.
pub fn run_checks(simplex: &Simplex, opts: &CheckOptions) -> CheckReport {
    let mut c = Collector {
        report: CheckReport::default(),
    };
    matrix_identities(simplex, opts, &mut c);

    let n = simplex.dim();
    let tol = *simplex.tolerances();
    let mut rng = SeededRng::new(opts.seed);
    for _ in 0..opts.samples {
        let face = random_face(n, &mut rng);
        let p = random_point(simplex.geometry(), n, 0.0, opts.max_query_radius, &mut rng);
        projection_invariants(simplex, &face, &p, opts, &tol, &mut rng, &mut c);
    }
    specializations(simplex, opts, &tol, &mut rng, &mut c);
    c.report
}

fn matrix_identities(simplex: &Simplex, opts: &CheckOptions, c: &mut Collector) {
    let tol = opts.identity_tol;
    let n = simplex.dim();
    let eps = simplex.geometry().curvature();

    c.outcome(
        LEMMA1,
        tol,
        verify_lemma1(simplex, tol).map(|r| r.max_residual()),
    );
    for k in 0..n {
        c.outcome(
            LEMMA2,
            tol,
            verify_lemma2(simplex, k, tol).map(|r| r.max_residual()),
        );
    }

    let m = simplex.edge_matrix();
    for k in 0..n {
        let face: Vec<usize> = (0..=k).collect();
        let rest: Vec<usize> = (k + 1..=n).collect();
        let lead = det(&select(m, &face, &face));
        let residual = schur_complement(m, &rest, 0.0).map(|schur| {
            let mut worst: f64 = 0.0;
            for &s in &rest {
                for &t in &rest {
                    let ratio = bordered_minor(m, &face, s, t) / lead;
                    worst = worst.max((ratio - schur.get(s, t).expect("in block")).abs());
                }
            }
            worst
        });
        c.outcome(SCHUR_PATH, tol, residual);
    }

    let det_m = simplex.det_edge();
    let mut duality: f64 = 0.0;
    for i in 0..=n {
        let e = simplex.normal(i);
        duality = duality.max((simplex.form(e.as_slice(), e.as_slice()) - 1.0).abs());
        for j in 0..=n {
            let pair = simplex.form(e.as_slice(), simplex.vertex(j).coords());
            let expected = if i == j {
                -(det_m / simplex.edge_diagonal_minor(i)).abs().sqrt()
            } else {
                0.0
            };
            duality = duality.max((pair - expected).abs());
        }
    }
    c.record(VERTEX_NORMAL_DUALITY, tol, duality);

    let det_g = simplex.det_gram();
    for j in 0..=n {
        let g_jj = simplex.gram_diagonal_minor(j);
        let predicted = eps * det_g * simplex.edge_diagonal_minor(j) / det_m;
        c.record(
            GRAM_MINOR_IDENTITY,
            tol,
            (g_jj - predicted).abs() / g_jj.abs().max(1.0),
        );
    }

    c.outcome(
        COFACTOR_NORMALS,
        tol,
        cofactor_normals(simplex).map(|normals| {
            normals
                .iter()
                .zip(simplex.normals())
                .map(|(a, b)| (a - b).amax())
                .fold(0.0, f64::max)
        }),
    );
}

fn gram_inverse_residual(simplex: &Simplex, face: &FaceSelector) -> Result<f64, Error> {
    let complement = face.complement(simplex.dim());
    let block: DMatrix<f64> = select(simplex.gram_matrix(), &complement, &complement);
    let direct = inverse(&block).ok_or_else(|| Error::SingularBlock(det(&block)))?;
    let by_minors = complement_gram_inverse_by_minors(simplex, face);
    Ok(max_abs_diff(&direct, &by_minors) / max_abs(&direct).max(1.0))
}

#[allow(clippy::too_many_arguments)]
fn projection_invariants(
    simplex: &Simplex,
    face: &FaceSelector,
    p: &Point,
    opts: &CheckOptions,
    tol: &Tolerances,
    rng: &mut SeededRng,
    c: &mut Collector,
) {
    let model = simplex.model();
    if face.k() < simplex.dim() {
        c.outcome(
            GRAM_INVERSE_BY_MINORS,
            opts.identity_tol,
            gram_inverse_residual(simplex, face),
        );
    }

    let by_minors = distance_to_face(simplex, face, p, tol);
    let closed = match project_to_face(simplex, face, p, tol) {
        Ok(r) => r,
        Err(Error::ProjectionUndefined(_)) => {
            c.report.undefined_feet += 1;
            c.outcome(
                MINOR_DISTANCE,
                opts.coherence_tol,
                by_minors.map(|d| (d - std::f64::consts::FRAC_PI_2).abs()),
            );
            return;
        }
        Err(e) => {
            c.fail(MEMBERSHIP, opts.membership_tol, &e);
            return;
        }
    };
    c.outcome(
        MINOR_DISTANCE,
        opts.coherence_tol,
        by_minors.map(|d| (d - closed.distance).abs()),
    );
    c.record(
        MEMBERSHIP,
        opts.membership_tol,
        model.membership_residual(closed.foot.coords()),
    );
    c.record(
        ORTHOGONALITY,
        opts.orthogonality_tol,
        orthogonality_residual(simplex, face, p, &closed),
    );
    c.record(
        FOOT_IN_PLANE,
        opts.orthogonality_tol,
        span_residual(simplex, face, closed.foot.coords()),
    );

    let mut shortfall: f64 = 0.0;
    for _ in 0..opts.minimality_samples {
        let Some(x) = random_plane_point(simplex, face, rng) else {
            continue;
        };
        if let Ok(d) = model.distance(p, &x, tol) {
            shortfall = shortfall.max(closed.distance - d);
        }
    }
    c.record(MINIMALITY, opts.minimality_slack, shortfall.max(0.0));

    if !opts.skip_oracle {
        match oracle_project(simplex, face, p, &opts.oracle) {
            Ok(o) => {
                c.record(
                    ORACLE_DISTANCE,
                    opts.oracle_distance_tol,
                    (o.distance - closed.distance).abs(),
                );
                c.outcome(
                    ORACLE_FOOT,
                    opts.oracle_foot_tol,
                    model.distance(&o.foot, &closed.foot, tol),
                );
            }
            Err(e) => {
                c.fail(ORACLE_DISTANCE, opts.oracle_distance_tol, &e);
                c.fail(ORACLE_FOOT, opts.oracle_foot_tol, &e);
            }
        }
    }
}

fn specializations(
    simplex: &Simplex,
    opts: &CheckOptions,
    tol: &Tolerances,
    rng: &mut SeededRng,
    c: &mut Collector,
) {
    let n = simplex.dim();
    let ct = opts.coherence_tol;
    let p = random_point(simplex.geometry(), n, 0.0, opts.max_query_radius, rng);

    for j in 0..=n {
        let facet = FaceSelector::facet(j, n).expect("valid facet");
        match (
            project_to_face(simplex, &facet, &p, tol),
            project_to_hyperplane(simplex, j, &p, tol),
        ) {
            (Ok(a), Ok(b)) => c.record(HYPERPLANE_COHERENCE, ct, feet_gap(&a, &b)),
            (Err(Error::ProjectionUndefined(_)), Err(Error::ProjectionUndefined(_))) => {}
            (Err(e), _) | (_, Err(e)) => c.fail(HYPERPLANE_COHERENCE, ct, &e),
        }

        let alt = altitude(simplex, &facet, j, tol);
        let fa = facet_altitude(simplex, j, tol);
        c.outcome(
            FACET_ALTITUDE_COHERENCE,
            ct,
            alt.as_ref()
                .map_err(Clone::clone)
                .and_then(|a| fa.map(|f| (a - f).abs())),
        );
        match (
            project_to_face(simplex, &facet, simplex.vertex(j), tol),
            facet_foot(simplex, j, tol),
        ) {
            (Ok(a), Ok(b)) => c.record(VERTEX_COHERENCE, ct, feet_gap(&a, &b)),
            (Err(Error::ProjectionUndefined(_)), Err(Error::ProjectionUndefined(_))) => {}
            (Err(e), _) | (_, Err(e)) => c.fail(VERTEX_COHERENCE, ct, &e),
        }
    }

    // every complement vertex of a few random lower-dimensional faces
    for _ in 0..opts.samples.max(1) {
        let face = random_face(n, rng);
        for j in face.complement(n) {
            let pj = simplex.vertex(j);
            match (
                project_to_face(simplex, &face, pj, tol),
                vertex_foot(simplex, &face, j, tol),
            ) {
                (Ok(a), Ok(b)) => c.record(VERTEX_COHERENCE, ct, feet_gap(&a, &b)),
                (Err(Error::ProjectionUndefined(_)), Err(Error::ProjectionUndefined(_))) => {}
                (Err(e), _) | (_, Err(e)) => c.fail(VERTEX_COHERENCE, ct, &e),
            }
            let residual = altitude(simplex, &face, j, tol)
                .and_then(|a| distance_to_face(simplex, &face, pj, tol).map(|d| (a - d).abs()));
            c.outcome(ALTITUDE_COHERENCE, ct, residual);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Model;

    #[test]
    fn octant_passes_with_zero_residuals() {
        let s = Simplex::new(
            Model::spherical(3),
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        )
        .unwrap();
        let report = run_checks(&s, &CheckOptions::default());
        assert!(report.passed(), "{report:#?}");
        for name in [
            LEMMA1,
            LEMMA2,
            SCHUR_PATH,
            VERTEX_NORMAL_DUALITY,
            GRAM_MINOR_IDENTITY,
        ] {
            assert!(report.get(name).unwrap().residual < 1e-15, "{name}");
        }
    }

    #[test]
    fn merge_keeps_worst() {
        let mut a = CheckReport::default();
        let mut c = Collector {
            report: CheckReport::default(),
        };
        c.record(LEMMA1, 1.0, 0.5);
        a.merge(&c.report);
        let mut c = Collector {
            report: CheckReport::default(),
        };
        c.record(LEMMA1, 1.0, 2.0);
        a.merge(&c.report);
        let r = a.get(LEMMA1).unwrap();
        assert_eq!((r.residual, r.evaluated), (2.0, 2));
        assert!(!a.passed());
    }

    #[test]
    fn nan_residual_fails() {
        let mut c = Collector {
            report: CheckReport::default(),
        };
        c.record(LEMMA1, 1.0, f64::NAN);
        assert!(!c.report.passed());
    }
}
