//! Orthogonal projection onto k-planes spanned by faces of a simplex.
//!
//! For a face with vertex set `A` and complement `B`, the normals `e_s`,
//! `s in B`, span the orthogonal complement of the face's linear span `W`.
//! A point `p` is moved along that complement to
//!
//! ```text
//! p' = p + sum_s lambda_s e_s,   G[B,B] lambda = -[<p, e_t>]_{t in B}
//! ```
//!
//! which lies in `W`, and the foot is `p'` rescaled onto the manifold. With
//! `q = -lambda . [<p,e_t>] >= 0` the foot satisfies `<p', p'> = eps - q`, so
//! `sinh^2 xi = q` (hyperbolic) and `sin^2 theta = q` (spherical).
//!
//! The same `q` is also available in closed form from minors of `M`:
//! `q = eps * sum_{s,t} sqrt(M_ss M_tt) m_t^s <p,e_s><p,e_t> / (det M m^{k+1})`
//! with `m^{k+1} = det M[A,A]` and bordered minors `m_t^s`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forms::{Geometry, Point, Tolerances};
use crate::linalg::{bordered_minor, det, schur_complement, select};
use crate::simplex::Simplex;

/// The vertex set of a k-face, `1 <= k + 1 <= n`. Indices are 0-based and sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FaceSelector {
    indices: Vec<usize>,
}

impl FaceSelector {
    /// Sorts `indices`; rejects duplicates and empty faces.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::BadFace("a face needs at least one vertex".into()));
        }
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::BadFace(format!("vertex {} repeated", w[0] + 1)));
        }
        Ok(Self { indices })
    }

    /// From 1-based indices, as used on the command line.
    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::BadFace("vertex indices start at 1".into()));
        }
        Self::new(indices.iter().map(|i| i - 1).collect())
    }

    /// The facet opposite vertex `j` of an n-simplex.
    pub fn facet(j: usize, n: usize) -> Result<Self> {
        if j > n {
            return Err(Error::BadFace(format!("vertex {} out of range", j + 1)));
        }
        Self::new((0..=n).filter(|&i| i != j).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Dimension `k` of the spanned plane.
    pub fn k(&self) -> usize {
        self.indices.len() - 1
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Vertex indices of an n-simplex not in the face.
    pub fn complement(&self, n: usize) -> Vec<usize> {
        (0..=n).filter(|i| !self.contains(*i)).collect()
    }

    pub fn check_for(&self, simplex: &Simplex) -> Result<()> {
        let n = simplex.dim();
        if let Some(&bad) = self.indices.iter().find(|&&i| i > n) {
            return Err(Error::BadFace(format!(
                "vertex {} out of range for a simplex with {} vertices",
                bad + 1,
                n + 1
            )));
        }
        if self.indices.len() > n {
            return Err(Error::BadFace(format!(
                "a face of an {n}-simplex has at most {n} vertices, got {}",
                self.indices.len()
            )));
        }
        Ok(())
    }
}

/// Output of every projection routine.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    /// The perpendicular foot on the plane.
    pub foot: Point,
    /// Geodesic distance from the point to the plane.
    pub distance: f64,
    /// Coefficients of the move along the complement normals, keyed by vertex index.
    pub lambda: BTreeMap<usize, f64>,
    /// The unnormalized foot `p + sum lambda_s e_s`.
    pub pre_foot: DVector<f64>,
}

/// Distance from `q = sinh^2 xi` or `q = sin^2 theta`.
///
/// Written without `acosh`/`acos` so that small distances keep full precision.
pub fn distance_from_offset(geometry: Geometry, q: f64) -> f64 {
    let q = q.max(0.0);
    match geometry {
        Geometry::Hyperbolic => q.sqrt().asinh(),
        Geometry::Spherical => {
            let q = q.min(1.0);
            q.sqrt().atan2((1.0 - q).sqrt())
        }
    }
}

fn normal_pairings(simplex: &Simplex, p: &Point, set: &[usize]) -> Vec<f64> {
    set.iter()
        .map(|&t| simplex.form(p.coords(), simplex.normal(t).as_slice()))
        .collect()
}

fn check_query(simplex: &Simplex, face: &FaceSelector, p: &Point, tol: &Tolerances) -> Result<()> {
    face.check_for(simplex)?;
    simplex.model().check_point(p.coords(), 0, tol)
}

/// Orthogonal projection of `p` onto the plane spanned by `face`.
pub fn project_to_face(
    simplex: &Simplex,
    face: &FaceSelector,
    p: &Point,
    tol: &Tolerances,
) -> Result<ProjectionResult> {
    check_query(simplex, face, p, tol)?;
    let complement = face.complement(simplex.dim());
    let pairings = DVector::from_vec(normal_pairings(simplex, p, &complement));
    let gram_block = select(simplex.gram_matrix(), &complement, &complement);
    let lambda = gram_block
        .lu()
        .solve(&(-&pairings))
        .ok_or_else(|| Error::DegenerateSimplex("complement Gram block is singular".into()))?;

    let mut pre_foot = p.as_vector().clone();
    for (&s, &l) in complement.iter().zip(lambda.iter()) {
        pre_foot += simplex.normal(s) * l;
    }
    let q = -lambda.dot(&pairings);
    finish(
        simplex,
        pre_foot,
        q,
        complement.into_iter().zip(lambda.iter().copied()).collect(),
        tol,
    )
}

// Shared tail of every projection path. The foot is `pre_foot` rescaled by
// its own length, which stays accurate near the spherical pi/2 singularity
// where `1 - q` cancels; the spherical distance uses that length for cos theta.
fn finish(
    simplex: &Simplex,
    pre_foot: DVector<f64>,
    q: f64,
    lambda: BTreeMap<usize, f64>,
    tol: &Tolerances,
) -> Result<ProjectionResult> {
    let geometry = simplex.geometry();
    if geometry == Geometry::Spherical && 1.0 - q <= tol.norm {
        return Err(Error::ProjectionUndefined(1.0 - q));
    }
    let foot = simplex
        .model()
        .normalize_to_manifold(pre_foot.as_slice(), tol)
        .map_err(|e| match e {
            Error::NotNormalizable(v) => Error::ProjectionUndefined(v),
            other => other,
        })?;
    let q = q.max(0.0);
    let distance = match geometry {
        Geometry::Hyperbolic => q.sqrt().asinh(),
        Geometry::Spherical => q.sqrt().atan2(pre_foot.norm()),
    };
    Ok(ProjectionResult {
        foot,
        distance,
        lambda,
        pre_foot,
    })
}

/// `m^{k+1}`: the principal minor on the face's vertices.
pub fn face_minor(simplex: &Simplex, face: &FaceSelector) -> f64 {
    det(&select(
        simplex.edge_matrix(),
        face.indices(),
        face.indices(),
    ))
}

/// `m_t^s`: the face block of `M` bordered by row `s` and column `t`.
pub fn face_bordered_minor(simplex: &Simplex, face: &FaceSelector, s: usize, t: usize) -> f64 {
    bordered_minor(simplex.edge_matrix(), face.indices(), s, t)
}

/// `q` from minors of the edge matrix and the pairings `<p, e_t>`.
fn offset_by_minors(simplex: &Simplex, face: &FaceSelector, p: &Point) -> f64 {
    let complement = face.complement(simplex.dim());
    let pairings = normal_pairings(simplex, p, &complement);
    let lead = face_minor(simplex, face);
    let det_m = simplex.det_edge();
    let diag: Vec<f64> = complement
        .iter()
        .map(|&s| simplex.edge_diagonal_minor(s))
        .collect();
    let mut sum = 0.0;
    for (a, &s) in complement.iter().enumerate() {
        for (b, &t) in complement.iter().enumerate() {
            let bordered = face_bordered_minor(simplex, face, s, t);
            sum += (diag[a] * diag[b]).abs().sqrt() * bordered * pairings[a] * pairings[b];
        }
    }
    simplex.geometry().curvature() * sum / (det_m * lead)
}

/// Distance from `p` to the face's plane, evaluated from minors without forming the foot.
///
/// In the spherical case a point at distance `pi/2` (where the foot is not
/// unique) yields exactly `pi/2`.
pub fn distance_to_face(
    simplex: &Simplex,
    face: &FaceSelector,
    p: &Point,
    tol: &Tolerances,
) -> Result<f64> {
    check_query(simplex, face, p, tol)?;
    let q = offset_by_minors(simplex, face, p);
    Ok(offset_to_distance(simplex.geometry(), q, tol))
}

fn offset_to_distance(geometry: Geometry, q: f64, tol: &Tolerances) -> f64 {
    if geometry == Geometry::Spherical && 1.0 - q <= tol.norm {
        FRAC_PI_2
    } else {
        distance_from_offset(geometry, q)
    }
}

/// Projection onto the facet hyperplane opposite vertex `j`:
/// `(p - <p,e_j> e_j) / sqrt(1 - eps <p,e_j>^2)`.
pub fn project_to_hyperplane(
    simplex: &Simplex,
    j: usize,
    p: &Point,
    tol: &Tolerances,
) -> Result<ProjectionResult> {
    let face = FaceSelector::facet(j, simplex.dim())?;
    check_query(simplex, &face, p, tol)?;
    let e = simplex.normal(j);
    let v = simplex.form(p.coords(), e.as_slice());
    let pre_foot = p.as_vector() - e * v;
    finish(simplex, pre_foot, v * v, BTreeMap::from([(j, -v)]), tol)
}

fn check_vertex(simplex: &Simplex, face: &FaceSelector, j: usize) -> Result<()> {
    face.check_for(simplex)?;
    if j > simplex.dim() {
        return Err(Error::BadFace(format!("vertex {} out of range", j + 1)));
    }
    if face.contains(j) {
        return Err(Error::BadFace(format!(
            "vertex {} belongs to the face",
            j + 1
        )));
    }
    Ok(())
}

/// Perpendicular foot from vertex `j` onto the face, from bordered minors:
/// `p_j' = p_j + sum_s sqrt|M_ss / det M| (m_j^s / m^{k+1}) e_s` and
/// `<p_j', p_j'> = eps - m_j^j / m^{k+1}`.
pub fn vertex_foot(
    simplex: &Simplex,
    face: &FaceSelector,
    j: usize,
    tol: &Tolerances,
) -> Result<ProjectionResult> {
    check_vertex(simplex, face, j)?;
    let complement = face.complement(simplex.dim());
    let lead = face_minor(simplex, face);
    let det_m = simplex.det_edge();
    let mut pre_foot = simplex.vertex(j).as_vector().clone();
    let mut lambda = BTreeMap::new();
    for &s in &complement {
        let scale = (simplex.edge_diagonal_minor(s) / det_m).abs().sqrt();
        let l = scale * face_bordered_minor(simplex, face, j, s) / lead;
        pre_foot += simplex.normal(s) * l;
        lambda.insert(s, l);
    }
    let ratio = face_bordered_minor(simplex, face, j, j) / lead;
    finish(simplex, pre_foot, ratio, lambda, tol)
}

/// Facet case of [`vertex_foot`]: `(p_j + sqrt(det M / M_jj) e_j) / sqrt(1 - eps det M / M_jj)`.
pub fn facet_foot(simplex: &Simplex, j: usize, tol: &Tolerances) -> Result<ProjectionResult> {
    FaceSelector::facet(j, simplex.dim())?;
    let ratio = simplex.det_edge() / simplex.edge_diagonal_minor(j);
    let step = ratio.abs().sqrt();
    let pre_foot = simplex.vertex(j).as_vector() + simplex.normal(j) * step;
    finish(simplex, pre_foot, ratio, BTreeMap::from([(j, step)]), tol)
}

/// Distance from vertex `j` to the face's plane, from the diagonal of the
/// Schur complement of `M[A,A]` in `M`.
///
/// Spherical vertices at distance `pi/2` return `pi/2`.
pub fn altitude(simplex: &Simplex, face: &FaceSelector, j: usize, tol: &Tolerances) -> Result<f64> {
    check_vertex(simplex, face, j)?;
    let complement = face.complement(simplex.dim());
    // face blocks of a valid simplex are nonsingular, so no threshold here
    let schur = schur_complement(simplex.edge_matrix(), &complement, 0.0)
        .map_err(|e| Error::DegenerateSimplex(e.to_string()))?;
    let diag = schur.get(j, j).expect("j is in the complement");
    Ok(offset_to_distance(simplex.geometry(), diag, tol))
}

/// Altitude from vertex `j` to its opposite facet: `cosh xi = sqrt(1 + det M / M_jj)`
/// or `cos theta = sqrt(1 - det M / M_jj)`.
pub fn facet_altitude(simplex: &Simplex, j: usize, tol: &Tolerances) -> Result<f64> {
    FaceSelector::facet(j, simplex.dim())?;
    let ratio = simplex.det_edge() / simplex.edge_diagonal_minor(j);
    Ok(offset_to_distance(simplex.geometry(), ratio, tol))
}

/// `(G[B,B])^{-1}` from minors: entries `sqrt(M_ss M_tt) m_t^s / (eps det M m^{k+1})`.
pub fn complement_gram_inverse_by_minors(simplex: &Simplex, face: &FaceSelector) -> DMatrix<f64> {
    let complement = face.complement(simplex.dim());
    let eps = simplex.geometry().curvature();
    let lead = face_minor(simplex, face);
    let det_m = simplex.det_edge();
    let diag: Vec<f64> = complement
        .iter()
        .map(|&s| simplex.edge_diagonal_minor(s))
        .collect();
    DMatrix::from_fn(complement.len(), complement.len(), |a, b| {
        (diag[a] * diag[b]).abs().sqrt()
            * face_bordered_minor(simplex, face, complement[a], complement[b])
            / (eps * det_m * lead)
    })
}

/// Euclidean least-squares residual of `x` against the span of the face's vertices.
pub fn span_residual(simplex: &Simplex, face: &FaceSelector, x: &[f64]) -> f64 {
    let ambient = simplex.dim() + 1;
    let basis = DMatrix::from_fn(ambient, face.indices().len(), |r, c| {
        simplex.vertex(face.indices()[c]).coords()[r]
    });
    let target = DVector::from_column_slice(x);
    let svd = basis.clone().svd(true, true);
    match svd.solve(&target, 1e-14) {
        Ok(coef) => (basis * coef - target).norm(),
        Err(_) => f64::INFINITY,
    }
}

/// `max_i |<p - c sigma, p_i>|` over face vertices, with `c = cosh xi` or `cos theta`.
pub fn orthogonality_residual(
    simplex: &Simplex,
    face: &FaceSelector,
    p: &Point,
    result: &ProjectionResult,
) -> f64 {
    let c = match simplex.geometry() {
        Geometry::Hyperbolic => result.distance.cosh(),
        Geometry::Spherical => result.distance.cos(),
    };
    let r = p.as_vector() - result.foot.as_vector() * c;
    face.indices()
        .iter()
        .map(|&i| simplex.form(r.as_slice(), simplex.vertex(i).coords()).abs())
        .fold(0.0, f64::max)
}
