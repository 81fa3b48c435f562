//! Simplices in hyperbolic or spherical space and their edge/Gram algebra.
//!
//! For vertices `p_1..p_{n+1}` the edge matrix is `M = [<p_i, p_j>]` and the
//! Gram matrix is `G = [<e_i, e_j>]`, where `e_i` is the unit outer normal of
//! the facet opposite `p_i`. The two are dual: with the diagonal scaling
//! `T = diag(sqrt|M_ii / det M|)` (where `M_ii` is the `i`-th principal
//! minor), `M^{-1} = T G T` and `G^{-1} = T M T`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forms::{Geometry, Model, Point, Tolerances};
use crate::linalg::{self, det, max_abs, max_abs_diff, schur_complement, select, MinorSpec};

/// A validated, immutable n-simplex with eagerly computed edge matrix,
/// Gram matrix and outer normals.
#[derive(Debug, Clone)]
pub struct Simplex {
    model: Model,
    vertices: Vec<Point>,
    edge: DMatrix<f64>,
    gram: DMatrix<f64>,
    normals: Vec<DVector<f64>>,
    det_edge: f64,
    tol: Tolerances,
}

impl Simplex {
    /// Builds and validates a simplex with the default tolerances.
    pub fn new(model: Model, vertices: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerances(model, vertices, Tolerances::default())
    }

    pub fn with_tolerances(model: Model, vertices: Vec<Vec<f64>>, tol: Tolerances) -> Result<Self> {
        let size = model.ambient_dim();
        if vertices.len() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                found: vertices.len(),
            });
        }
        for (i, v) in vertices.iter().enumerate() {
            model.check_point(v, i, &tol)?;
        }
        let vertices: Vec<Point> = vertices.into_iter().map(Point::new_unchecked).collect();

        let edge = DMatrix::from_fn(size, size, |i, j| {
            model.form(vertices[i].coords(), vertices[j].coords())
        });
        if model.geometry() == Geometry::Hyperbolic {
            for i in 0..size {
                for j in i + 1..size {
                    if !(edge[(i, j)] < -1.0) {
                        return Err(Error::DegenerateSimplex(format!(
                            "vertices {} and {} coincide (<p_i,p_j> = {})",
                            i + 1,
                            j + 1,
                            edge[(i, j)]
                        )));
                    }
                }
            }
        }
        let det_edge = det(&edge);
        let scale = max_abs(&edge);
        if !(det_edge.abs() > tol.degenerate * scale.powi(size as i32)) {
            return Err(Error::DegenerateSimplex(format!(
                "det M = {det_edge:e} is below the nondegeneracy threshold"
            )));
        }

        let normals = solve_normals(&model, &vertices)?;
        let gram = DMatrix::from_fn(size, size, |i, j| {
            model.form(normals[i].as_slice(), normals[j].as_slice())
        });

        Ok(Self {
            model,
            vertices,
            edge,
            gram,
            normals,
            det_edge,
            tol,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn geometry(&self) -> Geometry {
        self.model.geometry()
    }

    /// Dimension `n`; the simplex has `n + 1` vertices.
    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Point {
        &self.vertices[i]
    }

    pub fn edge_matrix(&self) -> &DMatrix<f64> {
        &self.edge
    }

    pub fn gram_matrix(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Unit outer normals `e_1..e_{n+1}`.
    pub fn normals(&self) -> &[DVector<f64>] {
        &self.normals
    }

    pub fn normal(&self, i: usize) -> &DVector<f64> {
        &self.normals[i]
    }

    /// The larger rounding floor of `M` and `G`; see [`linalg::rounding_floor`].
    pub fn rounding_floor(&self) -> f64 {
        linalg::rounding_floor(&self.edge).max(linalg::rounding_floor(&self.gram))
    }

    pub fn det_edge(&self) -> f64 {
        self.det_edge
    }

    pub fn det_gram(&self) -> f64 {
        det(&self.gram)
    }

    /// `M_ii`: determinant of `M` with row and column `i` removed.
    pub fn edge_diagonal_minor(&self, i: usize) -> f64 {
        principal_deleted_minor(&self.edge, i)
    }

    /// `G_ii`: determinant of `G` with row and column `i` removed.
    pub fn gram_diagonal_minor(&self, i: usize) -> f64 {
        principal_deleted_minor(&self.gram, i)
    }

    /// `<x, y>` under this simplex's form.
    pub(crate) fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        self.model.form(x, y)
    }
}

/// Convenience wrapper over [`Simplex::with_tolerances`].
pub fn build_simplex(model: Model, vertices: Vec<Vec<f64>>, tol: &Tolerances) -> Result<Simplex> {
    Simplex::with_tolerances(model, vertices, *tol)
}

fn principal_deleted_minor(m: &DMatrix<f64>, i: usize) -> f64 {
    let keep: Vec<usize> = (0..m.nrows()).filter(|&r| r != i).collect();
    det(&select(m, &keep, &keep))
}

// Each normal solves <e_i, p_j> = 0 (j != i), <e_i, e_i> = 1, <e_i, p_i> < 0.
// Solving <x, p_j> = delta_ij gives the dual basis vector x = p^i, which is
// space-like; e_i is -p^i normalized.
fn solve_normals(model: &Model, vertices: &[Point]) -> Result<Vec<DVector<f64>>> {
    let size = vertices.len();
    let eps = model.curvature();
    let system = DMatrix::from_fn(size, size, |j, c| {
        let sign = if c == 0 { eps } else { 1.0 };
        sign * vertices[j].coords()[c]
    });
    let dual = system
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateSimplex("vertices are linearly dependent".into()))?;
    (0..size)
        .map(|i| {
            let x = dual.column(i).into_owned();
            let norm_sq = model.form(x.as_slice(), x.as_slice());
            if !(norm_sq > 0.0) {
                return Err(Error::DegenerateSimplex(format!(
                    "facet {} has no space-like normal (<x,x> = {norm_sq:e})",
                    i + 1
                )));
            }
            Ok(-x / norm_sq.sqrt())
        })
        .collect()
}

/// The cached unit outer normals.
pub fn outer_normals(simplex: &Simplex) -> &[DVector<f64>] {
    simplex.normals()
}

/// Normals from the cofactor expansion
/// `e_i = -eps * sum_j C_ij p_j / sqrt|M_ii det M|`, with `C_ij = (-1)^{i+j} M_ij`.
///
/// Independent of the linear solve used at construction; used as a cross-check.
pub fn cofactor_normals(simplex: &Simplex) -> Result<Vec<DVector<f64>>> {
    let size = simplex.dim() + 1;
    let eps = simplex.model.curvature();
    let det_m = simplex.det_edge;
    let mut out = Vec::with_capacity(size);
    for i in 0..size {
        let m_ii = simplex.edge_diagonal_minor(i);
        let denom = (m_ii * det_m).abs().sqrt();
        if !(denom > 0.0) {
            return Err(Error::DegenerateSimplex(format!(
                "M_{0}{0} vanishes",
                i + 1
            )));
        }
        let mut acc = DVector::zeros(size);
        for j in 0..size {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let cofactor = sign * linalg::minor(&simplex.edge, &MinorSpec::deleting(size, i, j)?)?;
            acc += simplex.vertices[j].as_vector() * cofactor;
        }
        out.push(acc * (-eps / denom));
    }
    Ok(out)
}

/// The diagonal scaling `T` linking `M` and `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingMatrix {
    /// `sqrt|M_ii / det M|`.
    pub diag: Vec<f64>,
    /// `sqrt|G_ii / det G|`, which must match `diag`.
    pub via_gram: Vec<f64>,
}

impl ScalingMatrix {
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag))
    }

    /// Largest relative gap between the edge-side and Gram-side expressions.
    pub fn max_relative_discrepancy(&self) -> f64 {
        self.diag
            .iter()
            .zip(&self.via_gram)
            .fold(0.0, |acc, (a, b)| {
                acc.max((a - b).abs() / a.abs().max(b.abs()))
            })
    }
}

pub fn scaling_matrix(simplex: &Simplex) -> Result<ScalingMatrix> {
    let size = simplex.dim() + 1;
    let det_m = simplex.det_edge;
    let det_g = simplex.det_gram();
    if det_g == 0.0 || !det_g.is_finite() {
        return Err(Error::DegenerateSimplex("det G vanishes".into()));
    }
    let diag = (0..size)
        .map(|i| (simplex.edge_diagonal_minor(i) / det_m).abs().sqrt())
        .collect();
    let via_gram = (0..size)
        .map(|i| (simplex.gram_diagonal_minor(i) / det_g).abs().sqrt())
        .collect();
    Ok(ScalingMatrix { diag, via_gram })
}

/// Residuals of `M^{-1} = T G T` and `G^{-1} = T M T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    /// `max |M (T G T) - I|`
    pub edge_product: f64,
    /// `max |G (T M T) - I|`
    pub gram_product: f64,
    /// `max |M^{-1} - T G T|`
    pub edge_inverse: f64,
    /// `max |G^{-1} - T M T|`
    pub gram_inverse: f64,
    /// Relative disagreement of the two expressions for `T`.
    pub scaling_discrepancy: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Lemma1Report {
    pub fn max_residual(&self) -> f64 {
        self.edge_product
            .max(self.gram_product)
            .max(self.edge_inverse)
            .max(self.gram_inverse)
    }
}

pub fn verify_lemma1(simplex: &Simplex, tol: f64) -> Result<Lemma1Report> {
    let size = simplex.dim() + 1;
    let t = scaling_matrix(simplex)?;
    let tm = t.matrix();
    let m = &simplex.edge;
    let g = &simplex.gram;
    let tgt = &tm * g * &tm;
    let tmt = &tm * m * &tm;
    let id = DMatrix::<f64>::identity(size, size);
    let m_inv =
        linalg::inverse(m).ok_or_else(|| Error::DegenerateSimplex("M is singular".into()))?;
    let g_inv =
        linalg::inverse(g).ok_or_else(|| Error::DegenerateSimplex("G is singular".into()))?;
    let mut report = Lemma1Report {
        edge_product: max_abs_diff(&(m * &tgt), &id),
        gram_product: max_abs_diff(&(g * &tmt), &id),
        edge_inverse: max_abs_diff(&m_inv, &tgt),
        gram_inverse: max_abs_diff(&g_inv, &tmt),
        scaling_discrepancy: t.max_relative_discrepancy(),
        tol,
        pass: false,
    };
    report.pass = report.max_residual() <= tol && report.scaling_discrepancy <= tol;
    Ok(report)
}

/// Residuals of the block identities at one split.
///
/// With blocks `1 = {1..k+1}` and `2 = {k+2..n+1}`, `S_X` denotes the Schur
/// complement of block `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Report {
    pub split_k: usize,
    /// `(M11)^{-1} = T1 S_{G22} T1`
    pub edge_11: f64,
    /// `(M22)^{-1} = T2 S_{G11} T2`
    pub edge_22: f64,
    /// `(G11)^{-1} = T1 S_{M22} T1`
    pub gram_11: f64,
    /// `(G22)^{-1} = T2 S_{M11} T2`
    pub gram_22: f64,
    /// Blocks of `M^{-1}` against `(S_{M22})^{-1}`, `(S_{M11})^{-1}` and
    /// `-(M11)^{-1} M12 (S_{M11})^{-1}`.
    pub block_inverse: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Lemma2Report {
    pub fn max_residual(&self) -> f64 {
        self.edge_11
            .max(self.edge_22)
            .max(self.gram_11)
            .max(self.gram_22)
            .max(self.block_inverse)
    }
}

fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::inverse(m).ok_or_else(|| Error::SingularBlock(det(m)))
}

pub fn verify_lemma2(simplex: &Simplex, split_k: usize, tol: f64) -> Result<Lemma2Report> {
    let n = simplex.dim();
    if split_k + 1 > n {
        return Err(Error::BadIndexSet(format!(
            "split k = {split_k} leaves an empty second block (n = {n})"
        )));
    }
    // Every principal block of a valid simplex is invertible; only an exact
    // breakdown is reported, everything else shows up in the residuals.
    let degenerate = 0.0;
    let first: Vec<usize> = (0..=split_k).collect();
    let second: Vec<usize> = (split_k + 1..=n).collect();
    let t = scaling_matrix(simplex)?;
    let t1 = DMatrix::from_diagonal(&DVector::from_iterator(
        first.len(),
        first.iter().map(|&i| t.diag[i]),
    ));
    let t2 = DMatrix::from_diagonal(&DVector::from_iterator(
        second.len(),
        second.iter().map(|&i| t.diag[i]),
    ));
    let m = &simplex.edge;
    let g = &simplex.gram;

    let m11 = select(m, &first, &first);
    let m22 = select(m, &second, &second);
    let m12 = select(m, &first, &second);
    let g11 = select(g, &first, &first);
    let g22 = select(g, &second, &second);

    // Schur complement of block 1 lives on block 2 and vice versa.
    let s_m11 = schur_complement(m, &second, degenerate)?.values;
    let s_m22 = schur_complement(m, &first, degenerate)?.values;
    let s_g11 = schur_complement(g, &second, degenerate)?.values;
    let s_g22 = schur_complement(g, &first, degenerate)?.values;

    let m11_inv = inverse(&m11)?;
    let m22_inv = inverse(&m22)?;
    let g11_inv = inverse(&g11)?;
    let g22_inv = inverse(&g22)?;
    let s_m11_inv = inverse(&s_m11)?;
    let s_m22_inv = inverse(&s_m22)?;

    let m_inv = inverse(m)?;
    let block_inverse = max_abs_diff(&select(&m_inv, &first, &first), &s_m22_inv)
        .max(max_abs_diff(&select(&m_inv, &second, &second), &s_m11_inv))
        .max(max_abs_diff(
            &select(&m_inv, &first, &second),
            &(-(&m11_inv * &m12 * &s_m11_inv)),
        ));

    let mut report = Lemma2Report {
        split_k,
        edge_11: max_abs_diff(&m11_inv, &(&t1 * &s_g22 * &t1)),
        edge_22: max_abs_diff(&m22_inv, &(&t2 * &s_g11 * &t2)),
        gram_11: max_abs_diff(&g11_inv, &(&t1 * &s_m22 * &t1)),
        gram_22: max_abs_diff(&g22_inv, &(&t2 * &s_m11 * &t2)),
        block_inverse,
        tol,
        pass: false,
    };
    report.pass = report.max_residual() <= tol;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn octant() -> Simplex {
        Simplex::new(
            Model::spherical(3),
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        )
        .unwrap()
    }

    fn hyperbolic_triangle() -> Simplex {
        let (c, s) = (1f64.cosh(), 1f64.sinh());
        Simplex::new(
            Model::hyperbolic(3),
            vec![vec![1.0, 0.0, 0.0], vec![c, s, 0.0], vec![c, 0.0, s]],
        )
        .unwrap()
    }

    fn hyperbolic_segment() -> Simplex {
        let (c, s) = (1f64.cosh(), 1f64.sinh());
        Simplex::new(Model::hyperbolic(2), vec![vec![1.0, 0.0], vec![c, s]]).unwrap()
    }

    #[test]
    fn octant_is_identity_everywhere() {
        let s = octant();
        assert_eq!(s.edge_matrix(), &DMatrix::<f64>::identity(3, 3));
        for (i, e) in s.normals().iter().enumerate() {
            let mut expect = DVector::zeros(3);
            expect[i] = -1.0;
            assert!((e - expect).amax() < 1e-15);
        }
        assert!((s.gram_matrix() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-15);
        let t = scaling_matrix(&s).unwrap();
        assert!(t.diag.iter().all(|&d| (d - 1.0).abs() < 1e-15));
        let r = verify_lemma1(&s, 1e-12).unwrap();
        assert!(r.pass && r.max_residual() < 1e-15);
        for k in 0..2 {
            let r = verify_lemma2(&s, k, 1e-12).unwrap();
            assert!(r.pass && r.max_residual() < 1e-15);
        }
    }

    #[test]
    fn hyperbolic_edge_matrix_by_hand() {
        let s = hyperbolic_triangle();
        let c = 1f64.cosh();
        let hand =
            DMatrix::from_row_slice(3, 3, &[-1.0, -c, -c, -c, -1.0, -c * c, -c, -c * c, -1.0]);
        assert!((s.edge_matrix() - hand).amax() < 1e-14);
        assert!(s.det_edge().abs() > 1e-3);
    }

    #[test]
    fn repeated_vertex_is_degenerate() {
        let err = Simplex::new(
            Model::spherical(3),
            vec![
                vec![1.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateSimplex(_)));

        let (c, s) = (1f64.cosh(), 1f64.sinh());
        let err = Simplex::new(
            Model::hyperbolic(3),
            vec![vec![1.0, 0.0, 0.0], vec![c, s, 0.0], vec![c, s, 0.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateSimplex(_)));
    }

    #[test]
    fn coplanar_vertices_are_degenerate() {
        let r = 0.5f64.sqrt();
        let err = Simplex::new(
            Model::spherical(3),
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![r, r, 0.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateSimplex(_)));
    }

    #[test]
    fn construction_errors() {
        let m = Model::hyperbolic(3);
        let (c, s) = (1f64.cosh(), 1f64.sinh());
        let off = Simplex::new(
            m,
            vec![vec![1.0, 0.0, 0.0], vec![c, s, 1e-3], vec![c, 0.0, s]],
        );
        assert!(matches!(off, Err(Error::OffManifold { index: 1, .. })));
        let sheet = Simplex::new(
            m,
            vec![vec![1.0, 0.0, 0.0], vec![-c, -s, 0.0], vec![c, 0.0, s]],
        );
        assert!(matches!(sheet, Err(Error::WrongSheet { index: 1, .. })));
        let count = Simplex::new(m, vec![vec![1.0, 0.0, 0.0]]);
        assert!(matches!(count, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn segment_normal_and_scaling_by_hand() {
        let s = hyperbolic_segment();
        let e2 = s.normal(1);
        assert!((e2[0]).abs() < 1e-14 && (e2[1] + 1.0).abs() < 1e-14);
        // det M = 1 - cosh^2 1 = -sinh^2 1, M_11 = M_22 = -1
        assert!((s.det_edge() + 1f64.sinh().powi(2)).abs() < 1e-13);
        let t = scaling_matrix(&s).unwrap();
        for (a, b) in t.diag.iter().zip(&t.via_gram) {
            assert!((a - 1.0 / 1f64.sinh()).abs() < 1e-13);
            assert!((a - b).abs() < 1e-12);
        }
        assert!((t.diag[0] - 0.85092).abs() < 1e-5);
    }

    #[test]
    fn normals_are_unit_outward_and_orthogonal() {
        for s in [hyperbolic_triangle(), hyperbolic_segment(), octant()] {
            let size = s.dim() + 1;
            for i in 0..size {
                let e = s.normal(i).as_slice();
                assert!((s.form(e, e) - 1.0).abs() < 1e-12);
                for j in 0..size {
                    let v = s.form(e, s.vertex(j).coords());
                    if i == j {
                        let expect = -(s.det_edge() / s.edge_diagonal_minor(i)).abs().sqrt();
                        assert!((v - expect).abs() < 1e-10 * expect.abs());
                    } else {
                        assert!(v.abs() < 1e-12);
                    }
                }
            }
            for i in 0..size {
                assert!((s.gram_matrix()[(i, i)] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cofactor_formula_matches_solved_normals() {
        for s in [hyperbolic_triangle(), hyperbolic_segment(), octant()] {
            let cof = cofactor_normals(&s).unwrap();
            for (a, b) in cof.iter().zip(s.normals()) {
                assert!((a - b).amax() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn identity_checks_on_hyperbolic_triangle() {
        let s = hyperbolic_triangle();
        assert!(verify_lemma1(&s, 1e-10).unwrap().pass);
        for k in 0..2 {
            assert!(verify_lemma2(&s, k, 1e-10).unwrap().pass);
        }
        assert!(verify_lemma2(&s, 2, 1e-10).is_err());
    }
}
