//! Minors, bordered minors and Schur complements of small dense matrices.
//!
//! Every determinant goes through an LU factorization with partial pivoting.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row and column index sets selecting a square submatrix.
///
/// Indices are 0-based and strictly increasing; both sets have the same length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinorSpec {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl MinorSpec {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>) -> Result<Self> {
        if rows.is_empty() || rows.len() != cols.len() {
            return Err(Error::BadIndexSet(format!(
                "row and column sets must be nonempty and of equal size ({} vs {})",
                rows.len(),
                cols.len()
            )));
        }
        for set in [&rows, &cols] {
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::BadIndexSet(format!(
                    "{set:?} is not strictly increasing"
                )));
            }
        }
        Ok(Self { rows, cols })
    }

    /// Same index set for rows and columns.
    pub fn principal(indices: Vec<usize>) -> Result<Self> {
        Self::new(indices.clone(), indices)
    }

    /// Everything except row `i` and column `j` of an `m x m` matrix, i.e. the
    /// `(i, j)` minor in the usual sense.
    pub fn deleting(m: usize, i: usize, j: usize) -> Result<Self> {
        if m < 2 || i >= m || j >= m {
            return Err(Error::BadIndexSet(format!(
                "cannot delete ({i}, {j}) from a {m}x{m} matrix"
            )));
        }
        Self::new(
            (0..m).filter(|&r| r != i).collect(),
            (0..m).filter(|&c| c != j).collect(),
        )
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }
}

pub fn det(m: &DMatrix<f64>) -> f64 {
    debug_assert!(m.is_square());
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().lu().determinant()
}

/// Inverse through LU with partial pivoting. `try_inverse` on a plain matrix
/// uses closed-form cofactors up to 4x4, which lose accuracy when the matrix
/// is ill-conditioned.
pub fn inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().lu().try_inverse()
}

/// Submatrix with rows and columns taken in the given order.
pub fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Determinant of the submatrix named by `spec`. No cofactor sign is applied.
pub fn minor(m: &DMatrix<f64>, spec: &MinorSpec) -> Result<f64> {
    let bound = m.nrows().min(m.ncols());
    if let Some(&bad) = spec.rows.iter().chain(&spec.cols).find(|&&i| i >= bound) {
        return Err(Error::BadIndexSet(format!(
            "index {bad} out of range for a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(det(&select(m, &spec.rows, &spec.cols)))
}

/// `det m[(face.., s), (face.., t)]`: the face block bordered by row `s` and column `t`.
///
/// The border sits after the face indices, which is what makes
/// `bordered_minor / det m[face, face]` equal the `(s, t)` Schur entry.
pub fn bordered_minor(m: &DMatrix<f64>, face: &[usize], s: usize, t: usize) -> f64 {
    let mut rows = face.to_vec();
    rows.push(s);
    let mut cols = face.to_vec();
    cols.push(t);
    det(&select(m, &rows, &cols))
}

/// Schur complement `m[B,B] - m[B,A] m[A,A]^{-1} m[A,B]`, indexed by `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurBlock {
    pub block_rows: Vec<usize>,
    pub values: DMatrix<f64>,
}

impl SchurBlock {
    /// Position of original index `i` inside the block.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.block_rows.iter().position(|&r| r == i)
    }

    /// Entry at original indices `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        Some(self.values[(self.position(i)?, self.position(j)?)])
    }
}

/// Schur complement of the principal block on the complement of `retained`.
///
/// `retained` must be a strictly increasing, nonempty proper subset of `0..m`;
/// an empty complement returns the retained block itself.
pub fn schur_complement(
    m: &DMatrix<f64>,
    retained: &[usize],
    tol_degenerate: f64,
) -> Result<SchurBlock> {
    let size = m.nrows();
    if retained.is_empty()
        || retained.windows(2).any(|w| w[0] >= w[1])
        || retained.iter().any(|&i| i >= size)
    {
        return Err(Error::BadIndexSet(format!(
            "retained set {retained:?} invalid for a {size}x{size} matrix"
        )));
    }
    let eliminated: Vec<usize> = (0..size).filter(|i| !retained.contains(i)).collect();
    let bb = select(m, retained, retained);
    if eliminated.is_empty() {
        return Ok(SchurBlock {
            block_rows: retained.to_vec(),
            values: bb,
        });
    }
    let aa = select(m, &eliminated, &eliminated);
    let ab = select(m, &eliminated, retained);
    let ba = select(m, retained, &eliminated);
    let lu = aa.clone().lu();
    let d = lu.determinant();
    let scale = max_abs(&aa).max(f64::MIN_POSITIVE);
    if !(d.abs() > tol_degenerate * scale.powi(aa.nrows() as i32)) {
        return Err(Error::SingularBlock(d));
    }
    let x = lu.solve(&ab).ok_or(Error::SingularBlock(d))?;
    Ok(SchurBlock {
        block_rows: retained.to_vec(),
        values: bb - ba * x,
    })
}

/// `size * eps * max|A| * max|A^-1|^2`, the absolute error an f64 inverse of
/// `A` may carry. Infinite for a singular matrix.
pub fn rounding_floor(m: &DMatrix<f64>) -> f64 {
    match inverse(m) {
        Some(inv) => {
            let a = max_abs(&inv);
            max_abs(m) * a * a * m.nrows() as f64 * f64::EPSILON
        }
        None => f64::INFINITY,
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// `max |a - b|` entrywise.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosh1() -> f64 {
        1f64.cosh()
    }

    fn hyperbolic_edge() -> DMatrix<f64> {
        let c = cosh1();
        DMatrix::from_row_slice(3, 3, &[-1.0, -c, -c, -c, -1.0, -c * c, -c, -c * c, -1.0])
    }

    #[test]
    fn minor_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        let spec = MinorSpec::principal(vec![0, 1]).unwrap();
        assert_eq!(minor(&id, &spec).unwrap(), 1.0);

        let m = DMatrix::from_row_slice(2, 2, &[-1.0, -2.0, -2.0, -1.0]);
        assert_eq!(
            minor(&m, &MinorSpec::principal(vec![0]).unwrap()).unwrap(),
            -1.0
        );

        // hand value: (-1)(-1) - cosh^4(1)
        let got = minor(
            &hyperbolic_edge(),
            &MinorSpec::principal(vec![1, 2]).unwrap(),
        )
        .unwrap();
        let hand = 1.0 - cosh1().powi(4);
        assert!((got - hand).abs() < 1e-12);
        assert!((got + 4.669626950043876).abs() < 1e-12);
    }

    #[test]
    fn bad_index_sets() {
        assert!(MinorSpec::new(vec![1, 0], vec![0, 1]).is_err());
        assert!(MinorSpec::new(vec![0], vec![0, 1]).is_err());
        assert!(MinorSpec::new(vec![], vec![]).is_err());
        let spec = MinorSpec::principal(vec![0, 3]).unwrap();
        assert!(matches!(
            minor(&DMatrix::<f64>::identity(3, 3), &spec),
            Err(Error::BadIndexSet(_))
        ));
    }

    #[test]
    fn deleting_gives_usual_minor() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let m01 = minor(&m, &MinorSpec::deleting(3, 0, 1).unwrap()).unwrap();
        // rows {1,2}, cols {0,2}: 1*4 - 1*0
        assert!((m01 - 4.0).abs() < 1e-14);
    }

    #[test]
    fn schur_small_cases() {
        let id = DMatrix::<f64>::identity(4, 4);
        let s = schur_complement(&id, &[1, 3], 1e-10).unwrap();
        assert_eq!(s.values, DMatrix::<f64>::identity(2, 2));

        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = schur_complement(&m, &[1], 1e-10).unwrap();
        assert!((s.values[(0, 0)] - 1.5).abs() < 1e-15);
        assert_eq!(s.get(1, 1), Some(s.values[(0, 0)]));
        assert_eq!(s.get(0, 0), None);
    }

    #[test]
    fn schur_rejects_singular_block() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            schur_complement(&m, &[2], 1e-10),
            Err(Error::SingularBlock(_))
        ));
    }

    #[test]
    fn schur_entries_equal_bordered_minor_ratios() {
        // generic symmetric matrix, odd face ordering on purpose
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                4.0, 1.0, 0.5, -0.3, 1.0, 3.0, 0.2, 0.7, 0.5, 0.2, 2.5, -0.4, -0.3, 0.7, -0.4, 5.0,
            ],
        );
        let face = [1, 3];
        let rest = [0, 2];
        let s = schur_complement(&m, &rest, 1e-10).unwrap();
        let lead = det(&select(&m, &face, &face));
        for &i in &rest {
            for &j in &rest {
                let ratio = bordered_minor(&m, &face, i, j) / lead;
                assert!((ratio - s.get(i, j).unwrap()).abs() < 1e-12);
            }
        }
    }
}
