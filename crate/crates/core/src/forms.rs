//! Bilinear forms, manifold membership and geodesic distance.
//!
//! Both geometries live in an ambient space of dimension `n + 1`:
//!
//! * hyperbolic space is the upper sheet `x1 > 0` of `<x,x> = -1` under the
//!   Minkowski form `<x,y> = -x1 y1 + x2 y2 + ... + x_{n+1} y_{n+1}`;
//! * spherical space is the unit sphere `<x,x>_E = 1` under the Euclidean
//!   dot product.
//!
//! The curvature `eps` (-1 or +1) selects the form and is also the value of
//! `<x,x>` for every point on the manifold.

use std::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Numerical tolerances shared by every operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute slack on `|<x,x> - eps|` for manifold membership.
    pub manifold: f64,
    /// How far an arccos/arccosh argument may leave its domain before it is an error.
    pub domain: f64,
    /// Lower bound on `eps * <v,v>` (and on projection radicands) for normalization.
    pub norm: f64,
    /// Relative determinant threshold for nondegeneracy.
    pub degenerate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            manifold: 1e-9,
            domain: 1e-9,
            norm: 1e-12,
            degenerate: 1e-10,
        }
    }
}

impl Tolerances {
    /// Every tolerance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            manifold: self.manifold * factor,
            domain: self.domain * factor,
            norm: self.norm * factor,
            degenerate: self.degenerate * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Hyperbolic,
    Spherical,
}

impl Geometry {
    pub fn curvature(self) -> f64 {
        match self {
            Geometry::Hyperbolic => -1.0,
            Geometry::Spherical => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Hyperbolic => "hyperbolic",
            Geometry::Spherical => "spherical",
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Geometry {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hyperbolic" => Ok(Geometry::Hyperbolic),
            "spherical" => Ok(Geometry::Spherical),
            other => Err(format!(
                "unknown model '{other}' (expected 'hyperbolic' or 'spherical')"
            )),
        }
    }
}

/// A geometry together with its ambient dimension `n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Model {
    geometry: Geometry,
    ambient_dim: usize,
}

impl Model {
    /// # Panics
    ///
    /// If `ambient_dim < 2`.
    pub fn new(geometry: Geometry, ambient_dim: usize) -> Self {
        assert!(ambient_dim >= 2, "ambient dimension must be at least 2");
        Self {
            geometry,
            ambient_dim,
        }
    }

    pub fn from_curvature(curvature: i32, ambient_dim: usize) -> Result<Self> {
        let geometry = match curvature {
            -1 => Geometry::Hyperbolic,
            1 => Geometry::Spherical,
            other => return Err(Error::InvalidModel(other)),
        };
        if ambient_dim < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: ambient_dim,
            });
        }
        Ok(Self::new(geometry, ambient_dim))
    }

    pub fn hyperbolic(ambient_dim: usize) -> Self {
        Self::new(Geometry::Hyperbolic, ambient_dim)
    }

    pub fn spherical(ambient_dim: usize) -> Self {
        Self::new(Geometry::Spherical, ambient_dim)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// `eps`: -1 for hyperbolic, +1 for spherical.
    pub fn curvature(&self) -> f64 {
        self.geometry.curvature()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Dimension `n` of the manifold.
    pub fn dim(&self) -> usize {
        self.ambient_dim - 1
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                found: len,
            });
        }
        Ok(())
    }

    /// The curvature-signed form: Minkowski for hyperbolic, dot product for spherical.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        Ok(self.form(x, y))
    }

    /// [`Model::inner`] without length checks. Lengths must already agree.
    pub(crate) fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let tail: f64 = x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum();
        match self.geometry {
            Geometry::Hyperbolic => tail - x[0] * y[0],
            Geometry::Spherical => tail + x[0] * y[0],
        }
    }

    /// `|<x,x> - eps|`, the quantity bounded by the membership tolerance.
    pub fn membership_residual(&self, x: &[f64]) -> f64 {
        (self.form(x, x) - self.curvature()).abs()
    }

    pub fn on_manifold(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.ambient_dim || x.iter().any(|c| !c.is_finite()) {
            return false;
        }
        if self.membership_residual(x) > tol {
            return false;
        }
        match self.geometry {
            Geometry::Hyperbolic => x[0] > 0.0,
            Geometry::Spherical => true,
        }
    }

    /// Membership check with error reporting. `index` is echoed in the error.
    pub fn check_point(&self, coords: &[f64], index: usize, tol: &Tolerances) -> Result<()> {
        self.check_len(coords.len())?;
        let residual = self.membership_residual(coords);
        if !(residual <= tol.manifold) {
            return Err(Error::OffManifold { index, residual });
        }
        if self.geometry == Geometry::Hyperbolic && coords[0] <= 0.0 {
            return Err(Error::WrongSheet {
                index,
                first: coords[0],
            });
        }
        Ok(())
    }

    pub fn point(&self, coords: Vec<f64>, tol: &Tolerances) -> Result<Point> {
        self.check_point(&coords, 0, tol)?;
        Ok(Point(DVector::from_vec(coords)))
    }

    /// Geodesic distance: `arccosh(-<p,q>)` or `arccos(<p,q>_E)`.
    ///
    /// Arguments that leave the legal domain by at most `tol.domain` are clamped.
    pub fn distance(&self, p: &Point, q: &Point, tol: &Tolerances) -> Result<f64> {
        self.check_point(p.coords(), 0, tol)?;
        self.check_point(q.coords(), 1, tol)?;
        let s = self.form(p.coords(), q.coords());
        let (p, q) = (p.as_vector(), q.as_vector());
        // Evaluated from chord lengths: acosh and acos lose half the digits near 0.
        match self.geometry {
            Geometry::Hyperbolic => {
                if 1.0 + s > tol.domain {
                    return Err(Error::DomainError(-s));
                }
                let d = p - q;
                let chord = self.form(d.as_slice(), d.as_slice()).max(0.0).sqrt();
                Ok(2.0 * (chord / 2.0).asinh())
            }
            Geometry::Spherical => {
                if s.abs() - 1.0 > tol.domain {
                    return Err(Error::DomainError(s));
                }
                Ok(2.0 * (p - q).norm().atan2((p + q).norm()))
            }
        }
    }

    /// Rescales `v` onto the manifold: `v / sqrt(eps <v,v>)`, on the upper sheet
    /// in the hyperbolic case.
    pub fn normalize_to_manifold(&self, v: &[f64], tol: &Tolerances) -> Result<Point> {
        self.check_len(v.len())?;
        let norm_sq = self.curvature() * self.form(v, v);
        if !(norm_sq > tol.norm) {
            return Err(Error::NotNormalizable(norm_sq));
        }
        let mut norm = norm_sq.sqrt();
        if self.geometry == Geometry::Hyperbolic && v[0] < 0.0 {
            norm = -norm;
        }
        Ok(Point(DVector::from_iterator(
            v.len(),
            v.iter().map(|c| c / norm),
        )))
    }
}

/// Ambient coordinates of a point on one of the manifolds.
///
/// Constructed through [`Model::point`] or [`Model::normalize_to_manifold`];
/// [`Point::new_unchecked`] skips validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(DVector<f64>);

impl Point {
    pub fn new_unchecked(coords: Vec<f64>) -> Self {
        Point(DVector::from_vec(coords))
    }

    pub fn coords(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0.data.into()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Point> for DVector<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c1() -> f64 {
        1f64.cosh()
    }
    fn s1() -> f64 {
        1f64.sinh()
    }

    #[test]
    fn inner_on_basis_vectors() {
        let h = Model::hyperbolic(3);
        let s = Model::spherical(3);
        assert_eq!(h.inner(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(), -1.0);
        assert_eq!(s.inner(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn inner_matches_summation_oracle() {
        let h = Model::hyperbolic(3);
        let x = [c1(), s1(), 0.0];
        let y = [1.0, 0.0, 0.0];
        let signs = [-1.0, 1.0, 1.0];
        let oracle: f64 = (0..3).map(|i| signs[i] * x[i] * y[i]).sum();
        let got = h.inner(&x, &y).unwrap();
        assert!((got - oracle).abs() < 1e-15);
        assert!((got + 1.5430806348152437).abs() < 1e-15);
    }

    #[test]
    fn inner_rejects_wrong_length() {
        let h = Model::hyperbolic(3);
        assert_eq!(
            h.inner(&[1.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2
            })
        );
    }

    #[test]
    fn membership() {
        let h = Model::hyperbolic(3);
        let s = Model::spherical(3);
        assert!(h.on_manifold(&[1.0, 0.0, 0.0], 1e-9));
        assert!(!h.on_manifold(&[-1.0, 0.0, 0.0], 1e-9));
        assert!(s.on_manifold(&[0.6, 0.8, 0.0], 1e-9));
        assert!(!s.on_manifold(&[0.6, 0.8, 0.1], 1e-9));
        assert!(!s.on_manifold(&[0.6, 0.8], 1e-9));
    }

    #[test]
    fn from_curvature_validates() {
        assert_eq!(Model::from_curvature(0, 3), Err(Error::InvalidModel(0)));
        assert_eq!(
            Model::from_curvature(-1, 3).unwrap().geometry(),
            Geometry::Hyperbolic
        );
    }

    #[test]
    fn distances() {
        let tol = Tolerances::default();
        let h = Model::hyperbolic(3);
        let p = h.point(vec![1.0, 0.0, 0.0], &tol).unwrap();
        let q = h.point(vec![c1(), s1(), 0.0], &tol).unwrap();
        assert_eq!(h.distance(&p, &p, &tol).unwrap(), 0.0);
        assert!((h.distance(&p, &q, &tol).unwrap() - 1.0).abs() < 1e-12);

        let s = Model::spherical(3);
        let a = s.point(vec![1.0, 0.0, 0.0], &tol).unwrap();
        let b = s.point(vec![0.0, 1.0, 0.0], &tol).unwrap();
        let c = s.point(vec![-1.0, 0.0, 0.0], &tol).unwrap();
        assert!((s.distance(&a, &b, &tol).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((s.distance(&a, &c, &tol).unwrap() - PI).abs() < 1e-15);
    }

    #[test]
    fn distance_clamps_rounding_but_rejects_off_manifold() {
        let tol = Tolerances::default();
        let s = Model::spherical(3);
        let r = 1.0 / 3f64.sqrt();
        let p = Point::new_unchecked(vec![r, r, r]);
        let d = s.distance(&p, &p, &tol).unwrap();
        assert!(d < 1e-7);

        let off = Point::new_unchecked(vec![1.0, 1e-3, 0.0]);
        assert!(matches!(
            s.distance(&p, &off, &tol),
            Err(Error::OffManifold { index: 1, .. })
        ));
    }

    #[test]
    fn normalization() {
        let tol = Tolerances::default();
        let s = Model::spherical(3);
        let h = Model::hyperbolic(3);
        let p = s.normalize_to_manifold(&[3.0, 4.0, 0.0], &tol).unwrap();
        assert!((p.coords()[0] - 0.6).abs() < 1e-15 && (p.coords()[1] - 0.8).abs() < 1e-15);
        assert_eq!(
            h.normalize_to_manifold(&[-2.0, 0.0, 0.0], &tol)
                .unwrap()
                .coords(),
            &[1.0, 0.0, 0.0]
        );
        let q = h.normalize_to_manifold(&[c1(), 0.0, 0.0], &tol).unwrap();
        assert!((q.coords()[0] - 1.0).abs() < 1e-15);
        assert!(matches!(
            h.normalize_to_manifold(&[1.0, 1.0, 0.0], &tol),
            Err(Error::NotNormalizable(_))
        ));
        assert!(matches!(
            s.normalize_to_manifold(&[0.0, 0.0, 0.0], &tol),
            Err(Error::NotNormalizable(_))
        ));
    }

    #[test]
    fn scaled_tolerances() {
        let t = Tolerances::default().scaled(10.0);
        assert!((t.manifold - 1e-8).abs() < 1e-20);
        assert!((t.degenerate - 1e-9).abs() < 1e-20);
    }
}
