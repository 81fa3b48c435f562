//! Brute-force ground truth for the closed-form projections, plus random
//! instance generation.
//!
//! The oracle never touches normals, Gram matrices or minors. It searches the
//! face's plane directly: a candidate is `normalize(sum_i mu_i p_i)` for a
//! coefficient direction `mu` on the unit sphere of `R^{k+1}`, and the
//! geodesic distance to the query point is minimized by a coarse grid over
//! hyperspherical angles followed by Nelder–Mead restarts in a local chart.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::forms::{Geometry, Model, Point, Tolerances};
use crate::projection::{FaceSelector, ProjectionResult};
use crate::rng::SeededRng;
use crate::simplex::Simplex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Grid resolution per hyperspherical angle.
    pub coarse_grid_points_per_dim: usize,
    /// Maximum number of Nelder–Mead restarts.
    pub refine_iterations: usize,
    /// A restart improving the distance by no more than this ends the search.
    pub convergence_tol: f64,
    /// Seeds the random phase of the coarse grid.
    pub seed: u64,
    /// Cap on the coarse grid size; the per-angle resolution is lowered to fit.
    pub max_coarse_points: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            coarse_grid_points_per_dim: 25,
            refine_iterations: 200,
            convergence_tol: 1e-10,
            seed: 0,
            max_coarse_points: 50_000,
        }
    }
}

impl OracleOptions {
    fn validate(&self) -> Result<()> {
        if self.coarse_grid_points_per_dim == 0
            || self.refine_iterations == 0
            || self.max_coarse_points == 0
            || !(self.convergence_tol > 0.0)
        {
            return Err(Error::OracleFailure(format!("invalid options {self:?}")));
        }
        Ok(())
    }
}

struct PlaneSearch<'a> {
    model: &'a Model,
    basis: Vec<&'a DVector<f64>>,
    target: &'a Point,
    tol: Tolerances,
}

impl PlaneSearch<'_> {
    fn combine(&self, mu: &[f64]) -> DVector<f64> {
        let mut v = DVector::zeros(self.model.ambient_dim());
        for (c, p) in mu.iter().zip(&self.basis) {
            v += *p * *c;
        }
        v
    }

    fn candidate(&self, mu: &[f64]) -> Option<Point> {
        self.model
            .normalize_to_manifold(self.combine(mu).as_slice(), &self.tol)
            .ok()
    }

    fn objective(&self, mu: &[f64]) -> f64 {
        self.candidate(mu)
            .and_then(|c| self.model.distance(self.target, &c, &self.tol).ok())
            .unwrap_or(f64::INFINITY)
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

/// Point of the unit sphere in `R^{angles.len() + 1}` from hyperspherical angles.
fn direction(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len() + 1);
    let mut sin_prod = 1.0;
    for a in angles {
        out.push(sin_prod * a.cos());
        sin_prod *= a.sin();
    }
    out.push(sin_prod);
    out
}

/// Orthonormal basis of the complement of unit vector `mu`.
fn chart_basis(mu: &[f64]) -> Vec<Vec<f64>> {
    let d = mu.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    let mut seeds: Vec<usize> = (0..d).collect();
    // start from the axes least aligned with mu
    seeds.sort_by(|&a, &b| mu[a].abs().total_cmp(&mu[b].abs()));
    for axis in seeds {
        if basis.len() == d - 1 {
            break;
        }
        let mut v = vec![0.0; d];
        v[axis] = 1.0;
        for b in std::iter::once(mu).chain(basis.iter().map(|b| b.as_slice())) {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

struct Minimum {
    x: Vec<f64>,
    value: f64,
    converged: bool,
}

/// Plain Nelder–Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], step: f64, max_iter: usize) -> Minimum {
    let dim = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut converged = false;

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = values[dim] - values[0];
        if diameter < 1e-12 || (diameter < 1e-9 && spread <= 1e-16 * values[0].abs().max(1.0)) {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|c| simplex[..dim].iter().map(|v| v[c]).sum::<f64>() / dim as f64)
            .collect();
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let reflected = toward(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = toward(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        let contracted = if fr < values[dim] {
            toward(-0.5)
        } else {
            toward(0.5)
        };
        let fc = f(&contracted);
        if fc < values[dim].min(fr) {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        for i in 1..=dim {
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            values[i] = f(&shrunk);
            simplex[i] = shrunk;
        }
    }
    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        converged,
    }
}

/// Minimizes the geodesic distance from `p` over the face's plane by direct search.
///
/// Only `foot`, `distance` and `pre_foot` (the unnormalized combination of
/// face vertices) are filled in; `lambda` is empty.
pub fn oracle_project(
    simplex: &Simplex,
    face: &FaceSelector,
    p: &Point,
    opts: &OracleOptions,
) -> Result<ProjectionResult> {
    opts.validate()?;
    face.check_for(simplex)?;
    let tol = *simplex.tolerances();
    simplex.model().check_point(p.coords(), 0, &tol)?;
    let search = PlaneSearch {
        model: simplex.model(),
        basis: face
            .indices()
            .iter()
            .map(|&i| simplex.vertex(i).as_vector())
            .collect(),
        target: p,
        tol,
    };
    let k = face.k();

    let (best_mu, best_value) = if k == 0 {
        [vec![1.0], vec![-1.0]]
            .into_iter()
            .map(|mu| {
                let v = search.objective(&mu);
                (mu, v)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("two candidates")
    } else {
        let (mu, value, spacing) = coarse_search(&search, k, opts);
        if !value.is_finite() {
            return Err(Error::OracleFailure(
                "no coarse candidate lies on the manifold".into(),
            ));
        }
        refine(&search, mu, value, spacing, opts)?
    };

    let foot = search
        .candidate(&best_mu)
        .ok_or_else(|| Error::OracleFailure("best candidate left the manifold".into()))?;
    Ok(ProjectionResult {
        foot,
        distance: best_value,
        lambda: Default::default(),
        pre_foot: search.combine(&best_mu),
    })
}

fn coarse_search(search: &PlaneSearch<'_>, k: usize, opts: &OracleOptions) -> (Vec<f64>, f64, f64) {
    let mut per_dim = opts.coarse_grid_points_per_dim.max(2);
    while per_dim > 2 && (per_dim as f64).powi(k as i32) > opts.max_coarse_points as f64 {
        per_dim -= 1;
    }
    let mut rng = SeededRng::new(opts.seed);
    let phase: Vec<f64> = (0..k).map(|_| rng.uniform()).collect();
    let ranges: Vec<f64> = (0..k)
        .map(|i| if i + 1 == k { 2.0 * PI } else { PI })
        .collect();

    let mut counter = vec![0usize; k];
    let mut angles = vec![0.0; k];
    let mut best = (Vec::new(), f64::INFINITY);
    loop {
        for i in 0..k {
            angles[i] = (counter[i] as f64 + phase[i]) * ranges[i] / per_dim as f64;
        }
        let mu = direction(&angles);
        let value = search.objective(&mu);
        if value < best.1 {
            best = (mu, value);
        }
        let mut i = 0;
        loop {
            if i == k {
                return (best.0, best.1, PI / per_dim as f64);
            }
            counter[i] += 1;
            if counter[i] < per_dim {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
    }
}

fn refine(
    search: &PlaneSearch<'_>,
    mut mu: Vec<f64>,
    mut value: f64,
    spacing: f64,
    opts: &OracleOptions,
) -> Result<(Vec<f64>, f64)> {
    let k = mu.len() - 1;
    for round in 0..opts.refine_iterations {
        let basis = chart_basis(&mu);
        let lift = |y: &[f64]| -> Vec<f64> {
            let mut m = mu.clone();
            for (c, b) in y.iter().zip(&basis) {
                for (x, bb) in m.iter_mut().zip(b) {
                    *x += c * bb;
                }
            }
            normalized(&m)
        };
        let step = (spacing * 0.25f64.powi(round as i32)).max(1e-6);
        let found = nelder_mead(
            |y| search.objective(&lift(y)),
            &vec![0.0; k],
            step,
            2000 * k,
        );
        let improvement = value - found.value;
        if found.value < value {
            mu = lift(&found.x);
            value = found.value;
        }
        if round > 0 && found.converged && improvement <= opts.convergence_tol {
            return Ok((mu, value));
        }
    }
    Err(Error::OracleFailure(format!(
        "no convergence after {} restarts (best distance {value})",
        opts.refine_iterations
    )))
}

/// Minimum pairwise geodesic distance between generated vertices.
const MIN_SEPARATION: f64 = 0.2;
/// Maximum pairwise distance between spherical vertices.
const MAX_SPHERICAL_SEPARATION: f64 = 2.0;
/// Default bound on whole-simplex generation attempts.
pub const DEFAULT_GENERATION_ATTEMPTS: usize = 1000;

/// A random point of the manifold of dimension `n`.
///
/// Hyperbolic: `(cosh r, sinh r u)` with `r` uniform in `[r_min, r_max]` and
/// `u` a uniform direction. Spherical: uniform on the sphere (the radii are
/// ignored).
pub fn random_point(
    geometry: Geometry,
    n: usize,
    r_min: f64,
    r_max: f64,
    rng: &mut SeededRng,
) -> Point {
    match geometry {
        Geometry::Hyperbolic => {
            let r = rng.uniform_in(r_min, r_max);
            let u = rng.unit_vector(n);
            let mut coords = Vec::with_capacity(n + 1);
            coords.push(r.cosh());
            coords.extend(u.iter().map(|x| r.sinh() * x));
            Point::new_unchecked(coords)
        }
        Geometry::Spherical => Point::new_unchecked(rng.unit_vector(n + 1)),
    }
}

/// A random valid n-simplex, deterministic in `seed`.
pub fn random_simplex(geometry: Geometry, n: usize, seed: u64) -> Result<Simplex> {
    random_simplex_with_attempts(geometry, n, seed, DEFAULT_GENERATION_ATTEMPTS)
}

pub fn random_simplex_with_attempts(
    geometry: Geometry,
    n: usize,
    seed: u64,
    attempts: usize,
) -> Result<Simplex> {
    if n == 0 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: 1,
        });
    }
    let model = Model::new(geometry, n + 1);
    let tol = Tolerances::default();
    let mut rng = SeededRng::new(seed);
    'attempt: for _ in 0..attempts {
        let mut vertices: Vec<Point> = Vec::with_capacity(n + 1);
        while vertices.len() <= n {
            let mut placed = false;
            for _ in 0..64 {
                let candidate = random_point(geometry, n, 0.2, 1.5, &mut rng);
                let separated = vertices.iter().all(|v| {
                    model.distance(v, &candidate, &tol).is_ok_and(|d| {
                        d >= MIN_SEPARATION
                            && (geometry == Geometry::Hyperbolic || d <= MAX_SPHERICAL_SEPARATION)
                    })
                });
                if separated {
                    vertices.push(candidate);
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'attempt;
            }
        }
        let coords = vertices.into_iter().map(Point::into_vec).collect();
        if let Ok(simplex) = Simplex::new(model, coords) {
            return Ok(simplex);
        }
    }
    Err(Error::GenerationExhausted(attempts))
}

/// A random face of an n-simplex with between 1 and `n` vertices.
pub fn random_face(n: usize, rng: &mut SeededRng) -> FaceSelector {
    let size = 1 + rng.below(n);
    let mut pool: Vec<usize> = (0..=n).collect();
    for i in 0..size {
        let j = i + rng.below(pool.len() - i);
        pool.swap(i, j);
    }
    pool.truncate(size);
    FaceSelector::new(pool).expect("distinct, nonempty")
}

/// A random point on the face's plane: a normalized combination of the face
/// vertices with Gaussian coefficients.
pub fn random_plane_point(
    simplex: &Simplex,
    face: &FaceSelector,
    rng: &mut SeededRng,
) -> Option<Point> {
    let model = simplex.model();
    for _ in 0..1000 {
        let mut v = DVector::zeros(model.ambient_dim());
        for &i in face.indices() {
            v += simplex.vertex(i).as_vector() * rng.normal();
        }
        if let Ok(p) = model.normalize_to_manifold(v.as_slice(), simplex.tolerances()) {
            return Some(p);
        }
    }
    None
}
