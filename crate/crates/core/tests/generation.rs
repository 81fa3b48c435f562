use kplane_core::oracle::random_face;
use kplane_core::oracle::random_point;
use kplane_core::projection::project_to_face;
use kplane_core::{oracle_project, random_simplex, Error, Geometry, OracleOptions, SeededRng};

#[test]
fn generator_always_succeeds() {
    for geometry in [Geometry::Hyperbolic, Geometry::Spherical] {
        for n in 2..=6 {
            for seed in 0..500 {
                let s = random_simplex(geometry, n, seed)
                    .unwrap_or_else(|e| panic!("{geometry} n={n} seed={seed}: {e}"));
                assert_eq!(s.dim(), n);
            }
        }
    }
}

#[test]
fn generator_is_deterministic() {
    for geometry in [Geometry::Hyperbolic, Geometry::Spherical] {
        let a = random_simplex(geometry, 4, 7).unwrap();
        let b = random_simplex(geometry, 4, 7).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert_ne!(
            a.vertices(),
            random_simplex(geometry, 4, 8).unwrap().vertices()
        );
    }
}

#[test]
fn zero_dimension_is_rejected() {
    assert!(matches!(
        random_simplex(Geometry::Spherical, 0, 1),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn refining_the_oracle_grid_does_not_move_the_answer() {
    let coarse = OracleOptions::default();
    let fine = OracleOptions {
        coarse_grid_points_per_dim: 2 * coarse.coarse_grid_points_per_dim,
        max_coarse_points: 4 * coarse.max_coarse_points,
        ..coarse
    };
    let tol = kplane_core::Tolerances::default();
    for geometry in [Geometry::Hyperbolic, Geometry::Spherical] {
        for n in 2..=4 {
            let s = random_simplex(geometry, n, 11).unwrap();
            let mut rng = SeededRng::new(n as u64);
            let face = random_face(n, &mut rng);
            let p = random_point(geometry, n, 0.0, 2.0, &mut rng);
            if let Err(Error::ProjectionUndefined(_)) = project_to_face(&s, &face, &p, &tol) {
                continue;
            }
            let a = oracle_project(&s, &face, &p, &coarse).unwrap();
            let b = oracle_project(&s, &face, &p, &fine).unwrap();
            assert!((a.distance - b.distance).abs() <= 1e-7, "{geometry} n={n}");
        }
    }
}
