// `!(x <= tol)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod error;
pub mod forms;
pub mod linalg;
pub mod oracle;
pub mod projection;
pub mod rng;
pub mod simplex;

pub use error::{Error, Result};
pub use forms::{Geometry, Model, Point, Tolerances};
pub use oracle::{oracle_project, random_simplex, OracleOptions};
pub use projection::{FaceSelector, ProjectionResult};
pub use rng::SeededRng;
pub use simplex::{build_simplex, Simplex};
