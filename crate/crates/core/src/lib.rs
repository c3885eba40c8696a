//! Matched projections, projection distances, canonical forms and
//! numerical ranges of idempotent matrices and their grid models.

pub mod analysis;
pub mod canonical;
pub mod distance;
pub mod error;
pub mod grid;
pub mod idempotent;
pub mod io;
pub mod linalg;
pub mod nrange;
pub mod tol;

pub use error::{Error, Result};
pub use idempotent::{random_idempotent, BlockForm, Idempotent};
pub use linalg::{ComplexMatrix, C64};
