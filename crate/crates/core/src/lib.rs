//! Stability radii, transfer-function suprema and input-output operator
//! norms for finite-dimensional linear systems under ℓp norms.

pub mod error;
pub mod ionorm;
pub mod nonaut;
pub mod numcore;
pub mod par;
pub mod radius;
pub mod syscheck;
pub mod transfer;

pub use error::{Error, Result};
pub use numcore::{ComplexMatrix, NormSpec, C64};
