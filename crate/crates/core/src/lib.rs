//! Experiment design for quantum state tomography.
//!
//! Measurement designs are scored by the determinant of the prior-averaged
//! mean quadratic error matrix of the linear inversion estimator. The crate
//! builds the pieces of that objective, minimizes it over POVMs and von
//! Neumann families, and checks the complementarity and (conditional) SIC
//! structure of the optima, both in closed form and by simulation.
//!
//! Conventions: states are `ρ = I/n + Σ θ_j σ_j` over an orthonormal
//! traceless Hermitian basis ([`basis::OperatorBasis`]); all Bloch vectors
//! and error matrices are in this canonical scale unless a function says
//! otherwise.

// Guards are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod measurement;
pub mod optimizer;
pub mod prior;
pub mod random;
pub mod serde_matrix;
pub mod simplex;
pub mod simulator;

pub use error::{Error, Result};
