//! Open-quantum-system propagation and verification of entropy–energy bounds
//! derived from energy bookkeeping against an entropy-matched Gibbs reference.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense complex Hermitian algebra (Jacobi eigensolver, spectral maps).
//! - [`qstate`]: entropies, relative entropy, dephasing, Gibbs states.
//! - [`refsolve`]: the entropy-matching condition for the reference inverse temperature.
//! - [`lindblad`]: RK4 propagation of the Lindblad equation with heat/work accumulators.
//! - [`thermo`]: per-sample bound records for undriven and driven systems.
//! - [`models`]: the Rydberg Bell-state preparation and driven-qubit erasure models.

// `!(x <= tol)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod models;
pub mod qstate;
pub mod refsolve;
pub mod thermo;

pub use error::{Error, Result};
pub use linalg::{eigh, spectral_map, trace_product, ComplexMatrix, EigenSystem};
pub use lindblad::{propagate, Diagnostics, JumpChannel, LindbladModel, Protocol, Trajectory};
pub use qstate::{DensityMatrix, ReferenceState, ThermoSample};
pub use refsolve::{solve_beta, BetaSolveResult, Branch};
pub use thermo::{BoundDirection, DrivenBounds, NlpComparison, SampleFlag, UndrivenBounds};

pub use num_complex::Complex64;
