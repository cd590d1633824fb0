//! Randomized multilevel approximation of functions from point samples.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral`]: weight functions and the ordered singular value
//!   decomposition of periodic Sobolev embeddings (frequencies and singular
//!   values), plus the spectral densities `u_m`.
//! - [`function`]: target functions as finite coefficient vectors with exact
//!   norms, projections and L² errors.
//! - [`sampling`]: seeded random streams, the base measure and the spectral
//!   measures `μ_m`, rejection sampling.
//! - [`approximation`]: the multilevel estimator and its two schedules (the
//!   doubling schedule `A_n^r` and the weak-assumption schedule `Q_m`).
//! - [`integration`]: the variance-reduced integration rule and direct
//!   simulation, with the explicit bound calculators.
//! - [`experiment`]: replicated error estimation, convergence studies and CSV
//!   output used by the `mlapprox` binary.

pub mod approximation;
pub mod error;
pub mod experiment;
pub mod function;
pub mod integration;
pub mod sampling;
pub mod spectral;

pub use approximation::{
    a_n_r, bound_constants, multilevel_run, q_m, schedule_a_n_r, schedule_q_m, Approximant,
    BoundConstants, Schedule,
};
pub use error::{Error, Result};
pub use function::{CoefficientFunction, Evaluable};
pub use integration::{direct_simulation, q_2n_r, IntegralEstimate};
pub use sampling::{ReplicationSeed, RngStream, StreamRole};
pub use spectral::{enumerate_basis, FrequencyVector, SpectralBasis, WeightSpec};

pub use num_complex::Complex64;
