#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN on purpose

//! Covariate screening and single-index estimation for conditional
//! extreme value indices.
//!
//! The crate estimates how the extreme value index (EVI) of a positive
//! response depends on high-dimensional covariates:
//!
//! 1. **Screening** ranks covariates by the mean squared deviation of a
//!    kernel conditional Pickands estimator from the marginal Pickands
//!    estimate, keeping the top of the ranking (`screening`).
//! 2. **Single-index fit** estimates a direction with a tail linear
//!    quantile regression, then runs a kernel-weighted generalized Pareto
//!    likelihood along the index (`quantreg`, `gp`).
//! 3. **Tuning** selects the effective tail size k, the bandwidth h, and
//!    the model size from goodness-of-fit discrepancies (`tuning`).
//! 4. **Simulation** reproduces the benchmark experiment tables at
//!    configurable scale (`simulation`), and `pipeline` provides CSV
//!    ingestion plus the end-to-end commands behind the thin CLI.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod core;
pub mod error;
pub mod evi;
pub mod gp;
pub mod kernel;
mod linalg;
mod optim;
pub mod pipeline;
pub mod quantreg;
pub mod screening;
pub mod simulation;
pub mod tuning;

pub use crate::core::{Bandwidth, Dataset, IntermediateOrder};
pub use crate::error::{Error, Result};
pub use crate::kernel::Kernel;
