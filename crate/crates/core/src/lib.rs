//! Desk-scale reproduction of a hybrid quantum fine-tuning head and its
//! energy-to-solution methodology.
//!
//! The crate is organized around the stages of that study:
//!
//! - [`qsim`] — exact statevector simulation of RotY/CNot circuits with shot
//!   sampling and Monte Carlo Pauli noise,
//! - [`mps`] — a matrix-product-state backend with bond truncation and its
//!   cost model,
//! - [`ansatz`] — deterministic construction of the data re-uploading
//!   classifier circuit and its gate accounting,
//! - [`mitigation`] — qubit-permutation debiasing, histogram aggregation
//!   (mean and non-linear power-law filter), bias correction, classification,
//! - [`pipeline`] — embedding datasets, the linear encoder, parameter-shift
//!   training, end-to-end inference, and a logistic-regression baseline,
//! - [`energy`] — analytic QPU/GPU energy models, scaling fits, break-even
//!   solving,
//! - [`powerlog`] — power-trace ingestion, per-job energy integration, and
//!   power/qubit correlation.

pub mod ansatz;
pub mod energy;
pub mod mitigation;
pub mod mps;
pub mod pipeline;
pub mod powerlog;
pub mod qsim;
pub mod seeding;

pub use qsim::{Circuit, Gate, Histogram, NoiseParams, StateVector};
