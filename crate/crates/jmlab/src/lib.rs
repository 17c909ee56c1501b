//! # jmlab — a joint-measurement laboratory
//!
//! Finite-dimensional quantum joint measurements, end to end: joint POVMs
//! and their marginals, measuring-process dilations, noise operators and
//! noise statistics, the full chain of joint-measurement uncertainty
//! relations, canonical example models, and a numerical search for
//! noise-minimizing measurements.
//!
//! The narrative guide lives in `book/`; its code snippets are compiled and
//! run as doctests through the [`guide`] module, so the book cannot drift
//! from the library.

pub mod error;
pub mod gallery;
pub mod guide;
pub mod metrics;
pub mod operators;
pub mod povm;
pub mod process;
pub mod relations;
pub mod sample;
pub mod scenario;
pub mod search;
pub mod tol;

pub use error::{Error, Result};
pub use operators::{DensityMatrix, Operator, SpectralDecomposition, StateVector};
pub use povm::{Axis, JointPovm, MarginalPovm, MomentOrder, OutcomeGrid};
pub use process::{Ancilla, MeasuringProcess, NoiseOperator};
pub use tol::Tolerances;
