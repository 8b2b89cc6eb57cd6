//! Entanglement detection from correlations measured along random local
//! directions.
//!
//! The crate is organised around the full correlation tensor of an N-party
//! state. From it follow the length of correlations `C` (sum of squared
//! tensor entries), the random correlations `R = C / 3^N` (mean squared
//! correlation over sphere-uniform settings) and the single-setting
//! correlation value `E(u_1, ..., u_N)`. Pure states satisfy `C >= 1` with
//! equality exactly on product states, which turns `R` into an entanglement
//! identifier.
//!
//! * [`states`]: pure and mixed N-party states and their constructors.
//! * [`correlations`]: tensors, `C`, `R`, the two-copy operator and the
//!   reference-qubit measurement model.
//! * [`witness`]: product-state statistics and the statistical witness.
//! * [`shotsim`]: finite-statistics experiments (M settings, K shots).
//! * [`qudit`]: SU(d) generalisation via generalized Gell-Mann matrices.
//!
//! Index conventions: party 1 is the most significant index of amplitude
//! vectors and of correlation tensors; tensor axes are ordered `(x, y, z)`.

pub mod correlations;
pub mod error;
pub mod format;
pub mod qudit;
pub mod rng;
pub mod shotsim;
pub mod states;
pub mod stats;
pub mod witness;

pub use correlations::{BlochVector, CorrelationTensor, SettingTuple};
pub use error::{Error, Result};
pub use qudit::{GeneratorBasis, QuditCorrelationTensor};
pub use shotsim::{ExperimentConfig, ExperimentResult, RunRecord, Shots};
pub use states::{DensityMatrix, LocalRotationSet, PureState, State};
pub use witness::{BoundMode, ConfidenceLevel, Sidedness, WitnessVerdict};

pub use num_complex::Complex64;

/// Numeric tolerance for every state and tensor validation.
pub const TOLERANCE: f64 = 1e-9;

/// Version tag written into every JSON document the crate produces.
pub const SCHEMA_VERSION: u32 = 1;
