//! Finite-dimensional two-particle quantum states: construction, projective
//! measurement, tomography, angular-momentum coupling and entanglement
//! classification.

pub mod classify;
pub mod coupling;
pub mod error;
pub mod io;
pub mod ladder;
pub mod matcore;
pub mod measurement;
pub mod random;
pub mod states;
pub mod tomography;

pub use classify::{classify_state, Classification, Verdict};
pub use coupling::{CoupledBasis, CoupledWeights, HalfInt, ManifoldPoint};
pub use error::{Error, Result};
pub use matcore::{BipartiteDims, ComplexMatrix, Subsystem, C64};
pub use measurement::{Analyzer, JointDistribution};
pub use states::{BlochParams, DensityMatrix, Dims, StateVector};
pub use tomography::{SeriesMode, TomographySeries};
