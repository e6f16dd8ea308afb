//! Numerical core for simulating polarization-entangled photon pairs
//! distributed over optical fiber: two-qubit states and entanglement
//! measures, single-qubit channels, fiber and detector photonics, the
//! time-bin overlap model and tomographic reconstruction.
//!
//! The crate is `no_std` with `alloc`; all randomness flows through
//! explicitly seeded generators.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod channels;
pub mod error;
pub mod linalg;
pub mod photonics;
pub mod state;
pub mod timebin;
pub mod tomography;

pub use channels::{ChiMatrix, ExtremalPurity, KrausSet};
pub use error::{Error, Result};
pub use linalg::{Mat2, Mat4, Matrix, C64};
pub use photonics::{DetectorSpec, FiberSpec, WavePacket};
pub use state::{DensityMatrix, Pauli, QubitState, Side, TwoQubitState};
pub use timebin::{PeakWeights, SweepRow, TimeBinConfig};
pub use tomography::{Acquisition, Analyzer, MeasurementRecord, MleOptions, ProjectorSetting, TomographyResult};
