//! Noise and exclusion sensitivity of Boolean functions.
//!
//! Exact Fourier-Walsh analysis, exact exclusion kernels on small vertex sets,
//! event-driven simulation of the symmetric exclusion process, couplings with
//! independent resampling, and percolation crossing experiments.

pub mod bits;
pub mod boolean;
pub mod couplings;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod kernel;
pub mod percolation;
pub mod report;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod verify;

pub use bits::{Configuration, SubsetMask};
pub use boolean::{BooleanFunction, FunctionSpec, Support};
pub use dynamics::{DynamicsGraph, GraphSpec, PermutationPath};
pub use error::{Error, Result};
pub use estimators::EstimatorResult;
pub use kernel::{LevelEigen, LevelKernel};
pub use percolation::{LatticePatch, PatchShape};
pub use spectral::Spectrum;
