//! Exact exclusion kernels on each level of subsets, their eigen-analysis,
//! and the exact correlation formulas built from them.
//!
//! The exclusion semigroup preserves `span{χ_S : |S| = k}`, and on it acts
//! through `P_t(S, S′) = P(π_t(S) = S′)`, so everything reduces to one
//! finite symmetric Markov chain per level.

mod correlation;
mod eigen;
mod generator;
mod uniformization;

pub use correlation::{
    exact_absolute_correlation, exact_absolute_correlation_with, exact_exclusion_correlation,
    exact_exclusion_correlation_with, singularity_diagnostic, singularity_diagnostic_with, SingularityReport,
};
pub use eigen::{level_eigen, level_vector, phi_mass, phi_mass_with, LevelEigen, PhiMass, RATE_TOLERANCE};
pub use generator::{level_generator, level_generator_with, KernelCaps, LevelGenerator};
pub use uniformization::{kernel_apply, kernel_at, LevelKernel, TAIL_MASS};
