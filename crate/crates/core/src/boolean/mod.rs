//! Configurations, Boolean functions, the function zoo and exact combinatorial
//! quantities (influences, pivotality, monotonicity, biased means).

mod analysis;
mod function;
pub mod zoo;

pub use analysis::{
    bias_profile, estimate_influences, influences, is_monotone, jointly_pivotal, InfluenceReport,
    JointPivotality,
};
pub use function::{BooleanFunction, DEFAULT_TABULATION_CAP, MAX_TABULATION};
pub use zoo::{zoo_build, zoo_spec, FunctionSpec, Support, ZooOptions};
