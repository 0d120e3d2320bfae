//! Site percolation on the triangular lattice: finite patches, left-right
//! crossing events, the coarse-majority variant on the square grid, and
//! crossing experiments under conservative dynamics.

mod coarse;
mod experiments;
mod lattice;

pub use coarse::CoarseMajority;
pub use experiments::{
    complete_crossing_correlation, complete_switch_counts, default_padding, medium_range_correlation,
    medium_range_experiment, rhombus_crossing_probability, subbox_flip_probability, transfer_moment, travel_check,
    AxialSquare, MediumRangeRow, TransferReport,
};
pub use lattice::{LatticePatch, PatchShape};
