//! Exclusion dynamics: rate-weighted graphs, the random transposition path
//! `π_t`, and the operations that move configurations and sets along it.

mod graph;
mod ops;
mod path;

pub use graph::{
    axial_norm2, axial_position, graph_build, DynamicsGraph, Edge, EdgeSet, GraphFamily, GraphSpec, RangeGeometry,
};
pub use ops::{
    count_switches, evolve, evolve_mask, permutation, snps, snps_mask, swap_bits, transfer_count, transport,
    TrajectoryStats,
};
pub use path::{sample_path, Event, PathSampler, PermutationPath};
