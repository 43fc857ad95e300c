//! Reconstruction of partially sampled 2D/3D scientific fields with the
//! low dimensional manifold model (LDMM), discretized by the weighted
//! graph Laplacian, plus the transform-domain interpolation and
//! compression baselines it is benchmarked against.
//!
//! The crate is `no_std`-compatible (`alloc` required): disable default
//! features and enable `libm`. The default build enables `std` and
//! `parallel` (rayon-backed, with pinned reduction orders so results are
//! identical across thread counts).

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod math;
mod parallel;

pub mod baselines;
pub mod datagen;
pub mod grid;
pub mod kdtree;
pub mod ldmm;
pub mod linalg;
pub mod metrics;
pub mod patch_graph;
pub mod sampling;
pub mod sparse;
pub mod wgl;

pub use grid::{DataCube, Dims, GridError, PatchShape, SampleMask, Voxel};
pub use ldmm::{
    default_patch_shape, reconstruct, InitStrategy, IterationRecord, LdmmConfig, LdmmError,
    ReconstructionReport,
};
pub use metrics::{error_norms, ErrorReport, MetricsError};
pub use patch_graph::{NeighborList, PatchCloud};
pub use sampling::{random_mask, regular_mask, SamplingError};
pub use sparse::SparseWeights;
pub use wgl::{SolveError, SolveOptions, SolveStats, SystemError, WglSystem};
