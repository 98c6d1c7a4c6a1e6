//! Algorithmic core of a point-voxel transformer 3D detection pipeline.
//!
//! The crate covers the geometry and search primitives such a pipeline is
//! built from: spherical range-image construction with CSR pixel buckets and
//! an accelerated ball query, voxel-grid KNN with conquer-fetch query
//! deduplication, farthest-point sampling with semantic weighting, query
//! initialization over BEV grids, a multi-head cross-attention block for
//! fusing voxel and point tokens, and the detection loss suite (segmentation,
//! offset, centerness classification, decoupled box regression).
//!
//! Everything here is deterministic: randomness flows through [`SeededRng`],
//! float math goes through `libm` so results are bit-identical across
//! platforms, and every accelerated search has a brute-force counterpart in
//! the same module for oracle testing.
//!
//! The crate is `no_std` (with `alloc`); file formats, CLI, scene synthesis,
//! and wall-clock benchmarks live in the companion `pointvoxel-cli` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub(crate) mod fm;

pub mod attn;
pub mod augment;
pub mod cloud;
pub mod error;
pub mod geom;
pub mod knn;
pub mod loss;
pub mod matrix;
pub mod query;
pub mod range_image;
pub mod rng;
pub mod sample;
pub mod tokens;
pub mod voxel;

pub use cloud::PointCloud;
pub use error::CoreError;
pub use geom::{BoundingBox3D, RigidTransform, SphericalCoordinate, Vec3};
pub use matrix::Matrix;
pub use rng::SeededRng;
