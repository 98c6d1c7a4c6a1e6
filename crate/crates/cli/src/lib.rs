//! Companion crate to `pointvoxel-core`: synthetic scenes, the end-to-end
//! pipeline driver, file formats, and the benchmark suite. Everything here
//! needs `std` (filesystem, wall clocks); the algorithms live in the core
//! crate.

pub mod bench;
pub mod config;
pub mod io;
pub mod pipeline;
pub mod scene;
