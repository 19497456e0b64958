//! Wilson's algorithm and uniform spanning forests on boxes of `Z^d`.
//!
//! The crate samples uniform spanning trees of finite multigraphs, wired
//! uniform spanning forests on lattice boxes, and the coupled constructions
//! used to compare forests seen from different walk starting times.

pub mod graph;
pub mod rng;
pub mod walks;
pub mod wilson;
pub mod forest;
pub mod oracle;
pub mod stats;
pub mod coupling;
pub mod experiments;
