//! Structural watermarks for large unlabeled graphs.
//!
//! An owner who releases copies of a graph embeds a seeded random subgraph
//! into each copy, so that a leaked copy can later be traced back to the
//! party it was issued to, even after node ids are scrambled and edges are
//! perturbed.
//!
//! The pieces, roughly in workflow order:
//!
//! * [`graph`]: the graph type, edge-list I/O, dK-2 series and metrics.
//! * [`keys`]: graph keys, signed timestamps, seeds, groups and the registry.
//! * [`bounds`]: watermark size and uniqueness calculators.
//! * [`suitability`]: whether a graph can hide a watermark at all.
//! * [`nsd`]: node structure descriptors used to find nodes again.
//! * [`embed`] and [`extract`]: putting watermarks in and finding them.
//! * [`owner`]: issuing a watermarked copy to one user, end to end.
//! * [`attacks`]: adversaries for robustness experiments.

pub mod attacks;
pub mod bounds;
pub mod embed;
pub mod error;
pub mod extract;
pub mod graph;
pub mod hash;
pub mod keys;
pub mod nsd;
pub mod owner;
pub mod suitability;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
