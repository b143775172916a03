//! Noisy voter model observed at a single vertex.
//!
//! Forward simulation of the root's observation sequence, the dual system of
//! coalescing backward paths, exact meeting probabilities for standard graph
//! families, repetition statistics over traces, and two-graph comparison
//! experiments.

pub mod acceptance;
pub mod distinguish;
pub mod error;
pub mod genealogy;
pub mod graph;
pub mod oracles;
pub mod report;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use genealogy::{
    Estimate, MeetPattern, MeetingEstimates, Partition, PatternDistribution, PatternEvent,
};
pub use graph::{Family, FamilySpec, Graph, Lattice, RootedGraph, Side, Site};
pub use sim::{Trace, WindowDistribution};
