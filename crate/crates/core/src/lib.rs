//! Privacy-preserving search for targeted subpopulations in graphs.
//!
//! Vertices are split into a targeted and a protected class. Searches discover
//! targeted vertices through an identity oracle while the privacy of protected
//! vertices is guarded by calibrated Laplace noise.

pub mod audit;
pub mod dp;
pub mod error;
pub mod flow;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod infection;
pub mod proximity;
pub mod search;

pub use dp::{Epsilon, NoiseSource, PrivacyLedger};
pub use error::{Error, Result};
pub use graph::{Graph, IdMap, IdentityOracle, LoadedGraph, Population, VertexId, VertexSet};
pub use infection::{infect, InfectionConfig};
pub use num_rational::BigRational;
pub use proximity::{ProximityStatistic, Sop, SopDescriptor};
pub use search::{
    ptarget, search_com, sfs, target, HaltReason, NoiseMode, SearchParams, SearchTrace,
};
