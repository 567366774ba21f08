//! Weighted benchmark networks with planted communities, weighted and
//! unweighted community detection, and a selector that predicts from two
//! clustering-coefficient features which class of detector will do best.

pub mod copra;
pub mod graph;
pub mod harness;
pub mod infomap;
pub mod lfr;
pub mod metrics;
pub mod seed;
pub mod selector;

pub use graph::{Graph, GraphError, Partition};
pub use lfr::{generate, measured_mixing, GenError, GenParams, PlantedNetwork};
pub use metrics::{mean_clustering, modularity, nmi, ClusteringSummary};
pub use selector::{ClassLabel, FeatureVector, SelectorModel};
