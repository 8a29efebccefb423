//! Wasserstein identity testing over finite metric spaces.

pub mod error;
pub mod generators;
pub mod harness;
pub mod l1;
pub mod metric;
pub mod nets;
pub mod sampling;
pub mod tree;
pub mod wit;

pub use error::{Result, WitError};
pub use metric::{build_space, l1_distance, wasserstein_exact, Distribution, FiniteMetricSpace, PointMetric};
pub use nets::{build_hierarchy, NetHierarchy, NetLevel};
pub use tree::{embed, TreeEmbedding};
