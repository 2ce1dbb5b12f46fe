//! Structural and functional module detection.

mod finetune;
mod graph;
mod louvain;
mod metrics;
mod partition;

pub use finetune::{detect_modules, finetune_partition, modularity_report, Method, ModularityReport};
pub use graph::{correlation_matrix, functional_graph, structural_graph, CorrelationMatrix, WeightedGraph};
pub use louvain::{internal_louvain, louvain, modularity_q};
pub use metrics::{ari, ari_common, isolation};
pub use partition::Partition;
