//! Graph-based semi-supervised classification under labeled-class imbalance,
//! with INNO label balancing in front of harmonic (GFHF) and local/global
//! consistency (LGC) propagation.

pub mod dataset;
pub mod error;
pub mod graph;
pub mod harness;
pub mod inno;
pub mod metrics;
pub mod propagation;

pub use dataset::{Dataset, LabeledSplit};
pub use error::{Error, Result};
pub use graph::{build_knn_graph, Graph, LaplacianBundle};
pub use harness::{Arm, DatasetSpec, Experiment, ExperimentConfig, Method, ResultRow, StopRule};
pub use inno::{inno_balance, InnoOutcome, LabelState, StopParameter, VarianceDivisor};
pub use metrics::{confusion, overall_accuracy, ConfusionMatrix};
pub use propagation::{cmn_adjust, gfhf_propagate, lgc_propagate, predict, LabelMatrix, ScoreMatrix};
