//! Graph-based rank fusion for multimodal prediction.
//!
//! Each sample is ranked against a response set by several rankers
//! (descriptor + comparator). The ranks of a query are merged into a
//! weighted directed fusion graph, the graph is embedded as a sparse fusion
//! vector, and a linear one-vs-rest estimator is trained over the vectors.
//!
//! Module map:
//!
//! * [`dataset`]: sample ids, feature/label tables, stratified splits,
//!   artifact files.
//! * [`ranker`]: comparators, cut-off ranks, normalization, rank store.
//! * [`fusion_graph`]: fusion-graph extraction.
//! * [`embedding`]: FV-V, FV-H and codebook-based FV-K embeddings.
//! * [`learn`]: linear estimators and the fusion baselines.
//! * [`evalx`]: balanced accuracy, AP@K, mAP, reports.
//! * [`pipeline`]: config-driven training, inference, baselines, L sweeps.
//! * [`synth`]: synthetic two-modality dataset generator.

pub mod dataset;
pub mod embedding;
pub mod error;
pub mod evalx;
pub mod fusion_graph;
pub mod learn;
pub mod pipeline;
pub mod ranker;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
