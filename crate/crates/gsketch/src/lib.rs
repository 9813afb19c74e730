//! Partitioned count-min sketch estimation for graph streams.
//!
//! A global count-min sketch treats every edge the same, so heavy sources
//! crowd light ones out of shared counters. This crate instead partitions
//! the sketch width across groups of source vertices chosen from a small
//! stream sample (and optionally a query workload sample), giving each
//! group a sketch proportioned to its estimated load, plus an outlier
//! sketch for sources the sample never saw.
//!
//! Main entry points:
//!
//! - [`reservoir_sample`] / [`compute_vertex_stats`] turn a stream prefix
//!   into the statistics the planner needs.
//! - [`build_plan`] produces a deterministic [`PartitionPlan`].
//! - [`GSketchEngine`] ingests the full stream under a plan and answers
//!   edge and subgraph frequency queries; [`GlobalSketchEngine`] is the
//!   single-sketch baseline.
//! - [`save_snapshot`] / [`load_snapshot`] persist frozen engines.
//! - [`bench`] holds synthetic generators, an exact oracle, and the
//!   accuracy metrics used to compare the two engines.

pub mod bench;
pub mod engine;
pub mod error;
pub mod partition;
pub mod sketch;
pub mod snapshot;
pub mod stream;

pub use engine::{
    apply_aggregate, Aggregate, AggregateValue, GSketchEngine, GlobalSketchEngine, SubgraphQuery,
};
pub use error::{GsError, Result};
pub use partition::{
    build_plan, verify_collision_bound, LeafKind, PartitionConfig, PartitionPlan, PlanLeaf,
    Scenario,
};
pub use sketch::{fingerprint, sub_seed, CountMinSketch, SketchDims};
pub use snapshot::{load_snapshot, parse_snapshot, save_snapshot, Snapshot};
pub use stream::{
    compute_vertex_stats, compute_workload_weights, parse_stream_line, read_stream,
    reservoir_sample, write_stream, DataSample, EdgeKey, Ratio, StreamElement, VertexLabel,
    VertexStats, WorkloadWeights,
};
