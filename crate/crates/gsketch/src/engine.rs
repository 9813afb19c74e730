//! Runtime engines: the partitioned gSketch engine routing each edge to the
//! leaf sketch owning its source vertex (or the outlier sketch), and the
//! single-sketch Global Sketch baseline.

use std::collections::BTreeMap;

use crate::error::{GsError, Result};
use crate::partition::PartitionPlan;
use crate::sketch::{sub_seed, CountMinSketch};
use crate::stream::{EdgeKey, StreamElement, VertexLabel};

/// Aggregate applied to a subgraph query's per-edge estimates. Benchmarks
/// default to SUM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Sum,
    Min,
    Average,
}

impl std::str::FromStr for Aggregate {
    type Err = GsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(Aggregate::Sum),
            "min" => Ok(Aggregate::Min),
            "average" | "avg" => Ok(Aggregate::Average),
            other => Err(GsError::MalformedQuery(format!("unknown aggregate {other:?}"))),
        }
    }
}

/// An aggregate subgraph query: a non-empty bag of directed edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgraphQuery {
    pub edges: Vec<(VertexLabel, VertexLabel)>,
    pub aggregate: Aggregate,
}

impl SubgraphQuery {
    pub fn new(edges: Vec<(VertexLabel, VertexLabel)>, aggregate: Aggregate) -> Result<Self> {
        if edges.is_empty() {
            return Err(GsError::MalformedQuery("subgraph query has no edges".into()));
        }
        Ok(SubgraphQuery { edges, aggregate })
    }
}

/// Exact rational result of an aggregate; AVERAGE keeps its denominator
/// instead of rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggregateValue {
    pub num: u64,
    pub den: u64,
}

impl AggregateValue {
    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

pub fn apply_aggregate(aggregate: Aggregate, values: &[u64]) -> Result<AggregateValue> {
    if values.is_empty() {
        return Err(GsError::MalformedQuery("aggregate over no values".into()));
    }
    let value = match aggregate {
        Aggregate::Sum => AggregateValue {
            num: values.iter().sum(),
            den: 1,
        },
        Aggregate::Min => AggregateValue {
            num: *values.iter().min().unwrap(),
            den: 1,
        },
        Aggregate::Average => AggregateValue {
            num: values.iter().sum(),
            den: values.len() as u64,
        },
    };
    Ok(value)
}

/// The partitioned engine: one CountMin sketch per plan leaf plus the
/// outlier sketch for unrouted source vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct GSketchEngine {
    routing: BTreeMap<VertexLabel, u32>,
    leaves: Vec<CountMinSketch>,
    outlier: CountMinSketch,
    depth: u64,
    ingested_mass: u64,
    frozen: bool,
}

impl GSketchEngine {
    /// Materializes a plan into zeroed sketches. Each leaf and the outlier
    /// get independent hash seeds derived from `seed`.
    pub fn build(plan: &PartitionPlan, seed: u64) -> Result<Self> {
        let leaves = plan
            .leaves
            .iter()
            .map(|leaf| {
                if leaf.width == 0 {
                    return Err(GsError::PlanInvalid(format!("leaf {} has width 0", leaf.id)));
                }
                CountMinSketch::with_dims(
                    leaf.width,
                    plan.depth,
                    sub_seed(seed, &format!("leaf/{}", leaf.id)),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let outlier =
            CountMinSketch::with_dims(plan.outlier_width, plan.depth, sub_seed(seed, "outlier"))?;
        Ok(GSketchEngine {
            routing: plan.routing(),
            leaves,
            outlier,
            depth: plan.depth,
            ingested_mass: 0,
            frozen: false,
        })
    }

    fn sketch_for(&self, src: &VertexLabel) -> &CountMinSketch {
        match self.routing.get(src) {
            Some(&leaf) => &self.leaves[leaf as usize],
            None => &self.outlier,
        }
    }

    pub fn ingest(&mut self, element: &StreamElement) -> Result<()> {
        if self.frozen {
            return Err(GsError::Config("engine is frozen".into()));
        }
        let key = element.key();
        let sketch = match self.routing.get(&element.src) {
            Some(&leaf) => &mut self.leaves[leaf as usize],
            None => &mut self.outlier,
        };
        sketch.update(&key, element.freq)?;
        self.ingested_mass = self
            .ingested_mass
            .checked_add(element.freq)
            .ok_or(GsError::CounterOverflow)?;
        Ok(())
    }

    /// Ends the ingest phase; the engine becomes read-only and safe for
    /// concurrent querying.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn ingested_mass(&self) -> u64 {
        self.ingested_mass
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaf_sketch(&self, id: u32) -> Option<&CountMinSketch> {
        self.leaves.get(id as usize)
    }

    pub fn outlier_sketch(&self) -> &CountMinSketch {
        &self.outlier
    }

    /// Leaf id answering queries sourced at `src`, or None for the outlier.
    pub fn route_of(&self, src: &VertexLabel) -> Option<u32> {
        self.routing.get(src).copied()
    }

    pub fn estimate_edge(&self, src: &VertexLabel, dst: &VertexLabel) -> u64 {
        self.sketch_for(src).estimate(&EdgeKey::directed(src, dst))
    }

    pub fn estimate_subgraph(&self, query: &SubgraphQuery) -> Result<AggregateValue> {
        let estimates: Vec<u64> = query
            .edges
            .iter()
            .map(|(src, dst)| self.estimate_edge(src, dst))
            .collect();
        apply_aggregate(query.aggregate, &estimates)
    }

    pub(crate) fn parts(
        &self,
    ) -> (
        &BTreeMap<VertexLabel, u32>,
        &[CountMinSketch],
        &CountMinSketch,
        u64,
        u64,
    ) {
        (
            &self.routing,
            &self.leaves,
            &self.outlier,
            self.depth,
            self.ingested_mass,
        )
    }

    pub(crate) fn from_parts(
        routing: BTreeMap<VertexLabel, u32>,
        leaves: Vec<CountMinSketch>,
        outlier: CountMinSketch,
        depth: u64,
        ingested_mass: u64,
    ) -> Self {
        GSketchEngine {
            routing,
            leaves,
            outlier,
            depth,
            ingested_mass,
            frozen: true,
        }
    }
}

/// The baseline: every element lands in one sketch sized to the full
/// byte budget.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSketchEngine {
    sketch: CountMinSketch,
    frozen: bool,
}

impl GlobalSketchEngine {
    pub fn build(byte_budget: u64, depth: u64, seed: u64) -> Result<Self> {
        let width = CountMinSketch::width_for_budget(byte_budget, depth)?;
        Ok(GlobalSketchEngine {
            sketch: CountMinSketch::with_dims(width, depth, sub_seed(seed, "global"))?,
            frozen: false,
        })
    }

    pub fn ingest(&mut self, element: &StreamElement) -> Result<()> {
        if self.frozen {
            return Err(GsError::Config("engine is frozen".into()));
        }
        self.sketch.update(&element.key(), element.freq)
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn ingested_mass(&self) -> u64 {
        self.sketch.total_mass()
    }

    pub fn sketch(&self) -> &CountMinSketch {
        &self.sketch
    }

    pub fn estimate_edge(&self, src: &VertexLabel, dst: &VertexLabel) -> u64 {
        self.sketch.estimate(&EdgeKey::directed(src, dst))
    }

    pub fn estimate_subgraph(&self, query: &SubgraphQuery) -> Result<AggregateValue> {
        let estimates: Vec<u64> = query
            .edges
            .iter()
            .map(|(src, dst)| self.estimate_edge(src, dst))
            .collect();
        apply_aggregate(query.aggregate, &estimates)
    }

    pub(crate) fn from_sketch(sketch: CountMinSketch) -> Self {
        GlobalSketchEngine {
            sketch,
            frozen: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{build_plan, PartitionConfig, Scenario};
    use crate::stream::{DataSample, StreamElement};

    fn v(s: &str) -> VertexLabel {
        VertexLabel::new(s).unwrap()
    }

    fn el(src: &str, dst: &str, freq: u64) -> StreamElement {
        StreamElement::new(v(src), v(dst), freq, 0).unwrap()
    }

    fn small_plan() -> crate::partition::PartitionPlan {
        let sample = DataSample {
            elements: vec![el("a", "b", 1), el("b", "c", 9), el("c", "d", 2), el("d", "a", 30)],
            capacity: 8,
        };
        let cfg = PartitionConfig {
            total_width: 64,
            depth: 3,
            w0: 4,
            // Tight collision bound so this small sample still splits.
            c: 0.01,
            outlier_fraction: 0.1,
            scenario: Scenario::DataOnly,
        };
        build_plan(&sample, &cfg, None).unwrap()
    }

    #[test]
    fn build_materializes_plan_dims() {
        let plan = small_plan();
        let engine = GSketchEngine::build(&plan, 7).unwrap();
        assert_eq!(engine.leaf_count(), plan.leaves.len());
        for leaf in &plan.leaves {
            let sketch = engine.leaf_sketch(leaf.id).unwrap();
            assert_eq!(sketch.dims().width, leaf.width);
            assert_eq!(sketch.dims().depth, plan.depth);
            assert_eq!(sketch.total_mass(), 0);
        }
        assert_eq!(engine.outlier_sketch().dims().width, plan.outlier_width);
    }

    #[test]
    fn build_is_deterministic() {
        let plan = small_plan();
        let a = GSketchEngine::build(&plan, 7).unwrap();
        let b = GSketchEngine::build(&plan, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn routed_ingest_touches_only_its_leaf() {
        let plan = small_plan();
        let mut engine = GSketchEngine::build(&plan, 7).unwrap();
        let leaf = engine.route_of(&v("a")).unwrap();
        engine.ingest(&el("a", "b", 5)).unwrap();
        assert_eq!(engine.leaf_sketch(leaf).unwrap().total_mass(), 5);
        assert_eq!(engine.outlier_sketch().total_mass(), 0);
    }

    #[test]
    fn unrouted_ingest_falls_to_outlier() {
        let plan = small_plan();
        let mut engine = GSketchEngine::build(&plan, 7).unwrap();
        engine.ingest(&el("zzz", "b", 4)).unwrap();
        assert_eq!(engine.outlier_sketch().total_mass(), 4);
        assert_eq!(engine.estimate_edge(&v("zzz"), &v("b")), 4);
    }

    #[test]
    fn mass_is_conserved_across_sketches() {
        let plan = small_plan();
        let mut engine = GSketchEngine::build(&plan, 7).unwrap();
        let stream = vec![
            el("a", "b", 1),
            el("b", "c", 9),
            el("zz", "q", 3),
            el("d", "a", 30),
            el("d", "a", 2),
        ];
        let mut total = 0;
        for e in &stream {
            engine.ingest(e).unwrap();
            total += e.freq;
        }
        assert_eq!(engine.ingested_mass(), total);
        let sketch_total: u64 = (0..engine.leaf_count() as u32)
            .map(|i| engine.leaf_sketch(i).unwrap().total_mass())
            .sum::<u64>()
            + engine.outlier_sketch().total_mass();
        assert_eq!(sketch_total, total);
    }

    #[test]
    fn partition_isolation() {
        // Ingesting into one leaf never changes answers from another.
        let plan = small_plan();
        let mut engine = GSketchEngine::build(&plan, 7).unwrap();
        let la = engine.route_of(&v("a")).unwrap();
        let lb = engine.route_of(&v("d")).unwrap();
        assert_ne!(la, lb, "fixture must route a and d to different leaves");
        engine.ingest(&el("d", "a", 11)).unwrap();
        let before = engine.estimate_edge(&v("a"), &v("b"));
        engine.ingest(&el("d", "x", 100)).unwrap();
        assert_eq!(engine.estimate_edge(&v("a"), &v("b")), before);
    }

    #[test]
    fn single_edge_stream_is_exact() {
        let plan = small_plan();
        let mut engine = GSketchEngine::build(&plan, 7).unwrap();
        engine.ingest(&el("a", "b", 6)).unwrap();
        assert_eq!(engine.estimate_edge(&v("a"), &v("b")), 6);
        assert_eq!(engine.estimate_edge(&v("a"), &v("nope")), 0);
    }

    #[test]
    fn frozen_engine_rejects_ingest() {
        let plan = small_plan();
        let mut engine = GSketchEngine::build(&plan, 7).unwrap();
        engine.freeze();
        assert!(engine.ingest(&el("a", "b", 1)).is_err());
    }

    #[test]
    fn subgraph_aggregates() {
        let plan = small_plan();
        let mut engine = GSketchEngine::build(&plan, 7).unwrap();
        engine.ingest(&el("a", "b", 3)).unwrap();
        engine.ingest(&el("b", "c", 4)).unwrap();
        let edges = vec![(v("a"), v("b")), (v("b"), v("c"))];
        let sum = engine
            .estimate_subgraph(&SubgraphQuery::new(edges.clone(), Aggregate::Sum).unwrap())
            .unwrap();
        assert_eq!(sum, AggregateValue { num: 7, den: 1 });
        let min = engine
            .estimate_subgraph(&SubgraphQuery::new(edges.clone(), Aggregate::Min).unwrap())
            .unwrap();
        assert_eq!(min, AggregateValue { num: 3, den: 1 });
        let avg = engine
            .estimate_subgraph(&SubgraphQuery::new(edges, Aggregate::Average).unwrap())
            .unwrap();
        assert_eq!(avg, AggregateValue { num: 7, den: 2 });
        assert!(SubgraphQuery::new(vec![], Aggregate::Sum).is_err());
    }

    #[test]
    fn global_engine_basics() {
        let mut engine = GlobalSketchEngine::build(1024, 3, 5).unwrap();
        assert_eq!(engine.sketch().dims().width, 1024 / 24);
        engine.ingest(&el("a", "b", 3)).unwrap();
        assert_eq!(engine.estimate_edge(&v("a"), &v("b")), 3);
        assert_eq!(engine.estimate_edge(&v("never"), &v("seen")), 0);
        assert!(GlobalSketchEngine::build(7, 1, 0).is_err());
        // Budget for exactly one cell per row: everything collides.
        let mut tiny = GlobalSketchEngine::build(8 * 2, 2, 0).unwrap();
        tiny.ingest(&el("a", "b", 1)).unwrap();
        tiny.ingest(&el("c", "d", 1)).unwrap();
        assert_eq!(tiny.estimate_edge(&v("a"), &v("b")), 2);
    }
}
