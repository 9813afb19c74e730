//! Benchmark harness: synthetic stream and workload generators, an exact
//! brute-force oracle, query-set builders, and the accuracy metrics used to
//! compare the partitioned engine against the global baseline.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{apply_aggregate, Aggregate, GSketchEngine, GlobalSketchEngine, SubgraphQuery};
use crate::error::{GsError, Result};
use crate::partition::{build_plan, PartitionConfig, Scenario};
use crate::sketch::{sub_seed, CountMinSketch};
use crate::stream::{
    compute_workload_weights, reservoir_sample, DataSample, StreamElement, VertexLabel,
};

/// Default effective-query threshold.
pub const DEFAULT_G0: f64 = 5.0;

/// Exact per-edge frequency table over an ingested stream. Desk-scale only:
/// memory grows with the distinct-edge count.
#[derive(Debug, Clone, Default)]
pub struct ExactOracle {
    edges: HashMap<(VertexLabel, VertexLabel), u64>,
    by_src: BTreeMap<VertexLabel, BTreeMap<VertexLabel, u64>>,
}

impl ExactOracle {
    pub fn build<'a, I>(stream: I) -> Self
    where
        I: IntoIterator<Item = &'a StreamElement>,
    {
        let mut oracle = ExactOracle::default();
        for e in stream {
            *oracle
                .edges
                .entry((e.src.clone(), e.dst.clone()))
                .or_insert(0) += e.freq;
            *oracle
                .by_src
                .entry(e.src.clone())
                .or_default()
                .entry(e.dst.clone())
                .or_insert(0) += e.freq;
        }
        oracle
    }

    pub fn truth(&self, src: &VertexLabel, dst: &VertexLabel) -> u64 {
        self.edges
            .get(&(src.clone(), dst.clone()))
            .copied()
            .unwrap_or(0)
    }

    pub fn distinct_edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Distinct edges in deterministic (source, destination) order.
    pub fn distinct_edges(&self) -> Vec<(VertexLabel, VertexLabel)> {
        self.by_src
            .iter()
            .flat_map(|(src, dsts)| dsts.keys().map(move |dst| (src.clone(), dst.clone())))
            .collect()
    }

    pub fn source_vertices(&self) -> Vec<VertexLabel> {
        self.by_src.keys().cloned().collect()
    }

    pub fn out_edges(&self, src: &VertexLabel) -> Option<&BTreeMap<VertexLabel, u64>> {
        self.by_src.get(src)
    }

    pub fn total_mass(&self) -> u64 {
        self.edges.values().sum()
    }
}

fn population_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64
}

/// Global edge-frequency variance over the mean per-source-vertex variance.
/// Returns None when every local variance is zero (the ratio is undefined).
/// `include_single_out_edge` keeps degree-1 sources (local variance 0) in
/// the average; pass false to drop them.
pub fn variance_ratio(oracle: &ExactOracle, include_single_out_edge: bool) -> Result<Option<f64>> {
    if oracle.distinct_edge_count() < 2 {
        return Err(GsError::InsufficientData(
            "variance ratio needs at least 2 distinct edges".into(),
        ));
    }
    let global = population_variance(
        oracle
            .by_src
            .values()
            .flat_map(|dsts| dsts.values())
            .map(|&f| f as f64),
    );
    let local: Vec<f64> = oracle
        .by_src
        .values()
        .filter(|dsts| include_single_out_edge || dsts.len() > 1)
        .map(|dsts| population_variance(dsts.values().map(|&f| f as f64)))
        .collect();
    if local.is_empty() {
        return Ok(None);
    }
    let mean_local = local.iter().sum::<f64>() / local.len() as f64;
    if mean_local == 0.0 {
        return Ok(None);
    }
    Ok(Some(global / mean_local))
}

/// er(q) = estimate/truth - 1. Never-underestimating engines keep this
/// non-negative.
pub fn relative_error(estimate: f64, truth: f64) -> Result<f64> {
    if truth <= 0.0 {
        return Err(GsError::UndefinedTruth);
    }
    Ok((estimate - truth) / truth)
}

pub fn average_relative_error(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(GsError::EmptyQuerySet);
    }
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

/// Count of queries with relative error at most `g0` (inclusive).
pub fn effective_queries(errors: &[f64], g0: f64) -> usize {
    errors.iter().filter(|&&e| e <= g0).count()
}

/// er(g) = aggregate(estimates)/aggregate(truths) - 1.
pub fn subgraph_relative_error(
    estimates: &[u64],
    truths: &[u64],
    aggregate: Aggregate,
) -> Result<f64> {
    if estimates.is_empty() || estimates.len() != truths.len() {
        return Err(GsError::MalformedQuery(
            "estimate and truth lists must be non-empty and equal-length".into(),
        ));
    }
    let est = apply_aggregate(aggregate, estimates)?;
    let truth = apply_aggregate(aggregate, truths)?;
    if truth.num == 0 {
        return Err(GsError::UndefinedTruth);
    }
    Ok(est.as_f64() / truth.as_f64() - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmatParams {
    /// Vertex universe is 2^scale.
    pub scale: u32,
    pub edge_count: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub seed: u64,
}

impl RmatParams {
    /// Conventional quadrant defaults.
    pub fn with_defaults(scale: u32, edge_count: usize, seed: u64) -> Self {
        RmatParams {
            scale,
            edge_count,
            a: 0.45,
            b: 0.15,
            c: 0.15,
            d: 0.25,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale == 0 || self.scale > 30 {
            return Err(GsError::Config(format!("scale must be in 1..=30, got {}", self.scale)));
        }
        let sum = self.a + self.b + self.c + self.d;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GsError::Config(format!(
                "quadrant probabilities must sum to 1, got {sum}"
            )));
        }
        for (name, p) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(GsError::Config(format!(
                    "quadrant probability {name} must be in (0,1), got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Number of distinct per-source frequency levels the Zipf overlay draws
/// from; level `r` is selected with probability proportional to `r^-alpha`.
pub const FREQ_LEVELS: usize = 4;

/// R-MAT edge arrivals by recursive quadrant descent. Repeats of the same
/// pair are the stream's frequency mass. When `freq_zipf_alpha` is given,
/// each source vertex carries a persistent Zipf-distributed frequency level
/// in `1..=FREQ_LEVELS` and every arrival from it uses that level, so
/// frequencies are similar within a source but skewed across sources.
pub fn generate_rmat_stream(
    params: &RmatParams,
    freq_zipf_alpha: Option<f64>,
) -> Result<Vec<StreamElement>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let freq_table = freq_zipf_alpha.map(|alpha| zipf_cdf(FREQ_LEVELS, alpha));
    let mut elements = Vec::with_capacity(params.edge_count);
    for ts in 0..params.edge_count {
        let (mut row, mut col) = (0u64, 0u64);
        for level in (0..params.scale).rev() {
            let u: f64 = rng.gen();
            let bit = 1u64 << level;
            if u < params.a {
                // top-left: nothing set
            } else if u < params.a + params.b {
                col |= bit;
            } else if u < params.a + params.b + params.c {
                row |= bit;
            } else {
                row |= bit;
                col |= bit;
            }
        }
        let freq = match &freq_table {
            Some(cdf) => {
                // Keyed off the source vertex, not the arrival, so the level
                // is stable across all of a source's edges.
                let u = sub_seed(params.seed, &format!("freq/{row}")) as f64
                    / u64::MAX as f64;
                rank_from_cdf(cdf, u) as u64 + 1
            }
            None => 1,
        };
        elements.push(StreamElement::new(
            VertexLabel::new(format!("v{row}"))?,
            VertexLabel::new(format!("v{col}"))?,
            freq,
            ts as u64,
        )?);
    }
    Ok(elements)
}

fn zipf_cdf(n: usize, alpha: f64) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for rank in 1..=n {
        acc += (rank as f64).powf(-alpha);
        cdf.push(acc);
    }
    cdf
}

fn rank_from_cdf(cdf: &[f64], u01: f64) -> usize {
    let target = u01 * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c < target).min(cdf.len() - 1)
}

/// Fenwick tree over f64 weights; supports prefix sums and weighted draws.
struct WeightIndex {
    tree: Vec<f64>,
    weights: Vec<f64>,
    total: f64,
}

impl WeightIndex {
    fn new(weights: Vec<f64>) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        for (i, &w) in weights.iter().enumerate() {
            let mut idx = i + 1;
            while idx <= n {
                tree[idx] += w;
                idx += idx & idx.wrapping_neg();
            }
        }
        let total = weights.iter().sum();
        WeightIndex { tree, weights, total }
    }

    fn remove(&mut self, i: usize) {
        let w = self.weights[i];
        self.weights[i] = 0.0;
        self.total -= w;
        let n = self.tree.len() - 1;
        let mut idx = i + 1;
        while idx <= n {
            self.tree[idx] -= w;
            idx += idx & idx.wrapping_neg();
        }
    }

    /// Largest index whose prefix sum is below `target`.
    fn find(&self, target: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut idx = 0usize;
        let mut remaining = target;
        let mut mask = n.next_power_of_two();
        while mask > 0 {
            let next = idx + mask;
            if next <= n && self.tree[next] < remaining {
                idx = next;
                remaining -= self.tree[next];
            }
            mask >>= 1;
        }
        idx.min(n - 1)
    }

    fn draw(&mut self, rng: &mut impl Rng) -> usize {
        let target = rng.gen::<f64>() * self.total;
        let mut i = self.find(target);
        // Weight may have decayed to zero through removals; scan forward.
        while self.weights[i] == 0.0 {
            i = (i + 1) % self.weights.len();
        }
        self.remove(i);
        i
    }
}

/// Samples `size` distinct edges without replacement, with inclusion weight
/// proportional to rank^(-alpha). `rank_seed` fixes which edge holds which
/// rank — two samples sharing it are drawn from the same skewed
/// distribution — while `draw_seed` varies the draws themselves.
pub fn generate_zipf_workload(
    edges: &[(VertexLabel, VertexLabel)],
    alpha: f64,
    size: usize,
    rank_seed: u64,
    draw_seed: u64,
) -> Result<DataSample> {
    if alpha <= 0.0 {
        return Err(GsError::Config(format!("alpha must be > 0, got {alpha}")));
    }
    if size > edges.len() {
        return Err(GsError::InsufficientPopulation {
            requested: size,
            available: edges.len(),
        });
    }
    let mut rank_rng = ChaCha8Rng::seed_from_u64(rank_seed);
    let mut order: Vec<usize> = (0..edges.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rank_rng.gen_range(0..=i));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(draw_seed);
    let mut weights = vec![0.0; edges.len()];
    for (rank, &edge_idx) in order.iter().enumerate() {
        weights[edge_idx] = ((rank + 1) as f64).powf(-alpha);
    }
    let mut index = WeightIndex::new(weights);
    let mut elements = Vec::with_capacity(size);
    for ts in 0..size {
        let i = index.draw(&mut rng);
        let (src, dst) = &edges[i];
        elements.push(StreamElement::new(src.clone(), dst.clone(), 1, ts as u64)?);
    }
    Ok(DataSample {
        elements,
        capacity: size.max(1),
    })
}

/// Uniform queries over the distinct ingested edges (with replacement), so
/// every query has positive truth.
pub fn uniform_edge_queries(
    oracle: &ExactOracle,
    count: usize,
    seed: u64,
) -> Vec<(VertexLabel, VertexLabel)> {
    let population = oracle.distinct_edges();
    if population.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| population[rng.gen_range(0..population.len())].clone())
        .collect()
}

/// Zipf-skewed edge queries drawn without replacement from the ingested
/// distinct edges.
pub fn zipf_edge_queries(
    oracle: &ExactOracle,
    alpha: f64,
    count: usize,
    rank_seed: u64,
    draw_seed: u64,
) -> Result<Vec<(VertexLabel, VertexLabel)>> {
    let population = oracle.distinct_edges();
    let workload = generate_zipf_workload(
        &population,
        alpha,
        count.min(population.len()),
        rank_seed,
        draw_seed,
    )?;
    Ok(workload
        .elements
        .into_iter()
        .map(|e| (e.src, e.dst))
        .collect())
}

/// Randomized-BFS subgraph queries: uniform seed vertices expanded breadth
/// first — a vertex's out-edges (in shuffled order) are all taken before any
/// child is expanded — until `edges_per_subgraph` edges, or fewer if the
/// reachable component runs out.
pub fn bfs_subgraph_queries(
    oracle: &ExactOracle,
    count: usize,
    edges_per_subgraph: usize,
    seed: u64,
) -> Vec<SubgraphQuery> {
    let sources = oracle.source_vertices();
    if sources.is_empty() || edges_per_subgraph == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queries = Vec::with_capacity(count);
    while queries.len() < count {
        let start = &sources[rng.gen_range(0..sources.len())];
        let mut visited = std::collections::BTreeSet::from([start.clone()]);
        let mut queue = std::collections::VecDeque::from([start.clone()]);
        let mut edges = Vec::with_capacity(edges_per_subgraph);
        'expand: while let Some(src) = queue.pop_front() {
            let Some(dsts) = oracle.out_edges(&src) else {
                continue;
            };
            let mut dsts: Vec<&VertexLabel> = dsts.keys().collect();
            for i in (1..dsts.len()).rev() {
                dsts.swap(i, rng.gen_range(0..=i));
            }
            for dst in dsts {
                edges.push((src.clone(), dst.clone()));
                if edges.len() == edges_per_subgraph {
                    break 'expand;
                }
                if visited.insert(dst.clone()) {
                    queue.push_back(dst.clone());
                }
            }
        }
        if edges.is_empty() {
            continue;
        }
        queries.push(SubgraphQuery::new(edges, Aggregate::Sum).expect("non-empty"));
    }
    queries
}

/// Query set used by a benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub enum QuerySpec {
    UniformEdges { count: usize },
    ZipfEdges { count: usize, alpha: f64 },
    BfsSubgraphs { count: usize, edges_per_subgraph: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sample_size: usize,
    pub budgets: Vec<u64>,
    pub depth: u64,
    pub w0: u64,
    pub c: f64,
    pub outlier_fraction: f64,
    pub scenario: Scenario,
    /// Zipf skew of the workload sample, workload scenario only.
    pub workload_alpha: f64,
    pub workload_size: usize,
    pub query: QuerySpec,
    pub g0: f64,
    pub seed: u64,
}

/// One engine's accuracy and timing at one budget point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub engine: &'static str,
    pub scenario: Scenario,
    pub budget_bytes: u64,
    pub alpha: Option<f64>,
    pub avg_relative_error: f64,
    pub effective_count: usize,
    pub query_count: usize,
    pub g0: f64,
    pub t_construct_s: f64,
    pub t_query_s: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str =
    "engine,scenario,budget_bytes,alpha,avg_rel_err,effective_count,query_count,g0,t_construct_s,t_query_s,seed";

impl MetricsReport {
    pub fn to_csv_row(&self) -> String {
        let scenario = match self.scenario {
            Scenario::DataOnly => "data_only",
            Scenario::DataAndWorkload => "data_and_workload",
        };
        let alpha = self.alpha.map(|a| a.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{:.6},{:.6},{}",
            self.engine,
            scenario,
            self.budget_bytes,
            alpha,
            self.avg_relative_error,
            self.effective_count,
            self.query_count,
            self.g0,
            self.t_construct_s,
            self.t_query_s,
            self.seed
        )
    }

    /// The row with wall times blanked, for byte-comparing runs.
    pub fn to_csv_row_without_times(&self) -> String {
        let full = self.to_csv_row();
        let fields: Vec<&str> = full.split(',').collect();
        let mut fields: Vec<String> = fields.iter().map(|s| s.to_string()).collect();
        fields[8].clear();
        fields[9].clear();
        fields.join(",")
    }
}

enum PreparedQueries {
    Edges(Vec<(VertexLabel, VertexLabel)>),
    Subgraphs(Vec<SubgraphQuery>),
}

fn prepare_queries(
    oracle: &ExactOracle,
    spec: &QuerySpec,
    rank_seed: u64,
    seed: u64,
) -> Result<PreparedQueries> {
    Ok(match spec {
        QuerySpec::UniformEdges { count } => {
            PreparedQueries::Edges(uniform_edge_queries(oracle, *count, seed))
        }
        QuerySpec::ZipfEdges { count, alpha } => {
            PreparedQueries::Edges(zipf_edge_queries(oracle, *alpha, *count, rank_seed, seed)?)
        }
        QuerySpec::BfsSubgraphs {
            count,
            edges_per_subgraph,
        } => PreparedQueries::Subgraphs(bfs_subgraph_queries(
            oracle,
            *count,
            *edges_per_subgraph,
            seed,
        )),
    })
}

fn evaluate<F>(oracle: &ExactOracle, queries: &PreparedQueries, estimate: F) -> Result<Vec<f64>>
where
    F: Fn(&VertexLabel, &VertexLabel) -> u64,
{
    match queries {
        PreparedQueries::Edges(edges) => edges
            .iter()
            .map(|(src, dst)| {
                relative_error(estimate(src, dst) as f64, oracle.truth(src, dst) as f64)
            })
            .collect(),
        PreparedQueries::Subgraphs(subgraphs) => subgraphs
            .iter()
            .map(|q| {
                let estimates: Vec<u64> =
                    q.edges.iter().map(|(s, d)| estimate(s, d)).collect();
                let truths: Vec<u64> = q.edges.iter().map(|(s, d)| oracle.truth(s, d)).collect();
                subgraph_relative_error(&estimates, &truths, q.aggregate)
            })
            .collect(),
    }
}

fn metrics_from_errors(
    engine: &'static str,
    cfg: &BenchConfig,
    budget: u64,
    errors: &[f64],
    t_construct_s: f64,
    t_query_s: f64,
) -> Result<MetricsReport> {
    Ok(MetricsReport {
        engine,
        scenario: cfg.scenario,
        budget_bytes: budget,
        alpha: match cfg.scenario {
            Scenario::DataAndWorkload => Some(cfg.workload_alpha),
            Scenario::DataOnly => None,
        },
        avg_relative_error: average_relative_error(errors)?,
        effective_count: effective_queries(errors, cfg.g0),
        query_count: errors.len(),
        g0: cfg.g0,
        t_construct_s,
        t_query_s,
        seed: cfg.seed,
    })
}

/// Builds both engines at every budget, ingests the full stream, and
/// evaluates one shared query set against the exact oracle. Returns one
/// report per (budget, engine), partitioned engine first.
pub fn run_benchmark(stream: &[StreamElement], cfg: &BenchConfig) -> Result<Vec<MetricsReport>> {
    let oracle = ExactOracle::build(stream);
    let sample = reservoir_sample(
        stream.iter().cloned(),
        cfg.sample_size,
        sub_seed(cfg.seed, "sample"),
    )?;
    // One rank order per run: the planner's workload sample and any Zipf
    // query set describe the same skewed distribution, sampled separately.
    let rank_seed = sub_seed(cfg.seed, "zipf-ranks");
    let weights = match cfg.scenario {
        Scenario::DataOnly => None,
        Scenario::DataAndWorkload => {
            let population = oracle.distinct_edges();
            let workload = generate_zipf_workload(
                &population,
                cfg.workload_alpha,
                cfg.workload_size.min(population.len()),
                rank_seed,
                sub_seed(cfg.seed, "workload"),
            )?;
            let known = sample.source_vertices();
            Some(compute_workload_weights(&workload, &known)?)
        }
    };
    let queries = prepare_queries(&oracle, &cfg.query, rank_seed, sub_seed(cfg.seed, "queries"))?;

    let mut reports = Vec::with_capacity(cfg.budgets.len() * 2);
    for &budget in &cfg.budgets {
        let total_width = CountMinSketch::width_for_budget(budget, cfg.depth)?;
        let partition_cfg = PartitionConfig {
            total_width,
            depth: cfg.depth,
            w0: cfg.w0.min(total_width),
            c: cfg.c,
            outlier_fraction: cfg.outlier_fraction,
            scenario: cfg.scenario,
        };

        let t0 = Instant::now();
        let plan = build_plan(&sample, &partition_cfg, weights.as_ref())?;
        let mut engine = GSketchEngine::build(&plan, sub_seed(cfg.seed, "engine"))?;
        for e in stream {
            engine.ingest(e)?;
        }
        engine.freeze();
        let t_construct = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let errors = evaluate(&oracle, &queries, |s, d| engine.estimate_edge(s, d))?;
        let t_query = t0.elapsed().as_secs_f64();
        reports.push(metrics_from_errors(
            "gsketch", cfg, budget, &errors, t_construct, t_query,
        )?);

        let t0 = Instant::now();
        let mut global = GlobalSketchEngine::build(budget, cfg.depth, sub_seed(cfg.seed, "engine"))?;
        for e in stream {
            global.ingest(e)?;
        }
        global.freeze();
        let t_construct = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let errors = evaluate(&oracle, &queries, |s, d| global.estimate_edge(s, d))?;
        let t_query = t0.elapsed().as_secs_f64();
        reports.push(metrics_from_errors(
            "global", cfg, budget, &errors, t_construct, t_query,
        )?);
    }
    Ok(reports)
}
