//! Command-line front door: generate synthetic streams, build partition
//! plans, ingest into engine snapshots, answer queries, run benchmarks, and
//! inspect artifacts. Diagnostics go to stderr; data goes to stdout or the
//! requested output file. Every subcommand is deterministic given --seed
//! (wall times excepted).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gsketch::bench::{run_benchmark, BenchConfig, QuerySpec, RmatParams, CSV_HEADER, DEFAULT_G0};
use gsketch::engine::{Aggregate, SubgraphQuery};
use gsketch::error::{GsError, Result};
use gsketch::partition::{build_plan, PartitionConfig, PartitionPlan, Scenario};
use gsketch::sketch::{sub_seed, CountMinSketch, SketchDims};
use gsketch::snapshot::{load_snapshot, save_snapshot};
use gsketch::stream::{
    compute_workload_weights, read_stream, reservoir_sample, write_stream, DataSample, VertexLabel,
};

#[derive(Parser)]
#[command(name = "gsketch", version, about = "Partitioned count-min sketches for graph streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic R-MAT edge stream.
    Generate(GenerateArgs),
    /// Sample a stream and build a partition plan.
    Plan(PlanArgs),
    /// Ingest a stream under a plan and write an engine snapshot.
    Ingest(IngestArgs),
    /// Answer edge or subgraph queries from a snapshot.
    Query(QueryArgs),
    /// Compare the partitioned engine against the global baseline.
    Bench(BenchArgs),
    /// Print a summary of a plan file or snapshot.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Vertex universe is 2^scale.
    #[arg(long)]
    scale: u32,
    /// Number of edge arrivals.
    #[arg(long)]
    edges: usize,
    #[arg(long, default_value_t = 0.45)]
    a: f64,
    #[arg(long, default_value_t = 0.15)]
    b: f64,
    #[arg(long, default_value_t = 0.15)]
    c: f64,
    #[arg(long, default_value_t = 0.25)]
    d: f64,
    /// Draw per-arrival frequencies from a Zipf law instead of 1.
    #[arg(long)]
    freq_zipf_alpha: Option<f64>,
    #[arg(long)]
    seed: u64,
    /// Output stream file (tab-separated).
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SizingArgs {
    /// Total counter budget in bytes (use with --depth).
    #[arg(long, conflicts_with_all = ["epsilon", "delta"])]
    budget_bytes: Option<u64>,
    /// Number of hash rows (use with --budget-bytes).
    #[arg(long, default_value_t = 5)]
    depth: u64,
    /// Per-row error fraction (use with --delta).
    #[arg(long, requires = "delta")]
    epsilon: Option<f64>,
    /// Failure probability (use with --epsilon).
    #[arg(long, requires = "epsilon")]
    delta: Option<f64>,
}

impl SizingArgs {
    /// Resolves the active sizing mode to grid dimensions and echoes them.
    fn dims(&self) -> Result<SketchDims> {
        let dims = match (self.budget_bytes, self.epsilon, self.delta) {
            (Some(budget), None, None) => SketchDims {
                width: CountMinSketch::width_for_budget(budget, self.depth)?,
                depth: self.depth,
            },
            (None, Some(epsilon), Some(delta)) => SketchDims::from_error_bounds(epsilon, delta)?,
            _ => {
                return Err(GsError::Config(
                    "choose one sizing mode: --budget-bytes [--depth], or --epsilon --delta".into(),
                ))
            }
        };
        eprintln!("sizing: width {} x depth {}", dims.width, dims.depth);
        Ok(dims)
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    DataOnly,
    Workload,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Scenario {
        match s {
            ScenarioArg::DataOnly => Scenario::DataOnly,
            ScenarioArg::Workload => Scenario::DataAndWorkload,
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    /// Input stream file.
    #[arg(long)]
    stream: PathBuf,
    /// Reservoir sample size.
    #[arg(long)]
    sample_size: usize,
    #[command(flatten)]
    sizing: SizingArgs,
    /// Minimum leaf width before a node stops splitting.
    #[arg(long, default_value_t = 8)]
    w0: u64,
    /// Collision bound: a leaf is final once its sampled degree sum is at
    /// most C times its width.
    #[arg(long, short = 'C', default_value_t = 0.2)]
    c: f64,
    /// Fraction of the width reserved for unrouted sources.
    #[arg(long, default_value_t = 0.1)]
    outlier_fraction: f64,
    #[arg(long, value_enum, default_value_t = ScenarioArg::DataOnly)]
    scenario: ScenarioArg,
    /// Workload sample file (required when --scenario workload).
    #[arg(long)]
    workload: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Output plan JSON file.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Plan JSON file from `plan`.
    #[arg(long)]
    plan: PathBuf,
    /// Input stream file.
    #[arg(long)]
    stream: PathBuf,
    /// Also build a global baseline sketch with the same byte budget.
    #[arg(long)]
    with_global: bool,
    #[arg(long)]
    seed: u64,
    /// Output snapshot file.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Gsketch,
    Global,
}

#[derive(Args)]
struct QueryArgs {
    /// Engine snapshot from `ingest`.
    #[arg(long)]
    snapshot: PathBuf,
    /// Query file: one `src<TAB>dst` per line, or with --subgraphs
    /// blank-line-delimited blocks of edges.
    #[arg(long, conflicts_with_all = ["src", "dst"])]
    queries: Option<PathBuf>,
    /// Inline single edge query source.
    #[arg(long, requires = "dst")]
    src: Option<String>,
    /// Inline single edge query destination.
    #[arg(long, requires = "src")]
    dst: Option<String>,
    /// Treat the query file as subgraph blocks.
    #[arg(long, requires = "queries")]
    subgraphs: bool,
    /// Aggregate for subgraph queries.
    #[arg(long, default_value = "sum")]
    aggregate: String,
    /// Which engine in the snapshot answers.
    #[arg(long, value_enum, default_value_t = EngineArg::Gsketch)]
    engine: EngineArg,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum QueryKindArg {
    UniformEdges,
    ZipfEdges,
    BfsSubgraphs,
}

#[derive(Args)]
struct BenchArgs {
    /// Input stream file.
    #[arg(long)]
    stream: PathBuf,
    /// Comma-separated byte budgets, e.g. 65536,262144,1048576.
    #[arg(long, value_delimiter = ',', required = true)]
    budgets: Vec<u64>,
    #[arg(long, default_value_t = 5)]
    depth: u64,
    #[arg(long)]
    sample_size: usize,
    #[arg(long, default_value_t = 8)]
    w0: u64,
    #[arg(long, short = 'C', default_value_t = 0.2)]
    c: f64,
    #[arg(long, default_value_t = 0.1)]
    outlier_fraction: f64,
    #[arg(long, value_enum, default_value_t = ScenarioArg::DataOnly)]
    scenario: ScenarioArg,
    /// Zipf skew of the synthetic workload (workload scenario).
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    /// Run the workload scenario once per listed skew value.
    #[arg(long, value_delimiter = ',')]
    alpha_sweep: Option<Vec<f64>>,
    /// Workload sample size (workload scenario).
    #[arg(long, default_value_t = 2000)]
    workload_size: usize,
    #[arg(long, value_enum, default_value_t = QueryKindArg::UniformEdges)]
    query_kind: QueryKindArg,
    #[arg(long, default_value_t = 2000)]
    query_count: usize,
    /// Zipf skew of the query set (zipf-edges kind).
    #[arg(long, default_value_t = 1.5)]
    query_alpha: f64,
    /// Edges per subgraph query (bfs-subgraphs kind).
    #[arg(long, default_value_t = 10)]
    subgraph_edges: usize,
    /// Effective-query error threshold.
    #[arg(long, default_value_t = DEFAULT_G0)]
    g0: f64,
    #[arg(long)]
    seed: u64,
    /// Output CSV file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    /// Plan JSON file or engine snapshot.
    path: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Query(args) => cmd_query(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Inspect(args) => cmd_inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let params = RmatParams {
        scale: args.scale,
        edge_count: args.edges,
        a: args.a,
        b: args.b,
        c: args.c,
        d: args.d,
        seed: args.seed,
    };
    let stream = gsketch::bench::generate_rmat_stream(&params, args.freq_zipf_alpha)?;
    write_stream(&args.out, &stream)?;
    eprintln!("wrote {} elements to {}", stream.len(), args.out.display());
    Ok(())
}

fn cmd_plan(args: PlanArgs) -> Result<()> {
    let dims = args.sizing.dims()?;
    let scenario: Scenario = args.scenario.into();
    let stream = read_stream(&args.stream)?;
    let sample = reservoir_sample(
        stream,
        args.sample_size,
        sub_seed(args.seed, "sample"),
    )?;
    let weights = match scenario {
        Scenario::DataOnly => {
            if args.workload.is_some() {
                eprintln!("note: --workload is ignored under --scenario data-only");
            }
            None
        }
        Scenario::DataAndWorkload => {
            let path = args.workload.ok_or_else(|| {
                GsError::Config("--scenario workload requires --workload FILE".into())
            })?;
            let elements = read_stream(&path)?;
            let capacity = elements.len().max(1);
            let workload = DataSample { elements, capacity };
            Some(compute_workload_weights(&workload, &sample.source_vertices())?)
        }
    };
    let config = PartitionConfig {
        total_width: dims.width,
        depth: dims.depth,
        w0: args.w0,
        c: args.c,
        outlier_fraction: args.outlier_fraction,
        scenario,
    };
    let plan = build_plan(&sample, &config, weights.as_ref())?;
    std::fs::write(&args.out, plan.to_json()?)
        .map_err(|e| GsError::io(args.out.display().to_string(), e))?;
    let leaf_width: u64 = plan.leaves.iter().map(|l| l.width).sum();
    eprintln!(
        "plan: {} leaves, leaf width {}, outlier width {}, of {} total",
        plan.leaves.len(),
        leaf_width,
        plan.outlier_width,
        dims.width
    );
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let plan_json = std::fs::read_to_string(&args.plan)
        .map_err(|e| GsError::io(args.plan.display().to_string(), e))?;
    let plan = PartitionPlan::from_json(&plan_json)?;
    let stream = read_stream(&args.stream)?;
    let mut engine = gsketch::engine::GSketchEngine::build(&plan, sub_seed(args.seed, "engine"))?;
    for element in &stream {
        engine.ingest(element)?;
    }
    engine.freeze();
    let global = if args.with_global {
        let budget = 8 * plan.depth * (plan.leaves.iter().map(|l| l.width).sum::<u64>() + plan.outlier_width);
        let mut global =
            gsketch::engine::GlobalSketchEngine::build(budget, plan.depth, sub_seed(args.seed, "engine"))?;
        for element in &stream {
            global.ingest(element)?;
        }
        global.freeze();
        Some(global)
    } else {
        None
    };
    save_snapshot(&args.out, &plan, &engine, global.as_ref())?;
    println!("{}", engine.ingested_mass());
    eprintln!("snapshot written to {}", args.out.display());
    Ok(())
}

fn parse_edge_line(line: &str, line_no: usize) -> Result<(VertexLabel, VertexLabel)> {
    let mut fields = line.split('\t');
    let src = fields.next().unwrap_or("");
    let dst = fields.next().ok_or_else(|| GsError::Parse {
        line: line_no,
        msg: "expected src<TAB>dst".into(),
    })?;
    Ok((VertexLabel::new(src)?, VertexLabel::new(dst)?))
}

fn read_edge_queries(path: &Path) -> Result<Vec<(VertexLabel, VertexLabel)>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| GsError::io(path.display().to_string(), e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_edge_line(l, i + 1))
        .collect()
}

fn read_subgraph_queries(path: &Path, aggregate: Aggregate) -> Result<Vec<SubgraphQuery>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| GsError::io(path.display().to_string(), e))?;
    let mut queries = Vec::new();
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !edges.is_empty() {
                queries.push(SubgraphQuery::new(std::mem::take(&mut edges), aggregate)?);
            }
        } else {
            edges.push(parse_edge_line(line, i + 1)?);
        }
    }
    if !edges.is_empty() {
        queries.push(SubgraphQuery::new(edges, aggregate)?);
    }
    if queries.is_empty() {
        return Err(GsError::EmptyQuerySet);
    }
    Ok(queries)
}

fn cmd_query(args: QueryArgs) -> Result<()> {
    let snapshot = load_snapshot(&args.snapshot)?;
    let aggregate: Aggregate = args.aggregate.parse()?;
    let estimate_edge = |src: &VertexLabel, dst: &VertexLabel| -> Result<u64> {
        match args.engine {
            EngineArg::Gsketch => Ok(snapshot.engine.estimate_edge(src, dst)),
            EngineArg::Global => snapshot
                .global
                .as_ref()
                .map(|g| g.estimate_edge(src, dst))
                .ok_or_else(|| {
                    GsError::Config("snapshot has no global sketch; re-ingest with --with-global".into())
                }),
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match (&args.queries, &args.src, &args.dst) {
        (None, Some(src), Some(dst)) => {
            let (src, dst) = (VertexLabel::new(src.as_str())?, VertexLabel::new(dst.as_str())?);
            let est = estimate_edge(&src, &dst)?;
            writeln!(out, "{}\t{}\t{}", src.as_str(), dst.as_str(), est)
                .map_err(|e| GsError::io("stdout", e))?;
        }
        (Some(path), None, None) if args.subgraphs => {
            for (id, query) in read_subgraph_queries(path, aggregate)?.iter().enumerate() {
                let value = match args.engine {
                    EngineArg::Gsketch => snapshot.engine.estimate_subgraph(query)?,
                    EngineArg::Global => snapshot
                        .global
                        .as_ref()
                        .ok_or_else(|| {
                            GsError::Config(
                                "snapshot has no global sketch; re-ingest with --with-global".into(),
                            )
                        })?
                        .estimate_subgraph(query)?,
                };
                writeln!(out, "{}\t{}\t{}", id, args.aggregate, value.as_f64())
                    .map_err(|e| GsError::io("stdout", e))?;
            }
        }
        (Some(path), None, None) => {
            for (src, dst) in read_edge_queries(path)? {
                let est = estimate_edge(&src, &dst)?;
                writeln!(out, "{}\t{}\t{}", src.as_str(), dst.as_str(), est)
                    .map_err(|e| GsError::io("stdout", e))?;
            }
        }
        _ => {
            return Err(GsError::Config(
                "provide either --queries FILE or --src/--dst".into(),
            ))
        }
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let stream = read_stream(&args.stream)?;
    let scenario: Scenario = args.scenario.into();
    let query = match args.query_kind {
        QueryKindArg::UniformEdges => QuerySpec::UniformEdges {
            count: args.query_count,
        },
        QueryKindArg::ZipfEdges => QuerySpec::ZipfEdges {
            count: args.query_count,
            alpha: args.query_alpha,
        },
        QueryKindArg::BfsSubgraphs => QuerySpec::BfsSubgraphs {
            count: args.query_count,
            edges_per_subgraph: args.subgraph_edges,
        },
    };
    let alphas = match (&args.alpha_sweep, scenario) {
        (Some(sweep), Scenario::DataAndWorkload) => sweep.clone(),
        (Some(_), Scenario::DataOnly) => {
            return Err(GsError::Config(
                "--alpha-sweep requires --scenario workload".into(),
            ))
        }
        (None, _) => vec![args.alpha],
    };
    let mut rows = vec![CSV_HEADER.to_string()];
    for alpha in alphas {
        let cfg = BenchConfig {
            sample_size: args.sample_size,
            budgets: args.budgets.clone(),
            depth: args.depth,
            w0: args.w0,
            c: args.c,
            outlier_fraction: args.outlier_fraction,
            scenario,
            workload_alpha: alpha,
            workload_size: args.workload_size,
            query: query.clone(),
            g0: args.g0,
            seed: args.seed,
        };
        for report in run_benchmark(&stream, &cfg)? {
            rows.push(report.to_csv_row());
        }
    }
    let csv = rows.join("\n") + "\n";
    match &args.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| GsError::io(path.display().to_string(), e))?;
            eprintln!("wrote {} data rows to {}", rows.len() - 1, path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> Result<()> {
    let bytes =
        std::fs::read(&args.path).map_err(|e| GsError::io(args.path.display().to_string(), e))?;
    if bytes.starts_with(b"GSNP") {
        let snapshot = gsketch::snapshot::parse_snapshot(&bytes)?;
        println!("snapshot: {}", args.path.display());
        println!("ingested_mass\t{}", snapshot.engine.ingested_mass());
        println!("global\t{}", snapshot.global.is_some());
        print_plan_summary(&snapshot.plan);
    } else {
        let plan = PartitionPlan::from_json(std::str::from_utf8(&bytes).map_err(|_| {
            GsError::Snapshot("file is neither a snapshot nor UTF-8 plan JSON".into())
        })?)?;
        println!("plan: {}", args.path.display());
        print_plan_summary(&plan);
    }
    Ok(())
}

fn print_plan_summary(plan: &PartitionPlan) {
    println!("depth\t{}", plan.depth);
    println!("leaves\t{}", plan.leaves.len());
    println!("outlier_width\t{}", plan.outlier_width);
    for leaf in &plan.leaves {
        println!(
            "leaf\t{}\twidth={}\tvertices={}\tkind={:?}",
            leaf.id,
            leaf.width,
            leaf.vertices.len(),
            leaf.kind
        );
    }
}
