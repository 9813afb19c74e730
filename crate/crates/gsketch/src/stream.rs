//! Graph-stream data model: labeled vertices, timestamped weighted edge
//! arrivals, edge keying, reservoir sampling and the per-vertex statistics
//! derived from samples.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GsError, Result};

/// Reserved byte separating the two labels inside an [`EdgeKey`]. Bare
/// concatenation is ambiguous ("ab"+"c" vs "a"+"bc"); the separator keeps
/// keying injective. Labels must not contain it.
pub const KEY_SEPARATOR: u8 = 0x1F;

/// A vertex label. Non-empty, free of tabs and of the key separator byte.
/// Ordering is bytewise, which is what undirected keying relies on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexLabel(String);

impl VertexLabel {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(GsError::MalformedLabel("empty label".into()));
        }
        if label.bytes().any(|b| b == KEY_SEPARATOR || b == b'\t') {
            return Err(GsError::MalformedLabel(format!(
                "label {label:?} contains a reserved byte"
            )));
        }
        Ok(VertexLabel(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl std::fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// One arrival in the graph stream: a directed edge with a positive
/// frequency (1 unless the stream is weighted) and a timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamElement {
    pub src: VertexLabel,
    pub dst: VertexLabel,
    pub freq: u64,
    pub ts: u64,
}

impl StreamElement {
    pub fn new(src: VertexLabel, dst: VertexLabel, freq: u64, ts: u64) -> Result<Self> {
        if freq == 0 {
            return Err(GsError::Config("element frequency must be >= 1".into()));
        }
        Ok(StreamElement { src, dst, freq, ts })
    }

    pub fn key(&self) -> EdgeKey {
        EdgeKey::directed(&self.src, &self.dst)
    }
}

/// The sketch key of an edge: `src` bytes, the separator, `dst` bytes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey(Vec<u8>);

impl EdgeKey {
    pub fn directed(src: &VertexLabel, dst: &VertexLabel) -> Self {
        let mut bytes = Vec::with_capacity(src.as_bytes().len() + dst.as_bytes().len() + 1);
        bytes.extend_from_slice(src.as_bytes());
        bytes.push(KEY_SEPARATOR);
        bytes.extend_from_slice(dst.as_bytes());
        EdgeKey(bytes)
    }

    /// Keys an edge. With `undirected` set, the bytewise smaller label is
    /// placed first so both orientations collapse to one key.
    pub fn new(src: &VertexLabel, dst: &VertexLabel, undirected: bool) -> Self {
        if undirected && dst < src {
            EdgeKey::directed(dst, src)
        } else {
            EdgeKey::directed(src, dst)
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Recovers the original label pair.
    pub fn decode(&self) -> Result<(VertexLabel, VertexLabel)> {
        let sep = self
            .0
            .iter()
            .position(|&b| b == KEY_SEPARATOR)
            .ok_or_else(|| GsError::MalformedLabel("edge key without separator".into()))?;
        let src = std::str::from_utf8(&self.0[..sep])
            .map_err(|_| GsError::MalformedLabel("edge key is not UTF-8".into()))?;
        let dst = std::str::from_utf8(&self.0[sep + 1..])
            .map_err(|_| GsError::MalformedLabel("edge key is not UTF-8".into()))?;
        Ok((VertexLabel::new(src)?, VertexLabel::new(dst)?))
    }
}

/// A bounded multiset of stream elements drawn by reservoir sampling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSample {
    pub elements: Vec<StreamElement>,
    pub capacity: usize,
}

impl DataSample {
    pub fn source_vertices(&self) -> BTreeSet<VertexLabel> {
        self.elements.iter().map(|e| e.src.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Vitter's algorithm R. Uniform over the input, reproducible per seed.
/// Streams shorter than `capacity` are returned whole.
pub fn reservoir_sample<I>(stream: I, capacity: usize, seed: u64) -> Result<DataSample>
where
    I: IntoIterator<Item = StreamElement>,
{
    if capacity == 0 {
        return Err(GsError::Config("reservoir capacity must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut elements: Vec<StreamElement> = Vec::with_capacity(capacity);
    for (seen, element) in stream.into_iter().enumerate() {
        if elements.len() < capacity {
            elements.push(element);
        } else {
            let j = rng.gen_range(0..=seen);
            if j < capacity {
                elements[j] = element;
            }
        }
    }
    Ok(DataSample { elements, capacity })
}

/// Per-source-vertex statistics from a sample: `fv` is the summed frequency
/// of out-edges, `deg` the count of distinct out-edges. Vertices seen only
/// as destinations do not appear.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VertexStats {
    stats: BTreeMap<VertexLabel, (u64, u64)>,
}

impl VertexStats {
    pub fn get(&self, vertex: &VertexLabel) -> Option<(u64, u64)> {
        self.stats.get(vertex).copied()
    }

    pub fn fv(&self, vertex: &VertexLabel) -> Option<u64> {
        self.get(vertex).map(|(fv, _)| fv)
    }

    pub fn deg(&self, vertex: &VertexLabel) -> Option<u64> {
        self.get(vertex).map(|(_, deg)| deg)
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexLabel, u64, u64)> {
        self.stats.iter().map(|(v, &(fv, deg))| (v, fv, deg))
    }

    pub fn vertices(&self) -> impl Iterator<Item = &VertexLabel> {
        self.stats.keys()
    }
}

/// Aggregates a sample into per-vertex stats: fv sums frequencies of edges
/// leaving each source, deg counts each distinct (src, dst) pair once.
pub fn compute_vertex_stats(sample: &DataSample) -> VertexStats {
    let mut per_edge: BTreeMap<&VertexLabel, BTreeMap<&VertexLabel, u64>> = BTreeMap::new();
    for e in &sample.elements {
        *per_edge.entry(&e.src).or_default().entry(&e.dst).or_insert(0) += e.freq;
    }
    let stats = per_edge
        .into_iter()
        .map(|(src, dsts)| {
            let fv: u64 = dsts.values().sum();
            let deg = dsts.len() as u64;
            (src.clone(), (fv, deg))
        })
        .collect();
    VertexStats { stats }
}

/// A positive rational. Weight arithmetic stays exact so vertex orderings
/// (and therefore plans) are deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(num > 0 && den > 0, "ratio must be positive");
        Ratio { num, den }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Smoothed relative query-workload weight per known source vertex.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkloadWeights {
    weights: BTreeMap<VertexLabel, Ratio>,
}

impl WorkloadWeights {
    /// Builds weights from explicit ratios, e.g. for the reduction identity
    /// where every vertex is weighted by its out-degree.
    pub fn from_ratios(weights: BTreeMap<VertexLabel, Ratio>) -> Self {
        WorkloadWeights { weights }
    }

    pub fn get(&self, vertex: &VertexLabel) -> Option<Ratio> {
        self.weights.get(vertex).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexLabel, Ratio)> {
        self.weights.iter().map(|(v, &r)| (v, r))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Add-one smoothed workload weights over the known source vertices:
/// w(n) = (c(n) + 1) / (T + V) where c(n) counts workload queries sourced at
/// n, T sums c over known vertices and V = |known|. Every known vertex ends
/// up with a positive weight and the weights sum to one.
pub fn compute_workload_weights(
    workload: &DataSample,
    known_vertices: &BTreeSet<VertexLabel>,
) -> Result<WorkloadWeights> {
    if known_vertices.is_empty() {
        return Err(GsError::Config(
            "workload weights need a non-empty set of known vertices".into(),
        ));
    }
    let mut counts: BTreeMap<&VertexLabel, u64> = BTreeMap::new();
    for e in &workload.elements {
        if let Some(v) = known_vertices.get(&e.src) {
            *counts.entry(v).or_insert(0) += 1;
        }
    }
    let total: u64 = counts.values().sum();
    let den = total + known_vertices.len() as u64;
    let weights = known_vertices
        .iter()
        .map(|v| {
            let c = counts.get(v).copied().unwrap_or(0);
            (v.clone(), Ratio::new(c + 1, den))
        })
        .collect();
    Ok(WorkloadWeights { weights })
}

/// Parses the tab-separated stream format: `src<TAB>dst[<TAB>freq[<TAB>ts]]`,
/// one element per line. Missing freq defaults to 1, missing ts to the
/// zero-based line number.
pub fn parse_stream_line(line: &str, line_no: usize) -> Result<StreamElement> {
    let parse = || -> Result<StreamElement> {
        let mut fields = line.split('\t');
        let src = fields
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| GsError::MalformedLabel("missing src".into()))?;
        let dst = fields
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| GsError::MalformedLabel("missing dst".into()))?;
        let freq = match fields.next() {
            Some(f) => f
                .parse::<u64>()
                .map_err(|e| GsError::Config(format!("bad freq {f:?}: {e}")))?,
            None => 1,
        };
        let ts = match fields.next() {
            Some(t) => t
                .parse::<u64>()
                .map_err(|e| GsError::Config(format!("bad ts {t:?}: {e}")))?,
            None => line_no as u64,
        };
        if fields.next().is_some() {
            return Err(GsError::Config("too many fields".into()));
        }
        StreamElement::new(VertexLabel::new(src)?, VertexLabel::new(dst)?, freq, ts)
    };
    parse().map_err(|e| GsError::Parse {
        line: line_no + 1,
        msg: e.to_string(),
    })
}

pub fn read_stream(path: impl AsRef<Path>) -> Result<Vec<StreamElement>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| GsError::io(path.display().to_string(), e))?;
    let mut elements = Vec::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| GsError::io(path.display().to_string(), e))?;
        if line.is_empty() {
            continue;
        }
        elements.push(parse_stream_line(&line, line_no)?);
    }
    Ok(elements)
}

pub fn write_stream(path: impl AsRef<Path>, elements: &[StreamElement]) -> Result<()> {
    let path = path.as_ref();
    let file =
        std::fs::File::create(path).map_err(|e| GsError::io(path.display().to_string(), e))?;
    let mut out = std::io::BufWriter::new(file);
    for e in elements {
        writeln!(out, "{}\t{}\t{}\t{}", e.src, e.dst, e.freq, e.ts)
            .map_err(|err| GsError::io(path.display().to_string(), err))?;
    }
    out.flush()
        .map_err(|err| GsError::io(path.display().to_string(), err))
}
