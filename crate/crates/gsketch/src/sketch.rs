//! CountMin sketch: a depth x width counter grid with pairwise-independent
//! row hashes. Estimates are the minimum over rows, so they never fall below
//! the true inserted frequency.

use serde::{Deserialize, Serialize};

use crate::error::{GsError, Result};
use crate::stream::EdgeKey;

/// 2^61 - 1, the Mersenne prime backing the row hashes.
const MERSENNE_P: u64 = (1 << 61) - 1;

const SNAPSHOT_MAGIC: &[u8; 4] = b"CMSK";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchDims {
    pub width: u64,
    pub depth: u64,
}

impl SketchDims {
    /// width = ceil(e/epsilon), depth = ceil(ln(1/delta)), depth floor 1.
    pub fn from_error_bounds(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(GsError::Config(format!(
                "epsilon must be in (0,1), got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(GsError::Config(format!(
                "delta must be in (0,1), got {delta}"
            )));
        }
        Ok(SketchDims {
            width: (std::f64::consts::E / epsilon).ceil() as u64,
            depth: (1.0 / delta).ln().ceil().max(1.0) as u64,
        })
    }
}

/// Fixed, seedless 64-bit fingerprint of the key bytes (FNV-1a with a
/// splitmix64 finisher). Fingerprint collisions are accepted: the chance per
/// key pair is about 2^-64.
pub fn fingerprint(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    // splitmix64 finisher for avalanche
    h = h.wrapping_add(0x9e3779b97f4a7c15);
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d049bb133111eb);
    h ^ (h >> 31)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from a master seed and a label, so every
/// consumer of randomness in the pipeline can be reproduced in isolation.
pub fn sub_seed(master: u64, label: &str) -> u64 {
    let mut state = master ^ fingerprint(label.as_bytes());
    splitmix64(&mut state)
}

/// Per-row hash ((a*x + b) mod p) mod width over the key fingerprint,
/// with p = 2^61 - 1 and (a, b) drawn per row from the sketch seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RowHasher {
    a: u64,
    b: u64,
}

impl RowHasher {
    fn from_seed(state: &mut u64) -> Self {
        let a = splitmix64(state) % (MERSENNE_P - 1) + 1;
        let b = splitmix64(state) % MERSENNE_P;
        RowHasher { a, b }
    }

    fn bucket(&self, fp: u64, width: u64) -> usize {
        let v = (self.a as u128 * fp as u128 + self.b as u128) % MERSENNE_P as u128;
        (v % width as u128) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMinSketch {
    dims: SketchDims,
    seed: u64,
    hashers: Vec<RowHasher>,
    counters: Vec<u64>,
    total_mass: u64,
}

impl CountMinSketch {
    /// Sizes the grid from error bounds: width = ceil(e/epsilon),
    /// depth = ceil(ln(1/delta)).
    pub fn from_error_bounds(epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(GsError::Config(format!(
                "epsilon must be in (0,1), got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(GsError::Config(format!(
                "delta must be in (0,1), got {delta}"
            )));
        }
        let dims = SketchDims::from_error_bounds(epsilon, delta)?;
        Self::with_dims(dims.width, dims.depth, seed)
    }

    pub fn with_dims(width: u64, depth: u64, seed: u64) -> Result<Self> {
        if width == 0 || depth == 0 {
            return Err(GsError::Config(format!(
                "sketch dims must be >= 1, got {width}x{depth}"
            )));
        }
        let cells = width
            .checked_mul(depth)
            .filter(|&c| c <= (1 << 32))
            .ok_or_else(|| GsError::Config(format!("sketch {width}x{depth} too large")))?;
        let mut state = seed;
        let hashers = (0..depth).map(|_| RowHasher::from_seed(&mut state)).collect();
        Ok(CountMinSketch {
            dims: SketchDims { width, depth },
            seed,
            hashers,
            counters: vec![0; cells as usize],
            total_mass: 0,
        })
    }

    /// Width a byte budget buys at a given depth, with 8-byte counters.
    pub fn width_for_budget(budget_bytes: u64, depth: u64) -> Result<u64> {
        if depth == 0 {
            return Err(GsError::Config("depth must be >= 1".into()));
        }
        let width = budget_bytes / (8 * depth);
        if width == 0 {
            return Err(GsError::Config(format!(
                "budget of {budget_bytes} bytes cannot fit depth {depth}"
            )));
        }
        Ok(width)
    }

    pub fn dims(&self) -> SketchDims {
        self.dims
    }

    pub fn total_mass(&self) -> u64 {
        self.total_mass
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn update(&mut self, key: &EdgeKey, delta: u64) -> Result<()> {
        if delta == 0 {
            return Err(GsError::Config("update delta must be >= 1".into()));
        }
        let fp = fingerprint(key.as_bytes());
        let width = self.dims.width;
        for (row, hasher) in self.hashers.iter().enumerate() {
            let idx = row * width as usize + hasher.bucket(fp, width);
            self.counters[idx] = self.counters[idx]
                .checked_add(delta)
                .ok_or(GsError::CounterOverflow)?;
        }
        self.total_mass = self
            .total_mass
            .checked_add(delta)
            .ok_or(GsError::CounterOverflow)?;
        Ok(())
    }

    pub fn estimate(&self, key: &EdgeKey) -> u64 {
        let fp = fingerprint(key.as_bytes());
        let width = self.dims.width;
        self.hashers
            .iter()
            .enumerate()
            .map(|(row, hasher)| self.counters[row * width as usize + hasher.bucket(fp, width)])
            .min()
            .unwrap_or(0)
    }

    /// Row index of `key` in `row`; exposed for collision analyses.
    pub fn bucket_of(&self, key: &EdgeKey, row: usize) -> usize {
        self.hashers[row].bucket(fingerprint(key.as_bytes()), self.dims.width)
    }

    /// Versioned binary snapshot: magic, version, dims, seed, per-row hash
    /// params, row-major counters, total mass. All integers little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40 + self.counters.len() * 8);
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.dims.width.to_le_bytes());
        out.extend_from_slice(&self.dims.depth.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for h in &self.hashers {
            out.extend_from_slice(&h.a.to_le_bytes());
            out.extend_from_slice(&h.b.to_le_bytes());
        }
        for c in &self.counters {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&self.total_mass.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = SnapshotReader::new(bytes);
        let magic = cursor.take(4)?;
        if magic != SNAPSHOT_MAGIC {
            return Err(GsError::Snapshot("bad sketch magic".into()));
        }
        let version = cursor.u32()?;
        if version != SNAPSHOT_VERSION {
            return Err(GsError::Snapshot(format!("unknown sketch version {version}")));
        }
        let width = cursor.u64()?;
        let depth = cursor.u64()?;
        let seed = cursor.u64()?;
        if width == 0 || depth == 0 || width.checked_mul(depth).is_none() {
            return Err(GsError::Snapshot("bad sketch dims".into()));
        }
        let hashers = (0..depth)
            .map(|_| {
                Ok(RowHasher {
                    a: cursor.u64()?,
                    b: cursor.u64()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let counters = (0..width * depth)
            .map(|_| cursor.u64())
            .collect::<Result<Vec<_>>>()?;
        let total_mass = cursor.u64()?;
        cursor.expect_end()?;
        Ok(CountMinSketch {
            dims: SketchDims { width, depth },
            seed,
            hashers,
            counters,
            total_mass,
        })
    }
}

struct SnapshotReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> SnapshotReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        SnapshotReader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(GsError::Snapshot("truncated sketch snapshot".into()));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn expect_end(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(GsError::Snapshot("trailing bytes in sketch snapshot".into()));
        }
        Ok(())
    }
}
