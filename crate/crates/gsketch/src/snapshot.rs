//! Engine snapshot container: one file holding the plan JSON and every
//! sketch's binary snapshot behind a table of contents. Loading reproduces
//! identical estimates.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::engine::{GSketchEngine, GlobalSketchEngine};
use crate::error::{GsError, Result};
use crate::partition::PartitionPlan;
use crate::sketch::CountMinSketch;

const MAGIC: &[u8; 4] = b"GSNP";
const VERSION: u32 = 1;

/// Writes the container: magic, version, entry count, a table of contents
/// of (name, offset, length), then the entry payloads. All integers are
/// little-endian; entries are laid out in a fixed order so snapshots of the
/// same engine are byte-identical.
pub fn save_snapshot(
    path: impl AsRef<Path>,
    plan: &PartitionPlan,
    engine: &GSketchEngine,
    global: Option<&GlobalSketchEngine>,
) -> Result<()> {
    let mut entries: Vec<(String, Vec<u8>)> = Vec::new();
    entries.push(("plan".into(), plan.to_json()?.into_bytes()));
    let (_, leaves, outlier, _, _) = engine.parts();
    for (i, sketch) in leaves.iter().enumerate() {
        entries.push((format!("leaf/{i}"), sketch.to_bytes()));
    }
    entries.push(("outlier".into(), outlier.to_bytes()));
    if let Some(global) = global {
        entries.push(("global".into(), global.sketch().to_bytes()));
    }

    let toc_len: usize = entries
        .iter()
        .map(|(name, _)| 4 + name.len() + 8 + 8)
        .sum();
    let mut offset = (4 + 4 + 4 + toc_len) as u64;

    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for (name, payload) in &entries {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&offset.to_le_bytes());
        buf.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        offset += payload.len() as u64;
    }
    for (_, payload) in &entries {
        buf.extend_from_slice(payload);
    }

    let path = path.as_ref();
    let mut file =
        std::fs::File::create(path).map_err(|e| GsError::io(path.display().to_string(), e))?;
    file.write_all(&buf)
        .map_err(|e| GsError::io(path.display().to_string(), e))
}

/// The parsed container. Engines come back frozen.
pub struct Snapshot {
    pub plan: PartitionPlan,
    pub engine: GSketchEngine,
    pub global: Option<GlobalSketchEngine>,
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| GsError::io(path.display().to_string(), e))?;
    parse_snapshot(&bytes)
}

pub fn parse_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    let corrupt = |msg: &str| GsError::Snapshot(msg.into());
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(corrupt("bad container magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(GsError::Snapshot(format!("unknown container version {version}")));
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;

    let mut toc: BTreeMap<String, &[u8]> = BTreeMap::new();
    let mut pos = 12usize;
    for _ in 0..count {
        if pos + 4 > bytes.len() {
            return Err(corrupt("truncated table of contents"));
        }
        let name_len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        if pos + name_len + 16 > bytes.len() {
            return Err(corrupt("truncated table of contents"));
        }
        let name = std::str::from_utf8(&bytes[pos..pos + name_len])
            .map_err(|_| corrupt("non-UTF-8 entry name"))?
            .to_string();
        pos += name_len;
        let offset = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap()) as usize;
        let len = u64::from_le_bytes(bytes[pos + 8..pos + 16].try_into().unwrap()) as usize;
        pos += 16;
        let end = offset.checked_add(len).ok_or_else(|| corrupt("bad entry range"))?;
        if end > bytes.len() {
            return Err(corrupt("entry extends past end of file"));
        }
        toc.insert(name, &bytes[offset..end]);
    }

    let plan_bytes = toc.get("plan").ok_or_else(|| corrupt("missing plan entry"))?;
    let plan = PartitionPlan::from_json(
        std::str::from_utf8(plan_bytes).map_err(|_| corrupt("plan is not UTF-8"))?,
    )?;

    let leaves = (0..plan.leaves.len())
        .map(|i| {
            let entry = toc
                .get(&format!("leaf/{i}"))
                .ok_or_else(|| corrupt("missing leaf sketch"))?;
            CountMinSketch::from_bytes(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    let outlier =
        CountMinSketch::from_bytes(toc.get("outlier").ok_or_else(|| corrupt("missing outlier"))?)?;
    let global = toc
        .get("global")
        .map(|entry| CountMinSketch::from_bytes(entry).map(GlobalSketchEngine::from_sketch))
        .transpose()?;

    let mass = leaves.iter().map(|s| s.total_mass()).sum::<u64>() + outlier.total_mass();
    let engine = GSketchEngine::from_parts(plan.routing(), leaves, outlier, plan.depth, mass);
    Ok(Snapshot {
        plan,
        engine,
        global,
    })
}
