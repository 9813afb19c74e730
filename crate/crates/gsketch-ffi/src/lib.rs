//! C ABI over frozen engine snapshots: open a snapshot file, estimate edge
//! and subgraph frequencies, free the handle. Handles are opaque; all
//! functions return an error code and write results through out-pointers.
//!
//! Thread safety: a handle is immutable after open, so concurrent reads
//! through the same handle are safe; open/free must not race with reads on
//! the same handle.

use std::ffi::{c_char, CStr};

use gsketch::engine::{Aggregate, SubgraphQuery};
use gsketch::snapshot::Snapshot;
use gsketch::stream::VertexLabel;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8 or not a valid vertex label.
    BadLabel = 2,
    /// The snapshot file could not be read or parsed.
    BadSnapshot = 3,
    /// The requested engine is not present in the snapshot.
    NoSuchEngine = 4,
    /// The query was structurally invalid (empty, bad aggregate).
    BadQuery = 5,
}

/// Which engine inside the snapshot answers queries.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsEngineKind {
    /// The partitioned engine.
    Partitioned = 0,
    /// The single-sketch baseline (present only when the snapshot was
    /// written with one).
    Global = 1,
}

/// Aggregates supported for subgraph queries.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsAggregate {
    Sum = 0,
    Min = 1,
    Average = 2,
}

/// Opaque handle to a loaded snapshot.
pub struct GsEngine {
    snapshot: Snapshot,
}

fn label_from_c(ptr: *const c_char) -> Result<VertexLabel, GsStatus> {
    if ptr.is_null() {
        return Err(GsStatus::NullArgument);
    }
    let s = unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| GsStatus::BadLabel)?;
    VertexLabel::new(s).map_err(|_| GsStatus::BadLabel)
}

/// Opens a snapshot file written by the `gsketch ingest` pipeline.
///
/// On success writes a handle through `out` and returns `GS_STATUS_OK`.
/// The handle must be released with `gs_engine_free`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_engine_open_snapshot(
    path: *const c_char,
    out: *mut *mut GsEngine,
) -> GsStatus {
    if path.is_null() || out.is_null() {
        return GsStatus::NullArgument;
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p,
        Err(_) => return GsStatus::BadSnapshot,
    };
    match gsketch::snapshot::load_snapshot(path) {
        Ok(snapshot) => {
            *out = Box::into_raw(Box::new(GsEngine { snapshot }));
            GsStatus::Ok
        }
        Err(_) => GsStatus::BadSnapshot,
    }
}

/// Estimates the frequency of the edge (src, dst); never underestimates.
///
/// # Safety
/// `engine` must come from `gs_engine_open_snapshot` and not yet be freed;
/// `src` and `dst` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gs_engine_estimate_edge(
    engine: *const GsEngine,
    kind: GsEngineKind,
    src: *const c_char,
    dst: *const c_char,
    out: *mut u64,
) -> GsStatus {
    if engine.is_null() || out.is_null() {
        return GsStatus::NullArgument;
    }
    let engine = &*engine;
    let (src, dst) = match (label_from_c(src), label_from_c(dst)) {
        (Ok(s), Ok(d)) => (s, d),
        (Err(e), _) | (_, Err(e)) => return e,
    };
    let estimate = match kind {
        GsEngineKind::Partitioned => engine.snapshot.engine.estimate_edge(&src, &dst),
        GsEngineKind::Global => match &engine.snapshot.global {
            Some(global) => global.estimate_edge(&src, &dst),
            None => return GsStatus::NoSuchEngine,
        },
    };
    *out = estimate;
    GsStatus::Ok
}

/// Estimates an aggregate over the per-edge estimates of a subgraph given
/// as parallel src/dst arrays of length `len`. The result is written as a
/// double because AVERAGE is fractional.
///
/// # Safety
/// `srcs` and `dsts` must point to `len` NUL-terminated strings; other
/// pointer requirements as in `gs_engine_estimate_edge`.
#[no_mangle]
pub unsafe extern "C" fn gs_engine_estimate_subgraph(
    engine: *const GsEngine,
    kind: GsEngineKind,
    srcs: *const *const c_char,
    dsts: *const *const c_char,
    len: usize,
    aggregate: GsAggregate,
    out: *mut f64,
) -> GsStatus {
    if engine.is_null() || srcs.is_null() || dsts.is_null() || out.is_null() {
        return GsStatus::NullArgument;
    }
    if len == 0 {
        return GsStatus::BadQuery;
    }
    let engine = &*engine;
    let mut edges = Vec::with_capacity(len);
    for i in 0..len {
        let src = match label_from_c(*srcs.add(i)) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let dst = match label_from_c(*dsts.add(i)) {
            Ok(d) => d,
            Err(e) => return e,
        };
        edges.push((src, dst));
    }
    let aggregate = match aggregate {
        GsAggregate::Sum => Aggregate::Sum,
        GsAggregate::Min => Aggregate::Min,
        GsAggregate::Average => Aggregate::Average,
    };
    let query = match SubgraphQuery::new(edges, aggregate) {
        Ok(q) => q,
        Err(_) => return GsStatus::BadQuery,
    };
    let value = match kind {
        GsEngineKind::Partitioned => engine.snapshot.engine.estimate_subgraph(&query),
        GsEngineKind::Global => match &engine.snapshot.global {
            Some(global) => global.estimate_subgraph(&query),
            None => return GsStatus::NoSuchEngine,
        },
    };
    match value {
        Ok(v) => {
            *out = v.as_f64();
            GsStatus::Ok
        }
        Err(_) => GsStatus::BadQuery,
    }
}

/// Total frequency mass ingested into the partitioned engine.
///
/// # Safety
/// `engine` and `out` as in `gs_engine_estimate_edge`.
#[no_mangle]
pub unsafe extern "C" fn gs_engine_ingested_mass(
    engine: *const GsEngine,
    out: *mut u64,
) -> GsStatus {
    if engine.is_null() || out.is_null() {
        return GsStatus::NullArgument;
    }
    *out = (*engine).snapshot.engine.ingested_mass();
    GsStatus::Ok
}

/// Releases a handle. Passing null is a no-op.
///
/// # Safety
/// `engine` must come from `gs_engine_open_snapshot` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn gs_engine_free(engine: *mut GsEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
