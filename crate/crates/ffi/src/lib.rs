//! C ABI over the anchorgraph core.
//!
//! Every fallible call returns an `AgStatus`; on anything other than
//! `AG_STATUS_OK` a message is available from `ag_last_error_message` on the
//! same thread. Strings handed out are NUL-terminated UTF-8 owned by the
//! caller and released with `ag_string_free`; id arrays with `ag_ids_free`.
//! Null or zero-length id arrays are treated as empty selections.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use anchorgraph::ingest::{generate_thumbnails, ingest_folder, IngestConfig, IngestError};
use anchorgraph::{
    export_graph, export_labels, import_graph, AnchorId, GraphError, GraphState, ImportError, Mutation,
    NodeId, NodeRef,
};

/// Opaque graph handle.
pub struct AgGraph {
    state: GraphState,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidAnchorId = 3,
    UnknownNode = 10,
    UnknownAnchor = 11,
    UnknownTarget = 12,
    EmptySelection = 13,
    EmptyLabel = 14,
    ForbiddenCharacter = 15,
    DuplicateAnchor = 16,
    ParseError = 20,
    SchemaError = 21,
    ConsistencyError = 22,
    BadMutation = 23,
    MissingDirectory = 30,
    ThumbSizeTooSmall = 31,
    Io = 32,
    Panic = 99,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(AgStatus, String);

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        let status = match e {
            GraphError::UnknownNode(_) => AgStatus::UnknownNode,
            GraphError::UnknownAnchor(_) => AgStatus::UnknownAnchor,
            GraphError::UnknownTarget(_) => AgStatus::UnknownTarget,
            GraphError::EmptySelection => AgStatus::EmptySelection,
            GraphError::EmptyLabel => AgStatus::EmptyLabel,
            GraphError::ForbiddenCharacter(_) => AgStatus::ForbiddenCharacter,
            GraphError::DuplicateAnchor(_) => AgStatus::DuplicateAnchor,
        };
        Failure(status, e.to_string())
    }
}

impl From<ImportError> for Failure {
    fn from(e: ImportError) -> Self {
        let status = match e {
            ImportError::Parse { .. } => AgStatus::ParseError,
            ImportError::Schema { .. } => AgStatus::SchemaError,
            ImportError::Consistency(_) => AgStatus::ConsistencyError,
        };
        Failure(status, e.to_string())
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let status = match e {
            IngestError::MissingDirectory(_) => AgStatus::MissingDirectory,
            IngestError::ThumbSizeTooSmall(_) => AgStatus::ThumbSizeTooSmall,
            IngestError::Io { .. } => AgStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AgStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            AgStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(AgStatus::NullArgument, format!("{what} is null"))
}

unsafe fn graph_ref<'a>(graph: *const AgGraph) -> Result<&'a AgGraph, Failure> {
    graph.as_ref().ok_or_else(|| null("graph"))
}

unsafe fn graph_mut<'a>(graph: *mut AgGraph) -> Result<&'a mut AgGraph, Failure> {
    graph.as_mut().ok_or_else(|| null("graph"))
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(AgStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn anchor_arg(s: *const c_char) -> Result<AnchorId, Failure> {
    AnchorId::parse_canonical(str_arg(s, "anchor")?).map_err(|e| Failure(AgStatus::InvalidAnchorId, e.to_string()))
}

unsafe fn ids_arg(ids: *const u64, len: usize) -> Vec<NodeId> {
    if ids.is_null() || len == 0 {
        return Vec::new();
    }
    std::slice::from_raw_parts(ids, len).iter().map(|&i| NodeId(i)).collect()
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn owned_string(bytes: Vec<u8>) -> Result<*mut c_char, Failure> {
    CString::new(bytes)
        .map(CString::into_raw)
        .map_err(|_| Failure(AgStatus::InvalidUtf8, "output contains NUL".into()))
}

fn boxed(state: GraphState) -> *mut AgGraph {
    Box::into_raw(Box::new(AgGraph { state }))
}

/// Message for the most recent failure on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ag_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Empty graph at revision 0.
#[no_mangle]
pub extern "C" fn ag_graph_new() -> *mut AgGraph {
    boxed(GraphState::default())
}

/// # Safety
/// `graph` must come from this library and not be used afterwards. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_free(graph: *mut AgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Parses a graph document from `len` bytes at `bytes`.
///
/// # Safety
/// `bytes` must be readable for `len` bytes; `out_graph` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_import(bytes: *const u8, len: usize, out_graph: *mut *mut AgGraph) -> AgStatus {
    guard(|| {
        let data = match (bytes.is_null(), len) {
            (_, 0) => &[][..],
            (true, _) => return Err(null("bytes")),
            (false, _) => std::slice::from_raw_parts(bytes, len),
        };
        let state = import_graph(data)?;
        put(out_graph, boxed(state), "out_graph")
    })
}

/// Builds a graph from the image files directly inside `dataset_dir`.
///
/// # Safety
/// `dataset_dir` must be a NUL-terminated string; `out_graph` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_ingest_folder(dataset_dir: *const c_char, out_graph: *mut *mut AgGraph) -> AgStatus {
    guard(|| {
        let dir = str_arg(dataset_dir, "dataset_dir")?;
        let state = ingest_folder(&IngestConfig::new(dir))?;
        put(out_graph, boxed(state), "out_graph")
    })
}

/// Writes missing or stale thumbnails for every picture in `graph` under
/// `<dataset_dir>/.thumbs`. `out_encoded` may be NULL.
///
/// # Safety
/// Pointer arguments must be valid as described.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_generate_thumbnails(
    graph: *const AgGraph,
    dataset_dir: *const c_char,
    thumb_max_edge: u32,
    out_encoded: *mut usize,
) -> AgStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        let dir = str_arg(dataset_dir, "dataset_dir")?;
        let config = IngestConfig::new(Path::new(dir)).with_thumb_size(thumb_max_edge)?;
        let report = generate_thumbnails(&config, &g.state)?;
        if !out_encoded.is_null() {
            out_encoded.write(report.encoded);
        }
        Ok(())
    })
}

/// Canonical graph document.
///
/// # Safety
/// `out_json` must be writable; free the result with `ag_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_export(graph: *const AgGraph, out_json: *mut *mut c_char) -> AgStatus {
    guard(|| {
        let s = owned_string(export_graph(&graph_ref(graph)?.state))?;
        put(out_json, s, "out_json")
    })
}

/// Per-picture label table as CSV.
///
/// # Safety
/// `out_csv` must be writable; free the result with `ag_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_export_labels(graph: *const AgGraph, out_csv: *mut *mut c_char) -> AgStatus {
    guard(|| {
        let s = owned_string(export_labels(&graph_ref(graph)?.state))?;
        put(out_csv, s, "out_csv")
    })
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ag_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `ids` and `len` must be exactly as returned by this library, or `ids` NULL.
#[no_mangle]
pub unsafe extern "C" fn ag_ids_free(ids: *mut u64, len: usize) {
    if !ids.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(ids, len)));
    }
}

/// Creates a cluster over `ids`. `label` may be NULL for the default label.
/// `out_anchor` receives the new anchor id and may be NULL.
///
/// # Safety
/// `ids` must be readable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_create_cluster(
    graph: *mut AgGraph,
    ids: *const u64,
    len: usize,
    label: *const c_char,
    out_anchor: *mut *mut c_char,
) -> AgStatus {
    guard(|| {
        let g = graph_mut(graph)?;
        let label = if label.is_null() { None } else { Some(str_arg(label, "label")?) };
        let anchor = g.state.create_cluster(&ids_arg(ids, len), label)?;
        if !out_anchor.is_null() {
            out_anchor.write(owned_string(anchor.to_string().into_bytes())?);
        }
        Ok(())
    })
}

/// # Safety
/// String arguments must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_rename_anchor(graph: *mut AgGraph, anchor: *const c_char, label: *const c_char) -> AgStatus {
    guard(|| {
        let g = graph_mut(graph)?;
        let anchor = anchor_arg(anchor)?;
        Ok(g.state.rename_node(NodeRef::Anchor(anchor), str_arg(label, "label")?)?)
    })
}

/// # Safety
/// `label` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_rename_picture(graph: *mut AgGraph, id: u64, label: *const c_char) -> AgStatus {
    guard(|| {
        let g = graph_mut(graph)?;
        Ok(g.state.rename_node(NodeRef::Picture(NodeId(id)), str_arg(label, "label")?)?)
    })
}

/// # Safety
/// `anchor` must be NUL-terminated; `ids` readable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_add_members(
    graph: *mut AgGraph,
    anchor: *const c_char,
    ids: *const u64,
    len: usize,
) -> AgStatus {
    guard(|| {
        let g = graph_mut(graph)?;
        let anchor = anchor_arg(anchor)?;
        Ok(g.state.add_members(&anchor, &ids_arg(ids, len))?)
    })
}

/// # Safety
/// `anchor` must be NUL-terminated; `ids` readable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_remove_members(
    graph: *mut AgGraph,
    anchor: *const c_char,
    ids: *const u64,
    len: usize,
) -> AgStatus {
    guard(|| {
        let g = graph_mut(graph)?;
        let anchor = anchor_arg(anchor)?;
        Ok(g.state.remove_members(&anchor, &ids_arg(ids, len))?)
    })
}

/// # Safety
/// `anchor` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_delete_cluster(graph: *mut AgGraph, anchor: *const c_char) -> AgStatus {
    guard(|| {
        let g = graph_mut(graph)?;
        let anchor = anchor_arg(anchor)?;
        Ok(g.state.delete_cluster(&anchor)?)
    })
}

/// # Safety
/// `ids` must be readable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_delete_pictures(graph: *mut AgGraph, ids: *const u64, len: usize) -> AgStatus {
    guard(|| {
        let g = graph_mut(graph)?;
        Ok(g.state.delete_pictures(&ids_arg(ids, len))?)
    })
}

/// Applies a mutation given in its wire JSON form. `out_resolved` receives
/// the resolved mutation as JSON and may be NULL.
///
/// # Safety
/// `mutation_json` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_apply_mutation_json(
    graph: *mut AgGraph,
    mutation_json: *const c_char,
    out_resolved: *mut *mut c_char,
) -> AgStatus {
    guard(|| {
        let g = graph_mut(graph)?;
        let text = str_arg(mutation_json, "mutation_json")?;
        let m: Mutation =
            serde_json::from_str(text).map_err(|e| Failure(AgStatus::BadMutation, e.to_string()))?;
        let resolved = g.state.apply(&m)?;
        if !out_resolved.is_null() {
            let json = serde_json::to_vec(&resolved).expect("mutation serializes");
            out_resolved.write(owned_string(json)?);
        }
        Ok(())
    })
}

/// Ids of pictures without any membership, ascending. Free with `ag_ids_free`.
///
/// # Safety
/// `out_ids` and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ag_graph_unlabeled(graph: *const AgGraph, out_ids: *mut *mut u64, out_len: *mut usize) -> AgStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        if out_ids.is_null() || out_len.is_null() {
            return Err(null("out_ids/out_len"));
        }
        let ids: Box<[u64]> = g.state.unlabeled_nodes().into_iter().map(|n| n.0).collect();
        out_len.write(ids.len());
        out_ids.write(if ids.is_empty() { ptr::null_mut() } else { Box::into_raw(ids).cast() });
        Ok(())
    })
}

/// # Safety
/// `graph` must be valid or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ag_graph_node_count(graph: *const AgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.state.node_count())
}

/// # Safety
/// `graph` must be valid or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ag_graph_cluster_count(graph: *const AgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.state.cluster_count())
}

/// # Safety
/// `graph` must be valid or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ag_graph_edge_count(graph: *const AgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.state.edge_count())
}

/// Applied mutations since creation, import or ingest.
///
/// # Safety
/// `graph` must be valid or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ag_graph_revision(graph: *const AgGraph) -> u64 {
    graph.as_ref().map_or(0, |g| g.state.revision())
}
