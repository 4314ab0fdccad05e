//! Server-authoritative collaborative labeling of image datasets.
//!
//! Analysts group pictures into labeled anchors on a shared graph. The server
//! owns the canonical [`GraphState`], applies every [`Mutation`] serially and
//! broadcasts the result so all connected clients converge.

pub mod graph;
pub mod ingest;
pub mod io;
pub mod server;
pub mod sync;

pub use graph::{
    Anchor, AnchorId, Edge, GraphError, GraphState, Inconsistency, Mutation, NodeId, NodeRef,
    PictureNode,
};
pub use io::{export_graph, export_labels, import_graph, validate_exclusive, GraphDocument, ImportError};
