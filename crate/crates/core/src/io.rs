//! Graph document format, flat label export and exclusivity report.
//!
//! The canonical document is pretty-printed JSON with two-space indentation and
//! top-level keys `clusters`, `nodes`, `edges`, in that order. Import is lenient
//! about layout and key order but validates every graph invariant and never
//! repairs a document.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::graph::{
    Anchor, AnchorId, Edge, GraphState, Inconsistency, NodeId, PictureNode, ANCHOR_IMAGE,
    GROUP_ANCHOR, SHAPE_IMAGE,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterRecord {
    pub id: AnchorId,
    pub image: String,
    pub label: String,
    pub shape: String,
    pub group: String,
    pub members: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub image: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub shape: String,
}

/// The serialized graph. Deserializing goes through the same schema checks as
/// [`import_graph`], minus the cross-record consistency checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Value")]
pub struct GraphDocument {
    pub clusters: Vec<ClusterRecord>,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImportError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {field}: {detail}")]
    Schema { field: String, detail: String },
    #[error("inconsistent graph: {0}")]
    Consistency(#[from] Inconsistency),
}

impl ImportError {
    pub fn code(&self) -> &'static str {
        match self {
            ImportError::Parse { .. } => "ParseError",
            ImportError::Schema { .. } => "SchemaError",
            ImportError::Consistency(_) => "ConsistencyError",
        }
    }

    fn schema(field: impl Into<String>, detail: impl Into<String>) -> Self {
        ImportError::Schema {
            field: field.into(),
            detail: detail.into(),
        }
    }
}

impl GraphDocument {
    pub fn from_state(state: &GraphState) -> Self {
        GraphDocument {
            clusters: state
                .clusters()
                .map(|a| ClusterRecord {
                    id: a.id,
                    image: ANCHOR_IMAGE.to_owned(),
                    label: a.label.clone(),
                    shape: SHAPE_IMAGE.to_owned(),
                    group: GROUP_ANCHOR.to_owned(),
                    members: a.members.clone(),
                })
                .collect(),
            nodes: state
                .nodes()
                .map(|n| NodeRecord {
                    id: n.id,
                    image: n.image.clone(),
                    label: n.label.clone(),
                    shape: SHAPE_IMAGE.to_owned(),
                })
                .collect(),
            edges: state.edges().collect(),
        }
    }

    /// Validates the decoded records into a state at revision 0.
    pub fn into_state(self) -> Result<GraphState, ImportError> {
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| PictureNode {
                id: n.id,
                image: n.image,
                label: n.label,
            })
            .collect();
        let clusters = self
            .clusters
            .into_iter()
            .map(|c| Anchor {
                id: c.id,
                label: c.label,
                members: c.members,
            })
            .collect();
        Ok(GraphState::from_parts(nodes, clusters, self.edges)?)
    }

    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("graph document always serializes");
        out.push(b'\n');
        out
    }

    fn decode(value: &Value, warnings: &mut Vec<String>) -> Result<Self, ImportError> {
        let root = as_object(value, "$")?;
        warn_unknown(root, "$", &["clusters", "nodes", "edges"], warnings);
        let clusters = array_field(root, "$", "clusters")?
            .iter()
            .enumerate()
            .map(|(i, v)| decode_cluster(v, &format!("clusters[{i}]"), warnings))
            .collect::<Result<_, _>>()?;
        let nodes = array_field(root, "$", "nodes")?
            .iter()
            .enumerate()
            .map(|(i, v)| decode_node(v, &format!("nodes[{i}]"), warnings))
            .collect::<Result<_, _>>()?;
        let edges = array_field(root, "$", "edges")?
            .iter()
            .enumerate()
            .map(|(i, v)| decode_edge(v, &format!("edges[{i}]"), warnings))
            .collect::<Result<_, _>>()?;
        Ok(GraphDocument {
            clusters,
            nodes,
            edges,
        })
    }
}

impl TryFrom<Value> for GraphDocument {
    type Error = ImportError;

    fn try_from(value: Value) -> Result<Self, Self::Error> {
        let mut warnings = Vec::new();
        let doc = GraphDocument::decode(&value, &mut warnings)?;
        for w in warnings {
            log::warn!("{w}");
        }
        Ok(doc)
    }
}

fn join(path: &str, key: &str) -> String {
    if path == "$" {
        key.to_owned()
    } else {
        format!("{path}.{key}")
    }
}

fn as_object<'a>(value: &'a Value, path: &str) -> Result<&'a Map<String, Value>, ImportError> {
    value
        .as_object()
        .ok_or_else(|| ImportError::schema(path, "expected an object"))
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value, ImportError> {
    obj.get(key)
        .ok_or_else(|| ImportError::schema(join(path, key), "missing field"))
}

fn array_field<'a>(
    obj: &'a Map<String, Value>,
    path: &str,
    key: &str,
) -> Result<&'a Vec<Value>, ImportError> {
    field(obj, path, key)?
        .as_array()
        .ok_or_else(|| ImportError::schema(join(path, key), "expected an array"))
}

fn str_field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a str, ImportError> {
    field(obj, path, key)?
        .as_str()
        .ok_or_else(|| ImportError::schema(join(path, key), "expected a string"))
}

fn const_field(obj: &Map<String, Value>, path: &str, key: &str, expected: &str) -> Result<(), ImportError> {
    let got = str_field(obj, path, key)?;
    if got != expected {
        return Err(ImportError::schema(
            join(path, key),
            format!("expected {expected:?}, found {got:?}"),
        ));
    }
    Ok(())
}

fn node_id(value: &Value, path: &str) -> Result<NodeId, ImportError> {
    value
        .as_u64()
        .map(NodeId)
        .ok_or_else(|| ImportError::schema(path, "expected a non-negative integer"))
}

fn anchor_id(value: &Value, path: &str) -> Result<AnchorId, ImportError> {
    let s = value
        .as_str()
        .ok_or_else(|| ImportError::schema(path, "expected a uuid string"))?;
    AnchorId::parse_canonical(s).map_err(|e| ImportError::schema(path, e.to_string()))
}

fn warn_unknown(obj: &Map<String, Value>, path: &str, known: &[&str], warnings: &mut Vec<String>) {
    for key in obj.keys().filter(|k| !known.contains(&k.as_str())) {
        warnings.push(format!("ignoring unknown key {}", join(path, key)));
    }
}

fn decode_cluster(value: &Value, path: &str, warnings: &mut Vec<String>) -> Result<ClusterRecord, ImportError> {
    let obj = as_object(value, path)?;
    warn_unknown(obj, path, &["id", "image", "label", "shape", "group", "members"], warnings);
    const_field(obj, path, "image", ANCHOR_IMAGE)?;
    const_field(obj, path, "shape", SHAPE_IMAGE)?;
    const_field(obj, path, "group", GROUP_ANCHOR)?;
    let members_path = join(path, "members");
    let members = array_field(obj, path, "members")?
        .iter()
        .enumerate()
        .map(|(i, v)| node_id(v, &format!("{members_path}[{i}]")))
        .collect::<Result<_, _>>()?;
    Ok(ClusterRecord {
        id: anchor_id(field(obj, path, "id")?, &join(path, "id"))?,
        image: ANCHOR_IMAGE.to_owned(),
        label: str_field(obj, path, "label")?.to_owned(),
        shape: SHAPE_IMAGE.to_owned(),
        group: GROUP_ANCHOR.to_owned(),
        members,
    })
}

fn decode_node(value: &Value, path: &str, warnings: &mut Vec<String>) -> Result<NodeRecord, ImportError> {
    let obj = as_object(value, path)?;
    warn_unknown(obj, path, &["id", "image", "label", "shape"], warnings);
    const_field(obj, path, "shape", SHAPE_IMAGE)?;
    let label = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(_) => Some(str_field(obj, path, "label")?.to_owned()),
    };
    Ok(NodeRecord {
        id: node_id(field(obj, path, "id")?, &join(path, "id"))?,
        image: str_field(obj, path, "image")?.to_owned(),
        label,
        shape: SHAPE_IMAGE.to_owned(),
    })
}

fn decode_edge(value: &Value, path: &str, warnings: &mut Vec<String>) -> Result<Edge, ImportError> {
    let obj = as_object(value, path)?;
    warn_unknown(obj, path, &["to", "from"], warnings);
    Ok(Edge {
        to: anchor_id(field(obj, path, "to")?, &join(path, "to"))?,
        from: node_id(field(obj, path, "from")?, &join(path, "from"))?,
    })
}

/// Canonical, deterministic graph document bytes.
pub fn export_graph(state: &GraphState) -> Vec<u8> {
    GraphDocument::from_state(state).to_canonical_bytes()
}

/// Parses and validates a graph document; the result is at revision 0.
pub fn import_graph(bytes: &[u8]) -> Result<GraphState, ImportError> {
    let (state, warnings) = import_graph_with_warnings(bytes)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(state)
}

/// Like [`import_graph`], returning warnings about ignored keys instead of logging them.
pub fn import_graph_with_warnings(bytes: &[u8]) -> Result<(GraphState, Vec<String>), ImportError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let prefix = &bytes[..e.valid_up_to()];
        let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = prefix.len() - prefix.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
        ImportError::Parse {
            line,
            column,
            message: "invalid utf-8".into(),
        }
    })?;
    let value: Value = serde_json::from_str(text).map_err(|e| ImportError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut warnings = Vec::new();
    let state = GraphDocument::decode(&value, &mut warnings)?.into_state()?;
    Ok((state, warnings))
}

/// Flat ground-truth file: `image,labels`, one row per picture ascending by id,
/// labels of all memberships in anchor creation order joined by `;`.
pub fn export_labels(state: &GraphState) -> Vec<u8> {
    let mut labels: BTreeMap<NodeId, Vec<&str>> = BTreeMap::new();
    for anchor in state.clusters() {
        for m in &anchor.members {
            labels.entry(*m).or_default().push(&anchor.label);
        }
    }
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    writer
        .write_record(["image", "labels"])
        .expect("writing to memory");
    for node in state.nodes() {
        let joined = labels
            .get(&node.id)
            .map(|l| l.join(";"))
            .unwrap_or_default();
        writer
            .write_record([node.image.as_str(), joined.as_str()])
            .expect("writing to memory");
    }
    writer.into_inner().expect("flushing to memory")
}

/// Pictures that sit in two or more anchors, ascending by node id. An empty
/// report means the labeling is mutually exclusive.
pub fn validate_exclusive(state: &GraphState) -> Vec<(NodeId, Vec<AnchorId>)> {
    let mut memberships: BTreeMap<NodeId, Vec<AnchorId>> = BTreeMap::new();
    for anchor in state.clusters() {
        for m in &anchor.members {
            memberships.entry(*m).or_default().push(anchor.id);
        }
    }
    memberships
        .into_iter()
        .filter(|(_, anchors)| anchors.len() >= 2)
        .collect()
}
