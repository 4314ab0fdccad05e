//! The canonical labeling graph: picture nodes, anchors (clusters) and the
//! membership edges between them.
//!
//! Every mutation validates before touching anything, so a failed call leaves
//! the state untouched and the revision where it was. Successful mutations bump
//! the revision by exactly one.
//!
//! Anchor members and the edge set are stored separately and kept in lockstep;
//! [`GraphState::check_invariants`] recomputes one from the other.

mod mutation;
mod types;

use std::collections::{BTreeMap, HashSet};

use indexmap::{IndexMap, IndexSet};

pub use mutation::Mutation;
pub use types::{
    is_valid_image_name, Anchor, AnchorId, Edge, InvalidAnchorId, NodeId, NodeRef, PictureNode,
    ANCHOR_IMAGE, GROUP_ANCHOR, SHAPE_IMAGE,
};

/// Character reserved as the multi-label separator in the CSV export.
pub const LABEL_SEPARATOR: char = ';';

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown anchor {0}")]
    UnknownAnchor(AnchorId),
    #[error("unknown target {0}")]
    UnknownTarget(NodeRef),
    #[error("selection is empty")]
    EmptySelection,
    #[error("label is empty")]
    EmptyLabel,
    #[error("label contains forbidden character {0:?}")]
    ForbiddenCharacter(char),
    #[error("anchor {0} already exists")]
    DuplicateAnchor(AnchorId),
}

impl GraphError {
    /// Stable error code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::UnknownNode(_) => "UnknownNode",
            GraphError::UnknownAnchor(_) => "UnknownAnchor",
            GraphError::UnknownTarget(_) => "UnknownTarget",
            GraphError::EmptySelection => "EmptySelection",
            GraphError::EmptyLabel => "EmptyLabel",
            GraphError::ForbiddenCharacter(_) => "ForbiddenCharacter",
            GraphError::DuplicateAnchor(_) => "DuplicateAnchor",
        }
    }
}

/// A violated structural invariant, reported when assembling a state from parts.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Inconsistency {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate anchor id {0}")]
    DuplicateAnchor(AnchorId),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(NodeId, AnchorId),
    #[error("anchor {0} lists member {1} twice")]
    DuplicateMember(AnchorId, NodeId),
    #[error("anchor {0} lists unknown member {1}")]
    UnknownMember(AnchorId, NodeId),
    #[error("edge {0} -> {1} dangles")]
    DanglingEdge(NodeId, AnchorId),
    #[error("anchor {0}: members disagree with edges for node {1}")]
    MemberEdgeMismatch(AnchorId, NodeId),
    #[error("node {0} has invalid image name {1:?}")]
    InvalidImage(NodeId, String),
    #[error("invalid label on {0}: {1}")]
    InvalidLabel(NodeRef, GraphError),
}

#[derive(Debug, Clone, Default)]
pub struct GraphState {
    nodes: BTreeMap<NodeId, PictureNode>,
    clusters: IndexMap<AnchorId, Anchor>,
    edges: HashSet<Edge>,
    revision: u64,
}

pub fn validate_label(label: &str) -> Result<(), GraphError> {
    if label.trim().is_empty() {
        return Err(GraphError::EmptyLabel);
    }
    if label.contains(LABEL_SEPARATOR) {
        return Err(GraphError::ForbiddenCharacter(LABEL_SEPARATOR));
    }
    Ok(())
}

fn dedup(selection: &[NodeId]) -> Vec<NodeId> {
    selection
        .iter()
        .copied()
        .collect::<IndexSet<_>>()
        .into_iter()
        .collect()
}

impl GraphState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assembles a state at revision 0, rejecting anything that violates a
    /// graph invariant. Edges may be given in any order.
    pub fn from_parts(
        nodes: Vec<PictureNode>,
        clusters: Vec<Anchor>,
        edges: Vec<Edge>,
    ) -> Result<Self, Inconsistency> {
        let mut state = GraphState::new();
        for node in nodes {
            if !is_valid_image_name(&node.image) {
                return Err(Inconsistency::InvalidImage(node.id, node.image));
            }
            if let Some(label) = &node.label {
                validate_label(label)
                    .map_err(|e| Inconsistency::InvalidLabel(NodeRef::Picture(node.id), e))?;
            }
            if state.nodes.contains_key(&node.id) {
                return Err(Inconsistency::DuplicateNode(node.id));
            }
            state.nodes.insert(node.id, node);
        }
        for anchor in clusters {
            validate_label(&anchor.label)
                .map_err(|e| Inconsistency::InvalidLabel(NodeRef::Anchor(anchor.id), e))?;
            if state.clusters.contains_key(&anchor.id) {
                return Err(Inconsistency::DuplicateAnchor(anchor.id));
            }
            let mut seen = HashSet::new();
            for m in &anchor.members {
                if !seen.insert(*m) {
                    return Err(Inconsistency::DuplicateMember(anchor.id, *m));
                }
                if !state.nodes.contains_key(m) {
                    return Err(Inconsistency::UnknownMember(anchor.id, *m));
                }
            }
            state.clusters.insert(anchor.id, anchor);
        }
        for edge in edges {
            if !state.clusters.contains_key(&edge.to) || !state.nodes.contains_key(&edge.from) {
                return Err(Inconsistency::DanglingEdge(edge.from, edge.to));
            }
            if !state.edges.insert(edge) {
                return Err(Inconsistency::DuplicateEdge(edge.from, edge.to));
            }
        }
        state.check_invariants()?;
        Ok(state)
    }

    /// Full recomputation of every structural invariant.
    pub fn check_invariants(&self) -> Result<(), Inconsistency> {
        let mut from_members = HashSet::new();
        for anchor in self.clusters.values() {
            for m in &anchor.members {
                if !self.nodes.contains_key(m) {
                    return Err(Inconsistency::UnknownMember(anchor.id, *m));
                }
                if !from_members.insert(Edge {
                    to: anchor.id,
                    from: *m,
                }) {
                    return Err(Inconsistency::DuplicateMember(anchor.id, *m));
                }
            }
        }
        for edge in &self.edges {
            if !self.clusters.contains_key(&edge.to) || !self.nodes.contains_key(&edge.from) {
                return Err(Inconsistency::DanglingEdge(edge.from, edge.to));
            }
            if !from_members.contains(edge) {
                return Err(Inconsistency::MemberEdgeMismatch(edge.to, edge.from));
            }
        }
        if let Some(e) = from_members.iter().find(|e| !self.edges.contains(e)) {
            return Err(Inconsistency::MemberEdgeMismatch(e.to, e.from));
        }
        Ok(())
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub(crate) fn set_revision(&mut self, revision: u64) {
        self.revision = revision;
    }

    /// Same nodes, anchors and edges; revision is ignored.
    pub fn content_eq(&self, other: &GraphState) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.clusters.len() == other.clusters.len()
            && self
                .clusters
                .values()
                .zip(other.clusters.values())
                .all(|(a, b)| a == b)
    }

    pub fn node(&self, id: NodeId) -> Option<&PictureNode> {
        self.nodes.get(&id)
    }

    pub fn anchor(&self, id: &AnchorId) -> Option<&Anchor> {
        self.clusters.get(id)
    }

    /// Picture nodes in ascending id order.
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &PictureNode> {
        self.nodes.values()
    }

    /// Anchors in creation order.
    pub fn clusters(&self) -> impl ExactSizeIterator<Item = &Anchor> {
        self.clusters.values()
    }

    /// Edges grouped by anchor in creation order, then by member insertion order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.clusters.values().flat_map(|a| {
            a.members.iter().map(move |m| Edge {
                to: a.id,
                from: *m,
            })
        })
    }

    pub fn has_edge(&self, edge: &Edge) -> bool {
        self.edges.contains(edge)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn require_nodes(&self, selection: &[NodeId]) -> Result<(), GraphError> {
        match selection.iter().find(|id| !self.nodes.contains_key(id)) {
            Some(id) => Err(GraphError::UnknownNode(*id)),
            None => Ok(()),
        }
    }

    fn require_anchor(&self, anchor: &AnchorId) -> Result<(), GraphError> {
        if self.clusters.contains_key(anchor) {
            Ok(())
        } else {
            Err(GraphError::UnknownAnchor(*anchor))
        }
    }

    fn bump(&mut self) {
        self.revision += 1;
    }

    /// Creates an anchor with a fresh random id over the deduplicated selection.
    pub fn create_cluster(
        &mut self,
        selection: &[NodeId],
        label: Option<&str>,
    ) -> Result<AnchorId, GraphError> {
        let mut id = AnchorId::new_random();
        while self.clusters.contains_key(&id) {
            id = AnchorId::new_random();
        }
        self.create_cluster_with_id(id, selection, label)?;
        Ok(id)
    }

    /// Like [`create_cluster`](Self::create_cluster) with a caller-chosen id;
    /// replicas use it to replay a server-resolved creation.
    pub fn create_cluster_with_id(
        &mut self,
        id: AnchorId,
        selection: &[NodeId],
        label: Option<&str>,
    ) -> Result<(), GraphError> {
        if let Some(label) = label {
            validate_label(label)?;
        }
        self.require_nodes(selection)?;
        let members = dedup(selection);
        if members.is_empty() {
            return Err(GraphError::EmptySelection);
        }
        if self.clusters.contains_key(&id) {
            return Err(GraphError::DuplicateAnchor(id));
        }
        let label = label.map_or_else(|| types::default_label(&id), str::to_owned);
        self.edges
            .extend(members.iter().map(|m| Edge { to: id, from: *m }));
        self.clusters.insert(id, Anchor { id, label, members });
        self.bump();
        Ok(())
    }

    pub fn rename_node(&mut self, target: NodeRef, new_label: &str) -> Result<(), GraphError> {
        validate_label(new_label)?;
        match target {
            NodeRef::Anchor(id) => {
                let anchor = self
                    .clusters
                    .get_mut(&id)
                    .ok_or(GraphError::UnknownTarget(target))?;
                anchor.label = new_label.to_owned();
            }
            NodeRef::Picture(id) => {
                let node = self
                    .nodes
                    .get_mut(&id)
                    .ok_or(GraphError::UnknownTarget(target))?;
                node.label = Some(new_label.to_owned());
            }
        }
        self.bump();
        Ok(())
    }

    /// Appends non-members; members already present are skipped.
    pub fn add_members(&mut self, anchor: &AnchorId, selection: &[NodeId]) -> Result<(), GraphError> {
        self.require_anchor(anchor)?;
        self.require_nodes(selection)?;
        let entry = &mut self.clusters[anchor];
        for node in dedup(selection) {
            let edge = Edge {
                to: *anchor,
                from: node,
            };
            if self.edges.insert(edge) {
                entry.members.push(node);
            }
        }
        self.bump();
        Ok(())
    }

    /// Removes members; ids that are not members are skipped. An anchor left
    /// without members is kept.
    pub fn remove_members(
        &mut self,
        anchor: &AnchorId,
        selection: &[NodeId],
    ) -> Result<(), GraphError> {
        self.require_anchor(anchor)?;
        let entry = &mut self.clusters[anchor];
        let mut removed = HashSet::new();
        for node in selection {
            if self.edges.remove(&Edge {
                to: *anchor,
                from: *node,
            }) {
                removed.insert(*node);
            }
        }
        entry.members.retain(|m| !removed.contains(m));
        self.bump();
        Ok(())
    }

    pub fn delete_cluster(&mut self, anchor: &AnchorId) -> Result<(), GraphError> {
        let removed = self
            .clusters
            .shift_remove(anchor)
            .ok_or(GraphError::UnknownAnchor(*anchor))?;
        for m in removed.members {
            self.edges.remove(&Edge {
                to: *anchor,
                from: m,
            });
        }
        self.bump();
        Ok(())
    }

    /// Removes picture nodes together with every edge and membership they hold.
    pub fn delete_pictures(&mut self, selection: &[NodeId]) -> Result<(), GraphError> {
        self.require_nodes(selection)?;
        let doomed: HashSet<NodeId> = selection.iter().copied().collect();
        for id in &doomed {
            self.nodes.remove(id);
        }
        self.edges.retain(|e| !doomed.contains(&e.from));
        for anchor in self.clusters.values_mut() {
            anchor.members.retain(|m| !doomed.contains(m));
        }
        self.bump();
        Ok(())
    }

    /// Anchors holding `node`, in anchor creation order.
    pub fn memberships_of(&self, node: NodeId) -> Result<Vec<AnchorId>, GraphError> {
        if !self.nodes.contains_key(&node) {
            return Err(GraphError::UnknownNode(node));
        }
        Ok(self
            .clusters
            .keys()
            .filter(|a| {
                self.edges.contains(&Edge {
                    to: **a,
                    from: node,
                })
            })
            .copied()
            .collect())
    }

    /// Pictures without any membership, ascending by id.
    pub fn unlabeled_nodes(&self) -> Vec<NodeId> {
        let labeled: HashSet<NodeId> = self.edges.iter().map(|e| e.from).collect();
        self.nodes
            .keys()
            .filter(|id| !labeled.contains(id))
            .copied()
            .collect()
    }

    /// Applies a mutation and returns it in resolved form: a created cluster
    /// carries its assigned id and final label, so replaying the returned value
    /// on a replica reproduces this state exactly.
    pub fn apply(&mut self, mutation: &Mutation) -> Result<Mutation, GraphError> {
        match mutation {
            Mutation::CreateCluster {
                anchor,
                selection,
                label,
            } => {
                let id = match anchor {
                    Some(id) => {
                        self.create_cluster_with_id(*id, selection, label.as_deref())?;
                        *id
                    }
                    None => self.create_cluster(selection, label.as_deref())?,
                };
                let created = &self.clusters[&id];
                Ok(Mutation::CreateCluster {
                    anchor: Some(id),
                    selection: created.members.clone(),
                    label: Some(created.label.clone()),
                })
            }
            Mutation::RenameNode { target, label } => {
                self.rename_node(*target, label)?;
                Ok(mutation.clone())
            }
            Mutation::DeleteCluster { anchor } => {
                self.delete_cluster(anchor)?;
                Ok(mutation.clone())
            }
            Mutation::AddMembers { anchor, selection } => {
                self.add_members(anchor, selection)?;
                Ok(mutation.clone())
            }
            Mutation::RemoveMembers { anchor, selection } => {
                self.remove_members(anchor, selection)?;
                Ok(mutation.clone())
            }
            Mutation::DeletePictures { selection } => {
                self.delete_pictures(selection)?;
                Ok(mutation.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u64]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    fn graph(v: &[u64]) -> GraphState {
        GraphState::from_parts(
            v.iter()
                .map(|&i| PictureNode::new(NodeId(i), format!("p{i}.png")))
                .collect(),
            vec![],
            vec![],
        )
        .unwrap()
    }

    /// Independent recomputation: members of `anchor` as a set, by scanning edges.
    fn members_by_scan(g: &GraphState, anchor: &AnchorId) -> HashSet<NodeId> {
        g.edges.iter().filter(|e| e.to == *anchor).map(|e| e.from).collect()
    }

    fn banco() -> AnchorId {
        AnchorId::parse_canonical("a5e1baa2-aead-4164-9205-63f26f656d6f").unwrap()
    }

    #[test]
    fn create_cluster_keeps_member_order() {
        let mut g = graph(&[0, 12, 17, 20, 456]);
        let a = g.create_cluster(&ids(&[20, 12, 17]), Some("BancoInter")).unwrap();
        let anchor = g.anchor(&a).unwrap();
        assert_eq!(anchor.members, ids(&[20, 12, 17]));
        assert_eq!(anchor.label, "BancoInter");
        assert!(g.has_edge(&Edge { to: a, from: NodeId(20) }));
        assert_eq!(g.revision(), 1);
    }

    #[test]
    fn create_cluster_errors() {
        let mut g = graph(&[1, 2]);
        assert_eq!(g.create_cluster(&[], None), Err(GraphError::EmptySelection));
        assert_eq!(
            g.create_cluster(&ids(&[1, 99]), None),
            Err(GraphError::UnknownNode(NodeId(99)))
        );
        assert_eq!(g.create_cluster(&ids(&[1]), Some("  ")), Err(GraphError::EmptyLabel));
        assert_eq!(
            g.create_cluster(&ids(&[1]), Some("a;b")),
            Err(GraphError::ForbiddenCharacter(';'))
        );
        assert_eq!(g.revision(), 0);
        assert_eq!(g.cluster_count(), 0);
    }

    #[test]
    fn create_cluster_dedups() {
        let mut g = graph(&[5]);
        let a = g.create_cluster(&ids(&[5, 5, 5]), Some("x")).unwrap();
        assert_eq!(g.anchor(&a).unwrap().members, ids(&[5]));
        assert_eq!(members_by_scan(&g, &a), HashSet::from([NodeId(5)]));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn default_label() {
        let mut g = graph(&[1]);
        g.create_cluster_with_id(banco(), &ids(&[1]), None).unwrap();
        assert_eq!(g.anchor(&banco()).unwrap().label, "unnamed-a5e1baa2");
        assert_eq!(
            g.create_cluster_with_id(banco(), &ids(&[1]), None),
            Err(GraphError::DuplicateAnchor(banco()))
        );
    }

    #[test]
    fn rename() {
        let mut g = graph(&[12, 17, 20]);
        g.create_cluster_with_id(banco(), &ids(&[20, 12, 17]), None).unwrap();
        g.rename_node(NodeRef::Anchor(banco()), "BancoInter").unwrap();
        let a = g.anchor(&banco()).unwrap();
        assert_eq!(a.label, "BancoInter");
        assert_eq!(a.members, ids(&[20, 12, 17]));

        let before = g.clone();
        g.rename_node(NodeRef::Anchor(banco()), "BancoInter").unwrap();
        assert!(g.content_eq(&before));
        assert_eq!(g.revision(), before.revision() + 1);

        g.rename_node(NodeRef::Picture(NodeId(12)), "logo").unwrap();
        assert_eq!(g.node(NodeId(12)).unwrap().label.as_deref(), Some("logo"));

        let other = AnchorId::new_random();
        assert_eq!(
            g.rename_node(NodeRef::Anchor(other), "x"),
            Err(GraphError::UnknownTarget(NodeRef::Anchor(other)))
        );
        assert_eq!(
            g.rename_node(NodeRef::Picture(NodeId(3)), "x"),
            Err(GraphError::UnknownTarget(NodeRef::Picture(NodeId(3))))
        );
        assert_eq!(g.rename_node(NodeRef::Anchor(banco()), "\t\n"), Err(GraphError::EmptyLabel));
    }

    #[test]
    fn add_members() {
        let mut g = graph(&[12, 17, 20, 99]);
        g.create_cluster_with_id(banco(), &ids(&[20, 12, 17]), None).unwrap();
        g.add_members(&banco(), &ids(&[12])).unwrap();
        assert_eq!(g.anchor(&banco()).unwrap().members, ids(&[20, 12, 17]));
        let edges = g.edge_count();
        g.add_members(&banco(), &ids(&[99])).unwrap();
        assert_eq!(g.anchor(&banco()).unwrap().members, ids(&[20, 12, 17, 99]));
        assert_eq!(members_by_scan(&g, &banco()), ids(&[20, 12, 17, 99]).into_iter().collect());
        assert_eq!(g.edge_count(), edges + 1);

        let rev = g.revision();
        g.add_members(&banco(), &[]).unwrap();
        assert_eq!(g.revision(), rev + 1);

        assert_eq!(
            g.add_members(&banco(), &ids(&[7])),
            Err(GraphError::UnknownNode(NodeId(7)))
        );
        let other = AnchorId::new_random();
        assert_eq!(g.add_members(&other, &ids(&[12])), Err(GraphError::UnknownAnchor(other)));
    }

    #[test]
    fn remove_members() {
        let mut g = graph(&[12, 17, 20]);
        g.create_cluster_with_id(banco(), &ids(&[20, 12, 17]), None).unwrap();
        g.remove_members(&banco(), &ids(&[20])).unwrap();
        assert_eq!(g.anchor(&banco()).unwrap().members, ids(&[12, 17]));
        assert!(!g.has_edge(&Edge { to: banco(), from: NodeId(20) }));
        assert_eq!(members_by_scan(&g, &banco()), ids(&[12, 17]).into_iter().collect());

        g.remove_members(&banco(), &ids(&[999])).unwrap();
        assert_eq!(g.anchor(&banco()).unwrap().members, ids(&[12, 17]));

        g.remove_members(&banco(), &ids(&[12, 17])).unwrap();
        assert!(g.anchor(&banco()).unwrap().members.is_empty());
        assert_eq!(g.cluster_count(), 1);
    }

    #[test]
    fn delete_cluster() {
        let mut g = graph(&[12, 17, 20]);
        g.create_cluster_with_id(banco(), &ids(&[20, 12, 17]), None).unwrap();
        let before = g.edges.len();
        g.delete_cluster(&banco()).unwrap();
        assert_eq!(before - g.edges.len(), 3);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.delete_cluster(&banco()), Err(GraphError::UnknownAnchor(banco())));

        let a = g.create_cluster(&ids(&[12]), None).unwrap();
        g.remove_members(&a, &ids(&[12])).unwrap();
        g.delete_cluster(&a).unwrap();
        assert_eq!(g.cluster_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn delete_pictures_drops_memberships() {
        let mut g = graph(&[1, 2, 3]);
        let a = g.create_cluster(&ids(&[1, 2]), None).unwrap();
        g.delete_pictures(&ids(&[2, 2])).unwrap();
        assert_eq!(g.anchor(&a).unwrap().members, ids(&[1]));
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.delete_pictures(&ids(&[2])), Err(GraphError::UnknownNode(NodeId(2))));
        g.check_invariants().unwrap();
    }

    #[test]
    fn memberships() {
        let mut g = graph(&[7, 20]);
        assert_eq!(g.memberships_of(NodeId(7)).unwrap(), vec![]);
        let a = g.create_cluster(&ids(&[7, 20]), None).unwrap();
        let b = g.create_cluster(&ids(&[7]), None).unwrap();
        assert_eq!(g.memberships_of(NodeId(7)).unwrap(), vec![a, b]);
        assert_eq!(g.memberships_of(NodeId(20)).unwrap(), vec![a]);
        assert_eq!(g.memberships_of(NodeId(1)), Err(GraphError::UnknownNode(NodeId(1))));
    }

    #[test]
    fn unlabeled() {
        let mut g = graph(&[0, 12, 17, 20, 33]);
        assert_eq!(g.unlabeled_nodes(), ids(&[0, 12, 17, 20, 33]));
        g.create_cluster(&ids(&[20, 12, 17]), None).unwrap();
        // set difference by scan
        let labeled: HashSet<_> = g.edges.iter().map(|e| e.from).collect();
        let expected: Vec<_> = g.nodes.keys().filter(|n| !labeled.contains(n)).copied().collect();
        assert_eq!(expected, ids(&[0, 33]));
        assert_eq!(g.unlabeled_nodes(), expected);
        g.create_cluster(&ids(&[0, 33]), None).unwrap();
        assert!(g.unlabeled_nodes().is_empty());
    }

    #[test]
    fn create_then_delete_restores_edges_and_nodes() {
        let mut g = graph(&[1, 2, 3]);
        g.create_cluster(&ids(&[1]), None).unwrap();
        let before = g.clone();
        let a = g.create_cluster(&ids(&[2, 3, 1]), None).unwrap();
        g.delete_cluster(&a).unwrap();
        assert!(g.content_eq(&before));
        assert_ne!(g.revision(), before.revision());
    }

    #[test]
    fn from_parts_rejects() {
        let n = |i| PictureNode::new(NodeId(i), format!("{i}.png"));
        let a = |members: &[u64]| Anchor {
            id: banco(),
            label: "x".into(),
            members: ids(members),
        };
        let e = |from| Edge { to: banco(), from: NodeId(from) };
        assert_eq!(
            GraphState::from_parts(vec![n(1), n(1)], vec![], vec![]).unwrap_err(),
            Inconsistency::DuplicateNode(NodeId(1))
        );
        assert_eq!(
            GraphState::from_parts(vec![n(1)], vec![], vec![e(1)]).unwrap_err(),
            Inconsistency::DanglingEdge(NodeId(1), banco())
        );
        assert_eq!(
            GraphState::from_parts(vec![n(1), n(2)], vec![a(&[1, 2])], vec![e(1)]).unwrap_err(),
            Inconsistency::MemberEdgeMismatch(banco(), NodeId(2))
        );
        assert_eq!(
            GraphState::from_parts(vec![n(1)], vec![a(&[1])], vec![e(1), e(1)]).unwrap_err(),
            Inconsistency::DuplicateEdge(NodeId(1), banco())
        );
        assert_eq!(
            GraphState::from_parts(vec![n(1)], vec![a(&[1, 1])], vec![e(1)]).unwrap_err(),
            Inconsistency::DuplicateMember(banco(), NodeId(1))
        );
        assert_eq!(
            GraphState::from_parts(vec![n(1)], vec![a(&[3])], vec![]).unwrap_err(),
            Inconsistency::UnknownMember(banco(), NodeId(3))
        );
        assert!(GraphState::from_parts(vec![n(1)], vec![a(&[1])], vec![e(1)]).is_ok());
    }

    #[test]
    fn apply_resolves_created_cluster() {
        let mut server = graph(&[1, 2]);
        let mut replica = server.clone();
        let applied = server
            .apply(&Mutation::create_cluster(ids(&[2, 1, 2]), None))
            .unwrap();
        let Mutation::CreateCluster { anchor: Some(id), selection, label: Some(label) } = &applied
        else {
            panic!("unresolved {applied:?}");
        };
        assert_eq!(selection, &ids(&[2, 1]));
        assert!(label.starts_with("unnamed-"));
        replica.apply(&applied).unwrap();
        assert!(replica.content_eq(&server));
        assert!(replica.anchor(id).is_some());
    }
}
