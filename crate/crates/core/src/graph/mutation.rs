use serde::{Deserialize, Serialize};

use super::types::{AnchorId, NodeId, NodeRef};

/// One labeling action. This is both the request a client sends and, once the
/// server has resolved it, the record broadcast to every client for replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mutation {
    CreateCluster {
        /// Left empty by clients; filled with the fresh id once applied.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchor: Option<AnchorId>,
        selection: Vec<NodeId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    RenameNode {
        target: NodeRef,
        label: String,
    },
    DeleteCluster {
        anchor: AnchorId,
    },
    AddMembers {
        anchor: AnchorId,
        selection: Vec<NodeId>,
    },
    RemoveMembers {
        anchor: AnchorId,
        selection: Vec<NodeId>,
    },
    DeletePictures {
        selection: Vec<NodeId>,
    },
}

impl Mutation {
    pub fn kind(&self) -> &'static str {
        match self {
            Mutation::CreateCluster { .. } => "create_cluster",
            Mutation::RenameNode { .. } => "rename_node",
            Mutation::DeleteCluster { .. } => "delete_cluster",
            Mutation::AddMembers { .. } => "add_members",
            Mutation::RemoveMembers { .. } => "remove_members",
            Mutation::DeletePictures { .. } => "delete_pictures",
        }
    }

    pub fn create_cluster(selection: Vec<NodeId>, label: Option<String>) -> Self {
        Mutation::CreateCluster {
            anchor: None,
            selection,
            label,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn wire_shape() {
        let m = Mutation::create_cluster(vec![NodeId(20), NodeId(12)], Some("BancoInter".into()));
        assert_eq!(
            serde_json::to_value(&m).unwrap(),
            json!({"kind": "create_cluster", "selection": [20, 12], "label": "BancoInter"})
        );
        let m: Mutation = serde_json::from_value(json!({
            "kind": "rename_node",
            "target": "a5e1baa2-aead-4164-9205-63f26f656d6f",
            "label": "x"
        }))
        .unwrap();
        assert_eq!(m.kind(), "rename_node");
    }

    #[test]
    fn rejects_missing_payload_and_extra_fields() {
        assert!(serde_json::from_value::<Mutation>(json!({"kind": "delete_cluster"})).is_err());
        assert!(serde_json::from_value::<Mutation>(json!({"kind": "move_node", "x": 1})).is_err());
        assert!(serde_json::from_value::<Mutation>(
            json!({"kind": "delete_pictures", "selection": [1], "x": 3.0, "y": 4.0})
        )
        .is_err());
    }
}
