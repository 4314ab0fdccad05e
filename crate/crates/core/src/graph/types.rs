use std::fmt;
use std::path::{Component, Path};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use uuid::Uuid;

/// Shape string carried by every picture node and anchor.
pub const SHAPE_IMAGE: &str = "image";
/// Group string carried by every anchor.
pub const GROUP_ANCHOR: &str = "anchor";
/// Image shown for every anchor node.
pub const ANCHOR_IMAGE: &str = "anchor.png";

/// Integer id of a picture node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for NodeId {
    fn from(value: u64) -> Self {
        NodeId(value)
    }
}

/// UUID of an anchor, always rendered lowercase and hyphenated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnchorId(Uuid);

impl AnchorId {
    pub fn new_random() -> Self {
        AnchorId(Uuid::new_v4())
    }

    pub fn from_uuid(uuid: Uuid) -> Self {
        AnchorId(uuid)
    }

    pub fn as_uuid(&self) -> &Uuid {
        &self.0
    }

    /// Parses only the canonical 8-4-4-4-12 lowercase form.
    pub fn parse_canonical(s: &str) -> Result<Self, InvalidAnchorId> {
        let uuid = Uuid::try_parse(s).map_err(|_| InvalidAnchorId(s.to_owned()))?;
        let id = AnchorId(uuid);
        if id.to_string() != s {
            return Err(InvalidAnchorId(s.to_owned()));
        }
        Ok(id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a canonical lowercase hyphenated uuid: {0:?}")]
pub struct InvalidAnchorId(pub String);

impl FromStr for AnchorId {
    type Err = InvalidAnchorId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnchorId::parse_canonical(s)
    }
}

impl fmt::Display for AnchorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0.hyphenated(), f)
    }
}

impl Serialize for AnchorId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AnchorId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        AnchorId::parse_canonical(&s).map_err(serde::de::Error::custom)
    }
}

/// Either kind of node. Picture ids are integers on the wire, anchor ids strings,
/// so the two namespaces never collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeRef {
    Picture(NodeId),
    Anchor(AnchorId),
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Picture(id) => write!(f, "node {id}"),
            NodeRef::Anchor(id) => write!(f, "anchor {id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PictureNode {
    pub id: NodeId,
    pub image: String,
    /// Cosmetic display label; absent until someone renames the picture.
    pub label: Option<String>,
}

impl PictureNode {
    pub fn new(id: NodeId, image: impl Into<String>) -> Self {
        PictureNode {
            id,
            image: image.into(),
            label: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchor {
    pub id: AnchorId,
    pub label: String,
    /// Insertion-ordered, duplicate-free.
    pub members: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub to: AnchorId,
    pub from: NodeId,
}

/// A picture filename is a single relative path with no `..`, root or prefix parts.
pub fn is_valid_image_name(image: &str) -> bool {
    if image.is_empty() {
        return false;
    }
    let path = Path::new(image);
    path.components().count() > 0
        && path
            .components()
            .all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
        && !image.contains('\\')
}

pub(crate) fn default_label(id: &AnchorId) -> String {
    let s = id.to_string();
    format!("unnamed-{}", &s[..8])
}
