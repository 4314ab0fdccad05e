#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anchorgraph::server::{router, AppState};
use anchorgraph::sync::SyncHub;
use anchorgraph::{AnchorId, GraphState, Mutation, NodeId, NodeRef, PictureNode};
use futures::{SinkExt, StreamExt};
use image::{Rgb, RgbImage};
use rand::seq::SliceRandom;
use rand::Rng;
use tokio_tungstenite::tungstenite::Message;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn pictures(n: u64) -> GraphState {
    GraphState::from_parts(
        (0..n).map(|i| PictureNode::new(NodeId(i), format!("pic-{i:05}.png"))).collect(),
        vec![],
        vec![],
    )
    .unwrap()
}

pub fn write_png(path: &Path, width: u32, height: u32) {
    RgbImage::from_fn(width, height, |x, y| Rgb([(x % 256) as u8, (y % 256) as u8, 128]))
        .save(path)
        .unwrap();
}

/// A folder of `n` distinct tiny pictures, written in scrambled order.
pub fn picture_folder(dir: &Path, n: usize) -> Vec<String> {
    let mut names: Vec<String> = (0..n).map(|i| format!("img-{:05}-{}.png", (i * 7919) % 100_003, i)).collect();
    names.shuffle(&mut rand::thread_rng());
    for name in &names {
        write_png(&dir.join(name), 4, 3);
    }
    names
}

/// Independent consistency oracle over the public API: members are unique,
/// point at existing pictures, each has an edge, and the edge count equals the
/// member total (so no edge exists outside the member lists).
pub fn assert_consistent(state: &GraphState) {
    let mut total = 0;
    for anchor in state.clusters() {
        let mut seen = std::collections::HashSet::new();
        for m in &anchor.members {
            assert!(seen.insert(*m), "duplicate member {m} in {}", anchor.id);
            assert!(state.node(*m).is_some(), "dangling member {m}");
            assert!(state.has_edge(&anchorgraph::Edge { to: anchor.id, from: *m }), "missing edge {m}");
        }
        total += anchor.members.len();
    }
    assert_eq!(state.edge_count(), total, "edge set and member lists disagree");
    state.check_invariants().unwrap();
}

fn random_label(rng: &mut impl Rng) -> String {
    match rng.gen_range(0..20) {
        0 => String::new(),
        1 => "   ".into(),
        2 => "bad;label".into(),
        _ => format!("label-{}", rng.gen_range(0..50)),
    }
}

fn random_selection(rng: &mut impl Rng, ids: &[NodeId], unknown: bool) -> Vec<NodeId> {
    let n = rng.gen_range(0..6);
    (0..n)
        .map(|_| {
            if unknown || ids.is_empty() {
                NodeId(rng.gen_range(1_000_000..1_000_100))
            } else {
                *ids.choose(rng).unwrap()
            }
        })
        .collect()
}

/// A random mutation against `state`. With probability `invalid_rate` it is
/// built to reference things that do not exist; the rest are plausible but can
/// still fail (empty selections, bad labels).
pub fn random_mutation(rng: &mut impl Rng, state: &GraphState, invalid_rate: f64) -> Mutation {
    let ids: Vec<NodeId> = state.nodes().map(|n| n.id).collect();
    let anchors: Vec<AnchorId> = state.clusters().map(|a| a.id).collect();
    let bogus = rng.gen_bool(invalid_rate);
    let anchor = |rng: &mut _| -> AnchorId {
        if bogus || anchors.is_empty() {
            AnchorId::new_random()
        } else {
            *anchors.choose(rng).unwrap()
        }
    };
    match rng.gen_range(0..100) {
        0..=29 => Mutation::CreateCluster {
            anchor: None,
            selection: random_selection(rng, &ids, bogus),
            label: if rng.gen_bool(0.7) { Some(random_label(rng)) } else { None },
        },
        30..=44 => Mutation::RenameNode {
            target: if rng.gen_bool(0.8) {
                NodeRef::Anchor(anchor(rng))
            } else if bogus || ids.is_empty() {
                NodeRef::Picture(NodeId(2_000_000))
            } else {
                NodeRef::Picture(*ids.choose(rng).unwrap())
            },
            label: random_label(rng),
        },
        45..=64 => Mutation::AddMembers {
            anchor: anchor(rng),
            selection: random_selection(rng, &ids, bogus),
        },
        65..=84 => Mutation::RemoveMembers {
            anchor: anchor(rng),
            selection: random_selection(rng, &ids, false),
        },
        85..=98 => Mutation::DeleteCluster { anchor: anchor(rng) },
        _ => Mutation::DeletePictures {
            selection: random_selection(rng, &ids, bogus).into_iter().take(1).collect(),
        },
    }
}

pub async fn spawn_server(state: GraphState, dataset_dir: Option<PathBuf>, max_clients: usize) -> (SocketAddr, Arc<SyncHub>) {
    let hub = Arc::new(SyncHub::new(state, max_clients));
    let app = router(AppState {
        hub: hub.clone(),
        dataset_dir,
    });
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (addr, hub)
}

pub type WsStream =
    tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

pub async fn ws_connect(addr: SocketAddr) -> WsStream {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    ws
}

pub async fn ws_send(ws: &mut WsStream, text: impl Into<String>) {
    ws.send(Message::Text(text.into().into())).await.unwrap();
}

/// Next text frame, or `None` once the server closes.
pub async fn ws_recv(ws: &mut WsStream) -> Option<String> {
    loop {
        match ws.next().await? {
            Ok(Message::Text(t)) => return Some(t.to_string()),
            Ok(Message::Close(_)) | Err(_) => return None,
            Ok(_) => continue,
        }
    }
}

pub fn mutate_frame(mutation: &Mutation, client_seq: u64) -> String {
    serde_json::json!({"type": "mutate", "mutation": mutation, "client_seq": client_seq}).to_string()
}

/// Raw HTTP/1.1 GET against a running server; returns (status, body).
pub async fn http_get(addr: SocketAddr, path: &str) -> (u16, Vec<u8>) {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let mut s = tokio::net::TcpStream::connect(addr).await.unwrap();
    s.write_all(format!("GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").as_bytes())
        .await
        .unwrap();
    let mut buf = Vec::new();
    s.read_to_end(&mut buf).await.unwrap();
    let split = buf.windows(4).position(|w| w == b"\r\n\r\n").unwrap();
    let head = String::from_utf8_lossy(&buf[..split]).to_string();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let mut body = buf[split + 4..].to_vec();
    if head.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        body = dechunk(&body);
    }
    (status, body)
}

fn dechunk(mut data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    loop {
        let line_end = data.windows(2).position(|w| w == b"\r\n").unwrap();
        let size = usize::from_str_radix(std::str::from_utf8(&data[..line_end]).unwrap().trim(), 16).unwrap();
        data = &data[line_end + 2..];
        if size == 0 {
            return out;
        }
        out.extend_from_slice(&data[..size]);
        data = &data[size + 2..];
    }
}
