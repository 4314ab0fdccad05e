//! Building a fresh graph from a flat folder of pictures, and the thumbnail
//! mirror under `<dataset_dir>/.thumbs/`.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use image::{imageops::FilterType, DynamicImage, ImageFormat, Rgba, RgbaImage};
use rayon::prelude::*;

use crate::graph::{GraphState, NodeId, PictureNode};

pub const THUMB_DIR: &str = ".thumbs";
pub const DEFAULT_THUMB_SIZE: u32 = 128;
pub const MIN_THUMB_SIZE: u32 = 16;
pub const DEFAULT_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "gif", "bmp"];

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("dataset directory {0} does not exist or is not a directory")]
    MissingDirectory(PathBuf),
    #[error("thumbnail size {0} is below the minimum of {MIN_THUMB_SIZE}")]
    ThumbSizeTooSmall(u32),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub dataset_dir: PathBuf,
    pub thumb_max_edge: u32,
    /// Lowercase, without the leading dot.
    pub accepted_extensions: BTreeSet<String>,
}

impl IngestConfig {
    pub fn new(dataset_dir: impl Into<PathBuf>) -> Self {
        IngestConfig {
            dataset_dir: dataset_dir.into(),
            thumb_max_edge: DEFAULT_THUMB_SIZE,
            accepted_extensions: DEFAULT_EXTENSIONS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn with_thumb_size(mut self, thumb_max_edge: u32) -> Result<Self, IngestError> {
        if thumb_max_edge < MIN_THUMB_SIZE {
            return Err(IngestError::ThumbSizeTooSmall(thumb_max_edge));
        }
        self.thumb_max_edge = thumb_max_edge;
        Ok(self)
    }

    pub fn thumb_dir(&self) -> PathBuf {
        self.dataset_dir.join(THUMB_DIR)
    }

    fn accepts(&self, name: &str) -> bool {
        Path::new(name)
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| self.accepted_extensions.contains(&e.to_ascii_lowercase()))
    }
}

/// One picture node per accepted file directly inside `dataset_dir`, ids
/// assigned densely in byte order of the filenames. An empty folder yields an
/// empty graph with a warning.
pub fn ingest_folder(config: &IngestConfig) -> Result<GraphState, IngestError> {
    let dir = &config.dataset_dir;
    if !dir.is_dir() {
        return Err(IngestError::MissingDirectory(dir.clone()));
    }
    let entries = fs::read_dir(dir).map_err(|source| IngestError::Io {
        path: dir.clone(),
        source,
    })?;

    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| IngestError::Io {
            path: dir.clone(),
            source,
        })?;
        let Ok(name) = entry.file_name().into_string() else {
            log::warn!("skipping non utf-8 filename {:?}", entry.file_name());
            continue;
        };
        if !config.accepts(&name) {
            continue;
        }
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        if let Err(e) = fs::File::open(&path) {
            log::warn!("skipping unreadable file {name}: {e}");
            continue;
        }
        names.push(name);
    }
    names.sort_unstable_by(|a, b| a.as_bytes().cmp(b.as_bytes()));

    if names.is_empty() {
        log::warn!("dataset {} contains no accepted pictures", dir.display());
    }
    let nodes = names
        .into_iter()
        .enumerate()
        .map(|(i, name)| PictureNode::new(NodeId(i as u64), name))
        .collect();
    Ok(GraphState::from_parts(nodes, vec![], vec![]).expect("fresh ingest is consistent"))
}

/// Size of a thumbnail: the longest edge becomes `min(longest, max_edge)`, the
/// other edge is scaled proportionally, floored and kept at least one pixel.
pub fn thumbnail_dimensions(width: u32, height: u32, max_edge: u32) -> (u32, u32) {
    let longest = width.max(height);
    if longest <= max_edge {
        return (width, height);
    }
    let scale = |edge: u32| ((edge as u64 * max_edge as u64 / longest as u64) as u32).max(1);
    if width >= height {
        (max_edge, scale(height))
    } else {
        (scale(width), max_edge)
    }
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ThumbnailReport {
    /// Thumbnails decoded, resized and written in this run.
    pub encoded: usize,
    /// Thumbnails already newer than their source.
    pub skipped: usize,
    /// Sources that failed to decode; a placeholder was written for each.
    pub placeholders: Vec<String>,
}

enum Outcome {
    Encoded,
    Skipped,
    Placeholder(String),
}

fn modified(path: &Path) -> Option<SystemTime> {
    fs::metadata(path).and_then(|m| m.modified()).ok()
}

fn save(img: &DynamicImage, path: &Path, format: ImageFormat) -> image::ImageResult<()> {
    match format {
        ImageFormat::Jpeg => DynamicImage::ImageRgb8(img.to_rgb8()).save_with_format(path, format),
        _ => img.save_with_format(path, format),
    }
}

fn placeholder(edge: u32) -> DynamicImage {
    DynamicImage::ImageRgba8(RgbaImage::from_pixel(edge, edge, Rgba([160, 160, 160, 255])))
}

fn thumbnail_one(config: &IngestConfig, image: &str) -> Result<Outcome, IngestError> {
    let source = config.dataset_dir.join(image);
    let target = config.thumb_dir().join(image);
    if let (Some(src), Some(dst)) = (modified(&source), modified(&target)) {
        if dst >= src {
            return Ok(Outcome::Skipped);
        }
    }
    let format = ImageFormat::from_path(&source).unwrap_or(ImageFormat::Png);
    let io_err = |source| IngestError::Io {
        path: target.clone(),
        source,
    };
    let decoded = image::ImageReader::open(&source)
        .map_err(image::ImageError::IoError)
        .and_then(|r| r.with_guessed_format().map_err(image::ImageError::IoError))
        .and_then(|r| r.decode());
    let (thumb, outcome) = match decoded {
        Ok(img) => {
            let (w, h) = thumbnail_dimensions(img.width(), img.height(), config.thumb_max_edge);
            let thumb = if (w, h) == (img.width(), img.height()) {
                img
            } else {
                img.resize_exact(w, h, FilterType::Triangle)
            };
            (thumb, Outcome::Encoded)
        }
        Err(e) => {
            log::warn!("cannot decode {image}, writing placeholder: {e}");
            (
                placeholder(config.thumb_max_edge.min(64)),
                Outcome::Placeholder(image.to_owned()),
            )
        }
    };
    if let Some(parent) = target.parent() {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    save(&thumb, &target, format).map_err(|e| match e {
        image::ImageError::IoError(source) => io_err(source),
        other => io_err(io::Error::other(other)),
    })?;
    Ok(outcome)
}

/// Writes a down-scaled copy of every picture to `<dataset_dir>/.thumbs/<name>`
/// in its source format. Thumbnails at least as new as their source are left alone.
pub fn generate_thumbnails(
    config: &IngestConfig,
    state: &GraphState,
) -> Result<ThumbnailReport, IngestError> {
    let thumb_dir = config.thumb_dir();
    fs::create_dir_all(&thumb_dir).map_err(|source| IngestError::Io {
        path: thumb_dir,
        source,
    })?;
    let images: Vec<&str> = state.nodes().map(|n| n.image.as_str()).collect();
    let outcomes = images
        .par_iter()
        .map(|image| thumbnail_one(config, image))
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = ThumbnailReport::default();
    for outcome in outcomes {
        match outcome {
            Outcome::Encoded => report.encoded += 1,
            Outcome::Skipped => report.skipped += 1,
            Outcome::Placeholder(name) => report.placeholders.push(name),
        }
    }
    report.placeholders.sort();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        // floor(128 * 1080 / 1920) = floor(72.0) = 72
        assert_eq!(thumbnail_dimensions(1920, 1080, 128), (128, 72));
        assert_eq!(thumbnail_dimensions(1080, 1920, 128), (72, 128));
        assert_eq!(thumbnail_dimensions(64, 64, 128), (64, 64));
        // floor(128 * 100 / 300) = floor(42.67) = 42
        assert_eq!(thumbnail_dimensions(300, 100, 128), (128, 42));
        assert_eq!(thumbnail_dimensions(10_000, 1, 16), (16, 1));
        assert_eq!(thumbnail_dimensions(200, 200, 128), (128, 128));
    }

    #[test]
    fn thumb_size_minimum() {
        assert!(IngestConfig::new(".").with_thumb_size(15).is_err());
        assert_eq!(IngestConfig::new(".").with_thumb_size(16).unwrap().thumb_max_edge, 16);
    }

    #[test]
    fn extension_filter_is_case_insensitive() {
        let c = IngestConfig::new(".");
        assert!(c.accepts("a.PNG"));
        assert!(c.accepts("b.jpeg"));
        assert!(!c.accepts("notes.txt"));
        assert!(!c.accepts("png"));
    }
}
