//! Manifest parsing and image decoding.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::warn;
use motifscan_core::{Image, ImageRecord, Label, Manifest, ManifestEntry, Role};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{AppError, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    entries: Vec<ManifestEntry>,
}

/// Reads a manifest; entry paths stay as written (relative to the manifest's
/// directory).
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let err = |message: String| AppError::Manifest {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let file: ManifestFile = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    Manifest::new(file.entries).map_err(|e| err(e.to_string()))
}

/// Resolves a manifest entry path against the manifest's directory.
pub fn resolve(base: &Path, relative: &str) -> PathBuf {
    let p = Path::new(relative);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Decodes a PNG or JPEG file into 8-bit RGB.
pub fn load_image(path: &Path) -> Result<Image> {
    let err = |message: String| AppError::Image {
        path: path.to_path_buf(),
        message,
    };
    let decoded = image::ImageReader::open(path)
        .map_err(|e| err(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| err(e.to_string()))?
        .decode()
        .map_err(|e| err(e.to_string()))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    if w == 0 || h == 0 {
        return Err(err(format!("zero-sized image {w}x{h}")));
    }
    Image::from_rgb(w as usize, h as usize, rgb.into_raw()).map_err(|e| err(e.to_string()))
}

/// Decoded corpus split by role, each list in manifest order.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub targets: Vec<ImageRecord>,
    pub references: Vec<ImageRecord>,
}

impl Corpus {
    pub fn labels(&self) -> BTreeMap<String, Label> {
        self.targets
            .iter()
            .map(|r| (r.id.clone(), r.label))
            .collect()
    }

    pub fn unknown_targets(&self) -> usize {
        self.targets
            .iter()
            .filter(|r| r.label == Label::Unknown)
            .count()
    }
}

/// Loads every manifest image on the current rayon pool.
pub fn load_corpus(manifest_path: &Path) -> Result<Corpus> {
    let manifest = load_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let records: Vec<ImageRecord> = manifest
        .entries()
        .par_iter()
        .map(|e| {
            let image = load_image(&resolve(base, &e.path))?;
            Ok(ImageRecord::new(e.id.clone(), image)
                .with_role(e.role)
                .with_label(e.label)
                .with_source(e.path.clone()))
        })
        .collect::<Result<_>>()?;
    let (targets, references): (Vec<_>, Vec<_>) =
        records.into_iter().partition(|r| r.role == Role::Target);
    let corpus = Corpus {
        targets,
        references,
    };
    let unknown = corpus.unknown_targets();
    if unknown > 0 {
        warn!("{unknown} target image(s) have label \"unknown\" and are excluded from confusion counts");
    }
    Ok(corpus)
}
