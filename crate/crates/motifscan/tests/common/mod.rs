#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use motifscan_core::image::GrayImage;
use motifscan_core::synth::{paste, texture};
use motifscan_core::Image;
use serde_json::{json, Value};

pub fn save_png(path: &Path, image: &Image) {
    image::RgbImage::from_raw(
        image.width() as u32,
        image.height() as u32,
        image.rgb().to_vec(),
    )
    .unwrap()
    .save(path)
    .unwrap();
}

pub fn save_gray(path: &Path, gray: &GrayImage) {
    save_png(path, &Image::from_gray(gray));
}

pub fn motif() -> GrayImage {
    GrayImage::from_fn(
        24,
        24,
        |x, y| if (x / 6 + y / 6) % 2 == 0 { 0.95 } else { 0.05 },
    )
    .unwrap()
}

pub struct Corpus {
    pub positives: usize,
    pub negatives: usize,
    pub references: usize,
    pub size: usize,
}

/// Writes textured images (positives carry [`motif`]), `manifest.json` and
/// `motif.png` into `dir`.
pub fn write_corpus(dir: &Path, c: &Corpus) {
    let patch = motif();
    let mut entries = Vec::new();
    let mut add = |id: String, role: &str, label: &str, gray: GrayImage| {
        let file = format!("{id}.png");
        save_gray(&dir.join(&file), &gray);
        entries.push(json!({"id": id, "path": file, "role": role, "label": label}));
    };
    let s = c.size;
    for i in 0..c.positives {
        let base = texture(s, s, 1000 + i as u64);
        let off = (i * 7) % (s - patch.width());
        add(
            format!("pos{i:02}"),
            "target",
            "positive",
            paste(&base, &patch, off, s - patch.height() - off / 2),
        );
    }
    for i in 0..c.negatives {
        add(
            format!("neg{i:03}"),
            "target",
            "negative",
            texture(s, s, 2000 + i as u64),
        );
    }
    for i in 0..c.references {
        add(
            format!("ref{i:02}"),
            "reference",
            "unknown",
            texture(s, s, 3000 + i as u64),
        );
    }
    std::fs::write(
        dir.join("manifest.json"),
        json!({ "entries": entries }).to_string(),
    )
    .unwrap();
    save_gray(&dir.join("motif.png"), &patch);
}

pub fn write_config(dir: &Path, name: &str, config: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

pub fn mock_scorer(backend: &str) -> Value {
    json!({"backend": backend, "mock": {"dim": 64, "seed": 7}})
}

pub fn bundle_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bundle")
}

pub fn motifscan(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_motifscan"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
