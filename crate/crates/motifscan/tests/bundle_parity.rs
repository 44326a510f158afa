use std::path::{Path, PathBuf};

use motifscan::bundle::{ModelBundle, ReferenceVectors};
use motifscan::corpus::load_image;
use motifscan::onnx::OnnxEmbedder;
use motifscan_core::embed::embedding_cosine;
use motifscan_core::{Embedding, EmbeddingProvider};

fn bundle_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bundle")
}

fn setup(batch: usize) -> (OnnxEmbedder, ReferenceVectors) {
    let bundle = ModelBundle::load(&bundle_dir()).unwrap();
    let refs = ReferenceVectors::load(&bundle.reference_vectors_path()).unwrap();
    (OnnxEmbedder::load(bundle, batch).unwrap(), refs)
}

#[test]
fn tokens_match_reference_tokenizer() {
    let (e, refs) = setup(4);
    assert_eq!(refs.texts.len(), 5);
    for t in &refs.texts {
        assert_eq!(
            e.bundle().tokenizer.tokenize(&t.text),
            t.tokens,
            "{:?}",
            t.text
        );
    }
    let empty = refs.texts.iter().find(|t| t.text.is_empty()).unwrap();
    let (sot, eot) = (e.bundle().tokenizer.sot_id(), e.bundle().tokenizer.eot_id());
    assert_eq!(&empty.tokens[..2], &[sot, eot]);
    assert!(empty.tokens[2..].iter().all(|&t| t == 0));
    assert_eq!(empty.tokens.len(), 77);
}

#[test]
fn pixel_values_track_reference_pipeline() {
    let (e, refs) = setup(4);
    for img in &refs.images {
        let image = load_image(&bundle_dir().join(&img.file)).unwrap();
        let ours = e.pixel_values(&image).unwrap();
        let theirs = img.pixel_values.as_ref().unwrap();
        assert_eq!(ours.len(), theirs.len());
        let worst = ours
            .iter()
            .zip(theirs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(worst < 1e-2, "{}: max abs diff {worst}", img.name);
    }
}

#[test]
fn embeddings_match_reference_vectors() {
    let (e, refs) = setup(4);
    let images: Vec<_> = refs
        .images
        .iter()
        .map(|i| load_image(&bundle_dir().join(&i.file)).unwrap())
        .collect();
    let ours = e.embed_images(&images).unwrap();
    for (emb, r) in ours.iter().zip(&refs.images) {
        assert!((emb.norm() - 1.0).abs() < 1e-5);
        let c = embedding_cosine(emb, &Embedding::normalized(&r.embedding).unwrap()).unwrap();
        assert!(c >= 0.999, "{}: cosine {c}", r.name);
    }
    for t in &refs.texts {
        let emb = e.embed_text(&t.text).unwrap();
        assert!((emb.norm() - 1.0).abs() < 1e-5);
        let c = embedding_cosine(&emb, &Embedding::normalized(&t.embedding).unwrap()).unwrap();
        assert!(c >= 0.999, "{:?}: cosine {c}", t.text);
    }
}

#[test]
fn reference_pixel_values_reproduce_reference_embeddings() {
    let (e, refs) = setup(2);
    let pixels: Vec<Vec<f32>> = refs
        .images
        .iter()
        .map(|i| i.pixel_values.clone().unwrap())
        .collect();
    for (emb, r) in e
        .embed_pixel_values(&pixels)
        .unwrap()
        .iter()
        .zip(&refs.images)
    {
        let c = embedding_cosine(emb, &Embedding::normalized(&r.embedding).unwrap()).unwrap();
        assert!(c > 0.99999, "{}: cosine {c}", r.name);
    }
}

#[test]
fn batch_size_does_not_change_outputs() {
    let refs = setup(1).1;
    let images: Vec<_> = refs
        .images
        .iter()
        .map(|i| load_image(&bundle_dir().join(&i.file)).unwrap())
        .collect();
    let single = setup(1).0.embed_images(&images).unwrap();
    for batch in [2, 3, 16] {
        let (e, _) = setup(batch);
        assert_eq!(e.image_batch(), batch);
        let again = e.embed_images(&images).unwrap();
        for (a, b) in again.iter().zip(&single) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-5);
            }
        }
        assert_eq!(e.embed_images(&images).unwrap(), again);
    }
}

#[test]
fn text_embedding_is_deterministic() {
    let (e, _) = setup(1);
    let t = "swastika stamped on aged coinage";
    assert_eq!(e.embed_text(t).unwrap(), e.embed_text(t).unwrap());
}
