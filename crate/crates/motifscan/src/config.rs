//! The JSON run configuration and flag overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use motifscan_core::embed::DEFAULT_BATCH_SIZE;
use motifscan_core::report::DEFAULT_BINS;
use motifscan_core::scoring::ParamValue;
use motifscan_core::{Aggregation, Backend, Mechanism, TileSpec};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.01, 0.05, 0.1];
pub const DEFAULT_K: usize = 10;

/// Accepts either a single value or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// The live query: a text prompt or an image file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<PathBuf>,
}

impl QuerySpec {
    fn validate(&self, what: &str) -> Result<()> {
        match (&self.text, &self.image) {
            (Some(_), None) => Ok(()),
            (None, Some(p)) if p.is_file() => Ok(()),
            (None, Some(p)) => Err(AppError::Config(format!(
                "{what} image {} does not exist",
                p.display()
            ))),
            _ => Err(AppError::Config(format!(
                "{what} {:?} needs exactly one of text or image",
                self.name
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockSpec {
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerSpec {
    pub backend: Backend,
    /// Display name override for embedding backends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    /// Model bundle directory (embedding backends).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<PathBuf>,
    /// Deterministic stand-in encoder instead of a bundle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock: Option<MockSpec>,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
}

impl ScorerSpec {
    pub fn new(backend: Backend) -> Self {
        Self {
            backend,
            model_id: None,
            bundle: None,
            mock: None,
            params: BTreeMap::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let b = self.backend;
        match (b.is_embedding(), &self.bundle, &self.mock) {
            (true, Some(_), Some(_)) | (true, None, None) => Err(AppError::Config(format!(
                "{b} scorer needs exactly one of bundle or mock"
            ))),
            (true, Some(dir), None) if !dir.is_dir() => Err(AppError::Config(format!(
                "bundle {} is not a directory",
                dir.display()
            ))),
            (true, None, Some(m)) if m.dim == 0 => {
                Err(AppError::Config("mock dim must be positive".into()))
            }
            (false, None, None) => Ok(()),
            (false, _, _) => Err(AppError::Config(format!(
                "{b} scorer takes no bundle or mock"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    #[serde(alias = "mechanism", default = "default_mechanisms")]
    pub mechanisms: OneOrMany<Mechanism>,
    /// Decoy query list, required for mechanism 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoys: Option<PathBuf>,
}

fn default_mechanisms() -> OneOrMany<Mechanism> {
    OneOrMany::One(Mechanism::ReferenceImages)
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            mechanisms: default_mechanisms(),
            decoys: None,
        }
    }
}

fn default_thresholds() -> Vec<f64> {
    DEFAULT_THRESHOLDS.to_vec()
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_threads() -> usize {
    1
}

fn default_batch() -> usize {
    DEFAULT_BATCH_SIZE
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// A full run description. Relative paths are resolved against the config
/// file's directory by [`RunConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub query: QuerySpec,
    #[serde(alias = "scorer")]
    pub scorers: OneOrMany<ScorerSpec>,
    #[serde(default)]
    pub tiles: TileSpec,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub calibration: CalibrationSpec,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// Rows shown in the printed ranked listing; all rows go to files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<usize>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    #[serde(default)]
    pub dump_keypoints: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub backend: Option<Backend>,
    pub mechanism: Option<Mechanism>,
    pub k: Option<usize>,
    pub threads: Option<usize>,
    pub top: Option<usize>,
    pub dump_keypoints: bool,
}

fn absolutize(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn from_json(text: &str, base: &Path) -> std::result::Result<Self, serde_json::Error> {
        let mut cfg: RunConfig = serde_json::from_str(text)?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_json(&text, base).map_err(|e| AppError::json(path, e))
    }

    fn resolve_paths(&mut self, base: &Path) {
        absolutize(base, &mut self.manifest);
        absolutize(base, &mut self.output);
        if let Some(p) = self.query.image.as_mut() {
            absolutize(base, p);
        }
        if let Some(p) = self.calibration.decoys.as_mut() {
            absolutize(base, p);
        }
        if let OneOrMany::One(s) = &self.scorers {
            self.scorers = OneOrMany::Many(vec![s.clone()]);
        }
        if let OneOrMany::Many(list) = &mut self.scorers {
            for s in list {
                if let Some(p) = s.bundle.as_mut() {
                    absolutize(base, p);
                }
            }
        }
    }

    pub fn scorers(&self) -> &[ScorerSpec] {
        match &self.scorers {
            OneOrMany::One(s) => std::slice::from_ref(s),
            OneOrMany::Many(v) => v,
        }
    }

    pub fn mechanisms(&self) -> Vec<Mechanism> {
        self.calibration.mechanisms.clone().into_vec()
    }

    /// Applies flags; a `--backend` keeps the configured scorers of that
    /// backend, or adds a bare one if none is configured.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.output {
            self.output = p.clone();
        }
        if let Some(b) = o.backend {
            let kept: Vec<ScorerSpec> = self
                .scorers()
                .iter()
                .filter(|s| s.backend == b)
                .cloned()
                .collect();
            self.scorers = OneOrMany::Many(if kept.is_empty() {
                vec![ScorerSpec::new(b)]
            } else {
                kept
            });
        }
        if let Some(m) = o.mechanism {
            self.calibration.mechanisms = OneOrMany::One(m);
        }
        if let Some(k) = o.k {
            self.k = k;
        }
        if let Some(t) = o.threads {
            self.threads = t;
        }
        if o.top.is_some() {
            self.top = o.top;
        }
        self.dump_keypoints |= o.dump_keypoints;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AppError::Config(m));
        if !self.manifest.is_file() {
            return bad(format!(
                "manifest {} does not exist",
                self.manifest.display()
            ));
        }
        self.query.validate("query")?;
        if self.scorers().is_empty() {
            return bad("no scorers configured".into());
        }
        for s in self.scorers() {
            s.validate()?;
        }
        self.tiles
            .validate()
            .map_err(|e| AppError::Config(e.to_string()))?;
        let mechanisms = self.mechanisms();
        if mechanisms.is_empty() {
            return bad("no calibration mechanism configured".into());
        }
        if mechanisms.contains(&Mechanism::DecoyQueries) {
            match &self.calibration.decoys {
                None => return bad("mechanism 2 needs a decoys file".into()),
                Some(p) if !p.is_file() => {
                    return bad(format!("decoys file {} does not exist", p.display()))
                }
                Some(_) => {}
            }
        }
        if self.thresholds.is_empty() {
            return bad("thresholds list is empty".into());
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return bad(format!("threshold {t} is outside (0, 1)"));
        }
        if self.k < 1 {
            return bad("k must be at least 1".into());
        }
        if self.threads < 1 {
            return bad("threads must be at least 1".into());
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1".into());
        }
        if self.histogram_bins < 1 {
            return bad("histogram_bins must be at least 1".into());
        }
        Ok(())
    }
}

/// One decoy query in a decoys file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoyFile {
    pub decoys: Vec<QuerySpec>,
}

impl DecoyFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let mut file: DecoyFile =
            serde_json::from_str(&text).map_err(|e| AppError::json(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut file.decoys {
            if let Some(p) = d.image.as_mut() {
                absolutize(base, p);
            }
            d.validate("decoy")?;
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("manifest.json"), "{}").unwrap();
        dir
    }

    #[test]
    fn defaults_and_single_forms() {
        let dir = base_dir();
        let cfg = RunConfig::from_json(
            r#"{"manifest":"manifest.json","query":{"name":"q","text":"eagle"},
                "scorer":{"backend":"embed_text_query","mock":{"dim":8}}}"#,
            dir.path(),
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.scorers().len(), 1);
        assert_eq!(cfg.mechanisms(), vec![Mechanism::ReferenceImages]);
        assert_eq!(cfg.thresholds, DEFAULT_THRESHOLDS);
        assert_eq!(
            (cfg.k, cfg.threads, cfg.batch_size, cfg.histogram_bins),
            (10, 1, 16, 30)
        );
        assert_eq!(cfg.tiles, TileSpec::default());
        assert_eq!(cfg.output, dir.path().join("out"));
    }

    #[test]
    fn flags_override_file() {
        let dir = base_dir();
        let mut cfg = RunConfig::from_json(
            r#"{"manifest":"manifest.json","query":{"name":"q","text":"eagle"},
                "scorers":[{"backend":"embed_text_query","mock":{"dim":8}},{"backend":"sift"}],
                "calibration":{"mechanisms":[1,3]},"k":20,"threads":2}"#,
            dir.path(),
        )
        .unwrap();
        cfg.apply(&Overrides {
            k: Some(5),
            mechanism: Some(Mechanism::ReferenceTiles),
            ..Default::default()
        });
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.threads, 2);
        assert_eq!(cfg.mechanisms(), vec![Mechanism::ReferenceTiles]);
        cfg.apply(&Overrides {
            backend: Some(Backend::Sift),
            ..Default::default()
        });
        assert_eq!(cfg.scorers(), &[ScorerSpec::new(Backend::Sift)]);
        cfg.apply(&Overrides {
            backend: Some(Backend::Orb),
            ..Default::default()
        });
        assert_eq!(cfg.scorers()[0].backend, Backend::Orb);
    }

    #[test]
    fn invalid_configs() {
        let dir = base_dir();
        let parse = |extra: &str| {
            RunConfig::from_json(
                &format!(
                    r#"{{"manifest":"manifest.json","query":{{"name":"q","text":"x"}},
                        "scorers":[{{"backend":"pixel_cosine"}}]{extra}}}"#
                ),
                dir.path(),
            )
        };
        parse("").unwrap().validate().unwrap();
        for extra in [
            r#","thresholds":[0.0]"#,
            r#","thresholds":[1.0]"#,
            r#","k":0"#,
            r#","threads":0"#,
            r#","calibration":{"mechanism":2}"#,
            r#","calibration":{"mechanism":2,"decoys":"missing.json"}"#,
        ] {
            let cfg = match parse(extra) {
                Ok(c) => c,
                Err(_) => continue,
            };
            assert!(cfg.validate().is_err(), "{extra}");
        }
        assert!(parse(r#","calibration":{"mechanism":4}"#).is_err());
        let mut missing = parse("").unwrap();
        missing.manifest = dir.path().join("nope.json");
        assert!(missing.validate().is_err());
        assert!(parse(r#","bogus":1"#).is_err());

        let cfg = RunConfig::from_json(
            r#"{"manifest":"manifest.json","query":{"name":"q","text":"x","image":"a.png"},"scorers":[{"backend":"sift"}]}"#,
            dir.path(),
        )
        .unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::from_json(
            r#"{"manifest":"manifest.json","query":{"name":"q","text":"x"},"scorers":[{"backend":"embed_text_query"}]}"#,
            dir.path(),
        )
        .unwrap();
        assert!(cfg.validate().is_err());
    }
}
