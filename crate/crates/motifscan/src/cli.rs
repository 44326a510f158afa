//! Command-line entry points.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::warn;
use motifscan_core::embed::embedding_cosine;
use motifscan_core::report::fmt4;
use motifscan_core::{Backend, Embedding, EmbeddingProvider, Mechanism};
use serde::Serialize;

use crate::bundle::{ModelBundle, ReferenceImage, ReferenceText, ReferenceVectors};
use crate::config::{Overrides, RunConfig};
use crate::corpus::load_image;
use crate::error::{AppError, ExitCode, Result};
use crate::onnx::OnnxEmbedder;
use crate::output::*;
use crate::pipeline::{ScorerRun, Session};

/// Minimum cosine for a parity fixture to pass.
pub const PARITY_MIN_COSINE: f64 = 0.999;

#[derive(Debug, Parser)]
#[command(
    name = "motifscan",
    version,
    about = "Rank images by similarity to a query object and calibrate with p-values"
)]
pub struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every target, calibrate, write results.csv and companions.
    Scan(RunArgs),
    /// Metrics for every scorer x mechanism pair, written to metrics.csv.
    Evaluate(RunArgs),
    /// Rebuild histograms.json from a previous scan's results.json.
    Histogram(RunArgs),
    /// Write the null distribution of the first scorer and mechanism.
    ExportNull(RunArgs),
    /// Embed a bundle's parity fixtures and compare with its reference vectors.
    Parity(ParityArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_parser = parse_backend)]
    pub backend: Option<Backend>,
    #[arg(long, value_parser = parse_mechanism)]
    pub mechanism: Option<Mechanism>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    #[arg(long)]
    pub dump_keypoints: bool,
    /// Rows printed in the ranked listing.
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ParityArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Where to write the engine's embeddings (default: engine_output.json
    /// in the current directory).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
}

fn parse_backend(s: &str) -> std::result::Result<Backend, String> {
    s.parse()
}

fn parse_mechanism(s: &str) -> std::result::Result<Mechanism, String> {
    let id: u8 = s
        .parse()
        .map_err(|_| format!("mechanism must be 1, 2 or 3, got {s:?}"))?;
    Mechanism::from_id(id)
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            output: self.output.clone(),
            backend: self.backend,
            mechanism: self.mechanism,
            k: self.k.map(|k| k as usize),
            threads: self.threads.map(|t| t as usize),
            top: self.top,
            dump_keypoints: self.dump_keypoints,
        }
    }

    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&self.overrides());
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    timings_ms: Vec<(&'a str, u128)>,
}

struct Timer {
    start: Instant,
    laps: Vec<(&'static str, u128)>,
}

impl Timer {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            laps: Vec::new(),
        }
    }

    fn lap(&mut self, name: &'static str) {
        self.laps.push((name, self.start.elapsed().as_millis()));
        self.start = Instant::now();
    }
}

fn write_meta(cfg: &RunConfig, command: &str, timer: &Timer) -> Result<()> {
    let meta = RunMeta {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        timings_ms: timer.laps.clone(),
    };
    write_json(&cfg.output.join(RUN_META_JSON), &meta)
}

fn prepare_output(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

fn first_scorer_run(session: &Session) -> Result<ScorerRun> {
    let cfg = &session.config;
    if cfg.scorers().len() > 1 {
        warn!(
            "{} scorers configured; this command uses the first",
            cfg.scorers().len()
        );
    }
    let mechanisms = cfg.mechanisms();
    if mechanisms.len() > 1 {
        warn!(
            "{} mechanisms configured; this command uses mechanism {}",
            mechanisms.len(),
            mechanisms[0]
        );
    }
    session.run_scorer(&cfg.scorers()[0], &mechanisms[..1])
}

fn print_listing(results: &ResultsFile, top: Option<usize>) {
    println!("rank\tname\tsimilarity\tp_value");
    for t in results.targets.iter().take(top.unwrap_or(usize::MAX)) {
        println!(
            "{}\t{}\t{}\t{}",
            t.rank,
            t.name,
            fmt4(t.similarity),
            fmt4(t.p_value)
        );
    }
}

pub fn cmd_scan(cfg: RunConfig) -> Result<ResultsFile> {
    let mut timer = Timer::new();
    let session = Session::open(cfg)?;
    timer.lap("load");
    let run = first_scorer_run(&session)?;
    timer.lap("score");
    let cfg = &session.config;
    prepare_output(&cfg.output)?;
    let calibrated = &run.calibrations[0];
    let results = ResultsFile::build(&session.query, &session.corpus, &run, calibrated);
    write_results_csv(&cfg.output.join(RESULTS_CSV), &results)?;
    write_json(&cfg.output.join(RESULTS_JSON), &results)?;
    write_json(&cfg.output.join(NULL_JSON), &calibrated.nulls)?;
    write_json(
        &cfg.output.join(HISTOGRAMS_JSON),
        &results.histograms(cfg.histogram_bins)?,
    )?;
    if cfg.dump_keypoints {
        match session.keypoints(&cfg.scorers()[0])? {
            Some(dump) => write_json(&cfg.output.join(KEYPOINTS_JSON), &dump)?,
            None => warn!(
                "--dump-keypoints has no effect for the {} backend",
                cfg.scorers()[0].backend
            ),
        }
    }
    timer.lap("write");
    write_meta(cfg, "scan", &timer)?;
    Ok(results)
}

pub fn cmd_evaluate(cfg: RunConfig) -> Result<Vec<motifscan_core::MetricsReport>> {
    let mut timer = Timer::new();
    let session = Session::open(cfg)?;
    timer.lap("load");
    let cfg = &session.config;
    let mechanisms = cfg.mechanisms();
    let mut reports = Vec::new();
    for spec in cfg.scorers() {
        let run = session.run_scorer(spec, &mechanisms)?;
        reports.extend(session.evaluate(&run)?);
    }
    timer.lap("score");
    if let Some(r) = reports.first().filter(|r| r.excluded_unknown > 0) {
        warn!(
            "{} target(s) with unknown labels were left out of the confusion counts",
            r.excluded_unknown
        );
    }
    prepare_output(&cfg.output)?;
    write_metrics_csv(
        &cfg.output.join(METRICS_CSV),
        cfg.k,
        &cfg.thresholds,
        &reports,
    )?;
    write_json(&cfg.output.join(METRICS_JSON), &reports)?;
    timer.lap("write");
    write_meta(cfg, "evaluate", &timer)?;
    Ok(reports)
}

pub fn cmd_histogram(cfg: RunConfig) -> Result<motifscan_core::report::Histograms> {
    let path = cfg.output.join(RESULTS_JSON);
    if !path.is_file() {
        return Err(AppError::Usage(format!(
            "{} not found; run `scan` first",
            path.display()
        )));
    }
    let results: ResultsFile = read_json(&path)?;
    let h = results.histograms(cfg.histogram_bins)?;
    write_json(&cfg.output.join(HISTOGRAMS_JSON), &h)?;
    Ok(h)
}

pub fn cmd_export_null(cfg: RunConfig) -> Result<crate::pipeline::Nulls> {
    let session = Session::open(cfg)?;
    let run = first_scorer_run(&session)?;
    prepare_output(&session.config.output)?;
    let nulls = run
        .calibrations
        .into_iter()
        .next()
        .expect("one mechanism requested")
        .nulls;
    write_json(&session.config.output.join(NULL_JSON), &nulls)?;
    Ok(nulls)
}

#[derive(Debug, Clone, Serialize)]
pub struct ParityLine {
    pub fixture: String,
    pub cosine: f64,
    pub tokens_match: bool,
}

/// Embeds every fixture with the engine, writes the embeddings in the
/// reference file's layout, and reports per-fixture cosines.
pub fn cmd_parity(args: &ParityArgs) -> Result<Vec<ParityLine>> {
    let bundle = ModelBundle::load(&args.bundle)?;
    let refs = ReferenceVectors::load(&bundle.reference_vectors_path())?;
    let dir = bundle.dir.clone();
    let engine = OnnxEmbedder::load(bundle, args.batch_size)?;
    let cos = |a: &Embedding, b: &[f32]| -> Result<f64> {
        Ok(embedding_cosine(a, &Embedding::normalized(b)?)?)
    };

    let mut lines = Vec::new();
    let mut out = ReferenceVectors {
        model_id: refs.model_id.clone(),
        images: Vec::new(),
        texts: Vec::new(),
    };
    for img in &refs.images {
        let image = load_image(&dir.join(&img.file))?;
        let emb = engine.embed_image(&image)?;
        lines.push(ParityLine {
            fixture: img.name.clone(),
            cosine: cos(&emb, &img.embedding)?,
            tokens_match: true,
        });
        out.images.push(ReferenceImage {
            name: img.name.clone(),
            file: img.file.clone(),
            pixel_values: Some(engine.pixel_values(&image)?),
            embedding: emb.values().to_vec(),
        });
    }
    for t in &refs.texts {
        let tokens = engine.bundle().tokenizer.tokenize(&t.text);
        let emb = engine.embed_text(&t.text)?;
        lines.push(ParityLine {
            fixture: format!("{:?}", t.text),
            cosine: cos(&emb, &t.embedding)?,
            tokens_match: tokens == t.tokens,
        });
        out.texts.push(ReferenceText {
            text: t.text.clone(),
            tokens,
            embedding: emb.values().to_vec(),
        });
    }
    let path = args
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("engine_output.json"));
    write_json(&path, &out)?;
    Ok(lines)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scan(a) => {
            let cfg = a.load()?;
            let top = cfg.top;
            print_listing(&cmd_scan(cfg)?, top);
            Ok(())
        }
        Command::Evaluate(a) => {
            for r in cmd_evaluate(a.load()?)? {
                println!(
                    "{}\t{}\tmechanism {}\tmatches@{} {}",
                    r.object_type, r.model_name, r.mechanism, r.k, r.matches_at_k
                );
            }
            Ok(())
        }
        Command::Histogram(a) => cmd_histogram(a.load()?).map(drop),
        Command::ExportNull(a) => cmd_export_null(a.load()?).map(drop),
        Command::Parity(a) => {
            let lines = cmd_parity(&a)?;
            let mut failed = 0;
            for l in &lines {
                let ok = l.cosine >= PARITY_MIN_COSINE && l.tokens_match;
                failed += usize::from(!ok);
                println!(
                    "{}\t{:.6}\ttokens {}\t{}",
                    l.fixture,
                    l.cosine,
                    if l.tokens_match { "ok" } else { "differ" },
                    if ok { "PASS" } else { "FAIL" }
                );
            }
            if failed > 0 {
                return Err(AppError::Inference(format!(
                    "{failed} of {} parity fixtures failed",
                    lines.len()
                )));
            }
            Ok(())
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::Usage as i32
            } else {
                ExitCode::Ok as i32
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match dispatch(cli) {
        Ok(()) => ExitCode::Ok as i32,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as i32
        }
    }
}
