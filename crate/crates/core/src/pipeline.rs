//! File-to-file stages and the full pipeline run.
//!
//! Stages talk through record files so each one can be rerun or inspected on
//! its own. Within a stage documents are processed in batches; each batch is
//! mapped in parallel and written back in `doc_id` order.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clean::{clean_document, CleanConfig, CleanReport};
use crate::corpus::{
    assign_split, compute_file_stats, corpus_files, emit_document, CorpusStats, SplitConfig,
    SplitLabel, SplitStats, SplitWriter, TokenUnit,
};
use crate::dedup::{
    remove_windows, window_digests, DedupState, Deduper, Rescanner, ShardedPlanner,
};
use crate::document::{Document, Stage};
use crate::exec::{with_workers, Execution};
use crate::ingest::{read_wet_file, record_to_document, GzipMode, IngestStats};
use crate::records::{RecordReader, RecordWriter};
use crate::segment::{
    check_document, segment_document, truncate_to_terminal, BadwordList, SegmentConfig,
};
use crate::vocab::Vocabulary;

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: BoxError,
    },
    #[error("validator: {0}")]
    Validation(String),
}

impl PipelineError {
    fn stage(stage: &'static str) -> impl FnOnce(BoxError) -> PipelineError {
        move |source| PipelineError::Stage { stage, source }
    }
}

fn at<E: Into<BoxError>>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::stage(stage)(e.into())
}

pub const DEFAULT_BATCH: usize = 4096;
pub const DEFAULT_MAX_FILE_BYTES: u64 = 4 << 20;

/// Serializable segment settings; the badword list is loaded from `badwords`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSettings {
    pub badwords: PathBuf,
    pub min_sentence_len: usize,
    pub strict_paper_mode: bool,
}

impl SegmentSettings {
    pub fn new(badwords: impl Into<PathBuf>) -> Self {
        Self {
            badwords: badwords.into(),
            min_sentence_len: 5,
            strict_paper_mode: false,
        }
    }

    pub fn load(&self) -> Result<SegmentConfig, PipelineError> {
        let list = BadwordList::load(&self.badwords).map_err(at("segment"))?;
        Ok(self.config_with(list))
    }

    pub fn config_with(&self, list: BadwordList) -> SegmentConfig {
        let base = if self.strict_paper_mode {
            SegmentConfig::strict_paper()
        } else {
            SegmentConfig::default()
        };
        SegmentConfig {
            min_sentence_len: self.min_sentence_len,
            ..base
        }
        .with_badwords(list)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupSettings {
    pub shards: usize,
    pub two_pass: bool,
}

impl Default for DedupSettings {
    fn default() -> Self {
        Self {
            shards: 16,
            two_pass: false,
        }
    }
}

/// Everything a full run depends on. The serialized form goes into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(with = "gzip_serde")]
    pub gzip: GzipMode,
    pub clean: CleanConfig,
    pub segment: SegmentSettings,
    pub dedup: DedupSettings,
    pub split: SplitConfig,
    pub max_file_bytes: u64,
    pub workers: usize,
    pub batch_size: usize,
    /// Token unit for statistics; characters when absent.
    pub vocab: Option<PathBuf>,
}

mod gzip_serde {
    use super::GzipMode;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &GzipMode, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match m {
            GzipMode::Auto => "auto",
            GzipMode::On => "on",
            GzipMode::Off => "off",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<GzipMode, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

impl PipelineConfig {
    pub fn new(
        inputs: Vec<PathBuf>,
        out_dir: impl Into<PathBuf>,
        badwords: impl Into<PathBuf>,
    ) -> Self {
        Self {
            inputs,
            out_dir: out_dir.into(),
            gzip: GzipMode::Auto,
            clean: CleanConfig::default(),
            segment: SegmentSettings::new(badwords),
            dedup: DedupSettings::default(),
            split: SplitConfig::default(),
            max_file_bytes: DEFAULT_MAX_FILE_BYTES,
            workers: 1,
            batch_size: DEFAULT_BATCH,
            vocab: None,
        }
    }

    pub fn strict_paper_mode(mut self, on: bool) -> Self {
        self.segment.strict_paper_mode = on;
        self.clean.javascript_case_insensitive = !on;
        self
    }
}

/// Output locations under the run directory.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
        }
    }
    pub fn ingest(&self) -> PathBuf {
        self.root.join("records/01-ingest.jsonl")
    }
    pub fn clean(&self) -> PathBuf {
        self.root.join("records/02-clean.jsonl")
    }
    pub fn segment(&self) -> PathBuf {
        self.root.join("records/03-segment.jsonl")
    }
    pub fn dedup(&self) -> PathBuf {
        self.root.join("records/04-dedup.jsonl")
    }
    pub fn state(&self) -> PathBuf {
        self.root.join("dedup.state")
    }
    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus")
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("clean-report.txt")
    }
    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
}

// ---------------------------------------------------------------------------
// Stages

/// Parses the inputs (several files at once when parallel) and assigns
/// `doc_id`s in input order.
pub fn ingest_stage(
    inputs: &[PathBuf],
    gzip: GzipMode,
    output: &Path,
    exec: Execution,
) -> Result<IngestStats, PipelineError> {
    let mut writer = RecordWriter::create(output).map_err(at("ingest"))?;
    let mut stats = IngestStats::default();
    let mut next_id = 0u64;
    let group = match exec {
        Execution::Sequential => 1,
        Execution::Parallel => 8,
    };
    for chunk in inputs.chunks(group) {
        let parsed = exec.map_ref(chunk, |p| {
            read_wet_file(p, gzip).map_err(|e| (p.clone(), e))
        });
        for result in parsed {
            let (records, file_stats) = result.map_err(|(p, e)| PipelineError::Stage {
                stage: "ingest",
                source: format!("{}: {e}", p.display()).into(),
            })?;
            stats.merge(&file_stats);
            for rec in records {
                writer
                    .write(&record_to_document(rec, next_id))
                    .map_err(at("ingest"))?;
                next_id += 1;
            }
        }
    }
    writer.finish().map_err(at("ingest"))?;
    Ok(stats)
}

fn map_stage<F>(
    stage: &'static str,
    input: &Path,
    output: &Path,
    exec: Execution,
    batch: usize,
    f: F,
) -> Result<CleanReport, PipelineError>
where
    F: Fn(Document, &mut CleanReport) -> Result<Option<Document>, BoxError> + Sync + Send,
{
    let mut reader = RecordReader::open(input).map_err(at(stage))?;
    let mut writer = RecordWriter::create(output).map_err(at(stage))?;
    let mut report = CleanReport::default();
    loop {
        let docs = reader.next_batch(batch.max(1)).map_err(at(stage))?;
        if docs.is_empty() {
            break;
        }
        let results = exec.map(docs, |doc| {
            let mut r = CleanReport::default();
            f(doc, &mut r).map(|d| (d, r))
        });
        for result in results {
            let (doc, r) = result.map_err(PipelineError::stage(stage))?;
            report += r;
            if let Some(doc) = doc {
                writer.write(&doc).map_err(at(stage))?;
            }
        }
    }
    writer.finish().map_err(at(stage))?;
    Ok(report)
}

pub fn clean_stage(
    input: &Path,
    output: &Path,
    cfg: &CleanConfig,
    exec: Execution,
    batch: usize,
) -> Result<CleanReport, PipelineError> {
    cfg.validate().map_err(at("clean"))?;
    map_stage("clean", input, output, exec, batch, |doc, r| {
        if doc.stage > Stage::Cleaned {
            return Err(format!("document {} is already {}", doc.doc_id, doc.stage).into());
        }
        Ok(clean_document(doc, cfg, r))
    })
}

pub fn segment_stage(
    input: &Path,
    output: &Path,
    cfg: &SegmentConfig,
    exec: Execution,
    batch: usize,
) -> Result<CleanReport, PipelineError> {
    cfg.validate().map_err(at("segment"))?;
    if cfg.badwords.is_none() {
        return Err(at("segment")(
            crate::segment::SegmentError::BadwordListMissing,
        ));
    }
    map_stage("segment", input, output, exec, batch, |doc, r| {
        if doc.stage != Stage::Cleaned {
            return Err(
                format!("document {} is {}, expected cleaned", doc.doc_id, doc.stage).into(),
            );
        }
        segment_document(doc, cfg, r).map_err(Into::into)
    })
}

fn stream_pass(
    input: &Path,
    output: &Path,
    state: &mut DedupState,
    exec: Execution,
    batch: usize,
    report: &mut CleanReport,
) -> Result<(), PipelineError> {
    let mut reader = RecordReader::open(input).map_err(at("dedup"))?;
    let mut writer = RecordWriter::create(output).map_err(at("dedup"))?;
    let mut deduper = Deduper::new(state, exec);
    loop {
        let docs = reader.next_batch(batch.max(1)).map_err(at("dedup"))?;
        if docs.is_empty() {
            break;
        }
        if let Some(d) = docs.iter().find(|d| d.stage < Stage::Segmented) {
            return Err(at("dedup")(format!(
                "document {} is {}, expected segmented",
                d.doc_id, d.stage
            )));
        }
        for doc in deduper.process_batch(docs, report) {
            writer.write(&doc).map_err(at("dedup"))?;
        }
    }
    writer.finish().map_err(at("dedup"))?;
    Ok(())
}

fn two_pass(
    input: &Path,
    output: &Path,
    state: &mut DedupState,
    shards: usize,
    exec: Execution,
    batch: usize,
    report: &mut CleanReport,
) -> Result<(), PipelineError> {
    let spill = output.parent().map(|p| p.join(".dedup-spill"));
    let mut planner = ShardedPlanner::new(shards, spill.as_deref()).map_err(at("dedup"))?;
    let mut reader = RecordReader::open(input).map_err(at("dedup"))?;
    loop {
        let docs = reader.next_batch(batch.max(1)).map_err(at("dedup"))?;
        if docs.is_empty() {
            break;
        }
        for windows in exec.map_ref(&docs, window_digests) {
            planner.add(&windows).map_err(at("dedup"))?;
        }
    }
    let plan = planner.finish(state).map_err(at("dedup"))?;
    if let Some(p) = spill {
        let _ = fs::remove_dir(p);
    }
    report.spans_deduplicated += plan.spans_removed();

    let reader = RecordReader::open(input).map_err(at("dedup"))?;
    let mut writer = RecordWriter::create(output).map_err(at("dedup"))?;
    for (ordinal, doc) in reader.enumerate() {
        let mut doc = doc.map_err(at("dedup"))?;
        if remove_windows(&mut doc, plan.losers_for(ordinal as u64)) {
            let _ = doc.advance(Stage::Deduped);
            writer.write(&doc).map_err(at("dedup"))?;
        } else {
            report.docs_dropped_dedup += 1;
        }
    }
    writer.finish().map_err(at("dedup"))?;
    Ok(())
}

fn has_repeated_window(path: &Path) -> Result<bool, PipelineError> {
    let mut scan = Rescanner::new();
    for doc in RecordReader::open(path).map_err(at("dedup"))? {
        if scan.check(&doc.map_err(at("dedup"))?).is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Dedups `input` into `output`, resuming from `state`. Residual repeats are
/// removed by further fresh-state passes until the rescan is clean.
///
/// Span removal can leave an unterminated fragment at the end of a document.
/// With `tail` set, trailing sentences are truncated again afterwards; this
/// only shortens documents, so no window can become repeated.
pub fn dedup_stage(
    input: &Path,
    output: &Path,
    state: &mut DedupState,
    settings: &DedupSettings,
    tail: Option<&SegmentConfig>,
    exec: Execution,
    batch: usize,
) -> Result<CleanReport, PipelineError> {
    let mut report = CleanReport::default();
    let run = |input: &Path, output: &Path, state: &mut DedupState, report: &mut CleanReport| {
        if settings.two_pass {
            two_pass(input, output, state, settings.shards, exec, batch, report)
        } else {
            stream_pass(input, output, state, exec, batch, report)
        }
    };
    run(input, output, state, &mut report)?;
    let scratch = output.with_extension("residual.jsonl");
    while has_repeated_window(output)? {
        let mut fresh = DedupState::new();
        run(output, &scratch, &mut fresh, &mut report)?;
        state.spans_removed += fresh.spans_removed;
        fs::rename(&scratch, output).map_err(at("dedup"))?;
    }
    if let Some(cfg) = tail {
        report += map_stage("dedup", output, &scratch, exec, batch, |mut doc, r| {
            truncate_to_terminal(&mut doc, cfg, r);
            if doc.sentences.is_empty() {
                r.docs_dropped_truncation += 1;
                return Ok(None);
            }
            Ok(Some(doc))
        })?;
        fs::rename(&scratch, output).map_err(at("dedup"))?;
    }
    Ok(report)
}

/// Splits deduped records into `out_dir/{train,dev,test}/`.
pub fn split_stage(
    input: &Path,
    out_dir: &Path,
    cfg: &SplitConfig,
    max_file_bytes: u64,
    unit: TokenUnit<'_>,
) -> Result<(CorpusStats, BTreeMap<SplitLabel, Vec<PathBuf>>), PipelineError> {
    cfg.validate().map_err(at("split"))?;
    let mut writers = BTreeMap::new();
    for label in SplitLabel::ALL {
        let dir = out_dir.join(label.name());
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(at("split"))?;
        }
        writers.insert(
            label,
            SplitWriter::new(&dir, label, max_file_bytes).map_err(at("split"))?,
        );
    }
    for doc in RecordReader::open(input).map_err(at("split"))? {
        let doc = doc.map_err(at("split"))?;
        let label = assign_split(doc.doc_id, cfg);
        writers
            .get_mut(&label)
            .expect("writer per label")
            .write(&doc, unit)
            .map_err(at("split"))?;
    }
    let mut stats = CorpusStats::default();
    let mut files = BTreeMap::new();
    for (label, w) in writers {
        let (s, f) = w.finish().map_err(at("split"))?;
        *stats.get_mut(label) = s;
        files.insert(label, f);
    }
    Ok((stats, files))
}

/// Writes deduped records as a single pre-training file.
pub fn emit_stage(
    input: &Path,
    output: &Path,
    unit: TokenUnit<'_>,
) -> Result<SplitStats, PipelineError> {
    let file = File::create(output).map_err(at("emit"))?;
    let mut w = io::BufWriter::new(file);
    let mut stats = SplitStats::default();
    for doc in RecordReader::open(input).map_err(at("emit"))? {
        stats += emit_document(&doc.map_err(at("emit"))?, &mut w, unit).map_err(at("emit"))?;
    }
    io::Write::flush(&mut w).map_err(at("emit"))?;
    Ok(stats)
}

/// Stats over a pre-training file or a directory of them (recursively by split).
pub fn stats_for_path(
    path: &Path,
    unit: TokenUnit<'_>,
) -> Result<Vec<(String, SplitStats)>, PipelineError> {
    if path.is_file() {
        let s = compute_file_stats(path, unit).map_err(at("stats"))?;
        return Ok(vec![(path.display().to_string(), s)]);
    }
    let split_dirs: Vec<SplitLabel> = SplitLabel::ALL
        .into_iter()
        .filter(|l| path.join(l.name()).is_dir())
        .collect();
    let mut rows = Vec::new();
    if split_dirs.is_empty() {
        let mut total = SplitStats::default();
        for f in corpus_files(path).map_err(at("stats"))? {
            total += compute_file_stats(&f, unit).map_err(at("stats"))?;
        }
        rows.push((path.display().to_string(), total));
    } else {
        for label in split_dirs {
            let mut total = SplitStats::default();
            for f in corpus_files(&path.join(label.name())).map_err(at("stats"))? {
                total += compute_file_stats(&f, unit).map_err(at("stats"))?;
            }
            rows.push((label.name().to_string(), total));
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub documents: u64,
    pub sentences: u64,
    pub corpus_files: u64,
}

/// Full-corpus check: segment invariants and the window rescan over the
/// deduped records, then the format of every split file and agreement of the
/// split totals with the records.
pub fn validate(
    deduped: &Path,
    corpus_dir: Option<&Path>,
    segment: &SegmentConfig,
) -> Result<ValidationSummary, PipelineError> {
    let mut summary = ValidationSummary::default();
    let mut scan = Rescanner::new();
    let reader =
        RecordReader::open(deduped).map_err(|e| PipelineError::Validation(e.to_string()))?;
    for doc in reader {
        let doc = doc.map_err(|e| PipelineError::Validation(e.to_string()))?;
        if doc.stage != Stage::Deduped {
            return Err(PipelineError::Validation(format!(
                "document {} is {}, expected deduped",
                doc.doc_id, doc.stage
            )));
        }
        if let Some(v) = check_document(&doc, segment) {
            return Err(PipelineError::Validation(v));
        }
        if let Some(r) = scan.check(&doc) {
            return Err(PipelineError::Validation(format!(
                "four-sentence window at document {} start {} repeats document {} start {}",
                r.repeat.0, r.repeat.1, r.first.0, r.first.1
            )));
        }
        summary.documents += 1;
        summary.sentences += doc.sentences.len() as u64;
    }
    if let Some(dir) = corpus_dir {
        let mut total = SplitStats::default();
        for label in SplitLabel::ALL {
            let sub = dir.join(label.name());
            if !sub.is_dir() {
                return Err(PipelineError::Validation(format!(
                    "missing split directory {}",
                    sub.display()
                )));
            }
            for f in corpus_files(&sub).map_err(|e| PipelineError::Validation(e.to_string()))? {
                total += compute_file_stats(&f, TokenUnit::Chars)
                    .map_err(|e| PipelineError::Validation(format!("{}: {e}", f.display())))?;
                summary.corpus_files += 1;
            }
        }
        if total.document_count != summary.documents || total.sentence_count != summary.sentences {
            return Err(PipelineError::Validation(format!(
                "split files hold {} documents / {} sentences, records hold {} / {}",
                total.document_count, total.sentence_count, summary.documents, summary.sentences
            )));
        }
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Full run

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    io::copy(&mut BufReader::new(File::open(path)?), &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: PipelineConfig,
    pub input_checksums: BTreeMap<String, String>,
    /// Output path relative to the run directory -> sha256.
    pub stage_checksums: BTreeMap<String, String>,
    pub ingest: IngestStats,
    pub clean_report: CleanReport,
    pub corpus_stats: CorpusStats,
    pub validation: ValidationSummary,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub manifest: Manifest,
    pub layout: RunLayout,
}

fn relative(root: &Path, p: &Path) -> String {
    p.strip_prefix(root)
        .unwrap_or(p)
        .to_string_lossy()
        .replace('\\', "/")
}

/// Runs ingest → clean → segment → dedup → split, validates the result and
/// writes the manifest (to `manifest_path`, or `manifest.json` in the run dir).
pub fn run_pipeline(
    cfg: &PipelineConfig,
    manifest_path: Option<&Path>,
) -> Result<PipelineOutcome, PipelineError> {
    let layout = RunLayout::new(&cfg.out_dir);
    fs::create_dir_all(&cfg.out_dir).map_err(at("setup"))?;
    for input in &cfg.inputs {
        if !input.is_file() {
            return Err(at("setup")(format!(
                "input {} does not exist",
                input.display()
            )));
        }
    }
    let segment_cfg = cfg.segment.load()?;
    let vocab = match &cfg.vocab {
        Some(p) => Some(Vocabulary::load(p).map_err(at("setup"))?),
        None => None,
    };
    let unit = vocab.as_ref().map_or(TokenUnit::Chars, TokenUnit::Vocab);
    let batch = cfg.batch_size.max(1);

    let (ingest, report, corpus_stats) =
        with_workers(cfg.workers, |exec| -> Result<_, PipelineError> {
            let ingest = ingest_stage(&cfg.inputs, cfg.gzip, &layout.ingest(), exec)?;
            let mut report =
                clean_stage(&layout.ingest(), &layout.clean(), &cfg.clean, exec, batch)?;
            report += segment_stage(
                &layout.clean(),
                &layout.segment(),
                &segment_cfg,
                exec,
                batch,
            )?;
            let mut state = DedupState::new();
            report += dedup_stage(
                &layout.segment(),
                &layout.dedup(),
                &mut state,
                &cfg.dedup,
                Some(&segment_cfg),
                exec,
                batch,
            )?;
            state.save(&layout.state()).map_err(at("dedup"))?;
            let (stats, _) = split_stage(
                &layout.dedup(),
                &layout.corpus(),
                &cfg.split,
                cfg.max_file_bytes,
                unit,
            )?;
            Ok((ingest, report, stats))
        })?;
    fs::write(layout.report(), report.to_kv()).map_err(at("clean"))?;

    let validation = validate(&layout.dedup(), Some(&layout.corpus()), &segment_cfg)?;

    let mut stage_checksums = BTreeMap::new();
    let mut outputs = vec![
        layout.ingest(),
        layout.clean(),
        layout.segment(),
        layout.dedup(),
        layout.state(),
        layout.report(),
    ];
    for label in SplitLabel::ALL {
        outputs.extend(corpus_files(&layout.corpus().join(label.name())).map_err(at("manifest"))?);
    }
    for p in outputs {
        let sum = sha256_file(&p).map_err(at("manifest"))?;
        stage_checksums.insert(relative(&cfg.out_dir, &p), sum);
    }
    let mut input_checksums = BTreeMap::new();
    for p in &cfg.inputs {
        input_checksums.insert(
            p.display().to_string(),
            sha256_file(p).map_err(at("manifest"))?,
        );
    }
    let manifest = Manifest {
        config: cfg.clone(),
        input_checksums,
        stage_checksums,
        ingest,
        clean_report: report,
        corpus_stats,
        validation,
    };
    let manifest_file = manifest_path.map_or_else(|| layout.manifest(), Path::to_path_buf);
    let json = serde_json::to_string_pretty(&manifest).map_err(at("manifest"))?;
    fs::write(&manifest_file, json + "\n").map_err(at("manifest"))?;
    Ok(PipelineOutcome { manifest, layout })
}
