use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use c5_core::clean::CleanConfig;
use c5_core::corpus::{format_stats_table, SplitConfig, TokenUnit};
use c5_core::exec::with_workers;
use c5_core::ingest::GzipMode;
use c5_core::pipeline::{
    clean_stage, dedup_stage, emit_stage, ingest_stage, run_pipeline, segment_stage, split_stage,
    stats_for_path, validate, DedupSettings, Manifest, PipelineConfig, PipelineError, RunLayout,
    SegmentSettings, DEFAULT_BATCH, DEFAULT_MAX_FILE_BYTES,
};
use c5_core::segment::SegmentConfig;
use c5_core::vocab::{format_category_report, prune, PruneRules, Vocabulary};
use c5_core::DedupState;

#[derive(Parser)]
#[command(
    name = "c5",
    version,
    about = "Chinese web corpus pipeline: ingest, clean, segment, dedup, split"
)]
struct Cli {
    /// Worker threads; output bytes do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Seed for the train/dev/test assignment.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Literal readings: "Javascript"/"JavaScript" only, "{" only, terminals {。？”}.
    #[arg(long, global = true)]
    strict_paper_mode: bool,
    /// Manifest path for `run` (written) and `validate` (read).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse WET files into a record file.
    Ingest {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "auto")]
        gzip: GzipMode,
    },
    /// Language selection, Javascript lines and whitespace.
    Clean {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        min_chinese_ratio: f64,
        /// Match only the two literal casings of "Javascript".
        #[arg(long)]
        js_literal: bool,
    },
    /// Sentence splitting and sentence filters.
    Segment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        badwords: PathBuf,
        #[arg(long, default_value_t = 5)]
        min_len: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Remove repeated four-sentence spans.
    Dedup {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 16)]
        shards: usize,
        #[arg(long)]
        two_pass: bool,
        /// Continue from an existing state file instead of starting empty.
        #[arg(long)]
        resume: bool,
        /// Skip re-truncating document tails after span removal.
        #[arg(long)]
        no_truncate: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write train/dev/test directories of pre-training files.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "99:0.5:0.5")]
        ratios: String,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_FILE_BYTES)]
        max_file_bytes: u64,
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Write all records as one pre-training file.
    Emit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Token, sentence, document and byte counts.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    #[command(subcommand)]
    Vocab(VocabCommand),
    /// Full pipeline with manifest and validation.
    Run(RunArgs),
    /// Check deduped records (and optionally a split corpus).
    Validate {
        /// Run directory produced by `run`; settings come from its manifest.
        #[arg(long, conflicts_with_all = ["input", "badwords"])]
        run_dir: Option<PathBuf>,
        #[arg(long, requires = "badwords")]
        input: Option<PathBuf>,
        #[arg(long)]
        badwords: Option<PathBuf>,
        #[arg(long)]
        corpus_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        min_len: usize,
    },
}

#[derive(Subcommand)]
enum VocabCommand {
    /// Count tokens per category.
    Categorize {
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Reduce to the compact vocabulary.
    Prune {
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1800)]
        year_min: u32,
        #[arg(long, default_value_t = 2030)]
        year_max: u32,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print token ids, one line per input line.
    Tokenize {
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, conflicts_with = "stdin")]
        text: Option<String>,
        #[arg(long)]
        stdin: bool,
        #[arg(long)]
        lowercase: bool,
        /// Print surfaces instead of ids.
        #[arg(long)]
        surfaces: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    badwords: PathBuf,
    #[arg(long, default_value = "auto")]
    gzip: GzipMode,
    #[arg(long, default_value = "99:0.5:0.5")]
    ratios: String,
    #[arg(long, default_value_t = 0.5)]
    min_chinese_ratio: f64,
    #[arg(long)]
    js_literal: bool,
    #[arg(long, default_value_t = 5)]
    min_len: usize,
    #[arg(long, default_value_t = 16)]
    shards: usize,
    #[arg(long)]
    two_pass: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_FILE_BYTES)]
    max_file_bytes: u64,
    #[arg(long, default_value_t = DEFAULT_BATCH)]
    batch_size: usize,
    #[arg(long)]
    vocab: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
    Validation(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Validation(v) => Failure::Validation(v),
            other => Failure::Data(other.into()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn split_config(ratios: &str, seed: u64) -> Result<SplitConfig, Failure> {
    let ratios = SplitConfig::parse_ratios(ratios).map_err(|e| usage(e.to_string()))?;
    SplitConfig::new(ratios, seed).map_err(|e| usage(e.to_string()))
}

fn clean_config(min_ratio: f64, js_literal: bool, strict: bool) -> Result<CleanConfig, Failure> {
    let cfg = CleanConfig {
        min_chinese_ratio: min_ratio,
        javascript_case_insensitive: !(js_literal || strict),
        ..CleanConfig::default()
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn load_vocab(path: Option<&Path>) -> anyhow::Result<Option<Vocabulary>> {
    path.map(|p| Vocabulary::load(p).with_context(|| format!("loading vocabulary {}", p.display())))
        .transpose()
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn append_report(path: Option<&Path>, report: &c5_core::CleanReport) -> anyhow::Result<()> {
    match path {
        Some(p) => write_text(p, &report.to_kv()),
        None => Ok(()),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let workers = cli.workers.max(1);
    match cli.command {
        Command::Ingest {
            input,
            output,
            gzip,
        } => {
            let stats = with_workers(workers, |exec| ingest_stage(&input, gzip, &output, exec))?;
            eprintln!(
                "ingest: {} documents, {} malformed, {} non-UTF-8, {} other records skipped",
                stats.emitted, stats.skipped_malformed, stats.skipped_non_utf8, stats.other_records
            );
        }
        Command::Clean {
            input,
            output,
            report,
            min_chinese_ratio,
            js_literal,
        } => {
            let cfg = clean_config(min_chinese_ratio, js_literal, cli.strict_paper_mode)?;
            let r = with_workers(workers, |exec| {
                clean_stage(&input, &output, &cfg, exec, DEFAULT_BATCH)
            })?;
            write_text(&report, &r.to_kv())?;
        }
        Command::Segment {
            input,
            output,
            badwords,
            min_len,
            report,
        } => {
            let settings = SegmentSettings {
                badwords,
                min_sentence_len: min_len,
                strict_paper_mode: cli.strict_paper_mode,
            };
            let cfg = settings.load()?;
            let r = with_workers(workers, |exec| {
                segment_stage(&input, &output, &cfg, exec, DEFAULT_BATCH)
            })?;
            append_report(report.as_deref(), &r)?;
        }
        Command::Dedup {
            input,
            output,
            state,
            shards,
            two_pass,
            resume,
            no_truncate,
            report,
        } => {
            if shards == 0 {
                return Err(usage("--shards must be at least 1"));
            }
            let mut st = if resume && state.exists() {
                DedupState::load(&state).with_context(|| format!("loading {}", state.display()))?
            } else {
                DedupState::new()
            };
            let settings = DedupSettings { shards, two_pass };
            let tail = if no_truncate {
                None
            } else if cli.strict_paper_mode {
                Some(SegmentConfig::strict_paper())
            } else {
                Some(SegmentConfig::default())
            };
            let r = with_workers(workers, |exec| {
                dedup_stage(
                    &input,
                    &output,
                    &mut st,
                    &settings,
                    tail.as_ref(),
                    exec,
                    DEFAULT_BATCH,
                )
            })?;
            st.save(&state)
                .with_context(|| format!("saving {}", state.display()))?;
            append_report(report.as_deref(), &r)?;
            eprintln!(
                "dedup: {} spans removed, {} documents dropped",
                r.spans_deduplicated, r.docs_dropped_dedup
            );
        }
        Command::Split {
            input,
            ratios,
            out_dir,
            max_file_bytes,
            vocab,
        } => {
            if max_file_bytes == 0 {
                return Err(usage("--max-file-bytes must be positive"));
            }
            let cfg = split_config(&ratios, cli.seed)?;
            let vocab = load_vocab(vocab.as_deref())?;
            let unit = vocab.as_ref().map_or(TokenUnit::Chars, TokenUnit::Vocab);
            let (stats, _) = split_stage(&input, &out_dir, &cfg, max_file_bytes, unit)?;
            print!("{stats}");
        }
        Command::Emit { input, output } => {
            let stats = emit_stage(&input, &output, TokenUnit::Chars)?;
            eprintln!(
                "emit: {} documents, {} sentences",
                stats.document_count, stats.sentence_count
            );
        }
        Command::Stats { input, vocab } => {
            let vocab = load_vocab(vocab.as_deref())?;
            let unit = vocab.as_ref().map_or(TokenUnit::Chars, TokenUnit::Vocab);
            let rows = stats_for_path(&input, unit)?;
            let rows: Vec<(&str, _)> = rows.iter().map(|(n, s)| (n.as_str(), *s)).collect();
            print!("{}", format_stats_table(&rows));
        }
        Command::Vocab(cmd) => vocab_command(cmd)?,
        Command::Run(args) => {
            let mut cfg = PipelineConfig::new(args.input, args.out_dir, args.badwords);
            cfg.gzip = args.gzip;
            cfg.clean = clean_config(
                args.min_chinese_ratio,
                args.js_literal,
                cli.strict_paper_mode,
            )?;
            cfg.segment.min_sentence_len = args.min_len;
            cfg.segment.strict_paper_mode = cli.strict_paper_mode;
            if args.shards == 0 || args.max_file_bytes == 0 {
                return Err(usage("--shards and --max-file-bytes must be positive"));
            }
            cfg.dedup = DedupSettings {
                shards: args.shards,
                two_pass: args.two_pass,
            };
            cfg.split = split_config(&args.ratios, cli.seed)?;
            cfg.max_file_bytes = args.max_file_bytes;
            cfg.batch_size = args.batch_size;
            cfg.workers = workers;
            cfg.vocab = args.vocab;
            let outcome = run_pipeline(&cfg, cli.manifest.as_deref())?;
            eprint!("{}", outcome.manifest.clean_report);
            print!("{}", outcome.manifest.corpus_stats);
        }
        Command::Validate {
            run_dir,
            input,
            badwords,
            corpus_dir,
            min_len,
        } => {
            let (records, corpus, settings) = match (run_dir, input, badwords) {
                (Some(dir), _, _) => {
                    let path = cli
                        .manifest
                        .clone()
                        .unwrap_or_else(|| RunLayout::new(&dir).manifest());
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let manifest: Manifest = serde_json::from_str(&text)
                        .with_context(|| format!("parsing {}", path.display()))?;
                    let layout = RunLayout::new(&dir);
                    (
                        layout.dedup(),
                        Some(corpus_dir.unwrap_or(layout.corpus())),
                        manifest.config.segment,
                    )
                }
                (None, Some(input), Some(badwords)) => (
                    input,
                    corpus_dir,
                    SegmentSettings {
                        badwords,
                        min_sentence_len: min_len,
                        strict_paper_mode: cli.strict_paper_mode,
                    },
                ),
                _ => {
                    return Err(usage(
                        "validate needs --run-dir, or --input with --badwords",
                    ))
                }
            };
            let cfg = settings.load()?;
            let summary = validate(&records, corpus.as_deref(), &cfg)?;
            println!(
                "valid: {} documents, {} sentences, {} corpus files",
                summary.documents, summary.sentences, summary.corpus_files
            );
        }
    }
    Ok(())
}

fn vocab_command(cmd: VocabCommand) -> Result<(), Failure> {
    match cmd {
        VocabCommand::Categorize { vocab, report } => {
            let v =
                Vocabulary::load(&vocab).with_context(|| format!("loading {}", vocab.display()))?;
            let text = format_category_report(&v.category_counts());
            write_text(&report, &text)?;
            print!("{text}");
        }
        VocabCommand::Prune {
            vocab,
            output,
            year_min,
            year_max,
            report,
        } => {
            if year_min > year_max {
                return Err(usage("--year-min exceeds --year-max"));
            }
            let v =
                Vocabulary::load(&vocab).with_context(|| format!("loading {}", vocab.display()))?;
            let rules = PruneRules {
                year_min,
                year_max,
                ..PruneRules::default()
            };
            let (pruned, r) = prune(&v, &rules).map_err(|e| anyhow!(e))?;
            pruned
                .save(&output)
                .with_context(|| format!("writing {}", output.display()))?;
            if let Some(p) = report {
                write_text(&p, &r.to_text())?;
            }
            eprintln!("prune: kept {} of {}", pruned.len(), v.len());
        }
        VocabCommand::Tokenize {
            vocab,
            text,
            stdin,
            lowercase,
            surfaces,
        } => {
            let v =
                Vocabulary::load(&vocab).with_context(|| format!("loading {}", vocab.display()))?;
            let input = match (text, stdin) {
                (Some(t), _) => t,
                (None, true) => {
                    let mut s = String::new();
                    io::stdin()
                        .read_to_string(&mut s)
                        .context("reading stdin")?;
                    s
                }
                (None, false) => return Err(usage("tokenize needs --text or --stdin")),
            };
            let mut out = io::stdout().lock();
            for line in input.lines() {
                let ids = if lowercase {
                    v.tokenize_lowercase(line)
                } else {
                    v.tokenize(line)
                };
                let fields: Vec<String> = if surfaces {
                    ids.iter()
                        .map(|&id| v.surface(id).unwrap_or_default().to_string())
                        .collect()
                } else {
                    ids.iter().map(u32::to_string).collect()
                };
                writeln!(out, "{}", fields.join(" ")).context("writing stdout")?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Validation(v)) => {
            eprintln!("validation failed: {v}");
            ExitCode::from(3)
        }
    }
}
