use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use crux::dataset::{self, CorpusRecord, TableFormat};
use crux::domain::{ClueAnswerPair, Language};
use crux::llm::{
    write_fixture_lines, FixtureProvider, Gateway, HttpProvider, ModelConfig, Provider, RecordingProvider,
};
use crux::pipeline::keyword::{
    evaluate_judge, generate_clues_for_keyword, sample_exemplars, GatewayJudge, JudgeBackend, JudgeKind,
};
use crux::pipeline::text::{run_path_a, PathAConfig};
use crux::schema::{self, FrDenominator, GenerationConfig};
use crux::service::{self, assign_numbering, export_puzzle, ExportFormat, FileStore, Service};

#[derive(Parser)]
#[command(name = "crux", version, about = "Educational crossword toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a clue/answer table, report rejected rows and write clean TSV.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "tsv")]
        format: TableFormat,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rejects: Option<PathBuf>,
        /// Drop repeated (clue, answer) pairs.
        #[arg(long)]
        dedup: bool,
    },
    /// Answer-length histogram of a table, as JSON.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "tsv")]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded train/test split.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "tsv")]
        format: TableFormat,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
    /// Pairs from a plain-text document.
    GenFromText {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "en")]
        lang: Language,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = crux::pipeline::text::DEFAULT_MIN_PARAGRAPH_LEN)]
        min_paragraph_len: usize,
        #[command(flatten)]
        llm: LlmArgs,
    },
    /// Clues for a list of keywords, one per line.
    GenFromKeywords {
        #[arg(long)]
        keywords: PathBuf,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "it")]
        lang: Language,
        /// Corpus table to draw generator examples from.
        #[arg(long)]
        exemplars: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        llm: LlmArgs,
    },
    /// Score a judge against a labeled table.
    EvalJudge {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value = "zero_shot_guideline")]
        judge: JudgeKind,
        /// Model for an external_model judge.
        #[arg(long)]
        judge_model: Option<String>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        llm: LlmArgs,
    },
    /// Lay out a crossword from a pair table.
    GenSchema {
        #[arg(long)]
        pairs: PathBuf,
        /// Preferred answers, one per line.
        #[arg(long)]
        preferred: Option<PathBuf>,
        #[arg(long, default_value_t = 15)]
        width: usize,
        #[arg(long, default_value_t = 15)]
        height: usize,
        #[arg(long, default_value_t = 8)]
        min_words: usize,
        #[arg(long, default_value_t = 0.35)]
        min_fill: f64,
        #[arg(long, default_value_t = 50)]
        max_restarts: u32,
        #[arg(long, default_value_t = 10.0)]
        max_seconds: f64,
        #[arg(long, default_value_t = 3.0)]
        preferred_weight: f64,
        #[arg(long, default_value_t = 0.3)]
        removal_probability: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Independent searches on seeds seed, seed+1, ...; the best is kept.
        #[arg(long, default_value_t = 1)]
        attempts: u64,
        #[arg(long, default_value = "bbox")]
        fr_denominator: FrDenominator,
        #[arg(long, default_value = "json")]
        format: ExportFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, env = service::DATA_DIR_VAR, default_value = "crux-data")]
        data_dir: PathBuf,
        #[arg(long)]
        exemplars: Option<PathBuf>,
        #[arg(long, default_value = "en")]
        lang: Language,
        #[command(flatten)]
        llm: LlmArgs,
    },
}

#[derive(Args)]
struct LlmArgs {
    /// Replay recorded exchanges instead of calling a live provider.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Record live exchanges to this JSONL file.
    #[arg(long, conflicts_with = "fixtures")]
    record: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long, default_value = crux::llm::DEFAULT_MODEL)]
    model: String,
    #[arg(long, default_value_t = 4)]
    max_in_flight: usize,
}

struct LlmSetup {
    gateway: Arc<Gateway>,
    recorder: Option<(Arc<RecordingProvider<HttpProvider>>, PathBuf)>,
}

impl LlmSetup {
    fn finish(self) -> Result<()> {
        if let Some((recorder, path)) = self.recorder {
            let mut lines = recorder.recorded();
            lines.sort_by(|a, b| a.digest.cmp(&b.digest));
            lines.dedup_by(|a, b| a.digest == b.digest);
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_fixture_lines(BufWriter::new(file), &lines)?;
            log::info!("recorded {} exchanges to {}", lines.len(), path.display());
        }
        Ok(())
    }
}

impl LlmArgs {
    fn setup(&self) -> Result<LlmSetup> {
        let mut recorder = None;
        let provider: Arc<dyn Provider> = match (&self.fixtures, &self.record) {
            (Some(path), _) => Arc::new(
                FixtureProvider::from_path(path).with_context(|| format!("reading fixtures {}", path.display()))?,
            ),
            (None, Some(path)) => {
                let r = Arc::new(RecordingProvider::new(HttpProvider::from_env()));
                recorder = Some((r.clone(), path.clone()));
                r
            }
            (None, None) => Arc::new(HttpProvider::from_env()),
        };
        let models = ModelConfig { model_id: self.model.clone(), ..ModelConfig::default() };
        let mut gateway = Gateway::new(provider).with_models(models).with_max_in_flight(self.max_in_flight);
        if let Some(dir) = &self.cache_dir {
            gateway = gateway.with_cache_dir(dir);
        }
        Ok(LlmSetup { gateway: Arc::new(gateway), recorder })
    }
}

fn load_table(path: &Path, format: TableFormat) -> Result<Vec<CorpusRecord>> {
    let outcome = dataset::ingest(path, format).with_context(|| format!("reading {}", path.display()))?;
    if !outcome.rejects.is_empty() {
        log::warn!("{}: {} rows rejected", path.display(), outcome.rejects.len());
    }
    Ok(outcome.records)
}

fn load_pairs(path: &Path) -> Result<Vec<ClueAnswerPair>> {
    let format = if path.extension().is_some_and(|e| e == "csv") { TableFormat::Csv } else { TableFormat::Tsv };
    Ok(load_table(path, format)?.into_iter().map(|r| r.pair).collect())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

fn write_pairs<'a>(path: &Path, pairs: impl IntoIterator<Item = &'a ClueAnswerPair>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    dataset::export_tsv(&mut w, pairs)?;
    w.flush()?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest { input, format, out, rejects, dedup } => {
            let outcome = dataset::ingest(&input, format)?;
            let total = outcome.records.len();
            let records = if dedup { dataset::dedup(outcome.records) } else { outcome.records };
            write_pairs(&out, records.iter().map(|r| &r.pair))?;
            if let Some(path) = rejects {
                dataset::write_rejects(BufWriter::new(File::create(&path)?), &outcome.rejects)?;
            }
            eprintln!("{} rows kept ({} after dedup), {} rejected", total, records.len(), outcome.rejects.len());
        }
        Command::Stats { input, format, out } => {
            let records = load_table(&input, format)?;
            write_json(out.as_deref(), &dataset::length_histogram(&dataset::dedup(records)))?;
        }
        Command::Split { input, format, train_fraction, seed, train_out, test_out } => {
            let pairs: Vec<ClueAnswerPair> = load_table(&input, format)?.into_iter().map(|r| r.pair).collect();
            let (train, test) = dataset::split(&pairs, train_fraction, seed)?;
            write_pairs(&train_out, &train)?;
            write_pairs(&test_out, &test)?;
            eprintln!("train {} / test {}", train.len(), test.len());
        }
        Command::GenFromText { input, lang, out, report, min_paragraph_len, llm } => {
            let setup = llm.setup()?;
            let document = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let source_id = input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let config = PathAConfig { lang, min_paragraph_len, source_id, ..PathAConfig::default() };
            let (pairs, run_report) = run_path_a(&setup.gateway, &document, &config)?;
            write_pairs(&out, &pairs)?;
            if let Some(path) = report {
                write_json(Some(&path), &run_report)?;
            }
            eprintln!("{} pairs from {} paragraphs", pairs.len(), run_report.paragraphs.len());
            setup.finish()?;
        }
        Command::GenFromKeywords { keywords, n, out, lang, exemplars, seed, llm } => {
            let setup = llm.setup()?;
            let corpus = match exemplars {
                Some(path) => load_pairs(&path)?,
                None => Vec::new(),
            };
            let shots = sample_exemplars(&corpus, crux::pipeline::keyword::DEFAULT_EXEMPLARS, seed);
            let mut pairs = Vec::new();
            for keyword in read_lines(&keywords)? {
                let generated = generate_clues_for_keyword(&setup.gateway, &keyword, n, &shots, lang)?;
                if !generated.self_containing.is_empty() {
                    log::info!("{keyword}: dropped {} self-containing clues", generated.self_containing.len());
                }
                pairs.extend(generated.pairs);
            }
            write_pairs(&out, &pairs)?;
            eprintln!("{} pairs", pairs.len());
            setup.finish()?;
        }
        Command::EvalJudge { pairs, judge, judge_model, report, llm } => {
            let setup = llm.setup()?;
            let backend = match judge {
                JudgeKind::ZeroShotGuideline => JudgeBackend::guideline(),
                JudgeKind::ExternalModel => {
                    JudgeBackend::external(judge_model.context("--judge-model is required for external_model")?)
                }
            };
            let labeled = load_pairs(&pairs)?;
            let judge = GatewayJudge::new(backend, setup.gateway.clone());
            let metrics = evaluate_judge(&judge, &labeled)?;
            write_json(report.as_deref(), &metrics)?;
            setup.finish()?;
        }
        Command::GenSchema {
            pairs,
            preferred,
            width,
            height,
            min_words,
            min_fill,
            max_restarts,
            max_seconds,
            preferred_weight,
            removal_probability,
            seed,
            attempts,
            fr_denominator,
            format,
            out,
        } => {
            let pool = load_pairs(&pairs)?;
            let preferred = match preferred {
                Some(path) => read_lines(&path)?,
                None => Vec::new(),
            };
            let config = GenerationConfig {
                width,
                height,
                min_words,
                min_fill_ratio: min_fill,
                max_restarts,
                max_duration: Duration::try_from_secs_f64(max_seconds).context("--max-seconds")?,
                preferred_weight,
                removal_probability,
                seed,
                fr_denominator,
            };
            if attempts == 0 {
                bail!("--attempts must be at least 1");
            }
            let outcome = if attempts == 1 {
                schema::generate(&pool, &preferred, &config)?
            } else {
                let seeds: Vec<u64> = (0..attempts).map(|i| seed.wrapping_add(i)).collect();
                schema::generate_best_of(&pool, &preferred, &config, &seeds)?
            };
            let puzzle = assign_numbering(&outcome.grid, &pool, fr_denominator)?;
            fs::write(&out, export_puzzle(&puzzle, format)).with_context(|| format!("writing {}", out.display()))?;
            eprintln!(
                "{} answers, score {:.4}, {} restarts, {:.2}s",
                outcome.score.fw,
                outcome.score.score,
                outcome.trace.restarts,
                outcome.timing.elapsed.as_secs_f64()
            );
        }
        Command::Serve { addr, data_dir, exemplars, lang, llm } => {
            let setup = llm.setup()?;
            let store = FileStore::open(&data_dir).with_context(|| format!("opening {}", data_dir.display()))?;
            let mut svc = Service::new(store, setup.gateway.clone()).with_default_lang(lang);
            if let Some(path) = exemplars {
                svc = svc.with_exemplar_pool(load_pairs(&path)?);
            }
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(service::api::serve(Arc::new(svc), addr))?;
            setup.finish()?;
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse().command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
