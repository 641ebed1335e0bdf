//! Corpus ingestion, cleaning, statistics and train/test splitting.
//!
//! The on-disk format is a UTF-8 table with a header row. TSV is the native
//! format (`clue<TAB>answer<TAB>source`), CSV is accepted on input. Optional
//! `language` and `label` columns are recognized by header name. Rows that
//! cannot become a [`ClueAnswerPair`] are returned as [`Reject`]s; a bad row
//! never aborts ingestion.

use crate::domain::{ClueAnswerPair, Label, Language, NormalizeError, Source};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("need at least 2 records to split, got {0}")]
    TooFewRecords(usize),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Tsv,
    Csv,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(TableFormat::Tsv),
            "csv" => Ok(TableFormat::Csv),
            other => Err(format!("unknown table format {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub pair: ClueAnswerPair,
    pub source_file: String,
    pub line_no: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    EmptyClue,
    EmptyAnswer,
    UnmappableCharacter(char),
    FieldCount { expected: usize, found: usize },
    InvalidUtf8,
    UnknownSource(String),
    UnknownLanguage(String),
    UnknownLabel(String),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::EmptyClue => f.write_str("EmptyClue"),
            RejectReason::EmptyAnswer => f.write_str("EmptyAnswer"),
            RejectReason::UnmappableCharacter(ch) => write!(f, "UnmappableCharacter({ch:?})"),
            RejectReason::FieldCount { expected, found } => {
                write!(f, "FieldCount(expected {expected}, found {found})")
            }
            RejectReason::InvalidUtf8 => f.write_str("InvalidUtf8"),
            RejectReason::UnknownSource(s) => write!(f, "UnknownSource({s:?})"),
            RejectReason::UnknownLanguage(s) => write!(f, "UnknownLanguage({s:?})"),
            RejectReason::UnknownLabel(s) => write!(f, "UnknownLabel({s:?})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line_no: u64,
    pub reason: RejectReason,
    pub raw: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestOutcome {
    pub records: Vec<CorpusRecord>,
    pub rejects: Vec<Reject>,
}

struct Columns {
    clue: usize,
    answer: usize,
    source: Option<usize>,
    language: Option<usize>,
    label: Option<usize>,
    width: usize,
}

impl Columns {
    fn from_header(fields: &[String]) -> Result<Self, DatasetError> {
        let find = |name: &str| fields.iter().position(|f| f.trim().eq_ignore_ascii_case(name));
        let clue =
            find("clue").ok_or_else(|| DatasetError::MalformedHeader(format!("no `clue` column in {fields:?}")))?;
        let answer =
            find("answer").ok_or_else(|| DatasetError::MalformedHeader(format!("no `answer` column in {fields:?}")))?;
        Ok(Columns {
            clue,
            answer,
            source: find("source"),
            language: find("language"),
            label: find("label"),
            width: fields.len(),
        })
    }
}

pub fn ingest(path: &Path, format: TableFormat) -> Result<IngestOutcome, DatasetError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(DatasetError::FileNotFound(path.display().to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    ingest_reader(file, format, &path.display().to_string())
}

pub fn ingest_reader<R: Read>(
    reader: R,
    format: TableFormat,
    source_file: &str,
) -> Result<IngestOutcome, DatasetError> {
    let mut builder = csv::ReaderBuilder::new();
    builder.has_headers(false).flexible(true);
    if format == TableFormat::Tsv {
        builder.delimiter(b'\t').quoting(false);
    }
    let mut rdr = builder.from_reader(reader);
    let mut rows = rdr.byte_records();

    let header = match rows.next() {
        Some(row) => row?,
        None => return Err(DatasetError::MalformedHeader("empty file".into())),
    };
    let header: Vec<String> = header
        .iter()
        .map(|f| String::from_utf8(f.to_vec()).map(|s| s.trim_start_matches('\u{feff}').to_string()))
        .collect::<Result<_, _>>()
        .map_err(|_| DatasetError::MalformedHeader("header is not UTF-8".into()))?;
    let columns = Columns::from_header(&header)?;

    let mut outcome = IngestOutcome::default();
    for row in rows {
        let row = row?;
        let line_no = row.position().map(|p| p.line()).unwrap_or(0);
        let raw_fields: Vec<&[u8]> = row.iter().collect();
        let raw = String::from_utf8_lossy(&raw_fields.join(&b'\t')).into_owned();
        if raw_fields.iter().all(|f| f.iter().all(u8::is_ascii_whitespace)) {
            continue;
        }
        let fields: Vec<String> = match raw_fields.iter().map(|f| String::from_utf8(f.to_vec())).collect() {
            Ok(fields) => fields,
            Err(_) => {
                outcome.rejects.push(Reject { line_no, reason: RejectReason::InvalidUtf8, raw });
                continue;
            }
        };
        match parse_row(&fields, &columns) {
            Ok(pair) => outcome.records.push(CorpusRecord { pair, source_file: source_file.to_string(), line_no }),
            Err(reason) => {
                log::debug!("{source_file}:{line_no}: rejected ({reason})");
                outcome.rejects.push(Reject { line_no, reason, raw });
            }
        }
    }
    if !outcome.rejects.is_empty() {
        log::info!("{source_file}: {} rows rejected", outcome.rejects.len());
    }
    Ok(outcome)
}

fn parse_row(fields: &[String], columns: &Columns) -> Result<ClueAnswerPair, RejectReason> {
    // Extra fields mean a tab (or delimiter) inside a clue.
    if fields.len() > columns.width || fields.len() <= columns.clue.max(columns.answer) {
        return Err(RejectReason::FieldCount { expected: columns.width, found: fields.len() });
    }
    let optional = |idx: Option<usize>| idx.and_then(|i| fields.get(i)).map(|s| s.trim()).filter(|s| !s.is_empty());

    let clue = fields[columns.clue].trim();
    if clue.is_empty() {
        return Err(RejectReason::EmptyClue);
    }
    let source = match optional(columns.source) {
        Some(s) => s.parse::<Source>().map_err(|_| RejectReason::UnknownSource(s.to_string()))?,
        None => Source::Corpus,
    };
    let language = match optional(columns.language) {
        Some(s) => s.parse::<Language>().map_err(|_| RejectReason::UnknownLanguage(s.to_string()))?,
        None => Language::It,
    };
    let label = match optional(columns.label) {
        Some(s) => Some(s.parse::<Label>().map_err(|_| RejectReason::UnknownLabel(s.to_string()))?),
        None => None,
    };
    let mut pair = ClueAnswerPair::new(clue, fields[columns.answer].trim(), source, language).map_err(|e| match e {
        NormalizeError::EmptyAnswer => RejectReason::EmptyAnswer,
        NormalizeError::UnmappableCharacter { ch, .. } => RejectReason::UnmappableCharacter(ch),
    })?;
    pair.label = label;
    Ok(pair)
}

fn clean_field(text: &str) -> String {
    text.chars().map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c }).collect()
}

/// Writes pairs as TSV. `language` and `label` columns are only emitted
/// when some pair needs them. Tabs and newlines inside fields become spaces.
pub fn export_tsv<'a, W, I>(writer: W, pairs: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a ClueAnswerPair>,
{
    let pairs: Vec<&ClueAnswerPair> = pairs.into_iter().collect();
    let with_language = pairs.iter().any(|p| p.language != Language::It);
    let with_label = pairs.iter().any(|p| p.label.is_some());

    let mut out = io::BufWriter::new(writer);
    let mut header = vec!["clue", "answer", "source"];
    if with_language {
        header.push("language");
    }
    if with_label {
        header.push("label");
    }
    writeln!(out, "{}", header.join("\t"))?;
    for pair in pairs {
        write!(out, "{}\t{}\t{}", clean_field(&pair.clue), clean_field(&pair.answer_display), pair.source)?;
        if with_language {
            write!(out, "\t{}", pair.language)?;
        }
        if with_label {
            write!(out, "\t{}", pair.label.map(Label::as_str).unwrap_or("unlabeled"))?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Sidecar listing of rejected rows: `line_no<TAB>reason<TAB>raw`.
pub fn write_rejects<W: Write>(writer: W, rejects: &[Reject]) -> io::Result<()> {
    let mut out = io::BufWriter::new(writer);
    writeln!(out, "line_no\treason\traw")?;
    for r in rejects {
        writeln!(out, "{}\t{}\t{}", r.line_no, r.reason, clean_field(&r.raw))?;
    }
    out.flush()
}

fn dedup_key(pair: &ClueAnswerPair) -> (String, String) {
    let clue = pair.clue.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    (clue, pair.answer_grid.clone())
}

/// Drops records whose (case- and whitespace-insensitive clue, grid answer)
/// key was already seen. First occurrence wins; order is preserved.
pub fn dedup(records: Vec<CorpusRecord>) -> Vec<CorpusRecord> {
    let mut seen = HashSet::new();
    records.into_iter().filter(|r| seen.insert(dedup_key(&r.pair))).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBucket {
    #[serde(rename = "pairs")]
    pub unique_pairs: usize,
    #[serde(rename = "answers")]
    pub unique_answers: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub by_length: BTreeMap<usize, LengthBucket>,
}

impl LengthHistogram {
    pub fn total_pairs(&self) -> usize {
        self.by_length.values().map(|b| b.unique_pairs).sum()
    }

    pub fn total_answers(&self) -> usize {
        self.by_length.values().map(|b| b.unique_answers).sum()
    }
}

/// Counts pairs and distinct answers per grid-answer length. Expects
/// deduplicated input.
pub fn length_histogram(records: &[CorpusRecord]) -> LengthHistogram {
    let mut answers: HashMap<usize, HashSet<&str>> = HashMap::new();
    let mut hist = LengthHistogram::default();
    for r in records {
        let len = r.pair.answer_grid.len();
        hist.by_length.entry(len).or_default().unique_pairs += 1;
        answers.entry(len).or_default().insert(&r.pair.answer_grid);
    }
    for (len, set) in answers {
        hist.by_length.get_mut(&len).expect("bucket exists").unique_answers = set.len();
    }
    hist
}

/// Seeded partition into train and test sets. `|train| = round(fraction * N)`;
/// each side keeps the input order.
pub fn split<T: Clone>(records: &[T], train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(train_fraction));
    }
    let n = records.len();
    if n < 2 {
        return Err(DatasetError::TooFewRecords(n));
    }
    let train_len = (train_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_train = vec![false; n];
    for &i in &order[..train_len] {
        in_train[i] = true;
    }
    let (mut train, mut test) = (Vec::with_capacity(train_len), Vec::with_capacity(n - train_len));
    for (record, is_train) in records.iter().zip(in_train) {
        if is_train {
            train.push(record.clone());
        } else {
            test.push(record.clone());
        }
    }
    Ok((train, test))
}
