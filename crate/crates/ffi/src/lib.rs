//! C interface to the crossword layout engine.
//!
//! Objects are opaque handles released with their `*_free` function.
//! Every fallible call returns a [`CruxStatus`]; on failure
//! [`crux_last_error`] describes the problem for the calling thread.
//! Strings returned through out-parameters are owned by the caller and
//! released with [`crux_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::time::Duration;

use crux::dataset::{self, TableFormat};
use crux::domain::{compute_metrics, normalize_answer, ClueAnswerPair, Language, MetricsError, Source};
use crux::schema::{self, EngineError, FrDenominator, GenerationConfig, Grid, ScoreBreakdown};
use crux::service::{assign_numbering, export_puzzle, ExportFormat, NumberedPuzzle};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CruxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    InvalidAnswer = 4,
    InvalidConfig = 5,
    PoolTooSmall = 6,
    NoSolution = 7,
    Io = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CruxExportFormat {
    Json = 0,
    Text = 1,
}

/// Search parameters; see `crux_config_default` for the defaults.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CruxGenerationConfig {
    pub width: u32,
    pub height: u32,
    pub min_words: u32,
    pub min_fill_ratio: f64,
    pub max_restarts: u32,
    pub max_seconds: f64,
    pub preferred_weight: f64,
    pub removal_probability: f64,
    pub seed: u64,
    /// Non-zero to measure fill against the whole work area.
    pub fr_work_area: u8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CruxScore {
    pub fw: u32,
    pub ll: u32,
    pub fr: f64,
    pub lr: f64,
    pub score: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CruxMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

/// Answer pool for layout.
pub struct CruxPool {
    pairs: Vec<ClueAnswerPair>,
}

/// A laid-out, numbered puzzle.
pub struct CruxPuzzle {
    grid: Grid,
    puzzle: NumberedPuzzle,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CruxStatus, String);

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let status = match e {
            EngineError::InvalidConfig(_) => CruxStatus::InvalidConfig,
            EngineError::PoolTooSmall(_) => CruxStatus::PoolTooSmall,
            EngineError::NoSolution { .. } => CruxStatus::NoSolution,
            _ => CruxStatus::InvalidAnswer,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let message = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CruxStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CruxStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CruxStatus::Panic
        }
    }
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure(CruxStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| Failure(CruxStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn non_null<T>(ptr: *const T, what: &str) -> Result<(), Failure> {
    if ptr.is_null() {
        Err(Failure(CruxStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(CruxStatus::InvalidArgument, "output contains a nul byte".into()))
}

/// Description of the last failure on this thread, or null. The pointer is
/// valid until the next crux call on the same thread.
#[no_mangle]
pub extern "C" fn crux_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn crux_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn crux_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Grid form of an answer (uppercase A-Z, accents folded).
///
/// # Safety
/// `raw` must be a nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crux_normalize_answer(raw: *const c_char, out: *mut *mut c_char) -> CruxStatus {
    guard(|| {
        let raw = text(raw, "raw")?;
        non_null(out, "out")?;
        let normal = normalize_answer(raw).map_err(|e| Failure(CruxStatus::InvalidAnswer, e.to_string()))?;
        *out = owned_string(normal)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn crux_pool_new() -> *mut CruxPool {
    Box::into_raw(Box::new(CruxPool { pairs: Vec::new() }))
}

/// # Safety
/// `pool` must be null or a handle from `crux_pool_new`/`crux_pool_load`.
#[no_mangle]
pub unsafe extern "C" fn crux_pool_free(pool: *mut CruxPool) {
    if !pool.is_null() {
        drop(Box::from_raw(pool));
    }
}

/// Adds one answer with its clue. `lang` is "it" or "en".
///
/// # Safety
/// `pool` must be a live handle; the strings nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn crux_pool_add(
    pool: *mut CruxPool,
    answer: *const c_char,
    clue: *const c_char,
    lang: *const c_char,
) -> CruxStatus {
    guard(|| {
        non_null(pool, "pool")?;
        let answer = text(answer, "answer")?;
        let clue = text(clue, "clue")?;
        let lang: Language =
            text(lang, "lang")?.parse().map_err(|e: String| Failure(CruxStatus::InvalidArgument, e))?;
        let pair = ClueAnswerPair::new(clue, answer, Source::Manual, lang)
            .map_err(|e| Failure(CruxStatus::InvalidAnswer, format!("{answer:?}: {e}")))?;
        (*pool).pairs.push(pair);
        Ok(())
    })
}

/// Loads a TSV pair table into a new pool. Malformed rows are skipped.
///
/// # Safety
/// `path` must be nul-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crux_pool_load_tsv(path: *const c_char, out: *mut *mut CruxPool) -> CruxStatus {
    guard(|| {
        let path = text(path, "path")?;
        non_null(out, "out")?;
        let outcome =
            dataset::ingest(Path::new(path), TableFormat::Tsv).map_err(|e| Failure(CruxStatus::Io, e.to_string()))?;
        let pairs = outcome.records.into_iter().map(|r| r.pair).collect();
        *out = Box::into_raw(Box::new(CruxPool { pairs }));
        Ok(())
    })
}

/// # Safety
/// `pool` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn crux_pool_len(pool: *const CruxPool) -> usize {
    pool.as_ref().map_or(0, |p| p.pairs.len())
}

#[no_mangle]
pub extern "C" fn crux_config_default() -> CruxGenerationConfig {
    let d = GenerationConfig::default();
    CruxGenerationConfig {
        width: d.width as u32,
        height: d.height as u32,
        min_words: d.min_words as u32,
        min_fill_ratio: d.min_fill_ratio,
        max_restarts: d.max_restarts,
        max_seconds: d.max_duration.as_secs_f64(),
        preferred_weight: d.preferred_weight,
        removal_probability: d.removal_probability,
        seed: d.seed,
        fr_work_area: 0,
    }
}

fn to_config(c: &CruxGenerationConfig) -> Result<GenerationConfig, Failure> {
    let max_duration = Duration::try_from_secs_f64(c.max_seconds)
        .map_err(|_| Failure(CruxStatus::InvalidConfig, format!("max_seconds {} is not a duration", c.max_seconds)))?;
    Ok(GenerationConfig {
        width: c.width as usize,
        height: c.height as usize,
        min_words: c.min_words as usize,
        min_fill_ratio: c.min_fill_ratio,
        max_restarts: c.max_restarts,
        max_duration,
        preferred_weight: c.preferred_weight,
        removal_probability: c.removal_probability,
        seed: c.seed,
        fr_denominator: if c.fr_work_area != 0 { FrDenominator::WorkArea } else { FrDenominator::Bbox },
    })
}

/// Lays out a puzzle from `pool`. `preferred` holds `n_preferred` answers
/// and may be null when `n_preferred` is 0; `config` may be null for the
/// defaults.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn crux_generate(
    pool: *const CruxPool,
    config: *const CruxGenerationConfig,
    preferred: *const *const c_char,
    n_preferred: usize,
    out: *mut *mut CruxPuzzle,
) -> CruxStatus {
    guard(|| {
        non_null(pool, "pool")?;
        non_null(out, "out")?;
        let config = match config.as_ref() {
            Some(c) => to_config(c)?,
            None => GenerationConfig::default(),
        };
        let mut wanted = Vec::with_capacity(n_preferred);
        if n_preferred > 0 {
            non_null(preferred, "preferred")?;
            for i in 0..n_preferred {
                wanted.push(text(*preferred.add(i), "preferred answer")?);
            }
        }
        let pairs = &(*pool).pairs;
        let outcome = schema::generate(pairs, &wanted, &config)?;
        let puzzle = assign_numbering(&outcome.grid, pairs, config.fr_denominator)
            .map_err(|e| Failure(CruxStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(CruxPuzzle { grid: outcome.grid, puzzle }));
        Ok(())
    })
}

/// # Safety
/// `puzzle` must be null or a handle from `crux_generate`.
#[no_mangle]
pub unsafe extern "C" fn crux_puzzle_free(puzzle: *mut CruxPuzzle) {
    if !puzzle.is_null() {
        drop(Box::from_raw(puzzle));
    }
}

fn to_score(s: &ScoreBreakdown) -> CruxScore {
    CruxScore { fw: s.fw as u32, ll: s.ll as u32, fr: s.fr, lr: s.lr, score: s.score }
}

/// # Safety
/// `puzzle` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crux_puzzle_score(puzzle: *const CruxPuzzle, out: *mut CruxScore) -> CruxStatus {
    guard(|| {
        non_null(puzzle, "puzzle")?;
        non_null(out, "out")?;
        *out = to_score((*puzzle).puzzle.score());
        Ok(())
    })
}

/// Letter grid with `.` for empty cells, one line per row.
///
/// # Safety
/// `puzzle` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crux_puzzle_grid(puzzle: *const CruxPuzzle, out: *mut *mut c_char) -> CruxStatus {
    guard(|| {
        non_null(puzzle, "puzzle")?;
        non_null(out, "out")?;
        *out = owned_string((*puzzle).grid.render())?;
        Ok(())
    })
}

/// # Safety
/// `puzzle` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crux_puzzle_export(
    puzzle: *const CruxPuzzle,
    format: CruxExportFormat,
    out: *mut *mut c_char,
) -> CruxStatus {
    guard(|| {
        non_null(puzzle, "puzzle")?;
        non_null(out, "out")?;
        let format = match format {
            CruxExportFormat::Json => ExportFormat::Json,
            CruxExportFormat::Text => ExportFormat::Text,
        };
        let bytes = export_puzzle(&(*puzzle).puzzle, format);
        *out = owned_string(String::from_utf8(bytes).expect("exports are UTF-8"))?;
        Ok(())
    })
}

/// Confusion-matrix metrics; non-zero entries count as acceptable.
///
/// # Safety
/// `predictions` and `labels` must point to `len` bytes; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn crux_compute_metrics(
    predictions: *const u8,
    labels: *const u8,
    len: usize,
    out: *mut CruxMetrics,
) -> CruxStatus {
    guard(|| {
        non_null(out, "out")?;
        if len == 0 {
            return Err(Failure(CruxStatus::InvalidArgument, MetricsError::EmptyInput.to_string()));
        }
        non_null(predictions, "predictions")?;
        non_null(labels, "labels")?;
        let as_bools = |p: *const u8| std::slice::from_raw_parts(p, len).iter().map(|&b| b != 0).collect::<Vec<_>>();
        let m = compute_metrics(&as_bools(predictions), &as_bools(labels))
            .map_err(|e| Failure(CruxStatus::InvalidArgument, e.to_string()))?;
        *out = CruxMetrics {
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            tp: m.tp as u64,
            fp: m.fp as u64,
            tn: m.tn as u64,
            fn_: m.fn_ as u64,
        };
        Ok(())
    })
}
