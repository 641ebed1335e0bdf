use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use crux_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    crux_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = crux_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

unsafe fn small_pool() -> *mut CruxPool {
    let pool = crux_pool_new();
    for (answer, clue) in [("cat", "Feline pet"), ("axe", "Chopping tool"), ("tea", "Hot drink"), ("eat", "Consume")] {
        assert_eq!(crux_pool_add(pool, c(answer).as_ptr(), c(clue).as_ptr(), c("en").as_ptr()), CruxStatus::Ok);
    }
    pool
}

#[test]
fn generate_and_export() {
    unsafe {
        let pool = small_pool();
        assert_eq!(crux_pool_len(pool), 4);
        let mut config = crux_config_default();
        config.width = 6;
        config.height = 6;
        config.min_words = 3;
        let preferred = [c("TEA")];
        let preferred_ptrs: Vec<*const c_char> = preferred.iter().map(|s| s.as_ptr()).collect();
        let mut puzzle = ptr::null_mut();
        let status = crux_generate(pool, &config, preferred_ptrs.as_ptr(), 1, &mut puzzle);
        assert_eq!(status, CruxStatus::Ok);

        let mut score = CruxScore::default();
        assert_eq!(crux_puzzle_score(puzzle, &mut score), CruxStatus::Ok);
        assert!(score.fw >= 2 && score.score > 0.0);

        let mut json = ptr::null_mut();
        assert_eq!(crux_puzzle_export(puzzle, CruxExportFormat::Json, &mut json), CruxStatus::Ok);
        let json = take(json);
        assert!(json.contains("\"entries\""));

        let mut grid = ptr::null_mut();
        assert_eq!(crux_puzzle_grid(puzzle, &mut grid), CruxStatus::Ok);
        assert_eq!(take(grid).lines().count(), 6);

        // Same seed, same puzzle.
        let mut again = ptr::null_mut();
        assert_eq!(crux_generate(pool, &config, preferred_ptrs.as_ptr(), 1, &mut again), CruxStatus::Ok);
        let mut json2 = ptr::null_mut();
        crux_puzzle_export(again, CruxExportFormat::Json, &mut json2);
        assert_eq!(take(json2), json);

        crux_puzzle_free(puzzle);
        crux_puzzle_free(again);
        crux_pool_free(pool);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let pool = crux_pool_new();
        assert_eq!(
            crux_pool_add(pool, c("R2D2").as_ptr(), c("droid").as_ptr(), c("en").as_ptr()),
            CruxStatus::InvalidAnswer
        );
        assert!(last_error().contains("R2D2"));
        assert_eq!(
            crux_pool_add(pool, c("cat").as_ptr(), c("pet").as_ptr(), c("fr").as_ptr()),
            CruxStatus::InvalidArgument
        );
        assert_eq!(crux_pool_add(pool, ptr::null(), c("pet").as_ptr(), c("en").as_ptr()), CruxStatus::NullPointer);

        let mut puzzle = ptr::null_mut();
        assert_eq!(crux_generate(pool, ptr::null(), ptr::null(), 0, &mut puzzle), CruxStatus::PoolTooSmall);
        assert!(puzzle.is_null());
        crux_pool_add(pool, c("cat").as_ptr(), c("pet").as_ptr(), c("en").as_ptr());
        crux_pool_add(pool, c("dog").as_ptr(), c("hound").as_ptr(), c("en").as_ptr());
        let mut config = crux_config_default();
        config.max_restarts = 3;
        assert_eq!(crux_generate(pool, &config, ptr::null(), 0, &mut puzzle), CruxStatus::NoSolution);
        config.removal_probability = 2.0;
        assert_eq!(crux_generate(pool, &config, ptr::null(), 0, &mut puzzle), CruxStatus::InvalidConfig);

        let mut normal = ptr::null_mut();
        assert_eq!(crux_normalize_answer(c("Curiosità").as_ptr(), &mut normal), CruxStatus::Ok);
        assert_eq!(take(normal), "CURIOSITA");
        assert!(crux_last_error().is_null());
        crux_pool_free(pool);
        crux_pool_free(ptr::null_mut());
        crux_string_free(ptr::null_mut());
    }
}

#[test]
fn metrics_and_tsv_loading() {
    unsafe {
        let predictions = [1u8, 1, 1, 1, 0, 0, 0, 0, 0, 0];
        let labels = [1u8, 1, 1, 0, 1, 1, 0, 0, 0, 0];
        let mut m = CruxMetrics::default();
        assert_eq!(crux_compute_metrics(predictions.as_ptr(), labels.as_ptr(), 10, &mut m), CruxStatus::Ok);
        assert_eq!((m.tp, m.fp, m.tn, m.fn_), (3, 1, 4, 2));
        assert!((m.accuracy - 0.7).abs() < 1e-12);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(crux_compute_metrics(predictions.as_ptr(), labels.as_ptr(), 0, &mut m), CruxStatus::InvalidArgument);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.tsv");
        std::fs::write(&path, "clue\tanswer\nFeline pet\tcat\nbad row\t42\n").unwrap();
        let mut pool = ptr::null_mut();
        assert_eq!(crux_pool_load_tsv(c(path.to_str().unwrap()).as_ptr(), &mut pool), CruxStatus::Ok);
        assert_eq!(crux_pool_len(pool), 1);
        crux_pool_free(pool);
        let mut missing = ptr::null_mut();
        assert_eq!(crux_pool_load_tsv(c("/nonexistent/x.tsv").as_ptr(), &mut missing), CruxStatus::Io);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(crux_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(include.join("crux.h")).unwrap();
    for symbol in ["crux_generate", "crux_puzzle_export", "crux_last_error", "CruxPool", "CRUX_STATUS_NO_SOLUTION"] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("use_header.c");
    std::fs::write(
        &source,
        "#include \"crux.h\"\n\
         int main(void) {\n\
           CruxGenerationConfig cfg = crux_config_default();\n\
           CruxPool *pool = crux_pool_new();\n\
           CruxPuzzle *puzzle = NULL;\n\
           CruxStatus st = crux_generate(pool, &cfg, NULL, 0, &puzzle);\n\
           crux_pool_free(pool);\n\
           return st == CRUX_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let compiler = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let output = Command::new(&compiler)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&source)
        .output()
        .unwrap_or_else(|e| panic!("running {compiler}: {e}"));
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
}
