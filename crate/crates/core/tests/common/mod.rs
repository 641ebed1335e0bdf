#![allow(dead_code)]

pub mod http;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crux::dataset::{self, TableFormat};
use crux::domain::ClueAnswerPair;
use crux::llm::{FixtureProvider, Gateway};

pub const UPDATE_VAR: &str = "CRUX_UPDATE_GOLDEN";

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn science_paragraph() -> String {
    fs::read_to_string(fixture("science_it.txt")).unwrap()
}

pub fn italian_pool() -> Vec<ClueAnswerPair> {
    let outcome = dataset::ingest(&fixture("pool_it.tsv"), TableFormat::Tsv).unwrap();
    assert!(outcome.rejects.is_empty(), "{:?}", outcome.rejects);
    outcome.records.into_iter().map(|r| r.pair).collect()
}

pub fn replay_gateway(fixture_name: &str) -> Arc<Gateway> {
    let provider = FixtureProvider::from_path(&fixture(fixture_name)).unwrap();
    Arc::new(Gateway::new(Arc::new(provider)))
}

/// Compares `actual` with a committed golden file. With the update
/// variable set the file is rewritten instead.
pub fn assert_golden(name: &str, actual: &[u8]) {
    let path = fixture(name);
    if std::env::var_os(UPDATE_VAR).is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read(&path).unwrap_or_else(|e| panic!("{}: {e} (set {UPDATE_VAR}=1 to create)", path.display()));
    assert!(expected == actual, "{} differs from output:\n{}", path.display(), String::from_utf8_lossy(actual));
}

/// The six keyword/clue pairs of the worked example, as (keyword, clue).
pub const WORKED_PAIRS: [(&str, &str); 6] = [
    ("conoscenze", "informazioni acquisite tramite ricerca organizzata con procedimenti metodici e rigorosi."),
    (
        "ricerca",
        "attività organizzata prevalentemente con procedimenti metodici e rigorosi finalizzata allottenimento di conoscenze.",
    ),
    ("rigorosi", "esatti e precisi nello svolgimento delle azioni."),
    ("assiomi", "un insieme di verità accettate come base dei ragionamenti logici."),
    ("ipotesi", "assunte per comprendere le osservazioni sperimentali e testare le conoscenze"),
    ("Galileo", "egli introdusse il metodo sperimentale nel processo di scienza moderna."),
];

use crux::schema::{Direction, Grid, OracleIssue, Placement};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random walk of legal placements and removals; returns every grid visited.
pub fn random_walk(words: &[String], width: usize, height: usize, steps: usize, seed: u64) -> Vec<Grid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = Grid::new(width, height).unwrap();
    let mut visited = Vec::with_capacity(steps);
    for _ in 0..steps {
        let placed = grid.placements().len();
        if placed > 0 && rng.gen_bool(0.25) {
            let k = rng.gen_range(1..=placed.min(3));
            grid = grid.remove_last(k).unwrap();
        } else {
            let word = &words[rng.gen_range(0..words.len())];
            if grid.placements().iter().any(|p| &p.answer_grid == word) {
                continue;
            }
            let legal = grid.legal_placements(word).unwrap();
            if legal.is_empty() {
                continue;
            }
            grid = grid.place(&legal[rng.gen_range(0..legal.len())].placement).unwrap();
        }
        visited.push(grid.clone());
    }
    visited
}

/// Placements of `word` found by trying every position and checking the
/// resulting grid cell by cell, with the number of pre-filled cells used.
pub fn brute_force_legal(grid: &Grid, word: &str, pool: &[String]) -> Vec<(Placement, usize)> {
    let mut found = Vec::new();
    for direction in [Direction::Across, Direction::Down] {
        for row in 0..grid.height() {
            for col in 0..grid.width() {
                let p = Placement::new(word, row, col, direction);
                let Ok(next) = grid.place_unchecked(&p) else { continue };
                let verdict = crux::schema::validity_oracle(&next, pool);
                let structural = verdict.issues.iter().any(|i| {
                    matches!(
                        i,
                        OracleIssue::AccidentalRun(_)
                            | OracleIssue::PlacementNotARun { .. }
                            | OracleIssue::IsolatedCell { .. }
                    )
                });
                let crossings = p.cells().filter(|&(r, c)| grid.letter(r, c).is_some()).count();
                if !structural && (grid.is_empty() || crossings >= 1) {
                    found.push((p, crossings));
                }
            }
        }
    }
    found
}
