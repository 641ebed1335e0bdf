mod common;

use common::{brute_force_legal, italian_pool, random_walk};
use crux::domain::{ClueAnswerPair, Language, Source};
use crux::schema::{
    generate, generate_best_of, generate_with_clock, score, validity_oracle, EngineError, GenerationConfig, Grid,
    StepClock, StopDecision,
};
use std::time::Duration;

fn pool_words() -> Vec<String> {
    italian_pool().into_iter().map(|p| p.answer_grid).collect()
}

#[test]
fn legal_placements_match_brute_force() {
    let words = pool_words();
    let short: Vec<String> = words.iter().filter(|w| w.len() <= 8).cloned().collect();
    for seed in 0..12 {
        let grids = random_walk(&short, 9, 9, 10, seed);
        let grid = grids.last().cloned().unwrap_or_else(|| Grid::new(9, 9).unwrap());
        for word in short.iter().step_by(3) {
            let mut fast: Vec<_> =
                grid.legal_placements(word).unwrap().into_iter().map(|l| (l.placement, l.crossings)).collect();
            let mut slow = brute_force_legal(&grid, word, &words);
            fast.sort_by_key(|(p, _)| (p.direction, p.row, p.col));
            slow.sort_by_key(|(p, _)| (p.direction, p.row, p.col));
            assert_eq!(fast, slow, "seed {seed}, word {word}\n{}", grid.render());
        }
    }
}

#[test]
fn empty_grid_has_thirty_spots_for_three_letters() {
    let grid = Grid::new(5, 5).unwrap();
    let pool = vec!["APE".to_string()];
    assert_eq!(brute_force_legal(&grid, "APE", &pool).len(), 30);
    assert_eq!(grid.legal_placements("APE").unwrap().len(), 30);
}

#[test]
fn undo_matches_replay_from_scratch() {
    let words = pool_words();
    for seed in 0..50 {
        let grids = random_walk(&words, 13, 13, 40, 1000 + seed);
        let last = grids.last().unwrap();
        let mut replay = Grid::new(13, 13).unwrap();
        for p in last.placements() {
            replay = replay.place(p).unwrap();
        }
        assert_eq!(&replay, last, "seed {seed}");
    }
}

#[test]
fn walk_grids_are_valid_and_scores_agree() {
    let words = pool_words();
    for seed in 0..20 {
        for grid in random_walk(&words, 15, 15, 30, seed) {
            let verdict = validity_oracle(&grid, &words);
            assert!(verdict.is_valid(), "{:?}\n{}", verdict.issues, grid.render());
        }
    }
}

fn config(seed: u64) -> GenerationConfig {
    GenerationConfig { seed, max_duration: Duration::from_secs(30), ..GenerationConfig::default() }
}

#[test]
fn generation_is_deterministic_and_valid() {
    let pool = italian_pool();
    let preferred = ["MARTE", "SOLE"];
    let a = generate(&pool, &preferred, &config(7)).unwrap();
    let b = generate(&pool, &preferred, &config(7)).unwrap();
    assert_eq!(a.grid, b.grid);
    assert_eq!(a.trace, b.trace);
    let words: Vec<&str> = pool.iter().map(|p| p.answer_grid.as_str()).collect();
    assert!(validity_oracle(&a.grid, &words).is_valid());
    assert!(a.score.score >= a.trace.max_candidate_score());
    assert_eq!(a.score, score(&a.grid));
}

#[test]
fn restarts_stay_within_budget() {
    let pool = italian_pool();
    for max_restarts in [0, 1, 5] {
        let cfg = GenerationConfig { min_words: 40, max_restarts, ..config(3) };
        let out = generate::<&str>(&pool, &[], &cfg).unwrap();
        assert_eq!(out.trace.stop, StopDecision::StopBudget);
        assert!(out.trace.restarts <= max_restarts);
    }
}

#[test]
fn clock_budget_is_honoured() {
    let pool = italian_pool();
    let cfg = GenerationConfig {
        min_words: 40,
        max_restarts: u32::MAX,
        max_duration: Duration::from_millis(100),
        ..config(3)
    };
    let mut clock = StepClock::new(Duration::from_millis(1));
    let out = generate_with_clock::<&str>(&pool, &[], &cfg, &mut clock).unwrap();
    assert_eq!(out.trace.stop, StopDecision::StopBudget);
    assert!(out.trace.steps <= 100);
}

#[test]
fn best_of_picks_highest_seed_result() {
    let pool = italian_pool();
    let seeds = [11, 12, 13, 14];
    let best = generate_best_of::<&str>(&pool, &[], &config(0), &seeds).unwrap();
    let singles: Vec<f64> =
        seeds.iter().map(|&s| generate::<&str>(&pool, &[], &config(s)).unwrap().score.score).collect();
    let top = singles.iter().cloned().fold(f64::MIN, f64::max);
    assert_eq!(best.score.score, top);
    let first_top = seeds[singles.iter().position(|&s| s == top).unwrap()];
    assert_eq!(best.grid, generate::<&str>(&pool, &[], &config(first_top)).unwrap().grid);
}

#[test]
fn three_word_pool_seed_42() {
    let pool: Vec<ClueAnswerPair> = [("Feline pet", "cat"), ("Chopping tool", "axe"), ("Hot drink", "tea")]
        .iter()
        .map(|(c, a)| ClueAnswerPair::new(*c, *a, Source::Manual, Language::En).unwrap())
        .collect();
    let cfg = GenerationConfig { width: 5, height: 5, min_words: 2, seed: 42, ..GenerationConfig::default() };
    let out = generate::<&str>(&pool, &[], &cfg).unwrap();
    assert!(out.score.fw >= 2 && out.score.score > 0.0);
    assert!(validity_oracle(&out.grid, &["CAT", "AXE", "TEA"]).is_valid());
}

#[test]
fn disjoint_pool_has_no_solution() {
    let pool: Vec<ClueAnswerPair> = [("Feline pet", "cat"), ("Hound", "dog")]
        .iter()
        .map(|(c, a)| ClueAnswerPair::new(*c, *a, Source::Manual, Language::En).unwrap())
        .collect();
    let err =
        generate::<&str>(&pool, &[], &GenerationConfig { max_restarts: 3, ..GenerationConfig::default() }).unwrap_err();
    assert!(matches!(err, EngineError::NoSolution { .. }));
}

#[test]
fn seed_42_golden_is_a_valid_grid() {
    let text = std::fs::read_to_string(common::fixture("engine_seed42.json")).unwrap();
    let puzzle: crux::service::NumberedPuzzle = serde_json::from_str(&text).unwrap();
    let mut grid = Grid::new(puzzle.width(), puzzle.height()).unwrap();
    for e in puzzle.entries() {
        grid = grid.place_unchecked(&crux::schema::Placement::new(&e.answer, e.row, e.col, e.direction)).unwrap();
    }
    let words = pool_words();
    assert!(validity_oracle(&grid, &words).is_valid());
    assert_eq!(&score(&grid), puzzle.score());
    assert!(puzzle.entries().len() >= 8);
}
