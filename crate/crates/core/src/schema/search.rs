use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::time::{Duration, Instant};

use super::{score_with, Direction, EngineError, FrDenominator, Grid, LegalPlacement, ScoreBreakdown};
use crate::domain::{normalize_answer, ClueAnswerPair};

/// Search parameters. Every attempt is driven by a ChaCha8 stream seeded
/// with `seed`, so layouts are reproducible across platforms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub width: usize,
    pub height: usize,
    /// Success needs at least this many answers on the grid...
    pub min_words: usize,
    /// ...and at least this filled ratio.
    #[serde(alias = "min_fill")]
    pub min_fill_ratio: f64,
    /// Rebuilds from scratch allowed after the first attempt.
    pub max_restarts: u32,
    #[serde(rename = "max_seconds", with = "secs_f64")]
    pub max_duration: Duration,
    /// Sampling weight of preferred answers (others weigh 1).
    pub preferred_weight: f64,
    /// Chance that a stuck step backtracks instead of restarting.
    pub removal_probability: f64,
    pub seed: u64,
    pub fr_denominator: FrDenominator,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            width: 15,
            height: 15,
            min_words: 8,
            min_fill_ratio: 0.35,
            max_restarts: 50,
            max_duration: Duration::from_secs(10),
            preferred_weight: 3.0,
            removal_probability: 0.3,
            seed: 42,
            fr_denominator: FrDenominator::Bbox,
        }
    }
}

mod secs_f64 {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let fail = |msg: String| Err(EngineError::InvalidConfig(msg));
        if self.width == 0 || self.height == 0 {
            return fail(format!("work area {}x{} is empty", self.width, self.height));
        }
        if self.max_duration.is_zero() {
            return fail("max duration must be positive".into());
        }
        if !(self.preferred_weight.is_finite() && self.preferred_weight >= 1.0) {
            return fail(format!("preferred weight {} must be >= 1", self.preferred_weight));
        }
        if !(0.0..=1.0).contains(&self.removal_probability) {
            return fail(format!("removal probability {} outside [0, 1]", self.removal_probability));
        }
        if !(0.0..=1.0).contains(&self.min_fill_ratio) {
            return fail(format!("min fill ratio {} outside [0, 1]", self.min_fill_ratio));
        }
        Ok(())
    }
}

/// Where the search stands when deciding whether to go on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchStatus {
    pub fw: usize,
    pub fr: f64,
    pub restarts: u32,
    pub elapsed: Duration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopDecision {
    Continue,
    StopSuccess,
    StopBudget,
}

/// Success when the current candidate has enough words and fill; budget
/// exhaustion when restarts exceed the limit (strictly) or time is up.
pub fn check_stop(status: &SearchStatus, config: &GenerationConfig) -> StopDecision {
    if status.fw >= config.min_words && status.fr >= config.min_fill_ratio {
        StopDecision::StopSuccess
    } else if status.restarts > config.max_restarts || status.elapsed >= config.max_duration {
        StopDecision::StopBudget
    } else {
        StopDecision::Continue
    }
}

pub trait Clock {
    fn elapsed(&mut self) -> Duration;
}

pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed(&mut self) -> Duration {
        self.0.elapsed()
    }
}

/// Clock that advances a fixed amount on every reading.
pub struct StepClock {
    now: Duration,
    tick: Duration,
}

impl StepClock {
    pub fn new(tick: Duration) -> Self {
        StepClock { now: Duration::ZERO, tick }
    }
}

impl Clock for StepClock {
    fn elapsed(&mut self) -> Duration {
        self.now += self.tick;
        self.now
    }
}

/// One scored layout the search reached before getting stuck or stopping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub attempt: u32,
    pub fw: usize,
    pub ll: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationTrace {
    /// Grid-form answers the search drew from, in pool order.
    pub pool: Vec<String>,
    pub preferred: Vec<String>,
    pub candidates: Vec<CandidateRecord>,
    pub restarts: u32,
    pub removals: u32,
    pub steps: u64,
    pub stop: StopDecision,
}

impl GenerationTrace {
    pub fn max_candidate_score(&self) -> f64 {
        self.candidates.iter().map(|c| c.score).fold(0.0, f64::max)
    }
}

/// Wall-clock facts about a run; kept apart from the trace, which is
/// deterministic for a given seed.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GenerationTiming {
    pub elapsed: Duration,
    pub longest_step: Duration,
}

#[derive(Clone, Debug)]
pub struct GenerationOutcome {
    pub grid: Grid,
    pub score: ScoreBreakdown,
    pub trace: GenerationTrace,
    pub timing: GenerationTiming,
}

struct PoolEntry {
    answer: String,
    weight: f64,
}

fn build_pool<S: AsRef<str>>(
    pool: &[ClueAnswerPair],
    preferred: &[S],
    config: &GenerationConfig,
) -> Result<(Vec<PoolEntry>, Vec<String>), EngineError> {
    let preferred: Vec<String> = preferred
        .iter()
        .map(|p| normalize_answer(p.as_ref()).map_err(|_| EngineError::InvalidAnswer(p.as_ref().to_string())))
        .collect::<Result<_, _>>()?;
    let preferred_set: HashSet<&str> = preferred.iter().map(String::as_str).collect();
    let max_len = config.width.max(config.height);
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for pair in pool {
        let answer = &pair.answer_grid;
        if answer.len() < 2 || answer.len() > max_len {
            log::debug!("skipping {answer}: does not fit a {}x{} area", config.width, config.height);
            continue;
        }
        if seen.insert(answer.clone()) {
            let weight = if preferred_set.contains(answer.as_str()) { config.preferred_weight } else { 1.0 };
            entries.push(PoolEntry { answer: answer.clone(), weight });
        }
    }
    Ok((entries, preferred))
}

/// Position of the opening answer: the legal spot whose centre is nearest the
/// centre of the work area, in a randomly chosen direction when both fit.
fn central_placement(grid: &Grid, answer: &str, rng: &mut ChaCha8Rng) -> Option<LegalPlacement> {
    let legal = grid.legal_placements(answer).ok()?;
    let wanted = if rng.gen_bool(0.5) { Direction::Across } else { Direction::Down };
    let len = answer.len();
    // Doubled coordinates keep half-cell centres integral.
    let center = (grid.height() as i64 - 1, grid.width() as i64 - 1);
    let distance = |p: &LegalPlacement| {
        let (dr, dc) = match p.placement.direction {
            Direction::Across => (0, len as i64 - 1),
            Direction::Down => (len as i64 - 1, 0),
        };
        let r = 2 * p.placement.row as i64 + dr - center.0;
        let c = 2 * p.placement.col as i64 + dc - center.1;
        r * r + c * c
    };
    let in_direction: Vec<&LegalPlacement> = legal.iter().filter(|p| p.placement.direction == wanted).collect();
    let options = if in_direction.is_empty() { legal.iter().collect() } else { in_direction };
    options.into_iter().min_by_key(|p| distance(p)).cloned()
}

pub fn generate<S: AsRef<str>>(
    pool: &[ClueAnswerPair],
    preferred: &[S],
    config: &GenerationConfig,
) -> Result<GenerationOutcome, EngineError> {
    generate_with_clock(pool, preferred, config, &mut WallClock::start())
}

/// The layout search. Each attempt opens with a central answer and keeps
/// adding answers that cross the grid, sampled by weight and placed where
/// they cross most. When nothing fits, the layout is scored as a candidate;
/// the search then either backtracks a few placements or restarts. The best
/// candidate with at least two answers is returned.
pub fn generate_with_clock<S: AsRef<str>>(
    pool: &[ClueAnswerPair],
    preferred: &[S],
    config: &GenerationConfig,
    clock: &mut dyn Clock,
) -> Result<GenerationOutcome, EngineError> {
    config.validate()?;
    let (entries, preferred) = build_pool(pool, preferred, config)?;
    if entries.len() < 2 {
        return Err(EngineError::PoolTooSmall(entries.len()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = GenerationTrace {
        pool: entries.iter().map(|e| e.answer.clone()).collect(),
        preferred,
        candidates: Vec::new(),
        restarts: 0,
        removals: 0,
        steps: 0,
        stop: StopDecision::StopBudget,
    };
    let mut timing = GenerationTiming::default();
    let mut best: Option<(Grid, ScoreBreakdown)> = None;
    let all_weights: Vec<f64> = entries.iter().map(|e| e.weight).collect();
    let opening = WeightedIndex::new(&all_weights).expect("weights are >= 1");

    let mut record = |grid: &Grid, trace: &mut GenerationTrace| {
        let s = score_with(grid, config.fr_denominator);
        trace.candidates.push(CandidateRecord { attempt: trace.restarts, fw: s.fw, ll: s.ll, score: s.score });
        if s.fw >= 2 && best.as_ref().is_none_or(|(_, b)| s.score > b.score) {
            best = Some((grid.clone(), s));
        }
    };

    'attempts: loop {
        let mut grid = Grid::new(config.width, config.height)?;
        let mut used = vec![false; entries.len()];

        let first = opening.sample(&mut rng);
        let start = central_placement(&grid, &entries[first].answer, &mut rng).expect("pool answers fit the work area");
        grid.push(&start.placement)?;
        used[first] = true;

        loop {
            let status = SearchStatus {
                fw: grid.placements().len(),
                fr: score_with(&grid, config.fr_denominator).fr,
                restarts: trace.restarts,
                elapsed: clock.elapsed(),
            };
            match check_stop(&status, config) {
                StopDecision::Continue => {}
                decision => {
                    record(&grid, &mut trace);
                    trace.stop = decision;
                    break 'attempts;
                }
            }

            let step_started = Instant::now();
            trace.steps += 1;
            let mut options: Vec<(usize, Vec<LegalPlacement>)> = Vec::new();
            for (i, entry) in entries.iter().enumerate() {
                if used[i] {
                    continue;
                }
                let legal = grid.legal_placements(&entry.answer)?;
                if !legal.is_empty() {
                    options.push((i, legal));
                }
            }

            if options.is_empty() {
                record(&grid, &mut trace);
                let placed = grid.placements().len();
                if placed > 1 && rng.gen_bool(config.removal_probability) {
                    let k = rng.gen_range(1..=placed.saturating_sub(1).min(3));
                    for p in &grid.placements()[placed - k..] {
                        let idx = entries.iter().position(|e| e.answer == p.answer_grid).expect("placed from pool");
                        used[idx] = false;
                    }
                    grid.pop_n(k)?;
                    trace.removals += 1;
                } else {
                    let status = SearchStatus { restarts: trace.restarts + 1, ..status };
                    if check_stop(&status, config) == StopDecision::StopBudget {
                        trace.stop = StopDecision::StopBudget;
                        break 'attempts;
                    }
                    trace.restarts += 1;
                    timing.longest_step = timing.longest_step.max(step_started.elapsed());
                    continue 'attempts;
                }
            } else {
                let weights: Vec<f64> = options.iter().map(|(i, _)| entries[*i].weight).collect();
                let chosen = WeightedIndex::new(&weights).expect("weights are >= 1").sample(&mut rng);
                let (entry_idx, legal) = &options[chosen];
                let most = legal.iter().map(|p| p.crossings).max().expect("non-empty");
                let best_spots: Vec<&LegalPlacement> = legal.iter().filter(|p| p.crossings == most).collect();
                let spot = best_spots[rng.gen_range(0..best_spots.len())];
                grid.push(&spot.placement)?;
                used[*entry_idx] = true;
            }
            timing.longest_step = timing.longest_step.max(step_started.elapsed());
        }
    }

    timing.elapsed = clock.elapsed();
    match best {
        Some((grid, score)) => Ok(GenerationOutcome { grid, score, trace, timing }),
        None => Err(EngineError::NoSolution { restarts: trace.restarts, candidates: trace.candidates.len() }),
    }
}

/// Runs independent searches, one per seed, in parallel and keeps the
/// highest score; ties go to the earlier seed in `seeds`.
pub fn generate_best_of<S: AsRef<str> + Sync>(
    pool: &[ClueAnswerPair],
    preferred: &[S],
    config: &GenerationConfig,
    seeds: &[u64],
) -> Result<GenerationOutcome, EngineError> {
    let results: Vec<Result<GenerationOutcome, EngineError>> =
        seeds.par_iter().map(|&seed| generate(pool, preferred, &GenerationConfig { seed, ..config.clone() })).collect();
    let mut best: Option<GenerationOutcome> = None;
    let mut last_err = None;
    for result in results {
        match result {
            Ok(outcome) => {
                if best.as_ref().is_none_or(|b| outcome.score.score > b.score.score) {
                    best = Some(outcome);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(EngineError::PoolTooSmall(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Language, Source};

    fn pool(words: &[&str]) -> Vec<ClueAnswerPair> {
        words
            .iter()
            .map(|w| ClueAnswerPair::new(format!("clue for {}", w.len()), *w, Source::Manual, Language::En).unwrap())
            .collect()
    }

    fn status(fw: usize, fr: f64, restarts: u32, elapsed_ms: u64) -> SearchStatus {
        SearchStatus { fw, fr, restarts, elapsed: Duration::from_millis(elapsed_ms) }
    }

    #[test]
    fn stop_examples() {
        let config = GenerationConfig {
            min_words: 5,
            min_fill_ratio: 0.3,
            max_restarts: 10,
            max_duration: Duration::from_secs(1),
            ..GenerationConfig::default()
        };
        assert_eq!(check_stop(&status(5, 0.5, 0, 0), &config), StopDecision::StopSuccess);
        assert_eq!(check_stop(&status(5, 0.2, 0, 0), &config), StopDecision::Continue);
        assert_eq!(check_stop(&status(0, 0.0, 0, 1000), &config), StopDecision::StopBudget);
        assert_eq!(check_stop(&status(1, 0.9, 10, 10), &config), StopDecision::Continue);
        assert_eq!(check_stop(&status(1, 0.9, 11, 10), &config), StopDecision::StopBudget);
    }

    #[test]
    fn small_pool_builds_a_crossing() {
        let config = GenerationConfig { width: 5, height: 5, min_words: 2, seed: 42, ..GenerationConfig::default() };
        let out = generate::<&str>(&pool(&["CAT", "AXE", "TEA"]), &[], &config).unwrap();
        assert!(out.score.fw >= 2);
        assert!(out.score.score > 0.0);
        assert!(out.score.score >= out.trace.max_candidate_score());
    }

    #[test]
    fn disjoint_letters_have_no_solution() {
        let config =
            GenerationConfig { width: 5, height: 5, min_words: 2, max_restarts: 5, ..GenerationConfig::default() };
        let err = generate::<&str>(&pool(&["CAT", "DOG"]), &[], &config).unwrap_err();
        assert!(matches!(err, EngineError::NoSolution { restarts: 5, .. }), "{err:?}");
    }

    #[test]
    fn pool_too_small_and_bad_config() {
        let config = GenerationConfig::default();
        assert!(matches!(generate::<&str>(&pool(&["CAT"]), &[], &config), Err(EngineError::PoolTooSmall(1))));
        let bad = GenerationConfig { preferred_weight: 0.5, ..config };
        assert!(matches!(generate::<&str>(&pool(&["CAT", "TEA"]), &[], &bad), Err(EngineError::InvalidConfig(_))));
    }

    #[test]
    fn opening_answer_is_centred() {
        let grid = Grid::new(15, 15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = central_placement(&grid, "GALILEO", &mut rng).unwrap().placement;
        let middle = match p.direction {
            Direction::Across => (p.row, p.col + 3),
            Direction::Down => (p.row + 3, p.col),
        };
        assert_eq!(middle, (7, 7));
    }

    #[test]
    fn time_budget_stops_search() {
        // Each clock reading advances 10ms, so a 50ms budget allows a handful of steps.
        let config = GenerationConfig {
            width: 7,
            height: 7,
            min_words: 50,
            max_restarts: 1_000_000,
            max_duration: Duration::from_millis(50),
            ..GenerationConfig::default()
        };
        let mut clock = StepClock::new(Duration::from_millis(10));
        let out = generate_with_clock::<&str>(&pool(&["CAT", "AXE", "TEA", "EAT"]), &[], &config, &mut clock).unwrap();
        assert_eq!(out.trace.stop, StopDecision::StopBudget);
        assert!(out.trace.steps <= 5);
    }

    #[test]
    fn config_json_uses_seconds() {
        let config: GenerationConfig =
            serde_json::from_str(r#"{"max_seconds": 2.5, "min_fill": 0.4, "seed": 7}"#).unwrap();
        assert_eq!(config.max_duration, Duration::from_millis(2500));
        assert_eq!(config.min_fill_ratio, 0.4);
        assert_eq!(config.width, 15);
    }
}
