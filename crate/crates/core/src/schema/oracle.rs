//! Brute-force checker for grids. It looks only at cell letters (and, for
//! the consistency checks, the placement list) and rebuilds everything the
//! engine tracks incrementally, using exact rational arithmetic.

use num_rational::Ratio;
use serde::Serialize;
use std::collections::{BTreeSet, HashSet, VecDeque};

use super::{score, Direction, Grid};

const FLOAT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Run {
    pub direction: Direction,
    pub row: usize,
    pub col: usize,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum OracleIssue {
    /// A maximal run of two or more letters that is not in the pool.
    UnknownWord(Run),
    /// A maximal run that no placement accounts for.
    AccidentalRun(Run),
    /// A placement that is not exactly a maximal run.
    PlacementNotARun {
        answer: String,
        row: usize,
        col: usize,
        direction: Direction,
    },
    /// A placement whose letters disagree with the cells.
    LetterMismatch {
        answer: String,
        row: usize,
        col: usize,
    },
    /// A filled cell belonging to no run.
    IsolatedCell {
        row: usize,
        col: usize,
    },
    /// Runs split into more than one crossing-connected group.
    Disconnected {
        components: usize,
    },
    ScoreMismatch {
        field: &'static str,
        incremental: f64,
        recomputed: f64,
    },
}

/// Score components rebuilt from cells, kept as exact fractions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactScore {
    pub fw: u64,
    pub ll: u64,
    pub letters: u64,
    pub area: u64,
    pub fr: Ratio<u64>,
    pub lr: Ratio<u64>,
    pub score: Ratio<u64>,
}

impl ExactScore {
    pub fn score_f64(&self) -> f64 {
        ratio_f64(self.score)
    }
}

fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleVerdict {
    pub runs: Vec<Run>,
    pub recomputed: ExactScore,
    pub issues: Vec<OracleIssue>,
}

impl OracleVerdict {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Maximal runs of two or more filled cells, found by scanning rows and
/// columns.
pub fn scan_runs(grid: &Grid) -> Vec<Run> {
    let mut runs = Vec::new();
    for row in 0..grid.height() {
        let mut col = 0;
        while col < grid.width() {
            let start = col;
            let mut text = String::new();
            while let Some(ch) = grid.letter(row, col) {
                text.push(ch);
                col += 1;
            }
            if text.len() >= 2 {
                runs.push(Run { direction: Direction::Across, row, col: start, text });
            }
            col = col.max(start + 1);
        }
    }
    for col in 0..grid.width() {
        let mut row = 0;
        while row < grid.height() {
            let start = row;
            let mut text = String::new();
            while let Some(ch) = grid.letter(row, col) {
                text.push(ch);
                row += 1;
            }
            if text.len() >= 2 {
                runs.push(Run { direction: Direction::Down, row: start, col, text });
            }
            row = row.max(start + 1);
        }
    }
    runs
}

fn run_cells(run: &Run) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..run.text.len()).map(move |i| match run.direction {
        Direction::Across => (run.row, run.col + i),
        Direction::Down => (run.row + i, run.col),
    })
}

/// Checks `grid` against `pool` (grid-form answers) and compares its
/// incremental score with an exact recomputation.
pub fn validity_oracle<S: AsRef<str>>(grid: &Grid, pool: &[S]) -> OracleVerdict {
    let pool: HashSet<&str> = pool.iter().map(AsRef::as_ref).collect();
    let runs = scan_runs(grid);
    let mut issues = Vec::new();

    let mut across_cells = HashSet::new();
    let mut down_cells = HashSet::new();
    for run in &runs {
        let target = match run.direction {
            Direction::Across => &mut across_cells,
            Direction::Down => &mut down_cells,
        };
        target.extend(run_cells(run));
        if !pool.contains(run.text.as_str()) {
            issues.push(OracleIssue::UnknownWord(run.clone()));
        }
    }

    let mut filled = Vec::new();
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            if grid.letter(row, col).is_some() {
                filled.push((row, col));
                if !across_cells.contains(&(row, col)) && !down_cells.contains(&(row, col)) {
                    issues.push(OracleIssue::IsolatedCell { row, col });
                }
            }
        }
    }

    // Placements must match runs one to one.
    let run_keys: BTreeSet<(Direction, usize, usize, &str)> =
        runs.iter().map(|r| (r.direction, r.row, r.col, r.text.as_str())).collect();
    let mut placement_keys = BTreeSet::new();
    for p in grid.placements() {
        let letters_match = p.cells().zip(p.answer_grid.chars()).all(|((r, c), ch)| grid.letter(r, c) == Some(ch));
        if !letters_match {
            issues.push(OracleIssue::LetterMismatch { answer: p.answer_grid.clone(), row: p.row, col: p.col });
        }
        let key = (p.direction, p.row, p.col, p.answer_grid.as_str());
        if !run_keys.contains(&key) {
            issues.push(OracleIssue::PlacementNotARun {
                answer: p.answer_grid.clone(),
                row: p.row,
                col: p.col,
                direction: p.direction,
            });
        }
        placement_keys.insert(key);
    }
    for run in &runs {
        if !placement_keys.contains(&(run.direction, run.row, run.col, run.text.as_str())) {
            issues.push(OracleIssue::AccidentalRun(run.clone()));
        }
    }

    let components = count_components(&runs);
    if components > 1 {
        issues.push(OracleIssue::Disconnected { components });
    }

    let recomputed = exact_score(&runs, &filled, &across_cells, &down_cells);
    let incremental = score(grid);
    let int_checks = [("fw", incremental.fw as u64, recomputed.fw), ("ll", incremental.ll as u64, recomputed.ll)];
    for (field, inc, exact) in int_checks {
        if inc != exact {
            issues.push(OracleIssue::ScoreMismatch { field, incremental: inc as f64, recomputed: exact as f64 });
        }
    }
    let float_checks = [
        ("fr", incremental.fr, ratio_f64(recomputed.fr)),
        ("lr", incremental.lr, ratio_f64(recomputed.lr)),
        ("score", incremental.score, ratio_f64(recomputed.score)),
    ];
    for (field, inc, exact) in float_checks {
        if (inc - exact).abs() > FLOAT_TOLERANCE {
            issues.push(OracleIssue::ScoreMismatch { field, incremental: inc, recomputed: exact });
        }
    }

    OracleVerdict { runs, recomputed, issues }
}

fn count_components(runs: &[Run]) -> usize {
    if runs.is_empty() {
        return 0;
    }
    let cells: Vec<HashSet<(usize, usize)>> = runs.iter().map(|r| run_cells(r).collect()).collect();
    let mut seen = vec![false; runs.len()];
    let mut components = 0;
    for start in 0..runs.len() {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..runs.len() {
                if !seen[j] && !cells[i].is_disjoint(&cells[j]) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    components
}

fn exact_score(
    runs: &[Run],
    filled: &[(usize, usize)],
    across: &HashSet<(usize, usize)>,
    down: &HashSet<(usize, usize)>,
) -> ExactScore {
    let fw = runs.len() as u64;
    let ll = filled.iter().filter(|c| across.contains(c) && down.contains(c)).count() as u64;
    let letters = filled.len() as u64;
    let area = match (
        filled.iter().map(|c| c.0).min(),
        filled.iter().map(|c| c.0).max(),
        filled.iter().map(|c| c.1).min(),
        filled.iter().map(|c| c.1).max(),
    ) {
        (Some(top), Some(bottom), Some(left), Some(right)) => ((bottom - top + 1) * (right - left + 1)) as u64,
        _ => 0,
    };
    let (fr, lr) = if letters == 0 {
        (Ratio::from_integer(0), Ratio::from_integer(0))
    } else {
        (Ratio::new(letters, area), Ratio::new(ll, letters))
    };
    // (fw + ll/2) as a fraction over 2.
    let weight = Ratio::new(2 * fw + ll, 2);
    ExactScore { fw, ll, letters, area, fr, lr, score: weight * fr * lr }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Placement;

    #[test]
    fn cat_axe_is_valid_and_scores_exactly() {
        let grid = Grid::new(5, 5)
            .unwrap()
            .place(&Placement::new("CAT", 0, 0, Direction::Across))
            .unwrap()
            .place(&Placement::new("AXE", 0, 1, Direction::Down))
            .unwrap();
        let verdict = validity_oracle(&grid, &["CAT", "AXE", "TEA"]);
        assert!(verdict.is_valid(), "{:?}", verdict.issues);
        assert_eq!(verdict.recomputed.score, Ratio::new(25, 90));
        assert_eq!(verdict.recomputed.fr, Ratio::new(5, 9));
        assert_eq!(verdict.recomputed.lr, Ratio::new(1, 5));
    }

    #[test]
    fn words_outside_the_pool_are_reported() {
        let grid = Grid::new(4, 4).unwrap().place(&Placement::new("CAT", 0, 0, Direction::Across)).unwrap();
        let verdict = validity_oracle(&grid, &["AXE"]);
        assert_eq!(
            verdict.issues,
            vec![OracleIssue::UnknownWord(Run { direction: Direction::Across, row: 0, col: 0, text: "CAT".into() })]
        );
    }

    #[test]
    fn runs_scan_both_directions() {
        let grid = Grid::new(5, 5)
            .unwrap()
            .place(&Placement::new("CAT", 0, 0, Direction::Across))
            .unwrap()
            .place(&Placement::new("TEA", 0, 2, Direction::Down))
            .unwrap();
        let runs = scan_runs(&grid);
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[1], Run { direction: Direction::Down, row: 0, col: 2, text: "TEA".into() });
    }
}
