use serde::{Deserialize, Serialize};
use std::str::FromStr;

use super::Grid;

/// What the filled ratio divides by.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrDenominator {
    /// Axis-aligned bounding box of the filled cells.
    #[default]
    Bbox,
    /// The whole work area.
    WorkArea,
}

impl FromStr for FrDenominator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bbox" => Ok(FrDenominator::Bbox),
            "work_area" | "work-area" => Ok(FrDenominator::WorkArea),
            other => Err(format!("unknown fr denominator {other:?} (expected bbox or work_area)")),
        }
    }
}

/// Layout quality: `score = (fw + 0.5 * ll) * fr * lr`.
///
/// * `fw` placed answers
/// * `ll` cells shared by an across and a down answer
/// * `fr` filled cells over the denominator area
/// * `lr` `ll` over filled cells
///
/// Ratios are 0 on an empty grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub fw: usize,
    pub ll: usize,
    pub fr: f64,
    pub lr: f64,
    pub score: f64,
}

impl ScoreBreakdown {
    pub fn compose(fw: usize, ll: usize, fr: f64, lr: f64) -> Self {
        ScoreBreakdown { fw, ll, fr, lr, score: (fw as f64 + 0.5 * ll as f64) * fr * lr }
    }
}

pub fn score(grid: &Grid) -> ScoreBreakdown {
    score_with(grid, FrDenominator::Bbox)
}

pub fn score_with(grid: &Grid, denominator: FrDenominator) -> ScoreBreakdown {
    let letters = grid.filled_count();
    let ll = grid.linked_count();
    let area = match denominator {
        FrDenominator::Bbox => grid.bounding_area(),
        FrDenominator::WorkArea => grid.width() * grid.height(),
    };
    let (fr, lr) = if letters == 0 { (0.0, 0.0) } else { (letters as f64 / area as f64, ll as f64 / letters as f64) };
    ScoreBreakdown::compose(grid.placements().len(), ll, fr, lr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Direction, Placement};

    #[test]
    fn empty_grid_scores_zero() {
        let s = score(&Grid::new(5, 5).unwrap());
        assert_eq!(s, ScoreBreakdown { fw: 0, ll: 0, fr: 0.0, lr: 0.0, score: 0.0 });
    }

    #[test]
    fn single_word_scores_zero() {
        let grid = Grid::new(5, 5).unwrap().place(&Placement::new("CAT", 0, 0, Direction::Across)).unwrap();
        let s = score(&grid);
        assert_eq!((s.fw, s.ll, s.fr, s.lr, s.score), (1, 0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn cat_axe_cross() {
        let grid = Grid::new(5, 5)
            .unwrap()
            .place(&Placement::new("CAT", 0, 0, Direction::Across))
            .unwrap()
            .place(&Placement::new("AXE", 0, 1, Direction::Down))
            .unwrap();
        let s = score(&grid);
        assert_eq!((s.fw, s.ll), (2, 1));
        assert!((s.fr - 5.0 / 9.0).abs() < 1e-12);
        assert!((s.lr - 0.2).abs() < 1e-12);
        assert!((s.score - 25.0 / 90.0).abs() < 1e-12);

        let w = score_with(&grid, FrDenominator::WorkArea);
        assert!((w.fr - 5.0 / 25.0).abs() < 1e-12);
    }
}
