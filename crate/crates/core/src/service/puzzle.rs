//! Numbered puzzles and their export formats.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;

use super::ServiceError;
use crate::domain::ClueAnswerPair;
use crate::schema::{score_with, Direction, FrDenominator, Grid, ScoreBreakdown};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PuzzleCell {
    pub row: usize,
    pub col: usize,
    pub letter: char,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub number: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PuzzleEntry {
    pub number: u32,
    pub direction: Direction,
    pub row: usize,
    pub col: usize,
    pub answer: String,
    pub clue: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct PuzzleData {
    width: usize,
    height: usize,
    cells: Vec<PuzzleCell>,
    entries: Vec<PuzzleEntry>,
    score: ScoreBreakdown,
}

/// A laid-out grid with clue numbers. Always holds at least one entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PuzzleData", into = "PuzzleData")]
pub struct NumberedPuzzle {
    width: usize,
    height: usize,
    cells: Vec<PuzzleCell>,
    entries: Vec<PuzzleEntry>,
    score: ScoreBreakdown,
}

impl TryFrom<PuzzleData> for NumberedPuzzle {
    type Error = ServiceError;

    fn try_from(d: PuzzleData) -> Result<Self, Self::Error> {
        NumberedPuzzle::new(d.width, d.height, d.cells, d.entries, d.score)
    }
}

impl From<NumberedPuzzle> for PuzzleData {
    fn from(p: NumberedPuzzle) -> Self {
        PuzzleData { width: p.width, height: p.height, cells: p.cells, entries: p.entries, score: p.score }
    }
}

impl NumberedPuzzle {
    pub fn new(
        width: usize,
        height: usize,
        cells: Vec<PuzzleCell>,
        entries: Vec<PuzzleEntry>,
        score: ScoreBreakdown,
    ) -> Result<Self, ServiceError> {
        if entries.is_empty() {
            return Err(ServiceError::InvalidRequest("a puzzle needs at least one entry".into()));
        }
        if let Some(c) = cells.iter().find(|c| c.row >= height || c.col >= width) {
            return Err(ServiceError::InvalidRequest(format!("cell ({}, {}) outside {width}x{height}", c.row, c.col)));
        }
        Ok(NumberedPuzzle { width, height, cells, entries, score })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[PuzzleCell] {
        &self.cells
    }

    pub fn entries(&self) -> &[PuzzleEntry] {
        &self.entries
    }

    pub fn score(&self) -> &ScoreBreakdown {
        &self.score
    }
}

/// Numbers cells in row-major order: a cell gets the next number when an
/// across or a down answer starts there. Clues come from the first pair
/// whose grid answer matches.
pub fn assign_numbering(
    grid: &Grid,
    pairs: &[ClueAnswerPair],
    fr_denominator: FrDenominator,
) -> Result<NumberedPuzzle, ServiceError> {
    let mut clues: HashMap<&str, &str> = HashMap::new();
    for pair in pairs {
        clues.entry(pair.answer_grid.as_str()).or_insert(pair.clue.as_str());
    }
    let mut starts: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (i, p) in grid.placements().iter().enumerate() {
        if !clues.contains_key(p.answer_grid.as_str()) {
            return Err(ServiceError::MissingClue(p.answer_grid.clone()));
        }
        starts.entry((p.row, p.col)).or_default().push(i);
    }

    let mut cells = Vec::new();
    let mut entries = Vec::new();
    let mut next = 1;
    for (row, col, letter) in grid.cells() {
        let mut cell = PuzzleCell { row, col, letter, number: None };
        if let Some(placed) = starts.get(&(row, col)) {
            cell.number = Some(next);
            for &i in placed {
                let p = &grid.placements()[i];
                entries.push(PuzzleEntry {
                    number: next,
                    direction: p.direction,
                    row,
                    col,
                    answer: p.answer_grid.clone(),
                    clue: clues[p.answer_grid.as_str()].to_string(),
                });
            }
            next += 1;
        }
        cells.push(cell);
    }
    entries.sort_by_key(|e| (e.number, e.direction));
    NumberedPuzzle::new(grid.width(), grid.height(), cells, entries, score_with(grid, fr_denominator))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    #[default]
    Json,
    Text,
}

impl std::str::FromStr for ExportFormat {
    type Err = ServiceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ExportFormat::Json),
            "text" => Ok(ExportFormat::Text),
            other => Err(ServiceError::InvalidRequest(format!("unknown format {other:?} (json or text)"))),
        }
    }
}

pub fn export_puzzle(puzzle: &NumberedPuzzle, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(puzzle).expect("puzzle serializes");
            out.push(b'\n');
            out
        }
        ExportFormat::Text => render_text(puzzle).into_bytes(),
    }
}

fn render_text(puzzle: &NumberedPuzzle) -> String {
    let mut rows = vec![vec!['.'; puzzle.width]; puzzle.height];
    for cell in &puzzle.cells {
        rows[cell.row][cell.col] = cell.letter;
    }
    let mut out = String::new();
    for row in rows {
        out.extend(row);
        out.push('\n');
    }
    for (direction, title) in [(Direction::Across, "Across"), (Direction::Down, "Down")] {
        let mut listed = puzzle.entries.iter().filter(|e| e.direction == direction).peekable();
        if listed.peek().is_none() {
            continue;
        }
        let _ = write!(out, "\n{title}\n");
        for e in listed {
            let _ = writeln!(out, "{}. {} ({})", e.number, e.clue, e.answer.len());
        }
    }
    out
}
