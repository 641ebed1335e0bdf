use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

use super::EngineError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Across,
    Down,
}

impl Direction {
    fn flag(self) -> u8 {
        match self {
            Direction::Across => ACROSS,
            Direction::Down => DOWN,
        }
    }

    /// (row step, column step)
    fn step(self) -> (usize, usize) {
        match self {
            Direction::Across => (0, 1),
            Direction::Down => (1, 0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Across => "across",
            Direction::Down => "down",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const ACROSS: u8 = 0b01;
const DOWN: u8 = 0b10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub answer_grid: String,
    pub row: usize,
    pub col: usize,
    pub direction: Direction,
}

impl Placement {
    pub fn new(answer_grid: impl Into<String>, row: usize, col: usize, direction: Direction) -> Self {
        Placement { answer_grid: answer_grid.into(), row, col, direction }
    }

    pub fn len(&self) -> usize {
        self.answer_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answer_grid.is_empty()
    }

    /// Cells covered, in reading order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (dr, dc) = self.direction.step();
        (0..self.len()).map(move |i| (self.row + dr * i, self.col + dc * i))
    }
}

/// A legal position for an answer and how many existing letters it reuses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegalPlacement {
    pub placement: Placement,
    pub crossings: usize,
}

/// Sparse open-style crossword grid inside a fixed work area.
///
/// Besides letters, every cell records which directions cover it, and the
/// grid keeps running totals (filled cells, crossing cells, per-row and
/// per-column fill) so scoring never has to rescan the area.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    width: usize,
    height: usize,
    letters: Vec<u8>,
    cover: Vec<u8>,
    row_fill: Vec<u32>,
    col_fill: Vec<u32>,
    filled: usize,
    linked: usize,
    placements: Vec<Placement>,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Result<Self, EngineError> {
        if width == 0 || height == 0 {
            return Err(EngineError::InvalidConfig(format!("work area {width}x{height} is empty")));
        }
        Ok(Grid {
            width,
            height,
            letters: vec![0; width * height],
            cover: vec![0; width * height],
            row_fill: vec![0; height],
            col_fill: vec![0; width],
            filled: 0,
            linked: 0,
            placements: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    /// Number of distinct filled cells.
    pub fn filled_count(&self) -> usize {
        self.filled
    }

    /// Number of cells covered by both an across and a down answer.
    pub fn linked_count(&self) -> usize {
        self.linked
    }

    fn idx(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn letter(&self, row: usize, col: usize) -> Option<char> {
        if row >= self.height || col >= self.width {
            return None;
        }
        match self.letters[self.idx(row, col)] {
            0 => None,
            b => Some(b as char),
        }
    }

    fn filled_at(&self, row: usize, col: usize) -> bool {
        self.letters[self.idx(row, col)] != 0
    }

    /// Filled cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, char)> + '_ {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0)
            .map(move |(i, &b)| (i / self.width, i % self.width, b as char))
    }

    /// Inclusive (top, left, bottom, right) of the filled region.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let top = self.row_fill.iter().position(|&n| n > 0)?;
        let bottom = self.row_fill.iter().rposition(|&n| n > 0)?;
        let left = self.col_fill.iter().position(|&n| n > 0)?;
        let right = self.col_fill.iter().rposition(|&n| n > 0)?;
        Some((top, left, bottom, right))
    }

    pub fn bounding_area(&self) -> usize {
        self.bounding_box().map_or(0, |(t, l, b, r)| (b - t + 1) * (r - l + 1))
    }

    /// Checks one candidate position against every legality rule and
    /// returns the number of crossings.
    fn check(&self, word: &[u8], row: usize, col: usize, dir: Direction) -> Result<usize, String> {
        let len = word.len();
        let (dr, dc) = dir.step();
        let (end_row, end_col) = (row + dr * (len - 1), col + dc * (len - 1));
        if end_row >= self.height || end_col >= self.width {
            return Err("does not fit in the work area".into());
        }
        // Cells just before and after the word must be empty.
        let before = match dir {
            Direction::Across => col.checked_sub(1).map(|c| (row, c)),
            Direction::Down => row.checked_sub(1).map(|r| (r, col)),
        };
        let after = (end_row + dr, end_col + dc);
        if before.is_some_and(|(r, c)| self.filled_at(r, c)) {
            return Err("touches a letter before its first cell".into());
        }
        if after.0 < self.height && after.1 < self.width && self.filled_at(after.0, after.1) {
            return Err("touches a letter after its last cell".into());
        }

        let mut crossings = 0;
        for (i, &ch) in word.iter().enumerate() {
            let (r, c) = (row + dr * i, col + dc * i);
            let idx = self.idx(r, c);
            match self.letters[idx] {
                0 => {
                    // A new cell must not sit beside a letter across the
                    // word's direction, or it would form an unplaced run.
                    let side_filled = match dir {
                        Direction::Across => {
                            (r > 0 && self.filled_at(r - 1, c)) || (r + 1 < self.height && self.filled_at(r + 1, c))
                        }
                        Direction::Down => {
                            (c > 0 && self.filled_at(r, c - 1)) || (c + 1 < self.width && self.filled_at(r, c + 1))
                        }
                    };
                    if side_filled {
                        return Err(format!("cell ({r},{c}) would create an adjacent run"));
                    }
                }
                existing if existing == ch => {
                    if self.cover[idx] & dir.flag() != 0 {
                        return Err(format!("cell ({r},{c}) already holds a {dir} answer"));
                    }
                    crossings += 1;
                }
                existing => {
                    return Err(format!("cell ({r},{c}) holds {:?}, answer needs {:?}", existing as char, ch as char));
                }
            }
        }
        if !self.placements.is_empty() && crossings == 0 {
            return Err("does not cross any placed answer".into());
        }
        Ok(crossings)
    }

    fn validate_answer(&self, answer: &str) -> Result<(), EngineError> {
        if !answer.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(EngineError::InvalidAnswer(answer.to_string()));
        }
        let max = self.width.max(self.height);
        if answer.len() < 2 {
            return Err(EngineError::AnswerTooShort(answer.to_string()));
        }
        if answer.len() > max {
            return Err(EngineError::AnswerTooLong { answer: answer.to_string(), max });
        }
        Ok(())
    }

    /// Every position where `answer` may legally go, ordered by
    /// (direction, row, column).
    pub fn legal_placements(&self, answer: &str) -> Result<Vec<LegalPlacement>, EngineError> {
        self.validate_answer(answer)?;
        let word = answer.as_bytes();
        let mut starts = BTreeSet::new();
        if self.placements.is_empty() {
            for dir in [Direction::Across, Direction::Down] {
                for row in 0..self.height {
                    for col in 0..self.width {
                        starts.insert((dir, row, col));
                    }
                }
            }
        } else {
            // A legal placement on a non-empty grid crosses some letter, so
            // anchoring on matching letters enumerates all of them.
            for (row, col, ch) in self.cells() {
                for (i, _) in word.iter().enumerate().filter(|(_, &w)| w as char == ch) {
                    if col >= i {
                        starts.insert((Direction::Across, row, col - i));
                    }
                    if row >= i {
                        starts.insert((Direction::Down, row - i, col));
                    }
                }
            }
        }
        Ok(starts
            .into_iter()
            .filter_map(|(dir, row, col)| {
                self.check(word, row, col, dir)
                    .ok()
                    .map(|crossings| LegalPlacement { placement: Placement::new(answer, row, col, dir), crossings })
            })
            .collect())
    }

    /// Returns a new grid with `placement` added.
    pub fn place(&self, placement: &Placement) -> Result<Grid, EngineError> {
        let mut next = self.clone();
        next.push(placement)?;
        Ok(next)
    }

    /// Returns a new grid with the last `k` placements undone.
    pub fn remove_last(&self, k: usize) -> Result<Grid, EngineError> {
        let mut next = self.clone();
        next.pop_n(k)?;
        Ok(next)
    }

    /// Adds a placement checking only that it fits and agrees with existing
    /// letters. Adjacency and crossing rules are skipped, so the result may
    /// violate them; meant for hand-built fixtures and imported layouts.
    pub fn place_unchecked(&self, placement: &Placement) -> Result<Grid, EngineError> {
        self.validate_answer(&placement.answer_grid)?;
        let illegal =
            |reason: &str| EngineError::IllegalPlacement { placement: placement.clone(), reason: reason.into() };
        let (dr, dc) = placement.direction.step();
        let len = placement.len();
        if placement.row + dr * (len - 1) >= self.height || placement.col + dc * (len - 1) >= self.width {
            return Err(illegal("does not fit in the work area"));
        }
        for ((r, c), ch) in placement.cells().zip(placement.answer_grid.bytes()) {
            let idx = self.idx(r, c);
            if self.cover[idx] & placement.direction.flag() != 0 || (self.letters[idx] != 0 && self.letters[idx] != ch)
            {
                return Err(illegal("conflicts with an existing answer"));
            }
        }
        let mut next = self.clone();
        next.apply(placement);
        Ok(next)
    }

    pub(crate) fn push(&mut self, placement: &Placement) -> Result<usize, EngineError> {
        self.validate_answer(&placement.answer_grid)?;
        let crossings = self
            .check(placement.answer_grid.as_bytes(), placement.row, placement.col, placement.direction)
            .map_err(|reason| EngineError::IllegalPlacement { placement: placement.clone(), reason })?;
        self.apply(placement);
        Ok(crossings)
    }

    fn apply(&mut self, placement: &Placement) {
        let flag = placement.direction.flag();
        for ((r, c), &ch) in placement.cells().zip(placement.answer_grid.as_bytes()) {
            let idx = self.idx(r, c);
            if self.cover[idx] == 0 {
                self.letters[idx] = ch;
                self.filled += 1;
                self.row_fill[r] += 1;
                self.col_fill[c] += 1;
            } else {
                self.linked += 1;
            }
            self.cover[idx] |= flag;
        }
        self.placements.push(placement.clone());
    }

    pub(crate) fn pop_n(&mut self, k: usize) -> Result<(), EngineError> {
        if k > self.placements.len() {
            return Err(EngineError::TooMany { requested: k, placed: self.placements.len() });
        }
        for _ in 0..k {
            let placement = self.placements.pop().expect("checked length");
            let flag = placement.direction.flag();
            for (r, c) in placement.cells() {
                let idx = self.idx(r, c);
                self.cover[idx] &= !flag;
                if self.cover[idx] == 0 {
                    self.letters[idx] = 0;
                    self.filled -= 1;
                    self.row_fill[r] -= 1;
                    self.col_fill[c] -= 1;
                } else {
                    self.linked -= 1;
                }
            }
        }
        Ok(())
    }

    /// Plain-text picture of the work area, `.` for empty cells.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in 0..self.height {
            for col in 0..self.width {
                out.push(self.letter(row, col).unwrap_or('.'));
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
