//! Crossword layout engine: grid state, scoring, the randomized search and
//! an independent checker for finished grids.

mod grid;
pub mod oracle;
mod score;
mod search;

pub use grid::{Direction, Grid, LegalPlacement, Placement};
pub use oracle::{scan_runs, validity_oracle, ExactScore, OracleIssue, OracleVerdict, Run};
pub use score::{score, score_with, FrDenominator, ScoreBreakdown};
pub use search::{
    check_stop, generate, generate_best_of, generate_with_clock, CandidateRecord, Clock, GenerationConfig,
    GenerationOutcome, GenerationTiming, GenerationTrace, SearchStatus, StepClock, StopDecision, WallClock,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("answer {0:?} must be uppercase A-Z only")]
    InvalidAnswer(String),
    #[error("answer {0:?} is shorter than 2 letters")]
    AnswerTooShort(String),
    #[error("answer {answer:?} is longer than {max} letters")]
    AnswerTooLong { answer: String, max: usize },
    #[error("cannot place {} at ({}, {}) {}: {reason}", placement.answer_grid, placement.row, placement.col, placement.direction)]
    IllegalPlacement { placement: Placement, reason: String },
    #[error("cannot remove {requested} placements from a grid holding {placed}")]
    TooMany { requested: usize, placed: usize },
    #[error("pool has {0} usable answers, at least 2 are needed")]
    PoolTooSmall(usize),
    #[error("no layout with two crossing answers after {restarts} restarts ({candidates} candidates)")]
    NoSolution { restarts: u32, candidates: usize },
}
