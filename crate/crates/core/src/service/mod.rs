//! Curation sessions, puzzle numbering and export, persistence and the
//! HTTP API on top of the pipelines and the layout engine.

pub mod api;
mod puzzle;
mod session;
mod store;

pub use puzzle::{assign_numbering, export_puzzle, ExportFormat, NumberedPuzzle, PuzzleCell, PuzzleEntry};
pub use session::{CurationSession, PairStatus, PairUpdate, SessionPair};
pub use store::{FileStore, StoredPuzzle, DATA_DIR_VAR};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::domain::{ClueAnswerPair, Language};
use crate::llm::{Gateway, GatewayError};
use crate::pipeline::keyword::{generate_clues_for_keyword, sample_exemplars, KeywordClues, DEFAULT_EXEMPLARS};
use crate::pipeline::text::{run_path_a, PathAConfig, DEFAULT_MIN_PARAGRAPH_LEN};
use crate::pipeline::PipelineError;
use crate::schema::{self, EngineError, GenerationConfig, GenerationTrace, ScoreBreakdown};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown pair {0}")]
    UnknownPair(String),
    #[error("unknown puzzle {0}")]
    UnknownPuzzle(String),
    #[error("cannot move a pair from {from:?} to {to:?}")]
    InvalidStatusTransition { from: PairStatus, to: PairStatus },
    #[error("{0}")]
    InvalidRequest(String),
    #[error("no clue for placed answer {0}")]
    MissingClue(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("storage: {0}")]
    Storage(String),
}

impl ServiceError {
    /// HTTP status and stable error code.
    pub fn status_and_code(&self) -> (u16, &'static str) {
        match self {
            ServiceError::UnknownSession(_) => (404, "UnknownSession"),
            ServiceError::UnknownPair(_) => (404, "UnknownPair"),
            ServiceError::UnknownPuzzle(_) => (404, "UnknownPuzzle"),
            ServiceError::InvalidStatusTransition { .. } => (409, "InvalidStatusTransition"),
            ServiceError::InvalidRequest(_) => (422, "InvalidRequest"),
            ServiceError::MissingClue(_) => (422, "MissingClue"),
            ServiceError::Engine(e) => match e {
                EngineError::NoSolution { .. } => (422, "NoSolution"),
                EngineError::PoolTooSmall(_) => (422, "PoolTooSmall"),
                EngineError::InvalidConfig(_) => (422, "InvalidConfig"),
                _ => (422, "InvalidAnswer"),
            },
            ServiceError::Pipeline(e) => match e.root() {
                PipelineError::EmptyDocument => (422, "EmptyDocument"),
                PipelineError::InvalidInput(_) => (422, "InvalidRequest"),
                PipelineError::ParseFailure { .. } => (502, "ParseFailure"),
                PipelineError::Gateway(GatewayError::AuthMissing) => (502, "AuthMissing"),
                PipelineError::Gateway(GatewayError::RateLimited { .. }) => (503, "RateLimited"),
                PipelineError::Gateway(GatewayError::ProviderUnavailable { .. }) => (503, "ProviderUnavailable"),
                PipelineError::Gateway(_) => (500, "TemplateError"),
                PipelineError::AtStage { .. } => unreachable!("root strips stage tags"),
            },
            ServiceError::Storage(_) => (500, "StorageError"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextRequest {
    pub document: String,
    #[serde(default)]
    pub lang: Option<Language>,
    #[serde(default)]
    pub min_paragraph_len: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeywordsRequest {
    pub keywords: Vec<String>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub lang: Option<Language>,
    /// Seed for drawing generator exemplars.
    #[serde(default)]
    pub seed: u64,
}

fn default_n() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateResult {
    pub puzzle_id: String,
    pub score: ScoreBreakdown,
    pub trace: GenerationTrace,
}

/// Everything the HTTP layer needs; usable directly from Rust as well.
pub struct Service {
    store: FileStore,
    gateway: Arc<Gateway>,
    exemplar_pool: Vec<ClueAnswerPair>,
    default_lang: Language,
}

impl Service {
    pub fn new(store: FileStore, gateway: Arc<Gateway>) -> Self {
        Service { store, gateway, exemplar_pool: Vec::new(), default_lang: Language::En }
    }

    /// Corpus pairs the keyword generator draws its examples from.
    pub fn with_exemplar_pool(mut self, pool: Vec<ClueAnswerPair>) -> Self {
        self.exemplar_pool = pool;
        self
    }

    pub fn with_default_lang(mut self, lang: Language) -> Self {
        self.default_lang = lang;
        self
    }

    pub fn store(&self) -> &FileStore {
        &self.store
    }

    pub fn text_session(&self, request: &TextRequest) -> Result<CurationSession, ServiceError> {
        let config = PathAConfig {
            lang: request.lang.unwrap_or(self.default_lang),
            min_paragraph_len: request.min_paragraph_len.unwrap_or(DEFAULT_MIN_PARAGRAPH_LEN),
            ..PathAConfig::default()
        };
        let (pairs, report) = run_path_a(&self.gateway, &request.document, &config)?;
        let report = serde_json::to_value(&report).map_err(|e| ServiceError::Storage(e.to_string()))?;
        let session = CurationSession::new(pairs, Some(report));
        self.store.create_session(&session)?;
        Ok(session)
    }

    pub fn keyword_session(&self, request: &KeywordsRequest) -> Result<CurationSession, ServiceError> {
        if request.keywords.is_empty() {
            return Err(ServiceError::InvalidRequest("no keywords given".into()));
        }
        let lang = request.lang.unwrap_or(Language::It);
        let exemplars = sample_exemplars(&self.exemplar_pool, DEFAULT_EXEMPLARS, request.seed);
        let results: Vec<Result<KeywordClues, PipelineError>> = request
            .keywords
            .par_iter()
            .map(|k| generate_clues_for_keyword(&self.gateway, k, request.n, &exemplars, lang))
            .collect();
        let generated: Vec<KeywordClues> = results.into_iter().collect::<Result<_, _>>()?;
        let report = serde_json::json!({
            "keywords": generated.iter().map(|g| serde_json::json!({
                "keyword": g.keyword,
                "clues": g.pairs.len(),
                "self_containing": g.self_containing,
                "digest": g.digest,
            })).collect::<Vec<_>>(),
        });
        let pairs = generated.into_iter().flat_map(|g| g.pairs).collect();
        let session = CurationSession::new(pairs, Some(report));
        self.store.create_session(&session)?;
        Ok(session)
    }

    pub fn session(&self, id: &str) -> Result<CurationSession, ServiceError> {
        self.store.session(id)
    }

    pub fn update_pair(
        &self,
        session_id: &str,
        pair_id: &str,
        update: &PairUpdate,
    ) -> Result<SessionPair, ServiceError> {
        self.store.update_session(session_id, |s| s.update_pair(pair_id, update).cloned())
    }

    /// Lays out the session's accepted and edited pairs, honouring their
    /// preferred flags, and stores the numbered result.
    pub fn generate(&self, session_id: &str, config: &GenerationConfig) -> Result<GenerateResult, ServiceError> {
        let session = self.store.session(session_id)?;
        let usable = session.usable_pairs();
        let pool: Vec<ClueAnswerPair> = usable.iter().map(|p| p.pair.clone()).collect();
        let preferred: Vec<&str> = usable.iter().filter(|p| p.preferred).map(|p| p.pair.answer_grid.as_str()).collect();
        let outcome = schema::generate(&pool, &preferred, config)?;
        let puzzle = assign_numbering(&outcome.grid, &pool, config.fr_denominator)?;
        let stored = StoredPuzzle {
            puzzle_id: uuid::Uuid::new_v4().to_string(),
            session_id: session_id.to_string(),
            config: config.clone(),
            puzzle,
            trace: outcome.trace,
        };
        self.store.save_puzzle(&stored)?;
        self.store.update_session(session_id, |s| {
            s.puzzles.push(stored.puzzle_id.clone());
            Ok(())
        })?;
        Ok(GenerateResult { puzzle_id: stored.puzzle_id, score: outcome.score, trace: stored.trace })
    }

    pub fn puzzle(&self, id: &str) -> Result<StoredPuzzle, ServiceError> {
        self.store.puzzle(id)
    }
}
