//! LLM-driven pair generation: from running text (path a) and from bare
//! keywords (path b).

pub mod keyword;
pub mod text;

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::llm::GatewayError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Split,
    Keywords,
    Filter,
    Clues,
    TruthCheck,
    Generate,
    Judge,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Split => "split",
            Stage::Keywords => "keywords",
            Stage::Filter => "filter",
            Stage::Clues => "clues",
            Stage::TruthCheck => "truth_check",
            Stage::Generate => "generate",
            Stage::Judge => "judge",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("document has no text")]
    EmptyDocument,
    #[error("could not parse {stage} response: {detail}")]
    ParseFailure { stage: Stage, detail: String, response: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{stage} failed on paragraph {paragraph}: {source}")]
    AtStage {
        stage: Stage,
        paragraph: usize,
        #[source]
        source: Box<PipelineError>,
    },
}

impl PipelineError {
    pub fn at(self, stage: Stage, paragraph: usize) -> Self {
        PipelineError::AtStage { stage, paragraph, source: Box::new(self) }
    }

    /// The error beneath any stage tags.
    pub fn root(&self) -> &PipelineError {
        match self {
            PipelineError::AtStage { source, .. } => source.root(),
            other => other,
        }
    }
}
