//! Vocabulary shared by every stage of the toolkit: clue-answer pairs,
//! answer normalization and classifier metrics.

mod metrics;
mod normalize;

pub use metrics::{compute_metrics, EvalMetrics, MetricsError};
pub use normalize::{fold_letters, normalize_answer, NormalizeError};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Where a clue-answer pair came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Corpus,
    PathA,
    PathB,
    Manual,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Corpus => "corpus",
            Source::PathA => "path_a",
            Source::PathB => "path_b",
            Source::Manual => "manual",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "corpus" => Ok(Source::Corpus),
            "path_a" => Ok(Source::PathA),
            "path_b" => Ok(Source::PathB),
            "manual" => Ok(Source::Manual),
            other => Err(format!("unknown source {other:?}")),
        }
    }
}

/// Prompt and corpus language.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    It,
    #[default]
    En,
}

impl Language {
    pub fn as_str(self) -> &'static str {
        match self {
            Language::It => "it",
            Language::En => "en",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "it" => Ok(Language::It),
            "en" => Ok(Language::En),
            other => Err(format!("unknown language {other:?}")),
        }
    }
}

/// Human or model quality label attached to a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Acceptable,
    Unacceptable,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Acceptable => "acceptable",
            Label::Unacceptable => "unacceptable",
            Label::Unlabeled => "unlabeled",
        }
    }

    /// `Some(true)` for acceptable, `Some(false)` for unacceptable.
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Label::Acceptable => Some(true),
            Label::Unacceptable => Some(false),
            Label::Unlabeled => None,
        }
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "acceptable" | "yes" | "true" | "1" => Ok(Label::Acceptable),
            "unacceptable" | "no" | "false" | "0" => Ok(Label::Unacceptable),
            "unlabeled" | "" => Ok(Label::Unlabeled),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// A crossword definition together with the word it defines.
///
/// `answer_grid` is always `normalize_answer(answer_display)`; the only way
/// to build a pair is through [`ClueAnswerPair::new`], which enforces that.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClueAnswerPair {
    pub clue: String,
    pub answer_display: String,
    pub answer_grid: String,
    pub source: Source,
    pub language: Language,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl ClueAnswerPair {
    pub fn new(
        clue: impl Into<String>,
        answer_display: impl Into<String>,
        source: Source,
        language: Language,
    ) -> Result<Self, NormalizeError> {
        let answer_display = answer_display.into();
        let answer_grid = normalize_answer(&answer_display)?;
        Ok(ClueAnswerPair {
            clue: clue.into().trim().to_string(),
            answer_display: answer_display.trim().to_string(),
            answer_grid,
            source,
            language,
            label: None,
        })
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    /// True when the clue spells out its own answer.
    pub fn is_self_containing(&self) -> bool {
        clue_contains_answer(&self.clue, &self.answer_grid)
    }
}

/// Checks whether `clue`, folded with the same alphabet as grid answers,
/// contains `answer_grid`. Non-letters in the clue are dropped before the
/// comparison so multi-word answers are caught too.
pub fn clue_contains_answer(clue: &str, answer_grid: &str) -> bool {
    if answer_grid.is_empty() {
        return false;
    }
    fold_letters(clue).contains(answer_grid)
}

/// Outcome of asking a judge whether a pair is acceptable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityVerdict {
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub judge_id: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_normalizes_answer() {
        let pair = ClueAnswerPair::new("An exotic legume", "soy", Source::Corpus, Language::En).unwrap();
        assert_eq!(pair.answer_grid, "SOY");
        assert_eq!(pair.answer_display, "soy");
        assert!(!pair.is_self_containing());
    }

    #[test]
    fn self_containment_ignores_case_and_accents() {
        let pair = ClueAnswerPair::new("la ricerca è un'attività", "Ricerca", Source::PathA, Language::It).unwrap();
        assert!(pair.is_self_containing());
        let pair = ClueAnswerPair::new(
            "Ciò che si fa col metodo sperimentale",
            "metodo sperimentale",
            Source::PathA,
            Language::It,
        )
        .unwrap();
        assert!(pair.is_self_containing());
        let pair = ClueAnswerPair::new("Il desiderio di sapere", "Curiosità", Source::PathB, Language::It).unwrap();
        assert!(!pair.is_self_containing());
    }

    #[test]
    fn enums_parse_from_text() {
        assert_eq!("path_a".parse::<Source>().unwrap(), Source::PathA);
        assert_eq!("IT".parse::<Language>().unwrap(), Language::It);
        assert_eq!("yes".parse::<Label>().unwrap(), Label::Acceptable);
        assert!("maybe".parse::<Label>().is_err());
    }
}
