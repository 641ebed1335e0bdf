//! Path (b): clues written for a bare keyword, and acceptability judges.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::str::FromStr;
use std::sync::Arc;

use super::{PipelineError, Stage};
use crate::domain::{
    compute_metrics, normalize_answer, ClueAnswerPair, EvalMetrics, Label, Language, QualityVerdict, Source,
};
use crate::llm::{Gateway, LlmRequest, TemplateId};

pub const DEFAULT_EXEMPLARS: usize = 8;

/// Acceptance figures reported for the original fine-tuned models. Kept for
/// comparison in reports; nothing here is asserted.
pub mod reported {
    /// Share of acceptable clues from the DaVinci-based generator.
    pub const DAVINCI_ACCEPTABLE: f64 = 0.601;
    /// Share of acceptable clues from the Curie-based generator.
    pub const CURIE_ACCEPTABLE: f64 = 0.349;
    /// Best and worst accuracy of the acceptability classifiers.
    pub const CLASSIFIER_ACCURACY_MAX: f64 = 0.7988;
    pub const CLASSIFIER_ACCURACY_MIN: f64 = 0.6562;
}

/// `k` exemplar pairs drawn without replacement from `corpus` by `seed`.
pub fn sample_exemplars(corpus: &[ClueAnswerPair], k: usize, seed: u64) -> Vec<ClueAnswerPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    corpus.choose_multiple(&mut rng, k).cloned().collect()
}

fn format_exemplars(exemplars: &[ClueAnswerPair]) -> String {
    exemplars.iter().map(|p| format!("{}: {}", p.answer_display, p.clue)).collect::<Vec<_>>().join("\n")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeywordClues {
    pub keyword: String,
    pub pairs: Vec<ClueAnswerPair>,
    /// Distinct clues thrown out because they spell the keyword.
    pub self_containing: Vec<String>,
    pub digest: String,
}

fn clean_clue_line<'a>(line: &'a str, keyword: &str) -> &'a str {
    let mut line = line.trim().trim_start_matches(['-', '*', '•', ' ']);
    let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 && line[digits..].starts_with(['.', ')']) {
        line = line[digits + 1..].trim_start();
    }
    if let Some((head, rest)) = line.split_once(':') {
        let head = head.trim();
        if head.eq_ignore_ascii_case("clue") || head.eq_ignore_ascii_case(keyword) {
            line = rest.trim();
        }
    }
    line.trim_matches(['"', '“', '”', ' '])
}

/// Distinct clue lines of a generator response, at most `n`, in order.
pub fn parse_keyword_clues(
    response: &str,
    keyword: &str,
    n: usize,
    lang: Language,
) -> Result<(Vec<ClueAnswerPair>, Vec<String>), PipelineError> {
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    let mut self_containing = Vec::new();
    for line in response.lines() {
        if pairs.len() == n {
            break;
        }
        let clue = clean_clue_line(line, keyword);
        if clue.is_empty() || !seen.insert(clue.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()) {
            continue;
        }
        let pair = ClueAnswerPair::new(clue, keyword, Source::PathB, lang)
            .map_err(|e| PipelineError::InvalidInput(format!("keyword {keyword:?}: {e}")))?;
        if pair.is_self_containing() {
            self_containing.push(pair.clue);
        } else {
            pairs.push(pair);
        }
    }
    Ok((pairs, self_containing))
}

/// Asks the generator for `n` clues for `keyword`, primed with `exemplars`.
pub fn generate_clues_for_keyword(
    gateway: &Gateway,
    keyword: &str,
    n: usize,
    exemplars: &[ClueAnswerPair],
    lang: Language,
) -> Result<KeywordClues, PipelineError> {
    let keyword = keyword.trim();
    normalize_answer(keyword).map_err(|e| PipelineError::InvalidInput(format!("keyword {keyword:?}: {e}")))?;
    if n == 0 {
        return Err(PipelineError::InvalidInput("n must be at least 1".into()));
    }
    let request = gateway.request(
        TemplateId::PathbGen,
        [("examples", format_exemplars(exemplars)), ("keyword", keyword.to_string()), ("n", n.to_string())],
    );
    let exchange = gateway.complete(&request)?;
    let (pairs, self_containing) = parse_keyword_clues(&exchange.response_text, keyword, n, lang)?;
    Ok(KeywordClues { keyword: keyword.to_string(), pairs, self_containing, digest: exchange.digest })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeKind {
    ZeroShotGuideline,
    ExternalModel,
}

impl FromStr for JudgeKind {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero_shot_guideline" => Ok(JudgeKind::ZeroShotGuideline),
            "external_model" => Ok(JudgeKind::ExternalModel),
            other => Err(PipelineError::InvalidInput(format!("unknown judge kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JudgeBackend {
    pub judge_id: String,
    pub kind: JudgeKind,
    /// Model for `external_model` judges; the gateway's judge model otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
}

impl JudgeBackend {
    pub fn guideline() -> Self {
        JudgeBackend { judge_id: "zero_shot_guideline".into(), kind: JudgeKind::ZeroShotGuideline, model_id: None }
    }

    pub fn external(model_id: impl Into<String>) -> Self {
        let model_id = model_id.into();
        JudgeBackend {
            judge_id: format!("external_model:{model_id}"),
            kind: JudgeKind::ExternalModel,
            model_id: Some(model_id),
        }
    }
}

pub trait Judge: Send + Sync {
    fn judge_id(&self) -> &str;

    /// Verdict for a well-formed, non-degenerate pair.
    fn assess(&self, pair: &ClueAnswerPair) -> Result<QualityVerdict, PipelineError>;
}

/// Judge that prompts a model with the clue-writing guidelines.
pub struct GatewayJudge {
    backend: JudgeBackend,
    gateway: Arc<Gateway>,
}

impl GatewayJudge {
    pub fn new(backend: JudgeBackend, gateway: Arc<Gateway>) -> Self {
        GatewayJudge { backend, gateway }
    }

    pub fn backend(&self) -> &JudgeBackend {
        &self.backend
    }
}

const ACCEPT_TOKENS: [&str; 3] = ["accept", "acceptable", "yes"];
const REJECT_TOKENS: [&str; 3] = ["reject", "unacceptable", "no"];

/// Reads the first accept/reject word of a judge response; the remaining
/// lines become the rationale.
pub fn parse_judgement(response: &str, judge_id: &str) -> Result<QualityVerdict, PipelineError> {
    let accepted = response
        .split(|c: char| !c.is_alphanumeric())
        .find_map(|token| {
            let token = token.to_lowercase();
            if ACCEPT_TOKENS.contains(&token.as_str()) {
                Some(true)
            } else if REJECT_TOKENS.contains(&token.as_str()) {
                Some(false)
            } else {
                None
            }
        })
        .ok_or_else(|| PipelineError::ParseFailure {
            stage: Stage::Judge,
            detail: "no ACCEPT or REJECT token".into(),
            response: response.to_string(),
        })?;
    let rationale = response.trim().split_once('\n').map(|(_, rest)| rest.trim().to_string()).filter(|r| !r.is_empty());
    Ok(QualityVerdict { accepted, rationale, judge_id: judge_id.to_string() })
}

impl Judge for GatewayJudge {
    fn judge_id(&self) -> &str {
        &self.backend.judge_id
    }

    fn assess(&self, pair: &ClueAnswerPair) -> Result<QualityVerdict, PipelineError> {
        let mut params = self.gateway.models().params_for(TemplateId::PathbJudge);
        if let (JudgeKind::ExternalModel, Some(model)) = (self.backend.kind, &self.backend.model_id) {
            params.model_id = model.clone();
        }
        let request = LlmRequest::new(
            TemplateId::PathbJudge,
            [("keyword", pair.answer_display.as_str()), ("clue", pair.clue.as_str())],
            params,
        );
        let exchange = self.gateway.complete(&request)?;
        parse_judgement(&exchange.response_text, self.judge_id())
    }
}

/// Judges a pair. Empty and self-containing clues are rejected without
/// consulting the backend.
pub fn judge_pair(judge: &dyn Judge, pair: &ClueAnswerPair) -> Result<QualityVerdict, PipelineError> {
    let short_circuit = if pair.clue.trim().is_empty() {
        Some("empty clue")
    } else if pair.is_self_containing() {
        Some("clue contains the answer")
    } else {
        None
    };
    match short_circuit {
        Some(reason) => Ok(QualityVerdict {
            accepted: false,
            rationale: Some(reason.into()),
            judge_id: judge.judge_id().to_string(),
        }),
        None => judge.assess(pair),
    }
}

/// Runs `judge` over labeled pairs and scores it against the labels.
pub fn evaluate_judge(judge: &dyn Judge, pairs: &[ClueAnswerPair]) -> Result<EvalMetrics, PipelineError> {
    let labels: Vec<bool> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| match p.label {
            Some(Label::Acceptable) => Ok(true),
            Some(Label::Unacceptable) => Ok(false),
            _ => Err(PipelineError::InvalidInput(format!("pair {i} ({}) has no label", p.answer_display))),
        })
        .collect::<Result<_, _>>()?;
    let predictions: Vec<bool> =
        pairs.par_iter().map(|p| judge_pair(judge, p).map(|v| v.accepted)).collect::<Result<_, _>>()?;
    compute_metrics(&predictions, &labels).map_err(|e| PipelineError::InvalidInput(e.to_string()))
}
