//! Path (a): paragraph → keywords → clues → checked pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use super::{PipelineError, Stage};
use crate::domain::{fold_letters, ClueAnswerPair, Language, Source};
use crate::llm::{Gateway, TemplateId};

pub const DEFAULT_MIN_PARAGRAPH_LEN: usize = 200;
pub const DEFAULT_MAX_KEYWORD_TOKENS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub text: String,
    pub index: usize,
    pub source_id: String,
}

/// Splits on blank lines. A fragment shorter than `min_len` characters is
/// joined to the one after it; a short tail joins the paragraph before it.
pub fn split_paragraphs(document: &str, min_len: usize, source_id: &str) -> Result<Vec<Paragraph>, PipelineError> {
    let mut fragments = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in document.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                fragments.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line.trim_end());
        }
    }
    if !current.is_empty() {
        fragments.push(current.join("\n"));
    }

    let mut texts: Vec<String> = Vec::new();
    let mut pending = String::new();
    for fragment in fragments {
        if !pending.is_empty() {
            pending.push_str("\n\n");
        }
        pending.push_str(fragment.trim());
        if pending.chars().count() >= min_len {
            texts.push(std::mem::take(&mut pending));
        }
    }
    if !pending.is_empty() {
        match texts.last_mut() {
            Some(last) => {
                last.push_str("\n\n");
                last.push_str(&pending);
            }
            None => return Err(PipelineError::EmptyDocument),
        }
    }
    if texts.is_empty() {
        return Err(PipelineError::EmptyDocument);
    }
    Ok(texts
        .into_iter()
        .enumerate()
        .map(|(index, text)| Paragraph { text, index, source_id: source_id.to_string() })
        .collect())
}

const KEYWORD_PREFIXES: [&str; 2] = ["keywords:", "parole chiave:"];

/// Keywords from the last `Keywords:` / `Parole chiave:` line of a response.
pub fn parse_keywords(response: &str) -> Result<Vec<String>, PipelineError> {
    let line = response
        .lines()
        .rev()
        .find_map(|line| {
            let line = line.trim().trim_start_matches(['*', '-', '#', ' ']);
            let lower = line.to_lowercase();
            KEYWORD_PREFIXES.iter().find(|p| lower.starts_with(*p)).map(|p| &line[p.len()..])
        })
        .ok_or_else(|| PipelineError::ParseFailure {
            stage: Stage::Keywords,
            detail: "no keyword line".into(),
            response: response.to_string(),
        })?;
    let mut seen = HashSet::new();
    Ok(line
        .split(',')
        .map(|k| k.trim().trim_matches(['.', '*', '"']).trim())
        .filter(|k| !k.is_empty() && seen.insert(k.to_lowercase()))
        .map(str::to_string)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeywordExtraction {
    pub keywords: Vec<String>,
    pub digest: String,
}

pub fn extract_keywords(
    gateway: &Gateway,
    paragraph: &Paragraph,
    lang: Language,
) -> Result<KeywordExtraction, PipelineError> {
    let request = gateway.request(TemplateId::keywords(lang), [("text", paragraph.text.as_str())]);
    let exchange = gateway.complete(&request)?;
    Ok(KeywordExtraction { keywords: parse_keywords(&exchange.response_text)?, digest: exchange.digest })
}

/// Keeps keywords of at most `max_tokens` whitespace-separated words.
pub fn filter_keywords(keywords: &[String], max_tokens: usize) -> Vec<String> {
    keywords.iter().filter(|k| k.split_whitespace().count() <= max_tokens).cloned().collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    SelfContaining,
    Unnormalizable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedClue {
    pub keyword: String,
    pub clue: String,
    pub reason: DropReason,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClueGeneration {
    pub pairs: Vec<ClueAnswerPair>,
    /// Keywords the response gave no clue for.
    pub missing: Vec<String>,
    pub dropped: Vec<DroppedClue>,
    pub digest: String,
}

fn keyword_key(keyword: &str) -> String {
    fold_letters(keyword)
}

/// Reads `Keyword: clue` lines and matches them to `keywords`, ignoring case
/// and accents. Pairs come back in keyword order; the first line for a
/// keyword wins.
pub fn parse_clues(response: &str, keywords: &[String], lang: Language) -> Result<ClueGeneration, PipelineError> {
    let mut found: Vec<Option<String>> = vec![None; keywords.len()];
    let keys: Vec<String> = keywords.iter().map(|k| keyword_key(k)).collect();
    let mut parsed = 0;
    for line in response.lines() {
        let Some((head, clue)) = line.split_once(':') else { continue };
        let head = head.trim().trim_start_matches(['-', '*', ' ']);
        let key = keyword_key(head);
        let clue = clue.trim();
        if key.is_empty() || clue.is_empty() {
            continue;
        }
        if let Some(i) = keys.iter().position(|k| *k == key) {
            parsed += 1;
            found[i].get_or_insert_with(|| clue.to_string());
        }
    }
    if parsed == 0 {
        return Err(PipelineError::ParseFailure {
            stage: Stage::Clues,
            detail: "no line matched a keyword".into(),
            response: response.to_string(),
        });
    }

    let mut generation =
        ClueGeneration { pairs: Vec::new(), missing: Vec::new(), dropped: Vec::new(), digest: String::new() };
    for (keyword, clue) in keywords.iter().zip(found) {
        let Some(clue) = clue else {
            generation.missing.push(keyword.clone());
            continue;
        };
        let drop = |reason| DroppedClue { keyword: keyword.clone(), clue: clue.clone(), reason };
        match ClueAnswerPair::new(clue.as_str(), keyword.as_str(), Source::PathA, lang) {
            Ok(pair) if pair.is_self_containing() => generation.dropped.push(drop(DropReason::SelfContaining)),
            Ok(pair) => generation.pairs.push(pair),
            Err(_) => generation.dropped.push(drop(DropReason::Unnormalizable)),
        }
    }
    Ok(generation)
}

pub fn generate_clues(
    gateway: &Gateway,
    paragraph: &Paragraph,
    keywords: &[String],
    lang: Language,
) -> Result<ClueGeneration, PipelineError> {
    if keywords.is_empty() {
        return Err(PipelineError::InvalidInput("no keywords to write clues for".into()));
    }
    let request =
        gateway.request(TemplateId::clues(lang), [("keywords", keywords.join(", ")), ("text", paragraph.text.clone())]);
    let exchange = gateway.complete(&request)?;
    let mut generation = parse_clues(&exchange.response_text, keywords, lang)?;
    generation.digest = exchange.digest;
    Ok(generation)
}

/// One verdict per expected clue, read positionally from the `True`/`False`
/// words of the response.
pub fn parse_truth_verdicts(response: &str, expected: usize) -> Result<Vec<bool>, PipelineError> {
    let verdicts: Vec<bool> = response
        .split(|c: char| !c.is_alphanumeric())
        .filter_map(|token| match token.to_lowercase().as_str() {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        })
        .collect();
    if verdicts.len() != expected {
        return Err(PipelineError::ParseFailure {
            stage: Stage::TruthCheck,
            detail: format!("expected {expected} verdicts, found {}", verdicts.len()),
            response: response.to_string(),
        });
    }
    Ok(verdicts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthCheck {
    pub kept: Vec<ClueAnswerPair>,
    pub verdicts: Vec<bool>,
    pub digest: String,
}

pub fn truth_check(
    gateway: &Gateway,
    pairs: &[ClueAnswerPair],
    paragraph: &Paragraph,
    lang: Language,
) -> Result<TruthCheck, PipelineError> {
    if pairs.is_empty() {
        return Err(PipelineError::InvalidInput("no clues to check".into()));
    }
    let sentences: Vec<&str> = pairs.iter().map(|p| p.clue.as_str()).collect();
    let request =
        gateway.request(TemplateId::check(lang), [("clue", sentences.join("\n")), ("text", paragraph.text.clone())]);
    let exchange = gateway.complete(&request)?;
    let verdicts = parse_truth_verdicts(&exchange.response_text, pairs.len())?;
    let kept = pairs.iter().zip(&verdicts).filter(|(_, ok)| **ok).map(|(p, _)| p.clone()).collect();
    Ok(TruthCheck { kept, verdicts, digest: exchange.digest })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathAConfig {
    pub lang: Language,
    pub min_paragraph_len: usize,
    pub max_keyword_tokens: usize,
    pub source_id: String,
}

impl Default for PathAConfig {
    fn default() -> Self {
        PathAConfig {
            lang: Language::En,
            min_paragraph_len: DEFAULT_MIN_PARAGRAPH_LEN,
            max_keyword_tokens: DEFAULT_MAX_KEYWORD_TOKENS,
            source_id: "document".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub keywords_extracted: usize,
    pub keywords_kept: usize,
    pub clues_generated: usize,
    pub clues_kept: usize,
}

impl StageCounts {
    fn add(&mut self, other: &StageCounts) {
        self.keywords_extracted += other.keywords_extracted;
        self.keywords_kept += other.keywords_kept;
        self.clues_generated += other.clues_generated;
        self.clues_kept += other.clues_kept;
    }

    pub fn is_monotone(&self) -> bool {
        self.keywords_extracted >= self.keywords_kept
            && self.keywords_kept >= self.clues_generated
            && self.clues_generated >= self.clues_kept
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParagraphReport {
    pub index: usize,
    pub counts: StageCounts,
    pub missing_keywords: Vec<String>,
    pub dropped: Vec<DroppedClue>,
    /// Set when the checker's answer could not be read; no clue of the
    /// paragraph is kept then.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_check_failure: Option<String>,
    pub digests: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineRunReport {
    pub lang: Language,
    pub counts: StageCounts,
    pub paragraphs: Vec<ParagraphReport>,
    /// Every exchange digest, in paragraph then stage order.
    pub digests: Vec<String>,
}

fn run_paragraph(
    gateway: &Gateway,
    paragraph: &Paragraph,
    config: &PathAConfig,
) -> Result<(Vec<ClueAnswerPair>, ParagraphReport), PipelineError> {
    let at = |stage| move |e: PipelineError| e.at(stage, paragraph.index);
    let mut report = ParagraphReport {
        index: paragraph.index,
        counts: StageCounts::default(),
        missing_keywords: Vec::new(),
        dropped: Vec::new(),
        truth_check_failure: None,
        digests: Vec::new(),
    };

    let extraction = extract_keywords(gateway, paragraph, config.lang).map_err(at(Stage::Keywords))?;
    report.digests.push(extraction.digest);
    report.counts.keywords_extracted = extraction.keywords.len();
    let keywords = filter_keywords(&extraction.keywords, config.max_keyword_tokens);
    report.counts.keywords_kept = keywords.len();
    if keywords.is_empty() {
        return Ok((Vec::new(), report));
    }

    let generation = generate_clues(gateway, paragraph, &keywords, config.lang).map_err(at(Stage::Clues))?;
    report.digests.push(generation.digest);
    report.counts.clues_generated = generation.pairs.len();
    report.missing_keywords = generation.missing;
    report.dropped = generation.dropped;
    if generation.pairs.is_empty() {
        return Ok((Vec::new(), report));
    }

    match truth_check(gateway, &generation.pairs, paragraph, config.lang) {
        Ok(check) => {
            report.digests.push(check.digest);
            report.counts.clues_kept = check.kept.len();
            Ok((check.kept, report))
        }
        Err(PipelineError::ParseFailure { detail, .. }) => {
            log::warn!("paragraph {}: unreadable truth check, keeping no clues ({detail})", paragraph.index);
            report.truth_check_failure = Some(detail);
            Ok((Vec::new(), report))
        }
        Err(e) => Err(at(Stage::TruthCheck)(e)),
    }
}

/// Runs every stage on each paragraph of `document`. Paragraphs are handled
/// concurrently and merged in index order.
pub fn run_path_a(
    gateway: &Gateway,
    document: &str,
    config: &PathAConfig,
) -> Result<(Vec<ClueAnswerPair>, PipelineRunReport), PipelineError> {
    let paragraphs = split_paragraphs(document, config.min_paragraph_len, &config.source_id)?;
    let results: Vec<_> = paragraphs.par_iter().map(|p| run_paragraph(gateway, p, config)).collect();

    let mut pairs = Vec::new();
    let mut report = PipelineRunReport {
        lang: config.lang,
        counts: StageCounts::default(),
        paragraphs: Vec::new(),
        digests: Vec::new(),
    };
    for result in results {
        let (kept, paragraph_report) = result?;
        pairs.extend(kept);
        report.counts.add(&paragraph_report.counts);
        report.digests.extend(paragraph_report.digests.iter().cloned());
        report.paragraphs.push(paragraph_report);
    }
    Ok((pairs, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{FnProvider, ProviderCall, ProviderError};
    use std::sync::Arc;

    fn scripted(responses: &'static [(TemplateId, &'static str)]) -> Gateway {
        Gateway::new(Arc::new(FnProvider(move |call: &ProviderCall<'_>| {
            responses
                .iter()
                .find(|(id, _)| *id == call.template_id)
                .map(|(_, text)| text.to_string())
                .ok_or(ProviderError::Http { status: 404, message: format!("no script for {}", call.template_id) })
        })))
    }

    fn paragraph(text: &str) -> Paragraph {
        Paragraph { text: text.into(), index: 0, source_id: "t".into() }
    }

    #[test]
    fn split_examples() {
        let ps = split_paragraphs("A\n\nB", 1, "d").unwrap();
        assert_eq!(ps.iter().map(|p| (p.index, p.text.as_str())).collect::<Vec<_>>(), vec![(0, "A"), (1, "B")]);
        assert_eq!(split_paragraphs("", 1, "d"), Err(PipelineError::EmptyDocument));
        assert_eq!(split_paragraphs(" \n\n \n", 1, "d"), Err(PipelineError::EmptyDocument));
    }

    #[test]
    fn short_middle_paragraph_joins_the_next() {
        let long_a = "a".repeat(30);
        let long_c = "c".repeat(30);
        let doc = format!("{long_a}\n\nshort line\n\n{long_c}\n");
        let ps = split_paragraphs(&doc, 20, "d").unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].text, long_a);
        assert_eq!(ps[1].text, format!("short line\n\n{long_c}"));
        assert_eq!(ps[1].index, 1);
    }

    #[test]
    fn short_tail_joins_the_previous() {
        let long_a = "a".repeat(30);
        let ps = split_paragraphs(&format!("{long_a}\n\ntail"), 20, "d").unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].text, format!("{long_a}\n\ntail"));
        assert_eq!(split_paragraphs("too short", 20, "d"), Err(PipelineError::EmptyDocument));
    }

    #[test]
    fn keyword_lines() {
        assert_eq!(
            parse_keywords("Parole chiave: conoscenze, ricerca, Galileo").unwrap(),
            vec!["conoscenze", "ricerca", "Galileo"]
        );
        assert_eq!(parse_keywords("Keywords: ricerca, ricerca, Ricerca").unwrap(), vec!["ricerca"]);
        let last = "Keywords: draft, list\nchecking...\nKeywords: final";
        assert_eq!(parse_keywords(last).unwrap(), vec!["final"]);
        let err = parse_keywords("nothing useful").unwrap_err();
        assert!(
            matches!(err, PipelineError::ParseFailure { stage: Stage::Keywords, ref response, .. } if response == "nothing useful")
        );
    }

    #[test]
    fn keyword_length_filter() {
        let kws: Vec<String> = ["metodo sperimentale", "sistema di conoscenze ottenute", "Galileo", "a b c"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(filter_keywords(&kws, 3), vec!["metodo sperimentale", "Galileo", "a b c"]);
    }

    #[test]
    fn clue_lines() {
        let keywords: Vec<String> =
            ["Galileo", "ricerca", "assiomi", "Curiosità"].iter().map(|s| s.to_string()).collect();
        let response = "Clues:\n\
            Galileo : egli introdusse il metodo sperimentale nel processo di scienza moderna.\n\
            Ricerca: la ricerca è un'attività.\n\
            CURIOSITA: il desiderio di sapere\n";
        let g = parse_clues(response, &keywords, Language::It).unwrap();
        assert_eq!(g.pairs.len(), 2);
        assert_eq!(g.pairs[0].answer_grid, "GALILEO");
        assert_eq!(g.pairs[0].clue, "egli introdusse il metodo sperimentale nel processo di scienza moderna.");
        assert_eq!(g.pairs[0].source, Source::PathA);
        assert_eq!(g.pairs[1].answer_display, "Curiosità");
        assert_eq!(g.missing, vec!["assiomi"]);
        assert_eq!(g.dropped[0].reason, DropReason::SelfContaining);
        assert!(matches!(
            parse_clues("no clues here", &keywords, Language::It),
            Err(PipelineError::ParseFailure { .. })
        ));
    }

    #[test]
    fn truth_tokens() {
        assert_eq!(parse_truth_verdicts("True\nFalse", 2).unwrap(), vec![true, false]);
        assert_eq!(parse_truth_verdicts("1. True\n2. false.", 2).unwrap(), vec![true, false]);
        assert!(matches!(
            parse_truth_verdicts("True", 2),
            Err(PipelineError::ParseFailure { stage: Stage::TruthCheck, .. })
        ));
        assert!(matches!(parse_truth_verdicts("Trueish", 1), Err(PipelineError::ParseFailure { .. })));
    }

    static SCRIPT: &[(TemplateId, &str)] = &[
        (TemplateId::KwEn, "Keywords: alfa, beta gamma delta epsilon, gamma"),
        (TemplateId::ClueEn, "Alfa: prima lettera greca\nGamma: terza lettera"),
        (TemplateId::CheckEn, "True\nFalse"),
    ];

    #[test]
    fn path_a_composes_stages() {
        let gateway = scripted(SCRIPT);
        let doc = "x".repeat(250);
        let (pairs, report) = run_path_a(&gateway, &doc, &PathAConfig::default()).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].answer_grid, "ALFA");
        assert_eq!(
            report.counts,
            StageCounts { keywords_extracted: 3, keywords_kept: 2, clues_generated: 2, clues_kept: 1 }
        );
        assert!(report.counts.is_monotone());
        assert_eq!(report.digests.len(), 3);
    }

    static BAD_CHECK: &[(TemplateId, &str)] = &[
        (TemplateId::KwEn, "Keywords: alfa, gamma"),
        (TemplateId::ClueEn, "Alfa: prima lettera greca\nGamma: terza lettera"),
        (TemplateId::CheckEn, "True"),
    ];

    #[test]
    fn unreadable_check_keeps_nothing() {
        let (pairs, report) = run_path_a(&scripted(BAD_CHECK), &"x".repeat(250), &PathAConfig::default()).unwrap();
        assert!(pairs.is_empty());
        assert_eq!(report.counts.clues_kept, 0);
        assert!(report.paragraphs[0].truth_check_failure.is_some());
    }

    static NO_KEYWORDS: &[(TemplateId, &str)] = &[(TemplateId::KwEn, "I cannot help with that.")];

    #[test]
    fn stage_errors_carry_paragraph_index() {
        let doc = format!("{}\n\n{}", "x".repeat(250), "y".repeat(250));
        let err = run_path_a(&scripted(NO_KEYWORDS), &doc, &PathAConfig::default()).unwrap_err();
        assert!(matches!(err, PipelineError::AtStage { stage: Stage::Keywords, paragraph: 0, .. }), "{err:?}");
        assert!(matches!(err.root(), PipelineError::ParseFailure { .. }));
    }

    #[test]
    fn gateway_is_not_called_for_empty_input() {
        let gateway = scripted(&[]);
        let p = paragraph("text");
        assert!(matches!(generate_clues(&gateway, &p, &[], Language::En), Err(PipelineError::InvalidInput(_))));
        assert!(matches!(truth_check(&gateway, &[], &p, Language::En), Err(PipelineError::InvalidInput(_))));
    }
}
