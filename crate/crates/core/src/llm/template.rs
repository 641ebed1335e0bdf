use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::GatewayError;
use crate::domain::Language;

/// Every prompt the toolkit can send.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    KwIt,
    KwEn,
    ClueIt,
    ClueEn,
    CheckIt,
    CheckEn,
    PathbGen,
    PathbJudge,
}

impl TemplateId {
    pub const ALL: [TemplateId; 8] = [
        TemplateId::KwIt,
        TemplateId::KwEn,
        TemplateId::ClueIt,
        TemplateId::ClueEn,
        TemplateId::CheckIt,
        TemplateId::CheckEn,
        TemplateId::PathbGen,
        TemplateId::PathbJudge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::KwIt => "kw_it",
            TemplateId::KwEn => "kw_en",
            TemplateId::ClueIt => "clue_it",
            TemplateId::ClueEn => "clue_en",
            TemplateId::CheckIt => "check_it",
            TemplateId::CheckEn => "check_en",
            TemplateId::PathbGen => "pathb_gen",
            TemplateId::PathbJudge => "pathb_judge",
        }
    }

    pub fn keywords(lang: Language) -> Self {
        match lang {
            Language::It => TemplateId::KwIt,
            Language::En => TemplateId::KwEn,
        }
    }

    pub fn clues(lang: Language) -> Self {
        match lang {
            Language::It => TemplateId::ClueIt,
            Language::En => TemplateId::ClueEn,
        }
    }

    pub fn check(lang: Language) -> Self {
        match lang {
            Language::It => TemplateId::CheckIt,
            Language::En => TemplateId::CheckEn,
        }
    }

    /// Templates whose output should vary between calls.
    pub fn is_generative(self) -> bool {
        matches!(self, TemplateId::ClueIt | TemplateId::ClueEn | TemplateId::PathbGen)
    }

    pub fn template(self) -> PromptTemplate {
        let (body, language) = match self {
            TemplateId::KwIt => (include_str!("prompts/kw_it.txt"), Language::It),
            TemplateId::KwEn => (include_str!("prompts/kw_en.txt"), Language::En),
            TemplateId::ClueIt => (include_str!("prompts/clue_it.txt"), Language::It),
            TemplateId::ClueEn => (include_str!("prompts/clue_en.txt"), Language::En),
            TemplateId::CheckIt => (include_str!("prompts/check_it.txt"), Language::It),
            TemplateId::CheckEn => (include_str!("prompts/check_en.txt"), Language::En),
            TemplateId::PathbGen => (include_str!("prompts/pathb_gen.txt"), Language::En),
            TemplateId::PathbJudge => (include_str!("prompts/pathb_judge.txt"), Language::En),
        };
        PromptTemplate { id: self, body, language }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| GatewayError::UnknownTemplate(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub body: &'static str,
    pub language: Language,
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

/// Splits a body into literal text and `{name}` slots. Only lowercase ASCII
/// names and underscores count as slots; any other brace is literal.
fn pieces(body: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let bytes = body.as_bytes();
    let (mut start, mut i) = (0, 0);
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let name_len = bytes[i + 1..].iter().take_while(|b| b.is_ascii_lowercase() || **b == b'_').count();
            let close = i + 1 + name_len;
            if name_len > 0 && bytes.get(close) == Some(&b'}') {
                out.push(Piece::Text(&body[start..i]));
                out.push(Piece::Slot(&body[i + 1..close]));
                i = close + 1;
                start = i;
                continue;
            }
        }
        i += 1;
    }
    out.push(Piece::Text(&body[start..]));
    out
}

impl PromptTemplate {
    /// Slot names in order of first appearance.
    pub fn slots(&self) -> Vec<&'static str> {
        let mut names: Vec<&'static str> = Vec::new();
        for piece in pieces(self.body) {
            if let Piece::Slot(name) = piece {
                if !names.contains(&name) {
                    names.push(name);
                }
            }
        }
        names
    }

    pub fn render(&self, bound: &BTreeMap<String, String>) -> Result<String, GatewayError> {
        let mut out = String::with_capacity(self.body.len() + bound.values().map(String::len).sum::<usize>());
        for piece in pieces(self.body) {
            match piece {
                Piece::Text(text) => out.push_str(text),
                Piece::Slot(name) => match bound.get(name) {
                    Some(value) => out.push_str(value),
                    None => {
                        return Err(GatewayError::UnboundSlot {
                            template_id: self.id.as_str().to_string(),
                            slot: name.to_string(),
                        })
                    }
                },
            }
        }
        Ok(out)
    }
}

/// Renders a template by its textual id.
pub fn render(template_id: &str, bound: &BTreeMap<String, String>) -> Result<String, GatewayError> {
    template_id.parse::<TemplateId>()?.template().render(bound)
}
