use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::domain::{clue_contains_answer, ClueAnswerPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStatus {
    Pending,
    Accepted,
    Rejected,
    Edited,
}

impl PairStatus {
    pub fn can_become(self, next: PairStatus) -> bool {
        use PairStatus::*;
        matches!((self, next), (Pending, Accepted | Rejected | Edited) | (Edited, Accepted | Rejected))
    }

    /// Whether pairs in this state are offered to the layout engine.
    pub fn is_usable(self) -> bool {
        matches!(self, PairStatus::Accepted | PairStatus::Edited)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionPair {
    pub pair_id: String,
    pub pair: ClueAnswerPair,
    pub status: PairStatus,
    /// The clue as generated, kept once the pair has been edited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_clue: Option<String>,
    #[serde(default)]
    pub preferred: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairUpdate {
    #[serde(default)]
    pub status: Option<PairStatus>,
    #[serde(default)]
    pub edited_clue: Option<String>,
    #[serde(default)]
    pub preferred: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurationSession {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub pairs: Vec<SessionPair>,
    #[serde(default)]
    pub puzzles: Vec<String>,
    /// Pipeline report of the run that produced the pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<serde_json::Value>,
}

impl CurationSession {
    pub fn new(pairs: Vec<ClueAnswerPair>, report: Option<serde_json::Value>) -> Self {
        CurationSession {
            session_id: uuid::Uuid::new_v4().to_string(),
            created_at: Utc::now(),
            pairs: pairs
                .into_iter()
                .enumerate()
                .map(|(i, pair)| SessionPair {
                    pair_id: format!("p{}", i + 1),
                    pair,
                    status: PairStatus::Pending,
                    original_clue: None,
                    preferred: false,
                })
                .collect(),
            puzzles: Vec::new(),
            report,
        }
    }

    pub fn pair(&self, pair_id: &str) -> Result<&SessionPair, ServiceError> {
        self.pairs.iter().find(|p| p.pair_id == pair_id).ok_or_else(|| ServiceError::UnknownPair(pair_id.to_string()))
    }

    /// Applies `update` to one pair. The whole update is validated before
    /// anything changes.
    pub fn update_pair(&mut self, pair_id: &str, update: &PairUpdate) -> Result<&SessionPair, ServiceError> {
        let idx = self
            .pairs
            .iter()
            .position(|p| p.pair_id == pair_id)
            .ok_or_else(|| ServiceError::UnknownPair(pair_id.to_string()))?;
        let current = &self.pairs[idx];

        let edited = match (update.status, &update.edited_clue) {
            (Some(PairStatus::Edited), Some(clue)) => {
                let clue = clue.trim();
                if clue.is_empty() {
                    return Err(ServiceError::InvalidRequest("edited clue is empty".into()));
                }
                if clue_contains_answer(clue, &current.pair.answer_grid) {
                    return Err(ServiceError::InvalidRequest("edited clue contains the answer".into()));
                }
                Some(clue.to_string())
            }
            (Some(PairStatus::Edited), None) => {
                return Err(ServiceError::InvalidRequest("status edited needs edited_clue".into()));
            }
            (_, Some(_)) => {
                return Err(ServiceError::InvalidRequest("edited_clue is only allowed with status edited".into()));
            }
            _ => None,
        };
        if let Some(next) = update.status {
            if !current.status.can_become(next) {
                return Err(ServiceError::InvalidStatusTransition { from: current.status, to: next });
            }
        }

        let pair = &mut self.pairs[idx];
        if let Some(next) = update.status {
            pair.status = next;
        }
        if let Some(clue) = edited {
            pair.original_clue = Some(std::mem::replace(&mut pair.pair.clue, clue));
        }
        if let Some(preferred) = update.preferred {
            pair.preferred = preferred;
        }
        Ok(&self.pairs[idx])
    }

    /// Accepted and edited pairs, in session order.
    pub fn usable_pairs(&self) -> Vec<&SessionPair> {
        self.pairs.iter().filter(|p| p.status.is_usable()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Language, Source};

    fn session() -> CurationSession {
        let pairs =
            [("Galileo", "introdusse il metodo sperimentale"), ("ipotesi", "assunte per testare le conoscenze")]
                .iter()
                .map(|(a, c)| ClueAnswerPair::new(*c, *a, Source::PathA, Language::It).unwrap())
                .collect();
        CurationSession::new(pairs, None)
    }

    fn status(s: PairStatus) -> PairUpdate {
        PairUpdate { status: Some(s), ..PairUpdate::default() }
    }

    #[test]
    fn transitions() {
        use PairStatus::*;
        let all = [Pending, Accepted, Rejected, Edited];
        let allowed: Vec<_> =
            all.iter().flat_map(|a| all.iter().map(move |b| (*a, *b))).filter(|(a, b)| a.can_become(*b)).collect();
        assert_eq!(
            allowed,
            vec![(Pending, Accepted), (Pending, Rejected), (Pending, Edited), (Edited, Accepted), (Edited, Rejected)]
        );
    }

    #[test]
    fn edit_keeps_original() {
        let mut s = session();
        let update = PairUpdate {
            status: Some(PairStatus::Edited),
            edited_clue: Some(" lo scienziato pisano ".into()),
            preferred: Some(true),
        };
        let p = s.update_pair("p1", &update).unwrap();
        assert_eq!(p.pair.clue, "lo scienziato pisano");
        assert_eq!(p.original_clue.as_deref(), Some("introdusse il metodo sperimentale"));
        assert!(p.preferred);
        s.update_pair("p1", &status(PairStatus::Accepted)).unwrap();
        assert_eq!(s.usable_pairs().len(), 1);
    }

    #[test]
    fn rejected_updates_change_nothing() {
        let mut s = session();
        s.update_pair("p2", &status(PairStatus::Rejected)).unwrap();
        let before = s.clone();
        let err = s.update_pair("p2", &status(PairStatus::Accepted)).unwrap_err();
        assert!(matches!(err, ServiceError::InvalidStatusTransition { .. }));
        let bad_edit = PairUpdate {
            status: Some(PairStatus::Edited),
            edited_clue: Some("Galileo Galilei".into()),
            preferred: None,
        };
        assert!(matches!(s.update_pair("p1", &bad_edit), Err(ServiceError::InvalidRequest(_))));
        assert!(matches!(s.update_pair("p9", &status(PairStatus::Accepted)), Err(ServiceError::UnknownPair(_))));
        assert_eq!(s, before);
        assert!(s.usable_pairs().is_empty());
    }
}
