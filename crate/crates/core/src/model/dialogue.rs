use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{DialogueState, Domain, SpeechAct};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("dialogue {dialogue}: turn indices must run 1..=n, found {found} at position {position}")]
    TurnIndex {
        dialogue: String,
        position: usize,
        found: u32,
    },
    #[error("dialogue {dialogue} turn {turn}: cumulative state does not follow from the delta")]
    CumulativeMismatch { dialogue: String, turn: u32 },
    #[error("dialogue {dialogue} turn {turn}: second-user record is inconsistent ({reason})")]
    User2 {
        dialogue: String,
        turn: u32,
        reason: &'static str,
    },
    #[error("dialogue {dialogue}: slot {slot} lies outside the dialogue's domains")]
    SlotOutsideDomains { dialogue: String, slot: String },
    #[error("dialogue {0} has no domains")]
    NoDomains(String),
}

/// Outcome of extending one turn with a second-user utterance.
///
/// `text` is present exactly when `act` is not `None`. A discarded turn keeps
/// the number of generation attempts that were made.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User2Record {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub act: SpeechAct,
    pub attempts: u8,
}

impl User2Record {
    pub fn accepted(text: impl Into<String>, act: SpeechAct, attempts: u8) -> User2Record {
        User2Record {
            text: Some(text.into()),
            act,
            attempts,
        }
    }

    pub fn discarded(attempts: u8) -> User2Record {
        User2Record {
            text: None,
            act: SpeechAct::None,
            attempts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    /// 1-based.
    pub index: u32,
    /// Agent utterance preceding the user at this turn; empty at turn 1.
    pub agent: String,
    pub user1: String,
    pub user2: Option<User2Record>,
    pub gold_delta: DialogueState,
    pub gold_cumulative: DialogueState,
}

impl Turn {
    pub fn user2_text(&self) -> Option<&str> {
        self.user2.as_ref().and_then(|u| u.text.as_deref())
    }

    pub fn act(&self) -> SpeechAct {
        self.user2.as_ref().map_or(SpeechAct::None, |u| u.act)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    pub domains: BTreeSet<Domain>,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    /// Checks the structural invariants every stage relies on.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.domains.is_empty() {
            return Err(ModelError::NoDomains(self.id.clone()));
        }
        let mut prev = DialogueState::new();
        for (position, turn) in self.turns.iter().enumerate() {
            if turn.index as usize != position + 1 {
                return Err(ModelError::TurnIndex {
                    dialogue: self.id.clone(),
                    position,
                    found: turn.index,
                });
            }
            if prev.update(&turn.gold_delta) != turn.gold_cumulative {
                return Err(ModelError::CumulativeMismatch {
                    dialogue: self.id.clone(),
                    turn: turn.index,
                });
            }
            if let Some(u2) = &turn.user2 {
                let reason = match (&u2.text, u2.act) {
                    (Some(_), SpeechAct::None) => Some("text present but act is none"),
                    (None, act) if act != SpeechAct::None => Some("act recorded without text"),
                    (Some(t), _) if t.trim().is_empty() => Some("blank text"),
                    (Some(_), _) if !(1..=3).contains(&u2.attempts) => Some("accepted attempts outside 1..=3"),
                    (None, _) if u2.attempts > 3 => Some("more than 3 attempts"),
                    _ => None,
                };
                if let Some(reason) = reason {
                    return Err(ModelError::User2 {
                        dialogue: self.id.clone(),
                        turn: turn.index,
                        reason,
                    });
                }
            }
            for state in [&turn.gold_delta, &turn.gold_cumulative] {
                if let Some(slot) = state.keys().find(|s| !self.domains.contains(&s.domain())) {
                    return Err(ModelError::SlotOutsideDomains {
                        dialogue: self.id.clone(),
                        slot: slot.to_string(),
                    });
                }
            }
            prev = turn.gold_cumulative.clone();
        }
        Ok(())
    }

    pub fn user2_count(&self) -> usize {
        self.turns.iter().filter(|t| t.user2_text().is_some()).count()
    }
}
