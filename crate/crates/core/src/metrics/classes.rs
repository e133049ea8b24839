use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dst::Variant;
use crate::model::{Dialogue, SlotName, SlotValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotClass {
    None,
    Dontcare,
    CopyValue,
    True,
    False,
    Refer,
    Inform,
}

impl SlotClass {
    pub const ALL: [SlotClass; 7] = [
        SlotClass::None,
        SlotClass::Dontcare,
        SlotClass::CopyValue,
        SlotClass::True,
        SlotClass::False,
        SlotClass::Refer,
        SlotClass::Inform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SlotClass::None => "none",
            SlotClass::Dontcare => "dontcare",
            SlotClass::CopyValue => "copy_value",
            SlotClass::True => "true",
            SlotClass::False => "false",
            SlotClass::Refer => "refer",
            SlotClass::Inform => "inform",
        }
    }

    /// Column label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            SlotClass::None => "None",
            SlotClass::Dontcare => "Dontcare",
            SlotClass::CopyValue => "Copy_value",
            SlotClass::True => "True",
            SlotClass::False => "False",
            SlotClass::Refer => "Refer",
            SlotClass::Inform => "Inform",
        }
    }
}

impl fmt::Display for SlotClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Heuristics tried, in order, for informable gold values that are not
/// booleans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassHeuristic {
    /// Value held by a different slot at an earlier turn.
    Refer,
    /// Value appears in the current user utterance(s).
    UserSubstring,
    /// Value appears in the current or previous agent utterance.
    AgentInform,
}

impl FromStr for ClassHeuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "refer" => Ok(ClassHeuristic::Refer),
            "user_substring" | "copy_value" => Ok(ClassHeuristic::UserSubstring),
            "agent_inform" | "inform" => Ok(ClassHeuristic::AgentInform),
            other => Err(format!("unknown class heuristic `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassRules {
    pub order: Vec<ClassHeuristic>,
}

impl Default for ClassRules {
    fn default() -> Self {
        ClassRules {
            order: vec![
                ClassHeuristic::Refer,
                ClassHeuristic::UserSubstring,
                ClassHeuristic::AgentInform,
            ],
        }
    }
}

fn mentions(text: &str, value: &str) -> bool {
    text.to_lowercase().contains(value)
}

/// Gold class of `slot` at turn position `pos` (0-based) of `dialogue`.
///
/// Absent or requested gold is `none`, `dontcare` is `dontcare`, boolean
/// slots map to `true`/`false`; other values go through `rules` in order and
/// fall back to `copy_value`.
pub fn derive_slot_class(
    dialogue: &Dialogue,
    pos: usize,
    slot: SlotName,
    variant: Variant,
    rules: &ClassRules,
) -> SlotClass {
    let turn = &dialogue.turns[pos];
    let value = match turn.gold_cumulative.value(slot).scored() {
        SlotValue::None | SlotValue::Requested => return SlotClass::None,
        SlotValue::DontCare => return SlotClass::Dontcare,
        SlotValue::Literal(v) => v.as_str(),
    };
    if slot.is_boolean() {
        match value {
            "yes" => return SlotClass::True,
            "no" => return SlotClass::False,
            _ => {}
        }
    }
    for heuristic in &rules.order {
        let hit = match heuristic {
            ClassHeuristic::Refer => dialogue.turns[..pos].iter().any(|t| {
                t.gold_cumulative
                    .iter()
                    .any(|(s, v)| *s != slot && v.as_literal() == Some(value))
            }),
            ClassHeuristic::UserSubstring => {
                mentions(&turn.user1, value)
                    || (variant == Variant::MultiUser && turn.user2_text().is_some_and(|u| mentions(u, value)))
            }
            ClassHeuristic::AgentInform => {
                mentions(&turn.agent, value) || (pos > 0 && mentions(&dialogue.turns[pos - 1].agent, value))
            }
        };
        if hit {
            return match heuristic {
                ClassHeuristic::Refer => SlotClass::Refer,
                ClassHeuristic::UserSubstring => SlotClass::CopyValue,
                ClassHeuristic::AgentInform => SlotClass::Inform,
            };
        }
    }
    SlotClass::CopyValue
}
