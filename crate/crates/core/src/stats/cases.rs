use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::dst::PredictionRecord;
use crate::metrics::{align, evaluate_aligned, AlignedDialogue, EvalOptions, EvalReport};
use crate::model::{states_equal, Dialogue, DialogueState, SlotName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    /// A gold slot's value is missing or wrong under the multi-user variant.
    ValueExtraction,
    /// The multi-user variant fills a slot that gold leaves empty.
    SlotType,
}

/// A turn tracked correctly without second-user utterances but not with
/// them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCase {
    pub dialogue_id: String,
    pub turn_index: u32,
    pub category: ErrorCategory,
    /// Slots on which the multi-user state departs from gold.
    pub slots: Vec<SlotName>,
    pub single_state: DialogueState,
    pub multi_state: DialogueState,
    pub gold_state: DialogueState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user2_text: Option<String>,
}

pub fn mine_error_cases(
    dialogues: &[Dialogue],
    single: &[PredictionRecord],
    multi: &[PredictionRecord],
) -> Result<Vec<ErrorCase>, StatsError> {
    let single = align(dialogues, single)?;
    let multi = align(dialogues, multi)?;
    let mut cases = Vec::new();
    for (s, m) in single.iter().zip(&multi) {
        for ((turn, sp), mp) in s.gold.turns.iter().zip(&s.predicted).zip(&m.predicted) {
            let gold = &turn.gold_cumulative;
            if !states_equal(sp.cumulative, gold) || states_equal(mp.cumulative, gold) {
                continue;
            }
            let slots: Vec<SlotName> = SlotName::all()
                .filter(|&slot| mp.cumulative.value(slot).scored() != gold.value(slot).scored())
                .collect();
            let value_error = slots.iter().any(|&slot| gold.value(slot).is_informable());
            cases.push(ErrorCase {
                dialogue_id: s.gold.id.clone(),
                turn_index: turn.index,
                category: if value_error {
                    ErrorCategory::ValueExtraction
                } else {
                    ErrorCategory::SlotType
                },
                slots,
                single_state: sp.cumulative.normalized(),
                multi_state: mp.cumulative.normalized(),
                gold_state: gold.normalized(),
                user2_text: turn.user2_text().map(str::to_string),
            });
        }
    }
    Ok(cases)
}

/// Ids of dialogues judged slot-consistent by every judgment that covers
/// them.
pub fn consistent_dialogues<'a>(verdicts: impl IntoIterator<Item = (&'a str, bool)>) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut rejected = BTreeSet::new();
    for (id, consistent) in verdicts {
        seen.insert(id.to_string());
        if !consistent {
            rejected.insert(id.to_string());
        }
    }
    seen.difference(&rejected).cloned().collect()
}

/// Scores both variants on the dialogues in `clean` only.
pub fn clean_subset_eval(
    dialogues: &[Dialogue],
    single: &[PredictionRecord],
    multi: &[PredictionRecord],
    clean: &BTreeSet<String>,
    options: &EvalOptions,
) -> Result<(EvalReport, EvalReport), StatsError> {
    let subset: Vec<Dialogue> = dialogues.iter().filter(|d| clean.contains(&d.id)).cloned().collect();
    if subset.is_empty() {
        return Err(StatsError::EmptySubset);
    }
    let keep = |p: &&PredictionRecord| clean.contains(&p.dialogue_id);
    let single: Vec<PredictionRecord> = single.iter().filter(keep).cloned().collect();
    let multi: Vec<PredictionRecord> = multi.iter().filter(keep).cloned().collect();
    let score = |preds: &[PredictionRecord], variant| -> Result<EvalReport, StatsError> {
        let aligned: Vec<AlignedDialogue<'_>> = align(&subset, preds)?;
        let options = EvalOptions {
            variant,
            ..options.clone()
        };
        Ok(evaluate_aligned(&aligned, &options))
    };
    Ok((
        score(&single, crate::dst::Variant::SingleUser)?,
        score(&multi, crate::dst::Variant::MultiUser)?,
    ))
}
