//! Joint goal accuracy, slot accuracy and slot-class accuracies computed
//! from predictions aligned with gold dialogues.

mod classes;
mod fraction;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use classes::{derive_slot_class, ClassHeuristic, ClassRules, SlotClass};
pub use fraction::Fraction;

use crate::dst::{PredictionRecord, Variant};
use crate::model::{states_equal, Dialogue, DialogueState, Domain, SlotName};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("predictions and gold turns differ: {missing_count} gold turns without prediction (e.g. {missing:?}), {extra_count} predictions without gold turn (e.g. {extra:?})")]
pub struct AlignmentError {
    pub missing_count: usize,
    pub missing: Vec<(String, u32)>,
    pub extra_count: usize,
    pub extra: Vec<(String, u32)>,
}

/// Predicted states for one gold turn.
#[derive(Debug, Clone, Copy)]
pub struct PredictedTurn<'a> {
    pub delta: &'a DialogueState,
    pub cumulative: &'a DialogueState,
}

/// A gold dialogue with one prediction per turn.
#[derive(Debug, Clone)]
pub struct AlignedDialogue<'a> {
    pub gold: &'a Dialogue,
    pub predicted: Vec<PredictedTurn<'a>>,
}

/// Pairs every gold turn with exactly one prediction.
pub fn align<'a>(
    dialogues: &'a [Dialogue],
    predictions: &'a [PredictionRecord],
) -> Result<Vec<AlignedDialogue<'a>>, AlignmentError> {
    const SHOWN: usize = 5;
    let mut by_key: HashMap<(&str, u32), &PredictionRecord> = HashMap::with_capacity(predictions.len());
    let mut duplicates = Vec::new();
    for p in predictions {
        if by_key.insert((p.dialogue_id.as_str(), p.turn_index), p).is_some() {
            duplicates.push((p.dialogue_id.clone(), p.turn_index));
        }
    }
    let mut missing = Vec::new();
    let mut used = 0usize;
    let mut aligned = Vec::with_capacity(dialogues.len());
    for d in dialogues {
        let mut predicted = Vec::with_capacity(d.turns.len());
        for t in &d.turns {
            match by_key.get(&(d.id.as_str(), t.index)) {
                Some(p) => {
                    used += 1;
                    predicted.push(PredictedTurn {
                        delta: &p.parsed_delta,
                        cumulative: &p.cumulative,
                    });
                }
                None => missing.push((d.id.clone(), t.index)),
            }
        }
        aligned.push(AlignedDialogue { gold: d, predicted });
    }
    if missing.is_empty() && used == by_key.len() && duplicates.is_empty() {
        return Ok(aligned);
    }
    let gold: BTreeSet<(&str, u32)> = dialogues
        .iter()
        .flat_map(|d| d.turns.iter().map(move |t| (d.id.as_str(), t.index)))
        .collect();
    let mut extra: Vec<(String, u32)> = by_key
        .keys()
        .filter(|k| !gold.contains(*k))
        .map(|(id, t)| (id.to_string(), *t))
        .collect();
    extra.extend(duplicates);
    extra.sort();
    let (missing_count, extra_count) = (missing.len(), extra.len());
    missing.truncate(SHOWN);
    extra.truncate(SHOWN);
    Err(AlignmentError {
        missing_count,
        missing,
        extra_count,
        extra,
    })
}

/// Which states a turn's joint-goal check compares.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JgaMode {
    /// Accumulated states up to the turn.
    #[default]
    Cumulative,
    /// Only the update made at the turn.
    TurnDelta,
}

/// Slots counted by slot accuracy at each turn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotUniverse {
    /// Every schema slot.
    #[default]
    AllSlots,
    /// Slots of the dialogue's domains only. Slot accuracy may then fall
    /// below joint goal accuracy.
    DialogueDomains,
}

fn compared<'s>(
    gold: &'s crate::model::Turn,
    pred: &PredictedTurn<'s>,
    mode: JgaMode,
) -> (&'s DialogueState, &'s DialogueState) {
    match mode {
        JgaMode::Cumulative => (pred.cumulative, &gold.gold_cumulative),
        JgaMode::TurnDelta => (pred.delta, &gold.gold_delta),
    }
}

pub fn joint_goal_accuracy(aligned: &[AlignedDialogue<'_>], mode: JgaMode) -> Fraction {
    let mut f = Fraction::default();
    for a in aligned {
        for (gold, pred) in a.gold.turns.iter().zip(&a.predicted) {
            let (p, g) = compared(gold, pred, mode);
            f.record(states_equal(p, g));
        }
    }
    f
}

/// JGA per domain over the turns of dialogues that involve the domain,
/// comparing only that domain's slots.
pub fn per_domain_jga(aligned: &[AlignedDialogue<'_>], mode: JgaMode) -> BTreeMap<Domain, Fraction> {
    let mut out: BTreeMap<Domain, Fraction> = BTreeMap::new();
    for a in aligned {
        for &domain in &a.gold.domains {
            let f = out.entry(domain).or_default();
            for (gold, pred) in a.gold.turns.iter().zip(&a.predicted) {
                let (p, g) = compared(gold, pred, mode);
                f.record(states_equal(&p.restricted_to(domain), &g.restricted_to(domain)));
            }
        }
    }
    out
}

fn slots_for(dialogue: &Dialogue, universe: SlotUniverse) -> Vec<SlotName> {
    match universe {
        SlotUniverse::AllSlots => SlotName::all().collect(),
        SlotUniverse::DialogueDomains => SlotName::all()
            .filter(|s| dialogue.domains.contains(&s.domain()))
            .collect(),
    }
}

/// Fraction of (turn, slot) pairs whose cumulative predicted value matches
/// gold, absent counting as none.
pub fn slot_accuracy(aligned: &[AlignedDialogue<'_>], universe: SlotUniverse) -> Fraction {
    let mut f = Fraction::default();
    for a in aligned {
        let slots = slots_for(a.gold, universe);
        for (gold, pred) in a.gold.turns.iter().zip(&a.predicted) {
            for &slot in &slots {
                f.record(pred.cumulative.value(slot).scored() == gold.gold_cumulative.value(slot).scored());
            }
        }
    }
    f
}

/// Gold class of every (turn, slot) pair over the dialogue's domains.
pub fn classify_dialogue(dialogue: &Dialogue, variant: Variant, rules: &ClassRules) -> Vec<Vec<(SlotName, SlotClass)>> {
    let slots = slots_for(dialogue, SlotUniverse::DialogueDomains);
    (0..dialogue.turns.len())
        .map(|pos| {
            slots
                .iter()
                .map(|&s| (s, derive_slot_class(dialogue, pos, s, variant, rules)))
                .collect()
        })
        .collect()
}

/// Accuracy per gold class over domain-restricted (turn, slot) pairs. Every
/// class is present; classes without instances have a zero denominator.
pub fn slot_class_accuracies(
    aligned: &[AlignedDialogue<'_>],
    variant: Variant,
    rules: &ClassRules,
) -> BTreeMap<SlotClass, Fraction> {
    let mut out: BTreeMap<SlotClass, Fraction> = SlotClass::ALL.iter().map(|c| (*c, Fraction::default())).collect();
    for a in aligned {
        let classes = classify_dialogue(a.gold, variant, rules);
        for ((gold, pred), turn_classes) in a.gold.turns.iter().zip(&a.predicted).zip(classes) {
            for (slot, class) in turn_classes {
                let hit = pred.cumulative.value(slot).scored() == gold.gold_cumulative.value(slot).scored();
                out.get_mut(&class).expect("all classes present").record(hit);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalOptions {
    pub jga_mode: JgaMode,
    pub slot_universe: SlotUniverse,
    /// Whether second-user utterances count as user text for classes.
    pub variant: Variant,
    pub classes: bool,
    pub class_rules: ClassRules,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            jga_mode: JgaMode::default(),
            slot_universe: SlotUniverse::default(),
            variant: Variant::SingleUser,
            classes: true,
            class_rules: ClassRules::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: Variant,
    pub jga_mode: JgaMode,
    pub slot_universe: SlotUniverse,
    pub dialogues: usize,
    pub turns: u64,
    pub overall_jga: Fraction,
    pub per_domain_jga: BTreeMap<Domain, Fraction>,
    /// Classes with at least one instance.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub class_accuracy: BTreeMap<SlotClass, Fraction>,
    /// Instance counts for every class, zeros included.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub class_counts: BTreeMap<SlotClass, u64>,
    pub slot_accuracy: Fraction,
}

pub fn evaluate(
    dialogues: &[Dialogue],
    predictions: &[PredictionRecord],
    options: &EvalOptions,
) -> Result<EvalReport, AlignmentError> {
    let aligned = align(dialogues, predictions)?;
    Ok(evaluate_aligned(&aligned, options))
}

pub fn evaluate_aligned(aligned: &[AlignedDialogue<'_>], options: &EvalOptions) -> EvalReport {
    let overall_jga = joint_goal_accuracy(aligned, options.jga_mode);
    let (class_accuracy, class_counts) = if options.classes {
        let all = slot_class_accuracies(aligned, options.variant, &options.class_rules);
        let counts = all.iter().map(|(c, f)| (*c, f.total)).collect();
        (all.into_iter().filter(|(_, f)| f.total > 0).collect(), counts)
    } else {
        (BTreeMap::new(), BTreeMap::new())
    };
    EvalReport {
        variant: options.variant,
        jga_mode: options.jga_mode,
        slot_universe: options.slot_universe,
        dialogues: aligned.len(),
        turns: overall_jga.total,
        overall_jga,
        per_domain_jga: per_domain_jga(aligned, options.jga_mode),
        class_accuracy,
        class_counts,
        slot_accuracy: slot_accuracy(aligned, options.slot_universe),
    }
}
