//! Synthetic workloads shared by the benchmarks.

use std::collections::BTreeSet;

use duetwoz_core::dst::ParseStatus;
use duetwoz_core::model::{Dialogue, DialogueState, SlotName, SlotValue, Turn};
use duetwoz_core::PredictionRecord;

const LITERALS: [&str; 6] = ["north", "cheap", "2", "friday", "cambridge", "9:30"];

fn slot_value(slot: SlotName, k: usize) -> SlotValue {
    match slot.allowed_values() {
        Some(allowed) => SlotValue::literal(allowed[k % allowed.len()].clone()),
        None => SlotValue::literal(LITERALS[k % LITERALS.len()]),
    }
}

/// `count` dialogues of `turns` turns each; turn `t` of dialogue `d` sets one
/// slot picked by a fixed stride through the schema.
pub fn corpus(count: usize, turns: usize) -> Vec<Dialogue> {
    let slots: Vec<SlotName> = SlotName::all().collect();
    (0..count)
        .map(|d| {
            let mut cumulative = DialogueState::new();
            let mut domains = BTreeSet::new();
            let turns = (0..turns)
                .map(|t| {
                    let slot = slots[(d * 7 + t * 3) % slots.len()];
                    domains.insert(slot.domain());
                    let delta = DialogueState::new().with(slot, slot_value(slot, d + t));
                    cumulative = cumulative.update(&delta);
                    Turn {
                        index: t as u32 + 1,
                        agent: if t == 0 {
                            String::new()
                        } else {
                            format!("Anything else for turn {t}?")
                        },
                        user1: format!("I would like the {} to be set.", slot.as_str()),
                        user2: None,
                        gold_delta: delta,
                        gold_cumulative: cumulative.clone(),
                    }
                })
                .collect();
            Dialogue {
                id: format!("BENCH{d:05}.json"),
                domains,
                turns,
            }
        })
        .collect()
}

/// Predictions that copy gold except on every `miss_every`-th turn, where
/// the delta is dropped.
pub fn predictions(dialogues: &[Dialogue], miss_every: usize) -> Vec<PredictionRecord> {
    let mut out = Vec::new();
    let mut n = 0usize;
    for d in dialogues {
        let mut cumulative = DialogueState::new();
        for t in &d.turns {
            n += 1;
            let delta = if n.is_multiple_of(miss_every.max(1)) {
                DialogueState::new()
            } else {
                t.gold_delta.clone()
            };
            cumulative = cumulative.update(&delta);
            out.push(PredictionRecord {
                dialogue_id: d.id.clone(),
                turn_index: t.index,
                raw_output: delta.render_inline(),
                parsed_delta: delta,
                cumulative: cumulative.clone(),
                parse_status: ParseStatus::Ok,
                error: None,
            });
        }
    }
    out
}

/// Model replies of increasing messiness.
pub fn replies() -> Vec<(&'static str, String)> {
    let clean = r#"{"hotel-area": "north", "hotel-pricerange": "cheap", "hotel-book_people": "2"}"#.to_string();
    let fenced = format!("Here is the update:\n```json\n{clean}\n```\nLet me know if anything changes.");
    let trailing =
        r#"State: {"train-day": "friday", "train-leaveAt": "9:30", "train-destination": "cambridge",}"#.to_string();
    let noise = "I could not find any slot values in this turn, sorry.".repeat(8);
    vec![
        ("clean", clean),
        ("fenced", fenced),
        ("trailing_comma", trailing),
        ("no_json", noise),
    ]
}
