use std::collections::BTreeSet;
use std::path::PathBuf;

use duetwoz_core::dst::{ParseStatus, PredictionRecord};
use duetwoz_core::model::{
    canonicalize_value, Dialogue, DialogueState, Domain, SlotName, SlotValue, SpeechAct, Turn, User2Record,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

pub fn slot(name: &str) -> SlotName {
    SlotName::parse(name).unwrap()
}

pub fn state(pairs: &[(&str, &str)]) -> DialogueState {
    pairs
        .iter()
        .map(|(k, v)| {
            let value = match *v {
                "dontcare" => SlotValue::DontCare,
                "?" => SlotValue::Requested,
                other => SlotValue::literal(other),
            };
            (slot(k), value)
        })
        .collect()
}

/// Builds a dialogue from (agent, user1, user2, gold delta) tuples.
pub fn dialogue(id: &str, turns: &[(&str, &str, Option<&str>, DialogueState)]) -> Dialogue {
    let mut prev = DialogueState::new();
    let turns: Vec<Turn> = turns
        .iter()
        .enumerate()
        .map(|(i, (agent, user1, user2, delta))| {
            let cumulative = prev.update(delta);
            prev = cumulative.clone();
            Turn {
                index: i as u32 + 1,
                agent: agent.to_string(),
                user1: user1.to_string(),
                user2: user2.map(|t| User2Record::accepted(t, SpeechAct::Constatives, 1)),
                gold_delta: delta.clone(),
                gold_cumulative: cumulative,
            }
        })
        .collect();
    let domains = turns.iter().flat_map(|t| t.gold_cumulative.domains()).collect();
    Dialogue {
        id: id.to_string(),
        domains,
        turns,
    }
}

pub fn record(dialogue_id: &str, turn_index: u32, delta: DialogueState, cumulative: DialogueState) -> PredictionRecord {
    PredictionRecord {
        dialogue_id: dialogue_id.to_string(),
        turn_index,
        raw_output: String::new(),
        parsed_delta: delta,
        cumulative,
        parse_status: ParseStatus::Ok,
        error: None,
    }
}

/// Predictions reproducing the gold states exactly.
pub fn echo(d: &Dialogue) -> Vec<PredictionRecord> {
    d.turns
        .iter()
        .map(|t| record(&d.id, t.index, t.gold_delta.clone(), t.gold_cumulative.clone()))
        .collect()
}

const FREE_VALUES: [&str; 6] = [
    "cambridge",
    "acorn guest house",
    "curry garden",
    "italian",
    "museum of archaeology",
    "4",
];
const TIMES: [&str; 3] = ["9:30", "17:45", "11:00"];
const DAYS: [&str; 2] = ["friday", "sunday"];
const COUNTS: [&str; 3] = ["1", "2", "5"];
const FILLER: [&str; 10] = [
    "please", "i", "would", "like", "that", "sounds", "good", "maybe", "thanks", "okay",
];

/// A value for `slot` that canonicalization leaves untouched.
pub fn canonical_value(rng: &mut ChaCha8Rng, slot: SlotName) -> String {
    let candidates: Vec<String> = if let Some(allowed) = slot.allowed_values() {
        allowed.to_vec()
    } else if slot.is_time() {
        TIMES.iter().map(|s| s.to_string()).collect()
    } else if slot.slot().ends_with("day") {
        DAYS.iter().map(|s| s.to_string()).collect()
    } else if slot.slot().starts_with("book_") {
        COUNTS.iter().map(|s| s.to_string()).collect()
    } else {
        FREE_VALUES.iter().map(|s| s.to_string()).collect()
    };
    let fixed: Vec<&String> = candidates
        .iter()
        .filter(|v| canonicalize_value(slot, v).ok() == Some(SlotValue::literal(v.as_str())))
        .collect();
    assert!(!fixed.is_empty(), "no canonical candidate for {slot}");
    fixed.choose(rng).unwrap().to_string()
}

pub struct Case {
    pub dialogues: Vec<Dialogue>,
    pub predictions: Vec<PredictionRecord>,
}

#[derive(Clone, Copy)]
pub struct CaseShape {
    pub max_dialogues: usize,
    pub max_turns: usize,
    /// Gold may contain requested and cleared entries.
    pub exotic_values: bool,
}

fn utterance(rng: &mut ChaCha8Rng, mention: Option<&str>) -> String {
    let n = rng.random_range(2..7);
    let mut words: Vec<String> = (0..n).map(|_| FILLER.choose(rng).unwrap().to_string()).collect();
    if let Some(m) = mention {
        let at = rng.random_range(0..=words.len());
        words.insert(at, m.to_string());
    }
    words.join(" ")
}

pub fn random_gold(rng: &mut ChaCha8Rng, id: &str, shape: CaseShape) -> Dialogue {
    let mut pool = Domain::ALL.to_vec();
    pool.shuffle(rng);
    let domains: BTreeSet<Domain> = pool.into_iter().take(rng.random_range(1..=2)).collect();
    let slots: Vec<SlotName> = SlotName::all().filter(|s| domains.contains(&s.domain())).collect();
    let n_turns = rng.random_range(1..=shape.max_turns);
    let mut prev = DialogueState::new();
    let mut turns = Vec::with_capacity(n_turns);
    for i in 0..n_turns {
        let mut delta = DialogueState::new();
        for _ in 0..rng.random_range(0..=3) {
            let s = *slots.choose(rng).unwrap();
            let roll: f64 = rng.random();
            let value = if roll < 0.1 {
                SlotValue::DontCare
            } else if shape.exotic_values && roll < 0.15 {
                SlotValue::Requested
            } else if shape.exotic_values && roll < 0.2 && prev.contains(s) {
                SlotValue::None
            } else {
                SlotValue::literal(canonical_value(rng, s))
            };
            delta.insert(s, value);
        }
        let mention = |rng: &mut ChaCha8Rng, p: f64| -> Option<String> {
            let literals: Vec<&str> = delta.iter().filter_map(|(_, v)| v.as_literal()).collect();
            (rng.random_bool(p) && !literals.is_empty()).then(|| literals.choose(rng).unwrap().to_string())
        };
        let agent = if i == 0 {
            String::new()
        } else {
            let m = mention(rng, 0.3);
            utterance(rng, m.as_deref())
        };
        let m = mention(rng, 0.5);
        let user1 = utterance(rng, m.as_deref());
        let user2 = rng.random_bool(0.5).then(|| {
            let m = mention(rng, 0.3);
            User2Record::accepted(utterance(rng, m.as_deref()), SpeechAct::Directives, 1)
        });
        let cumulative = prev.update(&delta);
        prev = cumulative.clone();
        turns.push(Turn {
            index: i as u32 + 1,
            agent,
            user1,
            user2,
            gold_delta: delta,
            gold_cumulative: cumulative,
        });
    }
    Dialogue {
        id: id.to_string(),
        domains,
        turns,
    }
}

/// Gold dialogues plus predictions that echo, drop, corrupt or invent slots.
pub fn random_case(rng: &mut ChaCha8Rng, shape: CaseShape) -> Case {
    let n = rng.random_range(1..=shape.max_dialogues);
    let dialogues: Vec<Dialogue> = (0..n).map(|i| random_gold(rng, &format!("R{i:02}"), shape)).collect();
    let all: Vec<SlotName> = SlotName::all().collect();
    let mut predictions = Vec::new();
    for d in &dialogues {
        let mut prev = DialogueState::new();
        for t in &d.turns {
            if rng.random_bool(0.3) {
                prev = t.gold_cumulative.clone();
                predictions.push(record(&d.id, t.index, t.gold_delta.clone(), prev.clone()));
                continue;
            }
            let mut delta = DialogueState::new();
            for (s, v) in t.gold_delta.iter() {
                let roll: f64 = rng.random();
                if roll < 0.2 {
                    continue;
                }
                let v = if roll < 0.3 {
                    SlotValue::literal(canonical_value(rng, *s))
                } else {
                    v.clone()
                };
                delta.insert(*s, v);
            }
            if rng.random_bool(0.15) {
                let s = *all.choose(rng).unwrap();
                let v = if rng.random_bool(0.3) {
                    SlotValue::DontCare
                } else {
                    SlotValue::literal(canonical_value(rng, s))
                };
                delta.insert(s, v);
            }
            prev = prev.update(&delta);
            predictions.push(record(&d.id, t.index, delta, prev.clone()));
        }
    }
    predictions.shuffle(rng);
    Case { dialogues, predictions }
}
