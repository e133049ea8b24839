//! Brute-force metric reference working on plain strings.

use std::collections::{BTreeMap, HashMap};

use duetwoz_core::dst::PredictionRecord;
use duetwoz_core::model::{Dialogue, DialogueState, SlotValue};

pub type Flat = BTreeMap<String, String>;
pub type Ratio = (u64, u64);

const SCHEMA: &str = include_str!("../../data/slot_schema.json");
pub const CLASSES: [&str; 7] = ["none", "dontcare", "copy_value", "true", "false", "refer", "inform"];

pub fn schema_slots() -> Vec<String> {
    let v: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
    v["slots"].as_object().unwrap().keys().cloned().collect()
}

fn is_boolean(slot: &str) -> bool {
    let v: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
    match v["categorical"][slot].as_array() {
        Some(values) => {
            let mut names: Vec<&str> = values.iter().filter_map(|x| x.as_str()).collect();
            names.sort_unstable();
            names == ["no", "yes"]
        }
        None => false,
    }
}

/// Informable entries only; requested and cleared entries vanish.
pub fn flat(state: &DialogueState) -> Flat {
    state
        .iter()
        .filter_map(|(k, v)| match v {
            SlotValue::Literal(s) => Some((k.as_str().to_string(), s.clone())),
            SlotValue::DontCare => Some((k.as_str().to_string(), "dontcare".to_string())),
            _ => None,
        })
        .collect()
}

fn domain_of(slot: &str) -> &str {
    slot.split('-').next().unwrap()
}

fn only(f: &Flat, domain: &str) -> Flat {
    f.iter()
        .filter(|(k, _)| domain_of(k) == domain)
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

struct OTurn {
    agent: String,
    user1: String,
    user2: Option<String>,
    gold_cum: Flat,
    gold_delta: Flat,
    pred_cum: Flat,
    pred_delta: Flat,
}

struct ODialogue {
    domains: Vec<String>,
    turns: Vec<OTurn>,
}

fn prepare(dialogues: &[Dialogue], predictions: &[PredictionRecord]) -> Vec<ODialogue> {
    let by_key: HashMap<(String, u32), &PredictionRecord> = predictions
        .iter()
        .map(|p| ((p.dialogue_id.clone(), p.turn_index), p))
        .collect();
    dialogues
        .iter()
        .map(|d| ODialogue {
            domains: d.domains.iter().map(|x| x.as_str().to_string()).collect(),
            turns: d
                .turns
                .iter()
                .map(|t| {
                    let p = by_key[&(d.id.clone(), t.index)];
                    OTurn {
                        agent: t.agent.clone(),
                        user1: t.user1.clone(),
                        user2: t.user2.as_ref().and_then(|u| u.text.clone()),
                        gold_cum: flat(&t.gold_cumulative),
                        gold_delta: flat(&t.gold_delta),
                        pred_cum: flat(&p.cumulative),
                        pred_delta: flat(&p.parsed_delta),
                    }
                })
                .collect(),
        })
        .collect()
}

pub struct Reference {
    pub jga_cumulative: Ratio,
    pub jga_delta: Ratio,
    pub per_domain_cumulative: BTreeMap<String, Ratio>,
    pub per_domain_delta: BTreeMap<String, Ratio>,
    pub slot_accuracy: Ratio,
    pub classes_single: BTreeMap<&'static str, Ratio>,
    pub classes_multi: BTreeMap<&'static str, Ratio>,
}

fn bump(r: &mut Ratio, hit: bool) {
    r.1 += 1;
    if hit {
        r.0 += 1;
    }
}

fn class_of(d: &ODialogue, pos: usize, slot: &str, multi: bool) -> &'static str {
    let turn = &d.turns[pos];
    let Some(value) = turn.gold_cum.get(slot) else {
        return "none";
    };
    if value == "dontcare" {
        return "dontcare";
    }
    if is_boolean(slot) && value == "yes" {
        return "true";
    }
    if is_boolean(slot) && value == "no" {
        return "false";
    }
    let has = |text: &str| text.to_lowercase().contains(value.as_str());
    let earlier_elsewhere = d.turns[..pos].iter().any(|t| {
        t.gold_cum
            .iter()
            .any(|(k, v)| k != slot && v == value && v != "dontcare")
    });
    if earlier_elsewhere {
        return "refer";
    }
    if has(&turn.user1) || (multi && turn.user2.as_deref().is_some_and(has)) {
        return "copy_value";
    }
    if has(&turn.agent) || (pos > 0 && has(&d.turns[pos - 1].agent)) {
        return "inform";
    }
    "copy_value"
}

pub fn reference(dialogues: &[Dialogue], predictions: &[PredictionRecord]) -> Reference {
    let data = prepare(dialogues, predictions);
    let slots = schema_slots();
    let mut r = Reference {
        jga_cumulative: (0, 0),
        jga_delta: (0, 0),
        per_domain_cumulative: BTreeMap::new(),
        per_domain_delta: BTreeMap::new(),
        slot_accuracy: (0, 0),
        classes_single: CLASSES.iter().map(|c| (*c, (0, 0))).collect(),
        classes_multi: CLASSES.iter().map(|c| (*c, (0, 0))).collect(),
    };
    for d in &data {
        for (pos, t) in d.turns.iter().enumerate() {
            bump(&mut r.jga_cumulative, t.pred_cum == t.gold_cum);
            bump(&mut r.jga_delta, t.pred_delta == t.gold_delta);
            for dom in &d.domains {
                let c = r.per_domain_cumulative.entry(dom.clone()).or_default();
                bump(c, only(&t.pred_cum, dom) == only(&t.gold_cum, dom));
                let c = r.per_domain_delta.entry(dom.clone()).or_default();
                bump(c, only(&t.pred_delta, dom) == only(&t.gold_delta, dom));
            }
            for s in &slots {
                bump(&mut r.slot_accuracy, t.pred_cum.get(s) == t.gold_cum.get(s));
                if !d.domains.iter().any(|dom| dom == domain_of(s)) {
                    continue;
                }
                let hit = t.pred_cum.get(s) == t.gold_cum.get(s);
                bump(r.classes_single.get_mut(class_of(d, pos, s, false)).unwrap(), hit);
                bump(r.classes_multi.get_mut(class_of(d, pos, s, true)).unwrap(), hit);
            }
        }
    }
    r
}
