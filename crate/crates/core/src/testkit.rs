use std::collections::BTreeSet;

use crate::model::{Dialogue, DialogueState, Domain, SlotName, SlotValue, SpeechAct, Turn, User2Record};

pub(crate) fn state(pairs: &[(&str, &str)]) -> DialogueState {
    pairs
        .iter()
        .map(|(k, v)| {
            let value = match *v {
                "dontcare" => SlotValue::DontCare,
                "?" => SlotValue::Requested,
                other => SlotValue::literal(other),
            };
            (SlotName::parse(k).unwrap(), value)
        })
        .collect()
}

/// Turn spec: (agent, user1, user2, gold delta).
pub(crate) type TurnSpec<'a> = (&'a str, &'a str, Option<&'a str>, &'a [(&'a str, &'a str)]);

pub(crate) fn dialogue(id: &str, turns: &[TurnSpec<'_>]) -> Dialogue {
    let mut prev = DialogueState::new();
    let turns: Vec<Turn> = turns
        .iter()
        .enumerate()
        .map(|(i, (agent, user1, user2, delta))| {
            let delta = state(delta);
            let cumulative = prev.update(&delta);
            prev = cumulative.clone();
            Turn {
                index: i as u32 + 1,
                agent: agent.to_string(),
                user1: user1.to_string(),
                user2: user2.map(|t| User2Record::accepted(t, SpeechAct::Constatives, 1)),
                gold_delta: delta,
                gold_cumulative: cumulative,
            }
        })
        .collect();
    let mut domains: BTreeSet<Domain> = turns.iter().flat_map(|t| t.gold_cumulative.domains()).collect();
    if domains.is_empty() {
        domains.insert(Domain::Hotel);
    }
    Dialogue {
        id: id.to_string(),
        domains,
        turns,
    }
}
