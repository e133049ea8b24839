use std::collections::BTreeSet;

use serde_json::{Map, Value};

use super::{CorpusError, IngestReport};
use crate::model::{canonicalize_value, CanonError, Dialogue, DialogueState, Domain, SlotName, Turn};

const EMPTY_VALUES: [&str; 3] = ["", "not mentioned", "none"];

pub(super) fn parse_dialogue(
    id: &str,
    entry: &Value,
    report: &mut IngestReport,
) -> Result<Option<Dialogue>, CorpusError> {
    let log = entry
        .get("log")
        .and_then(Value::as_array)
        .ok_or_else(|| CorpusError::format(id, format!("$.{id}.log"), "missing `log` array"))?;
    if log.len() % 2 != 0 {
        return Err(CorpusError::format(
            id,
            format!("$.{id}.log"),
            format!("odd number of log entries ({}); expected user/system pairs", log.len()),
        ));
    }

    let mut goal_domains = BTreeSet::new();
    let mut out_of_scope = BTreeSet::new();
    if let Some(goal) = entry.get("goal").and_then(Value::as_object) {
        for (name, body) in goal {
            if !body.as_object().is_some_and(|m| !m.is_empty()) {
                continue;
            }
            match name.parse::<Domain>() {
                Ok(d) => {
                    goal_domains.insert(d);
                }
                Err(_) if !matches!(name.as_str(), "message" | "topic") => {
                    out_of_scope.insert(name.clone());
                }
                Err(_) => {}
            }
        }
    }

    let mut turns = Vec::with_capacity(log.len() / 2);
    let mut prev = DialogueState::new();
    let mut dropped_out_of_scope = BTreeSet::new();
    for i in 0..log.len() / 2 {
        let user_path = format!("$.{id}.log[{}]", 2 * i);
        let sys_path = format!("$.{id}.log[{}]", 2 * i + 1);
        let user1 = text_of(id, &log[2 * i], &user_path)?;
        let agent = if i == 0 {
            String::new()
        } else {
            text_of(id, &log[2 * i - 1], &format!("$.{id}.log[{}]", 2 * i - 1))?
        };
        let metadata = log[2 * i + 1]
            .get("metadata")
            .and_then(Value::as_object)
            .ok_or_else(|| CorpusError::format(id, format!("{sys_path}.metadata"), "missing metadata object"))?;
        let cumulative = parse_belief_state(id, metadata, &sys_path, report, &mut dropped_out_of_scope)?;
        let delta = prev.diff_to(&cumulative);
        turns.push(Turn {
            index: (i + 1) as u32,
            agent,
            user1,
            user2: None,
            gold_delta: delta,
            gold_cumulative: cumulative.clone(),
        });
        prev = cumulative;
    }

    if !dropped_out_of_scope.is_empty() {
        let names: Vec<_> = dropped_out_of_scope.into_iter().collect();
        report.warn(
            id,
            format!("dropped out-of-scope slots in domains: {}", names.join(", ")),
        );
    }

    let mut domains = goal_domains;
    for turn in &turns {
        domains.extend(turn.gold_cumulative.domains());
    }
    if domains.is_empty() {
        let reason = if out_of_scope.is_empty() {
            "no in-scope domain".to_string()
        } else {
            let names: Vec<_> = out_of_scope.into_iter().collect();
            format!("only out-of-scope domains ({})", names.join(", "))
        };
        report.skip(id, reason);
        return Ok(None);
    }
    Ok(Some(Dialogue {
        id: id.to_string(),
        domains,
        turns,
    }))
}

fn text_of(id: &str, entry: &Value, path: &str) -> Result<String, CorpusError> {
    entry
        .get("text")
        .and_then(Value::as_str)
        .map(|s| s.trim().to_string())
        .ok_or_else(|| CorpusError::format(id, format!("{path}.text"), "missing utterance text"))
}

/// Flattens `{domain: {book: {...}, semi: {...}}}` into a state.
fn parse_belief_state(
    id: &str,
    metadata: &Map<String, Value>,
    path: &str,
    report: &mut IngestReport,
    dropped_domains: &mut BTreeSet<String>,
) -> Result<DialogueState, CorpusError> {
    let mut state = DialogueState::new();
    for (domain_name, body) in metadata {
        let domain = domain_name.parse::<Domain>().ok();
        for (section, prefix) in [("semi", ""), ("book", "book_")] {
            let Some(fields) = body.get(section).and_then(Value::as_object) else {
                continue;
            };
            for (key, raw) in fields {
                if key == "booked" {
                    continue;
                }
                let value_path = format!("{path}.metadata.{domain_name}.{section}.{key}");
                let text = match raw {
                    Value::String(s) => s.trim(),
                    Value::Array(items) if items.is_empty() => continue,
                    Value::Array(items) => items.first().and_then(Value::as_str).unwrap_or("").trim(),
                    other => {
                        return Err(CorpusError::format(
                            id,
                            value_path,
                            format!("expected string slot value, found {other}"),
                        ))
                    }
                };
                if EMPTY_VALUES.contains(&text.to_lowercase().as_str()) {
                    continue;
                }
                let Some(domain) = domain else {
                    dropped_domains.insert(domain_name.clone());
                    continue;
                };
                let slot = match SlotName::from_parts(domain, &format!("{prefix}{key}")) {
                    Ok(slot) => slot,
                    Err(_) => {
                        report.warn(id, format!("unknown slot {domain_name}-{prefix}{key} dropped"));
                        continue;
                    }
                };
                match canonicalize_value(slot, text) {
                    Ok(value) => {
                        state.insert(slot, value);
                    }
                    Err(CanonError::CategoricalViolation { value, .. }) => {
                        report.warn(id, format!("{slot}: value `{value}` outside categorical list dropped"));
                    }
                    Err(CanonError::Empty(_)) => {}
                }
            }
        }
    }
    Ok(state)
}
