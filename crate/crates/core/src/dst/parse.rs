use std::collections::HashMap;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{canonicalize_value, CanonError, DialogueState, Domain, SlotName, SlotValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Ok,
    Repaired,
    Failed,
}

static SLOT_KEYS: LazyLock<HashMap<String, SlotName>> =
    LazyLock::new(|| SlotName::all().map(|s| (squash(s.as_str()), s)).collect());

fn squash(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Slot lookup tolerant of case and separator differences, e.g.
/// `Hotel-Book People` for `hotel-book_people`.
pub fn lookup_slot(name: &str) -> Option<SlotName> {
    SlotName::parse(name)
        .ok()
        .or_else(|| SLOT_KEYS.get(&squash(name)).copied())
}

/// Extracts a state update from a model reply. Never fails: unusable output
/// yields an empty state with status `Failed`.
pub fn parse_state_output(raw: &str) -> (DialogueState, ParseStatus) {
    match extract_json(raw) {
        Some((value, status)) => (state_from_json(&value), status),
        None => (DialogueState::new(), ParseStatus::Failed),
    }
}

fn is_container(v: &Value) -> bool {
    v.is_object() || v.is_array()
}

fn parse_whole(text: &str) -> Option<Value> {
    serde_json::from_str::<Value>(text.trim()).ok().filter(is_container)
}

/// End (exclusive) of the bracketed span opening at `start`, skipping
/// brackets inside strings.
fn span_end(text: &str, start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_string {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' | '[' => depth += 1,
            '}' | ']' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(start + i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// First top-level JSON object or array in `text` that parses without
/// repair. The interior of a span that fails to parse is not searched.
fn first_embedded(text: &str) -> Option<Value> {
    let mut from = 0;
    while let Some(offset) = text[from..].find(['{', '[']) {
        let start = from + offset;
        let parsed = serde_json::Deserializer::from_str(&text[start..])
            .into_iter::<Value>()
            .next()
            .and_then(Result::ok)
            .filter(is_container);
        if parsed.is_some() {
            return parsed;
        }
        from = span_end(text, start)?;
    }
    None
}

fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let body_start = after.find('\n').map_or(after.len(), |n| n + 1);
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                blocks.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => {
                blocks.push(body);
                break;
            }
        }
    }
    blocks
}

/// Closes unterminated strings and brackets from the first opener onward.
fn balance(text: &str) -> Option<String> {
    let start = text.find(['{', '['])?;
    let mut stack = Vec::new();
    let mut in_string = false;
    let mut escaped = false;
    let mut end = text.len();
    for (i, c) in text[start..].char_indices() {
        if in_string {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => stack.push('}'),
            '[' => stack.push(']'),
            '}' | ']' => {
                if stack.pop() != Some(c) {
                    return None;
                }
                if stack.is_empty() {
                    end = start + i + 1;
                    break;
                }
            }
            _ => {}
        }
    }
    let mut fixed = text[start..end].trim_end().to_string();
    if in_string {
        fixed.push('"');
    }
    while fixed.ends_with(',') {
        fixed.pop();
    }
    while let Some(closer) = stack.pop() {
        fixed.push(closer);
    }
    let fixed = strip_trailing_commas(&fixed);
    Some(fixed)
}

fn strip_trailing_commas(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if in_string {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_string = false,
                _ => {}
            }
        } else if c == '"' {
            in_string = true;
        } else if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

fn extract_json(raw: &str) -> Option<(Value, ParseStatus)> {
    if let Some(v) = parse_whole(raw) {
        return Some((v, ParseStatus::Ok));
    }
    let fenced = fenced_blocks(raw);
    for block in &fenced {
        if let Some(v) = parse_whole(block) {
            return Some((v, ParseStatus::Repaired));
        }
    }
    let prose = if fenced.is_empty() {
        raw.to_string()
    } else {
        fenced.join("\n")
    };
    if let Some(v) = first_embedded(&prose) {
        let status = if fenced.is_empty() {
            ParseStatus::Ok
        } else {
            ParseStatus::Repaired
        };
        return Some((v, status));
    }
    balance(&prose)
        .and_then(|fixed| parse_whole(&fixed))
        .map(|v| (v, ParseStatus::Repaired))
}

fn scalar_text(value: &Value) -> Option<Option<String>> {
    match value {
        Value::Null => Some(None),
        Value::String(s) => Some(Some(s.clone())),
        Value::Number(n) => Some(Some(n.to_string())),
        Value::Bool(true) => Some(Some("yes".into())),
        Value::Bool(false) => Some(Some("no".into())),
        Value::Array(items) => items.iter().find_map(|v| scalar_text(v).flatten()).map(Some),
        Value::Object(_) => None,
    }
}

fn put(state: &mut DialogueState, key: &str, value: &Value) {
    let Some(slot) = lookup_slot(key) else {
        log::warn!("dropping unknown slot `{key}` from model output");
        return;
    };
    let parsed = match scalar_text(value) {
        None => return log::warn!("{slot}: non-scalar value dropped"),
        Some(None) => SlotValue::None,
        Some(Some(text)) => match canonicalize_value(slot, &text) {
            Ok(v) => v,
            Err(CanonError::Empty(_)) => return,
            Err(CanonError::CategoricalViolation { value, .. }) => {
                log::debug!("{slot}: value `{value}` outside the allowed list kept as predicted");
                SlotValue::Literal(value)
            }
        },
    };
    state.insert(slot, parsed);
}

fn collect(state: &mut DialogueState, value: &Value) {
    match value {
        Value::Object(map) => {
            if let (Some(Value::String(slot)), Some(v)) = (map.get("slot"), map.get("value")) {
                put(state, slot, v);
                return;
            }
            for (key, v) in map {
                match (v, key.parse::<Domain>()) {
                    (Value::Object(inner), Ok(domain)) => {
                        for (slot, v) in inner {
                            put(state, &format!("{}-{slot}", domain.as_str()), v);
                        }
                    }
                    (Value::Object(_), Err(_)) => collect(state, v),
                    _ => put(state, key, v),
                }
            }
        }
        Value::Array(items) => items.iter().for_each(|item| collect(state, item)),
        _ => {}
    }
}

fn state_from_json(value: &Value) -> DialogueState {
    let mut state = DialogueState::new();
    collect(&mut state, value);
    state
}
