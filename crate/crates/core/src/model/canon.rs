use std::collections::HashMap;
use std::sync::LazyLock;

use serde::Deserialize;

use super::{SlotName, SlotValue};

const ALIASES_JSON: &str = include_str!("../../data/aliases.json");

static BUILTIN: LazyLock<Canonicalizer> =
    LazyLock::new(|| Canonicalizer::new(AliasTable::from_json(ALIASES_JSON).expect("bundled alias table is valid")));

const DONTCARE_FORMS: [&str; 5] = ["dontcare", "don't care", "dont care", "do n't care", "do not care"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CanonError {
    #[error("empty value for slot {0}")]
    Empty(SlotName),
    #[error("value `{value}` is not allowed for categorical slot {slot}")]
    CategoricalViolation { slot: SlotName, value: String },
}

/// Value aliases, global and per slot. Shipped as `data/aliases.json`.
#[derive(Debug, Clone, Default)]
pub struct AliasTable {
    pub version: String,
    global: HashMap<String, String>,
    per_slot: HashMap<SlotName, HashMap<String, String>>,
}

#[derive(Deserialize)]
struct RawAliases {
    version: String,
    #[serde(default)]
    global: HashMap<String, String>,
    #[serde(default)]
    slots: HashMap<String, HashMap<String, String>>,
}

impl AliasTable {
    pub fn from_json(text: &str) -> Result<AliasTable, String> {
        let raw: RawAliases = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut per_slot = HashMap::new();
        for (slot, map) in raw.slots {
            let name = SlotName::parse(&slot).map_err(|e| e.to_string())?;
            per_slot.insert(name, map);
        }
        let table = AliasTable {
            version: raw.version,
            global: raw.global,
            per_slot,
        };
        table.check_targets()?;
        Ok(table)
    }

    pub fn builtin() -> &'static AliasTable {
        &BUILTIN.aliases
    }

    /// An alias target must not itself be an alias source, otherwise
    /// canonicalization would not be idempotent.
    fn check_targets(&self) -> Result<(), String> {
        for slot in SlotName::all() {
            for (from, to) in self.scope(slot) {
                if self.lookup(slot, to).is_some() {
                    return Err(format!("alias `{from}` -> `{to}` chains into another alias for {slot}"));
                }
            }
        }
        Ok(())
    }

    fn scope(&self, slot: SlotName) -> impl Iterator<Item = (&String, &String)> {
        self.per_slot.get(&slot).into_iter().flatten().chain(self.global.iter())
    }

    pub fn lookup(&self, slot: SlotName, value: &str) -> Option<&str> {
        self.per_slot
            .get(&slot)
            .and_then(|m| m.get(value))
            .or_else(|| self.global.get(value))
            .map(String::as_str)
    }
}

/// Normalizes raw slot values so gold labels and model output compare equal.
#[derive(Debug, Clone)]
pub struct Canonicalizer {
    aliases: AliasTable,
}

impl Canonicalizer {
    pub fn new(aliases: AliasTable) -> Canonicalizer {
        Canonicalizer { aliases }
    }

    pub fn builtin() -> &'static Canonicalizer {
        &BUILTIN
    }

    pub fn canonicalize(&self, slot: SlotName, raw: &str) -> Result<SlotValue, CanonError> {
        let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        if collapsed.is_empty() {
            return Err(CanonError::Empty(slot));
        }
        if collapsed == "?" {
            return Ok(SlotValue::Requested);
        }
        if DONTCARE_FORMS.contains(&collapsed.as_str()) {
            return Ok(SlotValue::DontCare);
        }
        let mut value = match self.aliases.lookup(slot, &collapsed) {
            Some(alias) => alias.to_string(),
            None => collapsed,
        };
        if slot.is_time() {
            match normalize_time(&value) {
                Some(t) => value = t,
                None => log::warn!("{slot}: unrecognized time `{value}` kept verbatim"),
            }
        }
        if let Some(allowed) = slot.allowed_values() {
            if !allowed.contains(&value) {
                return Err(CanonError::CategoricalViolation { slot, value });
            }
        }
        Ok(SlotValue::Literal(value))
    }
}

/// Canonicalizes with the bundled alias table.
pub fn canonicalize_value(slot: SlotName, raw: &str) -> Result<SlotValue, CanonError> {
    Canonicalizer::builtin().canonicalize(slot, raw)
}

/// Accepts `HH:MM`, `H:MM` and `HHMM`; returns `H:MM` on a 24-hour clock.
fn normalize_time(text: &str) -> Option<String> {
    let (h, m) = match text.split_once(':') {
        Some((h, m)) if (1..=2).contains(&h.len()) && m.len() == 2 => (h, m),
        Some(_) => return None,
        None if text.len() == 4 => text.split_at(2),
        None => return None,
    };
    if !h.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let hours: u32 = h.parse().ok()?;
    let minutes: u32 = m.parse().ok()?;
    (hours < 24 && minutes < 60).then(|| format!("{hours}:{minutes:02}"))
}
