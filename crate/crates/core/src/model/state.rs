use std::collections::btree_map;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Domain, SlotName, SlotValue};

/// A set of slot assignments. A missing key means the slot is unset.
///
/// Equality treats explicit `None` entries as absent; everything else is
/// compared structurally (use [`states_equal`] for scoring).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DialogueState {
    entries: BTreeMap<SlotName, SlotValue>,
}

impl DialogueState {
    pub fn new() -> DialogueState {
        DialogueState::default()
    }

    pub fn insert(&mut self, slot: SlotName, value: SlotValue) -> Option<SlotValue> {
        self.entries.insert(slot, value)
    }

    pub fn with(mut self, slot: SlotName, value: SlotValue) -> DialogueState {
        self.insert(slot, value);
        self
    }

    pub fn get(&self, slot: SlotName) -> Option<&SlotValue> {
        self.entries.get(&slot).filter(|v| !v.is_none())
    }

    /// The slot's value with absence reported as [`SlotValue::None`].
    pub fn value(&self, slot: SlotName) -> &SlotValue {
        self.entries.get(&slot).unwrap_or(&SlotValue::None)
    }

    pub fn contains(&self, slot: SlotName) -> bool {
        self.get(slot).is_some()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, SlotName, SlotValue> {
        self.entries.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = SlotName> + '_ {
        self.entries.keys().copied()
    }

    /// Number of stored entries, including explicit clears.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.values().all(SlotValue::is_none)
    }

    /// Overwrite-on-collision union; `self` is left untouched.
    pub fn update(&self, delta: &DialogueState) -> DialogueState {
        let mut entries = self.entries.clone();
        for (slot, value) in &delta.entries {
            entries.insert(*slot, value.clone());
        }
        DialogueState { entries }
    }

    /// Drops explicit `None` entries.
    pub fn normalized(&self) -> DialogueState {
        DialogueState {
            entries: self
                .entries
                .iter()
                .filter(|(_, v)| !v.is_none())
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    /// Entries that take part in scoring (literals and dontcare).
    pub fn informable(&self) -> impl Iterator<Item = (SlotName, &SlotValue)> {
        self.entries
            .iter()
            .filter(|(_, v)| v.is_informable())
            .map(|(k, v)| (*k, v))
    }

    pub fn restricted_to(&self, domain: Domain) -> DialogueState {
        DialogueState {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| k.domain() == domain)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    pub fn domains(&self) -> impl Iterator<Item = Domain> + '_ {
        self.entries
            .iter()
            .filter(|(_, v)| !v.is_none())
            .map(|(k, _)| k.domain())
    }

    /// Entries of `next` that differ from `self`, with slots that vanished
    /// recorded as explicit `None`.
    pub fn diff_to(&self, next: &DialogueState) -> DialogueState {
        let mut delta = DialogueState::new();
        for (slot, value) in next.entries.iter().filter(|(_, v)| !v.is_none()) {
            if self.get(*slot) != Some(value) {
                delta.insert(*slot, value.clone());
            }
        }
        for slot in self.entries.iter().filter(|(_, v)| !v.is_none()).map(|(k, _)| *k) {
            if !next.contains(slot) {
                delta.insert(slot, SlotValue::None);
            }
        }
        delta
    }

    /// Compact single-line rendering, e.g. `{"hotel-name": "warkworth house"}`.
    pub fn render_inline(&self) -> String {
        let parts: Vec<String> = self
            .entries
            .iter()
            .filter(|(_, v)| !v.is_none())
            .map(|(k, v)| format!("\"{}\": \"{}\"", k, v.render()))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

impl PartialEq for DialogueState {
    fn eq(&self, other: &Self) -> bool {
        let a = self.entries.iter().filter(|(_, v)| !v.is_none());
        let b = other.entries.iter().filter(|(_, v)| !v.is_none());
        a.eq(b)
    }
}

impl Eq for DialogueState {}

impl FromIterator<(SlotName, SlotValue)> for DialogueState {
    fn from_iter<I: IntoIterator<Item = (SlotName, SlotValue)>>(iter: I) -> Self {
        DialogueState {
            entries: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a DialogueState {
    type Item = (&'a SlotName, &'a SlotValue);
    type IntoIter = btree_map::Iter<'a, SlotName, SlotValue>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// `prev ∪ delta` with the delta winning on collisions.
pub fn update_state(prev: &DialogueState, delta: &DialogueState) -> DialogueState {
    prev.update(delta)
}

/// Joint equality used by JGA: requested and cleared entries are ignored
/// on both sides, everything else must match exactly.
pub fn states_equal(a: &DialogueState, b: &DialogueState) -> bool {
    a.informable().eq(b.informable())
}
