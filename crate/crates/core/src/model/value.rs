use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Value held by a slot.
///
/// On the wire `Requested` is `"?"`, `DontCare` is `"dontcare"` and `None`
/// is `null`. A `None` entry in a state delta clears the slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotValue {
    Literal(String),
    DontCare,
    Requested,
    None,
}

impl SlotValue {
    pub fn literal(text: impl Into<String>) -> SlotValue {
        SlotValue::Literal(text.into())
    }

    pub fn is_none(&self) -> bool {
        matches!(self, SlotValue::None)
    }

    /// Values that take part in state comparison.
    pub fn is_informable(&self) -> bool {
        matches!(self, SlotValue::Literal(_) | SlotValue::DontCare)
    }

    pub fn as_literal(&self) -> Option<&str> {
        match self {
            SlotValue::Literal(s) => Some(s),
            _ => None,
        }
    }

    /// Projection used for per-slot scoring: requested and cleared values
    /// count as none.
    pub fn scored(&self) -> &SlotValue {
        if self.is_informable() {
            self
        } else {
            &SlotValue::None
        }
    }

    pub fn render(&self) -> &str {
        match self {
            SlotValue::Literal(s) => s,
            SlotValue::DontCare => "dontcare",
            SlotValue::Requested => "?",
            SlotValue::None => "none",
        }
    }
}

impl fmt::Display for SlotValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.render())
    }
}

impl Serialize for SlotValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            SlotValue::None => serializer.serialize_none(),
            other => serializer.serialize_str(other.render()),
        }
    }
}

impl<'de> Deserialize<'de> for SlotValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Option::<String>::deserialize(deserializer)?;
        Ok(match raw.as_deref() {
            None => SlotValue::None,
            Some("?") => SlotValue::Requested,
            Some("dontcare") => SlotValue::DontCare,
            Some("") => return Err(serde::de::Error::custom("empty slot value")),
            Some(text) => SlotValue::Literal(text.to_string()),
        })
    }
}
