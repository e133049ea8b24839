use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const SCHEMA_JSON: &str = include_str!("../../data/slot_schema.json");

static SCHEMA: LazyLock<SlotSchema> =
    LazyLock::new(|| SlotSchema::from_json(SCHEMA_JSON).expect("bundled slot schema is valid"));

/// The five evaluated MultiWOZ domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Attraction,
    Hotel,
    Restaurant,
    Taxi,
    Train,
}

impl Domain {
    pub const ALL: [Domain; 5] = [
        Domain::Attraction,
        Domain::Hotel,
        Domain::Restaurant,
        Domain::Taxi,
        Domain::Train,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Attraction => "attraction",
            Domain::Hotel => "hotel",
            Domain::Restaurant => "restaurant",
            Domain::Taxi => "taxi",
            Domain::Train => "train",
        }
    }

    /// Column label used in comparison tables.
    pub fn short_label(self) -> &'static str {
        match self {
            Domain::Attraction => "Attr.",
            Domain::Hotel => "Hotel",
            Domain::Restaurant => "Rest.",
            Domain::Taxi => "Taxi",
            Domain::Train => "Train",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Domain::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown domain `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown slot `{0}`")]
pub struct UnknownSlot(pub String);

/// A `domain-slot` pair from the fixed ontology.
///
/// Internally an index into the bundled schema, so it is `Copy` and can only
/// name slots that exist. Ordering is alphabetical by qualified name, which
/// keeps serialized maps sorted.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlotName(u8);

impl SlotName {
    pub fn parse(name: &str) -> Result<SlotName, UnknownSlot> {
        let wanted = name.trim().replace(' ', "_");
        SCHEMA
            .entries
            .iter()
            .find(|e| e.qualified.eq_ignore_ascii_case(&wanted))
            .map(|e| e.name)
            .ok_or_else(|| UnknownSlot(name.to_string()))
    }

    pub fn from_parts(domain: Domain, slot: &str) -> Result<SlotName, UnknownSlot> {
        SlotName::parse(&format!("{}-{}", domain.as_str(), slot))
    }

    pub fn all() -> impl Iterator<Item = SlotName> {
        SCHEMA.entries.iter().map(|e| e.name)
    }

    fn entry(self) -> &'static SlotEntry {
        &SCHEMA.entries[self.0 as usize]
    }

    pub fn as_str(self) -> &'static str {
        &self.entry().qualified
    }

    pub fn domain(self) -> Domain {
        self.entry().domain
    }

    /// The part after the domain prefix, e.g. `book_people`.
    pub fn slot(self) -> &'static str {
        &self.entry().qualified[self.domain().as_str().len() + 1..]
    }

    pub fn description(self) -> &'static str {
        &self.entry().description
    }

    pub fn allowed_values(self) -> Option<&'static [String]> {
        self.entry().categorical.as_deref()
    }

    pub fn is_categorical(self) -> bool {
        self.entry().categorical.is_some()
    }

    /// Categorical slots whose allowed values are exactly yes/no.
    pub fn is_boolean(self) -> bool {
        matches!(self.allowed_values(), Some(v) if v.len() == 2 && v.iter().any(|x| x == "yes") && v.iter().any(|x| x == "no"))
    }

    /// Slots holding clock times.
    pub fn is_time(self) -> bool {
        matches!(self.slot(), "leaveAt" | "arriveBy" | "book_time")
    }
}

impl Ord for SlotName {
    fn cmp(&self, other: &Self) -> Ordering {
        self.as_str().cmp(other.as_str())
    }
}

impl PartialOrd for SlotName {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for SlotName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SlotName({})", self.as_str())
    }
}

impl fmt::Display for SlotName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SlotName {
    type Err = UnknownSlot;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SlotName::parse(s)
    }
}

impl Serialize for SlotName {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SlotName {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        SlotName::parse(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone)]
pub struct SlotEntry {
    pub name: SlotName,
    pub qualified: String,
    pub domain: Domain,
    pub description: String,
    pub categorical: Option<Vec<String>>,
}

/// The slot ontology presented to the model, in prompt order.
#[derive(Debug, Clone)]
pub struct SlotSchema {
    entries: Vec<SlotEntry>,
}

#[derive(Deserialize)]
struct RawSchema {
    slots: IndexMap<String, String>,
    categorical: IndexMap<String, Vec<String>>,
}

impl SlotSchema {
    pub fn builtin() -> &'static SlotSchema {
        &SCHEMA
    }

    /// The bundled schema file, byte for byte.
    pub fn bundled_json() -> &'static str {
        SCHEMA_JSON
    }

    fn from_json(text: &str) -> Result<SlotSchema, String> {
        let raw: RawSchema = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut entries = Vec::with_capacity(raw.slots.len());
        for (i, (qualified, description)) in raw.slots.iter().enumerate() {
            let (domain, _) = qualified
                .split_once('-')
                .ok_or_else(|| format!("slot `{qualified}` has no domain prefix"))?;
            let domain: Domain = domain.parse()?;
            let index = u8::try_from(i).map_err(|_| "too many slots".to_string())?;
            entries.push(SlotEntry {
                name: SlotName(index),
                qualified: qualified.clone(),
                domain,
                description: description.clone(),
                categorical: raw.categorical.get(qualified).cloned(),
            });
        }
        if let Some(orphan) = raw.categorical.keys().find(|k| !raw.slots.contains_key(*k)) {
            return Err(format!("categorical entry `{orphan}` is not a slot"));
        }
        Ok(SlotSchema { entries })
    }

    pub fn entries(&self) -> &[SlotEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn categorical(&self) -> impl Iterator<Item = &SlotEntry> {
        self.entries.iter().filter(|e| e.categorical.is_some())
    }

    pub fn slots_in(&self, domain: Domain) -> impl Iterator<Item = SlotName> + '_ {
        self.entries.iter().filter(move |e| e.domain == domain).map(|e| e.name)
    }
}
