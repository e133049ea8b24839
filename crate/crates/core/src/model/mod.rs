//! Core domain types shared by every stage: slots, values, states,
//! speech acts, turns and dialogues.

mod act;
mod canon;
mod dialogue;
mod schema;
mod state;
mod value;

pub use act::SpeechAct;
pub use canon::{canonicalize_value, AliasTable, CanonError, Canonicalizer};
pub use dialogue::{Dialogue, ModelError, Turn, User2Record};
pub use schema::{Domain, SlotEntry, SlotName, SlotSchema, UnknownSlot};
pub use state::{states_equal, update_state, DialogueState};
pub use value::SlotValue;
