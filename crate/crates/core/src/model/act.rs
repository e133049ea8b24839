use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Speech-act type of a second-user utterance. `None` marks a turn with no
/// second-user utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeechAct {
    Constatives,
    Directives,
    Commissives,
    Acknowledgments,
    None,
}

impl SpeechAct {
    /// The four selectable options, in canonical order.
    pub const OPTIONS: [SpeechAct; 4] = [
        SpeechAct::Constatives,
        SpeechAct::Directives,
        SpeechAct::Commissives,
        SpeechAct::Acknowledgments,
    ];

    pub const ALL: [SpeechAct; 5] = [
        SpeechAct::Constatives,
        SpeechAct::Directives,
        SpeechAct::Commissives,
        SpeechAct::Acknowledgments,
        SpeechAct::None,
    ];

    /// Name as it appears in prompts.
    pub fn label(self) -> &'static str {
        match self {
            SpeechAct::Constatives => "Constatives",
            SpeechAct::Directives => "Directives",
            SpeechAct::Commissives => "Commissives",
            SpeechAct::Acknowledgments => "Acknowledgments",
            SpeechAct::None => "None",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SpeechAct::Constatives => "constatives",
            SpeechAct::Directives => "directives",
            SpeechAct::Commissives => "commissives",
            SpeechAct::Acknowledgments => "acknowledgments",
            SpeechAct::None => "none",
        }
    }

    pub fn is_none(self) -> bool {
        self == SpeechAct::None
    }
}

impl fmt::Display for SpeechAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SpeechAct {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SpeechAct::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown speech act `{s}`"))
    }
}
