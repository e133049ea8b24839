use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::llm::Message;
use crate::model::Turn;

/// Whether second-user utterances are shown to the tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    SingleUser,
    MultiUser,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::SingleUser => "single_user",
            Variant::MultiUser => "multi_user",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "single" | "single_user" => Ok(Variant::SingleUser),
            "multi" | "multi_user" => Ok(Variant::MultiUser),
            other => Err(format!("unknown variant `{other}` (expected single or multi)")),
        }
    }
}

/// How the growing transcript is sent to the model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Carriage {
    /// One user message per turn with the model's earlier replies
    /// interleaved as assistant messages.
    #[default]
    Session,
    /// The whole transcript so far as a single user message.
    SingleShot,
}

impl FromStr for Carriage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "session" => Ok(Carriage::Session),
            "single-shot" | "singleshot" => Ok(Carriage::SingleShot),
            other => Err(format!("unknown carriage `{other}` (expected session or single-shot)")),
        }
    }
}

/// The `"agent"`, `"user1"` and optional `"user2"` lines of one turn.
pub fn turn_lines(turn: &Turn, variant: Variant) -> Vec<String> {
    let mut lines = vec![
        format!("\"agent\": {}", turn.agent),
        format!("\"user1\": {}", turn.user1),
    ];
    if variant == Variant::MultiUser {
        if let Some(text) = turn.user2_text() {
            lines.push(format!("\"user2\": {text}"));
        }
    }
    lines
}

fn turn_block(turn: &Turn, variant: Variant) -> String {
    turn_lines(turn, variant).join("\n")
}

/// Preamble followed by every turn's lines, as one text.
pub fn render_transcript(preamble: &str, turns: &[Turn], variant: Variant) -> String {
    let mut out = preamble.trim_end().to_string();
    out.push_str("\n\n");
    let blocks: Vec<String> = turns.iter().map(|t| turn_block(t, variant)).collect();
    out.push_str(&blocks.join("\n"));
    out
}

/// Messages for querying the state update at the last of `turns`.
///
/// In session carriage `prior_replies[i]` is the model's raw reply at turn
/// `i + 1`; it must cover every turn before the last.
pub fn assemble_prompt(
    preamble: &str,
    turns: &[Turn],
    variant: Variant,
    carriage: Carriage,
    prior_replies: &[String],
) -> Vec<Message> {
    assert!(!turns.is_empty(), "assemble_prompt needs at least one turn");
    match carriage {
        Carriage::SingleShot => vec![Message::user(render_transcript(preamble, turns, variant))],
        Carriage::Session => {
            assert!(
                prior_replies.len() + 1 >= turns.len(),
                "session carriage needs a reply for every earlier turn"
            );
            let mut messages = Vec::with_capacity(turns.len() * 2 - 1);
            messages.push(Message::user(render_transcript(preamble, &turns[..1], variant)));
            for (turn, reply) in turns[1..].iter().zip(prior_replies) {
                messages.push(Message::assistant(reply.clone()));
                messages.push(Message::user(turn_block(turn, variant)));
            }
            messages
        }
    }
}
