use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Dialogue, SpeechAct};
use crate::util::word_count;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanWords {
    pub user1: Option<f64>,
    pub user2: Option<f64>,
    pub agent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub dialogue_count: usize,
    pub turn_count: usize,
    pub mean_turns: Option<f64>,
    pub user2_count: usize,
    pub act_counts: BTreeMap<SpeechAct, usize>,
    /// Share of all turns per act, `none` for turns without a second-user
    /// utterance.
    pub act_distribution: BTreeMap<SpeechAct, f64>,
    /// Whitespace-delimited words per non-empty utterance.
    pub mean_words: MeanWords,
}

#[derive(Default)]
struct Mean {
    sum: usize,
    n: usize,
}

impl Mean {
    fn add(&mut self, text: &str) {
        if !text.trim().is_empty() {
            self.sum += word_count(text);
            self.n += 1;
        }
    }

    fn get(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum as f64 / self.n as f64)
    }
}

pub fn corpus_stats(dialogues: &[Dialogue]) -> CorpusStats {
    let mut act_counts: BTreeMap<SpeechAct, usize> = SpeechAct::ALL.iter().map(|a| (*a, 0)).collect();
    let (mut user1, mut user2, mut agent) = (Mean::default(), Mean::default(), Mean::default());
    let mut turn_count = 0;
    for d in dialogues {
        for t in &d.turns {
            turn_count += 1;
            *act_counts.entry(t.act()).or_default() += 1;
            user1.add(&t.user1);
            agent.add(&t.agent);
            if let Some(text) = t.user2_text() {
                user2.add(text);
            }
        }
    }
    let act_distribution = if turn_count == 0 {
        BTreeMap::new()
    } else {
        act_counts
            .iter()
            .map(|(a, n)| (*a, *n as f64 / turn_count as f64))
            .collect()
    };
    CorpusStats {
        dialogue_count: dialogues.len(),
        turn_count,
        mean_turns: (!dialogues.is_empty()).then(|| turn_count as f64 / dialogues.len() as f64),
        user2_count: user2.n,
        act_counts,
        act_distribution,
        mean_words: MeanWords {
            user1: user1.get(),
            user2: user2.get(),
            agent: agent.get(),
        },
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.digits$}"))
}

/// Markdown summary of corpus statistics.
pub fn render_stats_markdown(stats: &CorpusStats) -> String {
    let mut out = String::new();
    out.push_str("| Statistic | Value |\n|---|---|\n");
    out.push_str(&format!("| Dialogues | {} |\n", stats.dialogue_count));
    out.push_str(&format!("| Turns | {} |\n", stats.turn_count));
    out.push_str(&format!("| Mean turns per dialogue | {} |\n", opt(stats.mean_turns, 2)));
    out.push_str(&format!(
        "| Mean words (user1) | {} |\n",
        opt(stats.mean_words.user1, 2)
    ));
    out.push_str(&format!(
        "| Mean words (user2) | {} |\n",
        opt(stats.mean_words.user2, 2)
    ));
    out.push_str(&format!(
        "| Mean words (agent) | {} |\n",
        opt(stats.mean_words.agent, 2)
    ));
    out.push_str("\n| Act | Turns | Share (%) |\n|---|---|---|\n");
    for act in SpeechAct::ALL {
        let n = stats.act_counts.get(&act).copied().unwrap_or(0);
        let share = stats.act_distribution.get(&act).map(|v| v * 100.0);
        out.push_str(&format!("| {} | {} | {} |\n", act.label(), n, opt(share, 1)));
    }
    out
}
