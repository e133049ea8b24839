use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::SpeechAct;

pub const DIALOGUE_HISTORY: &str = "DIALOGUE HISTORY";
pub const AGENT_UTTERANCE: &str = "AGENT UTTERANCE";
pub const USER1_UTTERANCE: &str = "USER1 UTTERANCE";
pub const USER2_UTTERANCE: &str = "USER2 UTTERANCE";
pub const SLOT_VALUES: &str = "SLOT VALUE OF CURRENT TURN";
pub const UTTERANCE_TYPE: &str = "UTTERANCE TYPE";

const IDENTIFICATION_PLACEHOLDERS: &[&str] = &[DIALOGUE_HISTORY, AGENT_UTTERANCE, USER1_UTTERANCE];
const GENERATION_PLACEHOLDERS: &[&str] = &[DIALOGUE_HISTORY, USER1_UTTERANCE, SLOT_VALUES, UTTERANCE_TYPE];
const VALIDATION_PLACEHOLDERS: &[&str] = &[AGENT_UTTERANCE, USER1_UTTERANCE, USER2_UTTERANCE, SLOT_VALUES];

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{template} template: expected placeholders {expected:?}, found {found:?}")]
    Placeholders {
        template: &'static str,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("identification template: expected one option line for {0}")]
    OptionBlock(&'static str),
    #[error("VERSION is empty")]
    EmptyVersion,
}

/// Versioned prompt texts for the extension pipeline and DST preamble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub identification: String,
    pub generation: String,
    pub validation: String,
    pub dst_preamble: String,
    pub version: String,
    /// Line indices of the four option paragraphs in `identification`,
    /// in canonical act order.
    option_lines: [usize; 4],
}

impl PromptTemplates {
    pub fn builtin() -> &'static PromptTemplates {
        static BUILTIN: std::sync::LazyLock<PromptTemplates> = std::sync::LazyLock::new(|| {
            PromptTemplates::new(
                include_str!("../../prompts/v1/identification.txt"),
                include_str!("../../prompts/v1/generation.txt"),
                include_str!("../../prompts/v1/validation.txt"),
                include_str!("../../prompts/v1/dst_preamble.txt"),
                include_str!("../../prompts/v1/VERSION"),
            )
            .expect("bundled prompt templates are well formed")
        });
        &BUILTIN
    }

    pub fn new(
        identification: &str,
        generation: &str,
        validation: &str,
        dst_preamble: &str,
        version: &str,
    ) -> Result<PromptTemplates, TemplateError> {
        check_placeholders("identification", identification, IDENTIFICATION_PLACEHOLDERS)?;
        check_placeholders("generation", generation, GENERATION_PLACEHOLDERS)?;
        check_placeholders("validation", validation, VALIDATION_PLACEHOLDERS)?;
        check_placeholders("dst_preamble", dst_preamble, &[])?;
        let version = version.trim();
        if version.is_empty() {
            return Err(TemplateError::EmptyVersion);
        }
        let option_lines = locate_options(identification)?;
        Ok(PromptTemplates {
            identification: identification.trim_end().to_string(),
            generation: generation.trim_end().to_string(),
            validation: validation.trim_end().to_string(),
            dst_preamble: dst_preamble.trim_end().to_string(),
            version: version.to_string(),
            option_lines,
        })
    }

    /// Reads `identification.txt`, `generation.txt`, `validation.txt`,
    /// `dst_preamble.txt` and `VERSION` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<PromptTemplates, TemplateError> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|source| TemplateError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        PromptTemplates::new(
            &read("identification.txt")?,
            &read("generation.txt")?,
            &read("validation.txt")?,
            &read("dst_preamble.txt")?,
            &read("VERSION")?,
        )
    }

    /// Identification template with its option paragraphs permuted by `seed`.
    pub fn shuffled_identification(&self, seed: u64) -> String {
        let mut lines: Vec<&str> = self.identification.lines().collect();
        let originals: Vec<&str> = self.option_lines.iter().map(|&i| lines[i]).collect();
        let mut order = originals.clone();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut slots = self.option_lines;
        slots.sort_unstable();
        for (slot, line) in slots.iter().zip(order) {
            lines[*slot] = line;
        }
        lines.join("\n")
    }
}

/// Acts in the order their option paragraphs appear in `prompt`.
pub fn option_order(prompt: &str) -> Vec<SpeechAct> {
    prompt.lines().filter_map(option_of_line).collect()
}

fn option_of_line(line: &str) -> Option<SpeechAct> {
    let rest = line.trim_start().strip_prefix("- ")?;
    SpeechAct::OPTIONS.into_iter().find(|act| {
        rest.strip_prefix(act.label())
            .is_some_and(|tail| tail.trim_start().starts_with(':'))
    })
}

fn locate_options(identification: &str) -> Result<[usize; 4], TemplateError> {
    let mut found = [None; 4];
    for (i, line) in identification.lines().enumerate() {
        if let Some(act) = option_of_line(line) {
            let k = SpeechAct::OPTIONS.iter().position(|a| *a == act).unwrap_or_default();
            if found[k].replace(i).is_some() {
                return Err(TemplateError::OptionBlock(act.label()));
            }
        }
    }
    let mut lines = [0; 4];
    for (k, slot) in found.iter().enumerate() {
        lines[k] = slot.ok_or(TemplateError::OptionBlock(SpeechAct::OPTIONS[k].label()))?;
    }
    Ok(lines)
}

/// Upper-case `{NAME}` tokens in order of first appearance.
pub fn placeholders(template: &str) -> Vec<String> {
    let mut seen = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_placeholder_name(&after[..close]) => {
                let name = after[..close].to_string();
                if !seen.contains(&name) {
                    seen.push(name);
                }
                rest = &after[close + 1..];
            }
            _ => rest = after,
        }
    }
    seen
}

fn is_placeholder_name(name: &str) -> bool {
    !name.is_empty()
        && name.starts_with(|c: char| c.is_ascii_uppercase())
        && name
            .chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == ' ' || c == '_')
}

fn check_placeholders(template: &'static str, text: &str, expected: &[&str]) -> Result<(), TemplateError> {
    let found: BTreeSet<String> = placeholders(text).into_iter().collect();
    let want: BTreeSet<String> = expected.iter().map(|s| s.to_string()).collect();
    if found == want {
        Ok(())
    } else {
        Err(TemplateError::Placeholders {
            template,
            expected: want.into_iter().collect(),
            found: found.into_iter().collect(),
        })
    }
}

/// Substitutes `{NAME}` tokens in one pass; substituted text is never
/// re-scanned and unknown tokens are left as they are.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let value = after.find('}').and_then(|close| {
            let name = &after[..close];
            values.iter().find(|(k, _)| *k == name).map(|(_, v)| (*v, close))
        });
        match value {
            Some((v, close)) => {
                out.push_str(v);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
