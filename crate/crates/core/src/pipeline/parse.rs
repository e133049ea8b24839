use crate::model::SpeechAct;

fn words(reply: &str) -> impl Iterator<Item = &str> {
    reply.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty())
}

/// The single option word present in `reply`, matched case-insensitively as
/// a whole word. `None` when no option or more than one distinct option
/// appears.
pub fn parse_act_reply(reply: &str) -> Option<SpeechAct> {
    let mut found = None;
    for word in words(reply) {
        let hit = SpeechAct::OPTIONS
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(word));
        match (found, hit) {
            (_, None) => {}
            (None, Some(act)) => found = Some(act),
            (Some(prev), Some(act)) if prev != act => return None,
            (Some(_), Some(_)) => {}
        }
    }
    found
}

/// First standalone `True` or `False` token, case-insensitive.
pub fn parse_verdict(reply: &str) -> Option<bool> {
    words(reply).find_map(|w| {
        if w.eq_ignore_ascii_case("true") {
            Some(true)
        } else if w.eq_ignore_ascii_case("false") {
            Some(false)
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn act_replies() {
        assert_eq!(parse_act_reply("Constatives"), Some(SpeechAct::Constatives));
        assert_eq!(parse_act_reply("  directives.\n"), Some(SpeechAct::Directives));
        assert_eq!(
            parse_act_reply("I think Commissives fits best"),
            Some(SpeechAct::Commissives)
        );
        assert_eq!(
            parse_act_reply("\"Acknowledgments\", Acknowledgments"),
            Some(SpeechAct::Acknowledgments)
        );
        assert_eq!(parse_act_reply("Constatives or Directives"), None);
        assert_eq!(parse_act_reply("none of these"), None);
        assert_eq!(parse_act_reply("Constative"), None);
        assert_eq!(parse_act_reply("NonConstatives"), None);
    }

    #[test]
    fn verdicts() {
        assert_eq!(parse_verdict("True"), Some(true));
        assert_eq!(parse_verdict("Output: False"), Some(false));
        assert_eq!(parse_verdict("[True / False] -> false"), Some(true));
        assert_eq!(parse_verdict("untrue"), None);
        assert_eq!(parse_verdict("maybe"), None);
    }
}
