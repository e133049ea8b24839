use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use duetwoz_core::corpus::{load_corpus, load_corpus_value, to_extended_json, CorpusFile, CorpusFormat, PipelineMeta};
use duetwoz_core::dst::{
    assemble_prompt, parse_state_output, run_dst, turn_lines, Carriage, DstOptions, DstRunner, ParseStatus, Variant,
};
use duetwoz_core::llm::{Gateway, Message, MockProvider, MockRule, MockScript, RetryPolicy, Role};
use duetwoz_core::metrics::{
    align, evaluate, joint_goal_accuracy, per_domain_jga, slot_accuracy, slot_class_accuracies, ClassRules,
    EvalOptions, Fraction, JgaMode, SlotClass, SlotUniverse,
};
use duetwoz_core::model::{Dialogue, DialogueState, SlotName, SlotValue, SpeechAct};
use duetwoz_core::pipeline::{ActPipeline, PromptTemplates};
use duetwoz_core::save_extended;
use duetwoz_core::stats::{corpus_stats, mine_error_cases, ErrorCategory};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fixtures::{self, dialogue, echo, state, CaseShape};
use crate::oracle::{self, Ratio};

/// The criterion cannot be evaluated in this environment.
#[derive(Debug)]
pub struct Unavailable(pub String);

impl std::fmt::Display for Unavailable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "unavailable: {}", self.0)
    }
}

impl std::error::Error for Unavailable {}

fn ratio(f: &Fraction) -> Ratio {
    (f.correct, f.total)
}

const SHAPE: CaseShape = CaseShape {
    max_dialogues: 5,
    max_turns: 6,
    exotic_values: true,
};

pub fn metric_oracle() -> Result<String> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0A11CE);
    let rules = ClassRules::default();
    let mut values = 0usize;
    for n in 0..50 {
        let case = fixtures::random_case(&mut rng, SHAPE);
        let expected = oracle::reference(&case.dialogues, &case.predictions);
        let aligned = align(&case.dialogues, &case.predictions)?;
        let domains = |m: BTreeMap<duetwoz_core::Domain, Fraction>| -> BTreeMap<String, Ratio> {
            m.iter().map(|(d, f)| (d.as_str().to_string(), ratio(f))).collect()
        };
        let classes = |m: BTreeMap<SlotClass, Fraction>| -> BTreeMap<&'static str, Ratio> {
            m.iter().map(|(c, f)| (c.as_str(), ratio(f))).collect()
        };
        let checks = [
            (
                "jga",
                ratio(&joint_goal_accuracy(&aligned, JgaMode::Cumulative)) == expected.jga_cumulative,
            ),
            (
                "jga/delta",
                ratio(&joint_goal_accuracy(&aligned, JgaMode::TurnDelta)) == expected.jga_delta,
            ),
            (
                "per-domain",
                domains(per_domain_jga(&aligned, JgaMode::Cumulative)) == expected.per_domain_cumulative,
            ),
            (
                "per-domain/delta",
                domains(per_domain_jga(&aligned, JgaMode::TurnDelta)) == expected.per_domain_delta,
            ),
            (
                "sa",
                ratio(&slot_accuracy(&aligned, SlotUniverse::AllSlots)) == expected.slot_accuracy,
            ),
            (
                "classes/single",
                classes(slot_class_accuracies(&aligned, Variant::SingleUser, &rules)) == expected.classes_single,
            ),
            (
                "classes/multi",
                classes(slot_class_accuracies(&aligned, Variant::MultiUser, &rules)) == expected.classes_multi,
            ),
        ];
        for (name, ok) in checks {
            ensure!(ok, "fixture {n}: {name} differs from the brute-force reference");
            values += 1;
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "50 fixtures, {values} metric tables identical, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

pub fn error_case_spot_checks() -> Result<String> {
    let missed_name = dialogue(
        "WARKWORTH",
        &[(
            "",
            "Do you have information about the Warkworth House?",
            Some("I'm curious about the history of Warkworth House too!"),
            state(&[("hotel-name", "warkworth house")]),
        )],
    );
    let spurious_area = dialogue(
        "CURRY",
        &[
            ("", "I am looking for a south indian restaurant.", None, state(&[("restaurant-food", "south indian")])),
            (
                "I have curry garden for Indian in the centre of town, but no south indian.",
                "What about one that serves mediterranean?",
                Some("I'm in for a Mediterranean experience. Let's explore some top-notch options in the center together!"),
                state(&[("restaurant-food", "mediterranean")]),
            ),
        ],
    );
    let dialogues = vec![missed_name.clone(), spurious_area.clone()];
    let single: Vec<_> = dialogues.iter().flat_map(echo).collect();
    let mut multi = echo(&missed_name);
    multi[0].cumulative = state(&[("hotel-name", "?")]);
    multi[0].parsed_delta = multi[0].cumulative.clone();
    let mut curry = echo(&spurious_area);
    curry[1].cumulative = curry[1]
        .cumulative
        .clone()
        .with(fixtures::slot("restaurant-area"), SlotValue::DontCare);
    multi.extend(curry);

    let cases = mine_error_cases(&dialogues, &single, &multi)?;
    let got: Vec<(&str, u32, ErrorCategory, Vec<&str>)> = cases
        .iter()
        .map(|c| {
            (
                c.dialogue_id.as_str(),
                c.turn_index,
                c.category,
                c.slots.iter().map(|s| s.as_str()).collect(),
            )
        })
        .collect();
    let want = vec![
        ("CURRY", 2, ErrorCategory::SlotType, vec!["restaurant-area"]),
        ("WARKWORTH", 1, ErrorCategory::ValueExtraction, vec!["hotel-name"]),
    ];
    let mut got_sorted = got.clone();
    got_sorted.sort();
    ensure!(got_sorted == want, "mined {got:?}");
    Ok("missed hotel-name -> value_extraction; spurious restaurant-area dontcare -> slot_type".into())
}

const IDENT: &str = "Select one option";
const GEN: &str = "You are User2";
const VAL: &str = "Output 'True'";

fn trace_dialogue() -> Dialogue {
    dialogue(
        "TRACE01.json",
        &[(
            "",
            "I need a cheap hotel in the north.",
            None,
            state(&[("hotel-area", "north"), ("hotel-pricerange", "cheap")]),
        )],
    )
}

fn mock_gateway(mock: Arc<MockProvider>) -> Result<Gateway> {
    Ok(Gateway::builder()
        .mock(mock)
        .retry(RetryPolicy {
            max_attempts: 1,
            base_delay_ms: 0,
            max_delay_ms: 0,
        })
        .build()?)
}

fn run_trace(validations: &[&str], golden: &str) -> Result<(u8, usize, usize)> {
    let script = MockScript::strict(vec![
        MockRule::contains(IDENT, ["Commissives"]),
        MockRule::contains(
            GEN,
            [
                "Maybe somewhere near the river?",
                "Could we get free parking too?",
                "We will park the car by the river.",
            ],
        ),
        MockRule::contains(VAL, validations.iter().copied()),
    ]);
    let mock = Arc::new(MockProvider::new(script));
    let gw = mock_gateway(mock.clone())?;
    let pipeline = ActPipeline::new(&gw, PromptTemplates::builtin(), "mock", 7);
    let (extended, results) = pipeline.extend_dialogue(&trace_dialogue(), &AtomicBool::new(false))?;
    let meta = PipelineMeta {
        generator_model: "mock".into(),
        generated_at: "2026-01-15T09:30:00Z".into(),
        prompt_version: PromptTemplates::builtin().version.clone(),
    };
    let rendered = to_extended_json(&[extended], &meta)?;
    let expected = std::fs::read_to_string(fixtures::golden(golden))?;
    ensure!(rendered == expected, "{golden} differs:\n{rendered}");
    ensure!(
        gw.call_count() as usize == mock.request_count(),
        "gateway and provider counts disagree"
    );
    Ok((
        results[0].attempts,
        results[0].rejection_log.len(),
        mock.request_count(),
    ))
}

pub fn pipeline_trace() -> Result<String> {
    let (attempts, rejections, calls) = run_trace(&["False", "False", "True"], "trace_accepted_attempt3.json")?;
    ensure!(
        attempts == 3 && rejections == 2,
        "accepted at attempt {attempts} with {rejections} rejections"
    );
    ensure!(calls == 1 + 3 + 3, "{calls} gateway calls");
    let (attempts, rejections, calls) = run_trace(&["False"], "trace_all_rejected.json")?;
    ensure!(
        attempts == 3 && rejections == 3 && calls == 7,
        "all-false run: {attempts} attempts, {rejections} rejections, {calls} calls"
    );
    Ok("accept on attempt 3 with 2 rejections in 7 calls; all-false discards; both golden files match".into())
}

const PREAMBLE: &str = "Track the user's goal as slot-value pairs.";

fn render_messages(messages: &[Message]) -> String {
    messages
        .iter()
        .map(|m| {
            let role = match m.role {
                Role::System => "system",
                Role::User => "user",
                Role::Assistant => "assistant",
            };
            format!("=== {role} ===\n{}\n", m.content)
        })
        .collect()
}

fn load_three() -> Result<Vec<Dialogue>> {
    let file = CorpusFile::new(fixtures::fixture("extended_three.json"), CorpusFormat::DuetwozExtended);
    Ok(load_corpus(&file, None)?.0)
}

fn expect_golden(name: &str, actual: &str) -> Result<()> {
    let expected = std::fs::read_to_string(fixtures::golden(name))?;
    ensure!(actual == expected, "{name} differs:\n{actual}");
    Ok(())
}

pub fn prompt_goldens() -> Result<String> {
    let corpus = load_three()?;
    let by_id = |id: &str| corpus.iter().find(|d| d.id == id).context("fixture dialogue missing");
    let restaurant = by_id("PMUL0002.json")?;
    let hotel = by_id("MUL0001.json")?;
    let single = render_messages(&assemble_prompt(
        PREAMBLE,
        &restaurant.turns[..1],
        Variant::SingleUser,
        Carriage::Session,
        &[],
    ));
    let multi = render_messages(&assemble_prompt(
        PREAMBLE,
        &restaurant.turns[..1],
        Variant::MultiUser,
        Carriage::Session,
        &[],
    ));
    expect_golden("prompt_turn1.txt", &single)?;
    expect_golden("prompt_turn1.txt", &multi)?;
    let shot = assemble_prompt(
        PREAMBLE,
        &hotel.turns[..3],
        Variant::MultiUser,
        Carriage::SingleShot,
        &[],
    );
    expect_golden("prompt_turn3_multi.txt", &render_messages(&shot))?;
    let replies = [
        r#"{"hotel-area": "north", "hotel-pricerange": "cheap"}"#.to_string(),
        r#"{"hotel-book_people": "2", "hotel-name": "acorn guest house"}"#.to_string(),
    ];
    let session = assemble_prompt(
        PREAMBLE,
        &hotel.turns[..3],
        Variant::MultiUser,
        Carriage::Session,
        &replies,
    );
    expect_golden("prompt_turn3_multi_session.txt", &render_messages(&session))?;

    let template = include_str!("../../prompts/v1/identification.txt");
    let options: Vec<&str> = template
        .lines()
        .filter(|l| {
            SpeechAct::OPTIONS
                .iter()
                .any(|a| l.trim_start().starts_with(&format!("- {} :", a.label())))
        })
        .collect();
    ensure!(options.len() == 4, "template has {} option paragraphs", options.len());
    let mut orders = std::collections::BTreeSet::new();
    for seed in 0..100u64 {
        let prompt = PromptTemplates::builtin().shuffled_identification(seed);
        for option in &options {
            let n = prompt.lines().filter(|l| l == option).count();
            ensure!(n == 1, "seed {seed}: option paragraph appears {n} times");
        }
        orders.insert(
            prompt
                .lines()
                .filter(|l| options.contains(l))
                .map(str::to_string)
                .collect::<Vec<_>>(),
        );
    }
    Ok(format!(
        "4 golden renderings byte-identical; options exactly once under 100 seeds ({} distinct orders)",
        orders.len()
    ))
}

fn delta_json(delta: &DialogueState) -> String {
    let map: serde_json::Map<String, serde_json::Value> = delta
        .iter()
        .map(|(k, v)| {
            let value = match v {
                SlotValue::None => serde_json::Value::Null,
                other => serde_json::Value::String(other.render().to_string()),
            };
            (k.as_str().to_string(), value)
        })
        .collect();
    serde_json::Value::Object(map).to_string()
}

fn echo_run(dialogues: &[Dialogue], variant: Variant, empty: bool) -> Result<duetwoz_core::EvalReport> {
    let replies: Vec<(String, String)> = dialogues
        .iter()
        .flat_map(|d| {
            d.turns
                .iter()
                .map(|t| (turn_lines(t, variant).join("\n"), delta_json(&t.gold_delta)))
        })
        .collect();
    let mock = Arc::new(MockProvider::with_responder(MockScript::default(), move |req| {
        if empty {
            return Some("{}".to_string());
        }
        let last = &req.messages.last()?.content;
        replies
            .iter()
            .find(|(block, _)| last.ends_with(block.as_str()))
            .map(|(_, reply)| reply.clone())
    }));
    let gw = mock_gateway(mock)?;
    let preamble = &PromptTemplates::builtin().dst_preamble;
    let runner = DstRunner::new(&gw, preamble, "mock", variant, Carriage::Session);
    let dir = tempfile::tempdir()?;
    let out = dir.path().join("predictions.jsonl");
    let outcome = run_dst(
        &runner,
        dialogues,
        &out,
        &DstOptions {
            workers: 3,
            corpus_path: None,
        },
        None,
    )?;
    let options = EvalOptions {
        variant,
        ..EvalOptions::default()
    };
    Ok(evaluate(dialogues, &outcome.records, &options)?)
}

pub fn gold_echo() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let shape = CaseShape {
        max_dialogues: 10,
        max_turns: 6,
        exotic_values: false,
    };
    let dialogues: Vec<Dialogue> = (0..10)
        .map(|i| {
            let mut d = fixtures::random_gold(&mut rng, &format!("ECHO{i:02}"), shape);
            for t in &mut d.turns {
                t.user1 = format!("[{} t{}] {}", d.id, t.index, t.user1);
            }
            d
        })
        .collect();
    let mut classes_seen = 0;
    for variant in [Variant::SingleUser, Variant::MultiUser] {
        let report = echo_run(&dialogues, variant, false)?;
        ensure!(
            report.overall_jga.value() == Some(1.0),
            "{variant}: JGA {:?}",
            report.overall_jga
        );
        ensure!(
            report.slot_accuracy.value() == Some(1.0),
            "{variant}: SA {:?}",
            report.slot_accuracy
        );
        for (class, f) in &report.class_accuracy {
            ensure!(f.value() == Some(1.0), "{variant}: {} accuracy {:?}", class.as_str(), f);
        }
        classes_seen = classes_seen.max(report.class_accuracy.len());
        let empty = echo_run(&dialogues, variant, true)?;
        let none = empty
            .class_accuracy
            .get(&SlotClass::None)
            .context("no none-class instances")?;
        ensure!(
            none.value() == Some(1.0),
            "{variant}: empty echo none-class accuracy {none:?}"
        );
    }
    Ok(format!(
        "10 dialogues, both variants: JGA = SA = 1.0, {classes_seen} present classes at 1.0; empty echo none = 1.0"
    ))
}

pub fn sa_at_least_jga() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let mut min_gap = f64::INFINITY;
    for n in 0..200 {
        let case = fixtures::random_case(&mut rng, SHAPE);
        let report = evaluate(&case.dialogues, &case.predictions, &EvalOptions::default())?;
        let (sa, jga) = (
            report.slot_accuracy.value().unwrap(),
            report.overall_jga.value().unwrap(),
        );
        ensure!(sa >= jga, "set {n}: SA {sa} < JGA {jga}");
        min_gap = min_gap.min(sa - jga);
    }
    Ok(format!("200 prediction sets, min SA - JGA = {min_gap:.4}"))
}

pub fn round_trip() -> Result<String> {
    let path = fixtures::fixture("extended_three.json");
    let original = std::fs::read(&path)?;
    let (dialogues, report) = load_corpus(&CorpusFile::new(&path, CorpusFormat::DuetwozExtended), None)?;
    let meta = report.pipeline_meta.context("fixture carries pipeline metadata")?;
    let dir = tempfile::tempdir()?;
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    save_extended(&dialogues, &meta, &a)?;
    save_extended(&dialogues, &meta, &b)?;
    let (a, b) = (std::fs::read(a)?, std::fs::read(b)?);
    ensure!(a == original, "re-saved corpus differs from the fixture");
    ensure!(a == b, "two saves differ");
    Ok(format!("{} dialogues, {} bytes, identical", dialogues.len(), a.len()))
}

pub fn stats_hand_counted() -> Result<String> {
    let stats = corpus_stats(&load_three()?);
    ensure!(
        stats.dialogue_count == 3 && stats.turn_count == 6 && stats.user2_count == 4,
        "counts {stats:?}"
    );
    let want = [
        (SpeechAct::Constatives, 1),
        (SpeechAct::Directives, 1),
        (SpeechAct::Commissives, 1),
        (SpeechAct::Acknowledgments, 1),
        (SpeechAct::None, 2),
    ];
    for (act, n) in want {
        let share = stats.act_distribution[&act];
        ensure!(share == n as f64 / 6.0, "{} share {share}", act.as_str());
    }
    // user1 words 8+5+7+9+4+8, user2 7+5+1+5, agent 8+3+5
    ensure!(
        stats.mean_words.user1 == Some(41.0 / 6.0),
        "user1 words {:?}",
        stats.mean_words.user1
    );
    ensure!(
        stats.mean_words.user2 == Some(18.0 / 4.0),
        "user2 words {:?}",
        stats.mean_words.user2
    );
    ensure!(
        stats.mean_words.agent == Some(16.0 / 3.0),
        "agent words {:?}",
        stats.mean_words.agent
    );
    ensure!(stats.mean_turns == Some(2.0), "mean turns {:?}", stats.mean_turns);
    Ok("act shares 1/6 x4 + none 2/6; mean words 6.83 / 4.50 / 5.33".into())
}

pub const MULTIWOZ_ENV: &str = "DUETWOZ_MULTIWOZ_DIR";

/// Test split of MultiWOZ 2.1: either a directory with `data.json` and
/// `testListFile.txt`, or a JSON file holding only the test dialogues.
fn load_test_split(path: &Path) -> Result<(Vec<Dialogue>, f64)> {
    let root: serde_json::Value = if path.is_dir() {
        let data: serde_json::Value = serde_json::from_slice(&std::fs::read(path.join("data.json"))?)?;
        let list = std::fs::read_to_string(path.join("testListFile.txt"))?;
        let mut subset = serde_json::Map::new();
        for id in list.lines().map(str::trim).filter(|l| !l.is_empty()) {
            subset.insert(
                id.to_string(),
                data.get(id)
                    .with_context(|| format!("{id} missing from data.json"))?
                    .clone(),
            );
        }
        serde_json::Value::Object(subset)
    } else {
        serde_json::from_slice(&std::fs::read(path)?)?
    };
    let (dialogues, report) = load_corpus_value(&root, CorpusFormat::Multiwoz21, None)?;
    Ok((dialogues, report.mean_turns().unwrap_or(0.0)))
}

pub fn stats_multiwoz() -> Result<String> {
    let Some(dir) = std::env::var_os(MULTIWOZ_ENV) else {
        bail!(Unavailable(format!(
            "MultiWOZ 2.1 is not bundled and was not downloadable here; set {MULTIWOZ_ENV}"
        )));
    };
    let (dialogues, mean) = load_test_split(Path::new(&dir))?;
    ensure!(dialogues.len() == 1000, "{} dialogues", dialogues.len());
    ensure!((mean - 7.36).abs() <= 0.01, "mean turns {mean:.4}");
    Ok(format!("1000 dialogues, mean turns {mean:.3}"))
}

fn render_state_json(rng: &mut ChaCha8Rng, st: &[(SlotName, String)]) -> String {
    let key = |s: SlotName, rng: &mut ChaCha8Rng| -> String {
        match rng.random_range(0..3) {
            0 => s.as_str().to_string(),
            1 => s.as_str().to_uppercase(),
            _ => s.as_str().replace('_', " "),
        }
    };
    match rng.random_range(0..4) {
        0 => {
            let body: Vec<String> = st
                .iter()
                .map(|(s, v)| format!("\"{}\": \"{v}\"", key(*s, rng)))
                .collect();
            format!("{{{}}}", body.join(", "))
        }
        1 => {
            let mut by_domain: BTreeMap<&str, Vec<String>> = BTreeMap::new();
            for (s, v) in st {
                by_domain
                    .entry(s.domain().as_str())
                    .or_default()
                    .push(format!("\"{}\": \"{v}\"", s.slot()));
            }
            let body: Vec<String> = by_domain
                .iter()
                .map(|(d, kv)| format!("\"{d}\": {{{}}}", kv.join(", ")))
                .collect();
            format!("{{{}}}", body.join(", "))
        }
        2 => {
            let body: Vec<String> = st
                .iter()
                .map(|(s, v)| format!("{{\"slot\": \"{}\", \"value\": \"{v}\"}}", key(*s, rng)))
                .collect();
            format!("[{}]", body.join(", "))
        }
        _ => {
            let body: Vec<String> = st.iter().map(|(s, v)| format!("\"{}\": \"{v}\"", s.as_str())).collect();
            format!("{{\"dialogue_state\": {{{}}}}}", body.join(", "))
        }
    }
}

fn add_trailing_comma(json: &str) -> String {
    let at = json.rfind(['}', ']']).unwrap();
    let inner = json[..at].rfind(['}', ']']).filter(|&i| i + 1 == at).unwrap_or(at);
    format!("{},{}", &json[..inner], &json[inner..])
}

const NOISE: [&str; 6] = [
    "",
    "I could not determine the state.",
    "No slots were mentioned in this turn",
    "}{ nothing useful ][",
    "\"hotel-area\": \"north\"",
    "```\nnot json at all\n```",
];

pub fn parser_fuzz() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let all: Vec<SlotName> = SlotName::all().collect();
    let (mut extractable, mut repaired, mut failed) = (0, 0, 0);
    for n in 0..500 {
        let k = rng.random_range(1..=4);
        let mut picked: BTreeMap<SlotName, String> = BTreeMap::new();
        while picked.len() < k {
            let s = *all.choose(&mut rng).unwrap();
            picked.insert(s, fixtures::canonical_value(&mut rng, s));
        }
        let pairs: Vec<(SlotName, String)> = picked.into_iter().collect();
        let reference: DialogueState = pairs
            .iter()
            .map(|(s, v)| (*s, SlotValue::literal(v.as_str())))
            .collect();
        let json = render_state_json(&mut rng, &pairs);
        let (raw, want): (String, Option<ParseStatus>) = match rng.random_range(0..8) {
            0 => (json, Some(ParseStatus::Ok)),
            1 => (
                format!("Sure! Here is the updated state:\n{json}\nLet me know if you need more."),
                Some(ParseStatus::Ok),
            ),
            2 => (format!("```json\n{json}\n```"), Some(ParseStatus::Repaired)),
            3 => (add_trailing_comma(&json), Some(ParseStatus::Repaired)),
            4 => (json[..json.len() - 1].to_string(), Some(ParseStatus::Repaired)),
            5 => (
                format!("State:\n```\n{}\n```", add_trailing_comma(&json)),
                Some(ParseStatus::Repaired),
            ),
            6 => (NOISE.choose(&mut rng).unwrap().to_string(), None),
            _ => {
                let cut = rng.random_range(0..json.len());
                (
                    json.chars().take(cut).filter(|c| *c != '{' && *c != '[').collect(),
                    None,
                )
            }
        };
        let outcome = catch_unwind(AssertUnwindSafe(|| parse_state_output(&raw)));
        let Ok((parsed, status)) = outcome else {
            bail!("case {n} panicked on {raw:?}")
        };
        for (s, _) in parsed.iter() {
            ensure!(SlotName::parse(s.as_str()).is_ok(), "case {n}: out-of-schema slot {s}");
        }
        match want {
            Some(expected) => {
                extractable += 1;
                ensure!(
                    parsed == reference,
                    "case {n}: {raw:?} parsed to {parsed:?}, reference {reference:?}"
                );
                ensure!(
                    status == expected,
                    "case {n}: status {status:?}, expected {expected:?} for {raw:?}"
                );
                if status == ParseStatus::Repaired {
                    repaired += 1;
                }
            }
            None if status == ParseStatus::Failed => {
                ensure!(parsed.is_empty(), "case {n}: failed parse kept {parsed:?}");
                failed += 1;
            }
            None => {}
        }
    }
    Ok(format!(
        "500 cases, {extractable} extractable all matching ({repaired} repaired), {failed} failed cleanly"
    ))
}
