use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Context as _;
use duetwoz_core::annotate::Judgment;
use duetwoz_core::dst::{load_predictions, manifest_path};
use duetwoz_core::metrics::{evaluate as score_predictions, EvalOptions, JgaMode, SlotUniverse};
use duetwoz_core::stats::{
    clean_subset_eval, consistent_dialogues, corpus_stats, mine_error_cases, render_comparison, render_stats_markdown,
    ErrorCategory, ModelComparison,
};
use duetwoz_core::{EvalReport, RunManifest, Variant};
use serde_json::{json, Value};

use super::{variant_of, write_pretty, write_text};
use crate::args::{CompareArgs, JgaModeArg, MetricArgs, ReportArgs, ScoreArgs, StatsArgs, UniverseArg};
use crate::context::{read_corpus, Context, UsageError};
use crate::emit_summary;

fn read_manifest(predictions: &Path) -> Option<RunManifest> {
    let path = manifest_path(predictions);
    let text = fs::read_to_string(&path).ok()?;
    match serde_json::from_str(&text) {
        Ok(m) => Some(m),
        Err(e) => {
            log::warn!("{}: unreadable manifest ({e})", path.display());
            None
        }
    }
}

fn eval_options(ctx: &Context, metrics: &MetricArgs, variant: Variant) -> EvalOptions {
    let mut options = ctx.config.evaluation.options(variant);
    options.classes |= metrics.classes;
    if let Some(mode) = metrics.jga_mode {
        options.jga_mode = match mode {
            JgaModeArg::Cumulative => JgaMode::Cumulative,
            JgaModeArg::TurnDelta => JgaMode::TurnDelta,
        };
    }
    if let Some(universe) = metrics.slot_universe {
        options.slot_universe = match universe {
            UniverseArg::AllSlots => SlotUniverse::AllSlots,
            UniverseArg::DialogueDomains => SlotUniverse::DialogueDomains,
        };
    }
    options
}

pub fn score(ctx: &Context, args: &ScoreArgs) -> anyhow::Result<()> {
    let predictions = load_predictions(&args.pred)?;
    let gold = read_corpus(&args.gold)?;
    let variant = match args.variant {
        Some(v) => variant_of(v),
        None => match read_manifest(&args.pred) {
            Some(m) => m.variant,
            None => {
                log::warn!(
                    "no run manifest next to {}; assuming the single-user variant",
                    args.pred.display()
                );
                Variant::SingleUser
            }
        },
    };
    let options = eval_options(ctx, &args.metrics, variant);
    let report = score_predictions(&gold, &predictions, &options)?;
    if let Some(out) = &args.out {
        write_pretty(out, &report)?;
    }
    emit_summary(&json!({
        "command": "score",
        "overall_jga": report.overall_jga.percent(),
        "slot_accuracy": report.slot_accuracy.percent(),
        "report": report,
    }))
}

/// Reads an [`EvalReport`], either bare or wrapped in a `score` summary.
fn read_report(path: &Path) -> anyhow::Result<EvalReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(inner) = value.get_mut("report") {
        value = inner.take();
    }
    serde_json::from_value(value).with_context(|| format!("{} is not a score report", path.display()))
}

pub fn compare(args: &CompareArgs) -> anyhow::Result<()> {
    let single = read_report(&args.a)?;
    let multi = read_report(&args.b)?;
    let doc = render_comparison(&[ModelComparison {
        model: args.model.clone(),
        single,
        multi,
        single_manifest: None,
        multi_manifest: None,
    }])?;
    print!("{}", doc.markdown);
    emit_summary(&json!({"command": "compare", "tables": doc.json}))
}

pub fn stats(args: &StatsArgs) -> anyhow::Result<()> {
    let dialogues = read_corpus(&args.corpus)?;
    let stats = corpus_stats(&dialogues);
    if let Some(out) = &args.out {
        write_pretty(out, &stats)?;
    }
    print!("{}", render_stats_markdown(&stats));
    emit_summary(&json!({"command": "stats", "stats": stats}))
}

fn read_judgments(path: &Path) -> anyhow::Result<Vec<Judgment>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

pub fn report(ctx: &Context, args: &ReportArgs) -> anyhow::Result<()> {
    let gold = read_corpus(&args.gold)?;
    let single = load_predictions(&args.single)?;
    let multi = load_predictions(&args.multi)?;
    let single_manifest = read_manifest(&args.single);
    let multi_manifest = read_manifest(&args.multi);
    for (flag, manifest, expected) in [
        ("--single", &single_manifest, Variant::SingleUser),
        ("--multi", &multi_manifest, Variant::MultiUser),
    ] {
        if let Some(m) = manifest.as_ref().filter(|m| m.variant != expected) {
            return Err(UsageError::new(format!(
                "{flag} predictions were produced with the {} variant",
                m.variant
            ))
            .into());
        }
    }
    let model = args
        .model
        .clone()
        .or_else(|| single_manifest.as_ref().map(|m| m.model.clone()))
        .or_else(|| multi_manifest.as_ref().map(|m| m.model.clone()))
        .unwrap_or_else(|| "model".to_string());

    let mut options = ctx.config.evaluation.options(Variant::SingleUser);
    options.classes = true;
    let single_report = score_predictions(&gold, &single, &options)?;
    let multi_report = score_predictions(
        &gold,
        &multi,
        &EvalOptions {
            variant: Variant::MultiUser,
            ..options.clone()
        },
    )?;
    let doc = render_comparison(&[ModelComparison {
        model: model.clone(),
        single: single_report.clone(),
        multi: multi_report.clone(),
        single_manifest,
        multi_manifest,
    }])?;

    let cases = mine_error_cases(&gold, &single, &multi)?;
    let mut by_category: BTreeMap<ErrorCategory, usize> = BTreeMap::new();
    for c in &cases {
        *by_category.entry(c.category).or_default() += 1;
    }

    let mut markdown = format!("# DST comparison: {model}\n\n{}", doc.markdown);
    markdown.push_str(&format!(
        "\n## Error cases\n\n{} turns tracked correctly without second-user utterances but not with them.\n\n| Category | Turns |\n|---|---|\n",
        cases.len()
    ));
    for category in [ErrorCategory::ValueExtraction, ErrorCategory::SlotType] {
        let name = serde_json::to_value(category)?;
        markdown.push_str(&format!(
            "| {} | {} |\n",
            name.as_str().unwrap_or_default(),
            by_category.get(&category).copied().unwrap_or(0)
        ));
    }

    let mut clean = Value::Null;
    if let Some(path) = &args.judgments {
        let judgments = read_judgments(path)?;
        let ids = consistent_dialogues(judgments.iter().map(|j| (j.dialogue_id.as_str(), j.slot_consistent)));
        let (s, m) = clean_subset_eval(&gold, &single, &multi, &ids, &options)?;
        let subset_doc = render_comparison(&[ModelComparison {
            model: model.clone(),
            single: s.clone(),
            multi: m.clone(),
            single_manifest: None,
            multi_manifest: None,
        }])?;
        markdown.push_str(&format!(
            "\n# Slot-consistent subset ({} dialogues)\n\n{}",
            ids.len(),
            subset_doc.markdown.replace("\n## Runs", "\n### Runs")
        ));
        clean = json!({"dialogues": ids, "single": s, "multi": m, "tables": subset_doc.json});
    }

    let report_json = json!({
        "model": model,
        "single": single_report,
        "multi": multi_report,
        "tables": doc.json,
        "error_cases": {"total": cases.len(), "by_category": by_category},
        "clean_subset": clean,
    });
    let mut cases_text = String::new();
    for c in &cases {
        cases_text.push_str(&serde_json::to_string(c)?);
        cases_text.push('\n');
    }
    let md_path = args.out.join("report.md");
    let json_path = args.out.join("report.json");
    let cases_path = args.out.join("error_cases.jsonl");
    write_text(&md_path, &markdown)?;
    write_pretty(&json_path, &report_json)?;
    write_text(&cases_path, &cases_text)?;
    emit_summary(&json!({
        "command": "report",
        "model": model,
        "out": args.out,
        "files": [md_path, json_path, cases_path],
        "single_jga": single_report.overall_jga.percent(),
        "multi_jga": multi_report.overall_jga.percent(),
        "error_cases": cases.len(),
    }))
}
