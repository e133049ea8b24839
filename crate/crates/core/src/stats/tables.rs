use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::StatsError;
use crate::dst::RunManifest;
use crate::metrics::{EvalReport, Fraction, SlotClass};
use crate::model::Domain;

/// Baseline and second-user evaluations of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub model: String,
    pub single: EvalReport,
    pub multi: EvalReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_manifest: Option<RunManifest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi_manifest: Option<RunManifest>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonDocument {
    pub markdown: String,
    pub json: Value,
}

pub const DELTA_LABEL: &str = "w/ user2 utterances";

/// Percentage in tenths, rounded half up.
fn tenths(f: &Fraction) -> Option<i64> {
    (f.total > 0).then(|| ((f.correct as i128 * 2000 + f.total as i128) / (2 * f.total as i128)) as i64)
}

/// Mean of tenth-valued cells in hundredths, rounded half away from zero.
fn mean_hundredths(values: &[i64]) -> Option<i64> {
    if values.is_empty() {
        return None;
    }
    let sum: i64 = values.iter().sum::<i64>() * 10;
    let n = values.len() as i64;
    let half = n / 2;
    Some(if sum >= 0 { (sum + half) / n } else { (sum - half) / n })
}

fn fixed(value: i64, scale: i64, digits: usize, signed: bool) -> String {
    let sign = match (value < 0, signed && value > 0) {
        (true, _) => "-",
        (false, true) => "+",
        _ => "",
    };
    let abs = value.abs();
    format!("{sign}{}.{:0digits$}", abs / scale, abs % scale)
}

/// Baseline cell: one decimal.
pub fn fmt_value(tenths: Option<i64>) -> String {
    tenths.map_or_else(|| "n/a".into(), |t| fixed(t, 10, 1, false))
}

/// Delta cell: signed one decimal, `0.0` for no change.
pub fn fmt_delta(tenths: Option<i64>) -> String {
    tenths.map_or_else(|| "n/a".into(), |t| fixed(t, 10, 1, true))
}

fn fmt_avg(hundredths: Option<i64>, signed: bool) -> String {
    hundredths.map_or_else(|| "n/a".into(), |h| fixed(h, 100, 2, signed))
}

fn json_num(v: Option<i64>, scale: f64) -> Value {
    v.map_or(Value::Null, |v| json!(v as f64 / scale))
}

struct Row {
    base: Vec<Option<i64>>,
    delta: Vec<Option<i64>>,
}

fn row(single: &[Option<i64>], multi: &[Option<i64>]) -> Row {
    Row {
        base: single.to_vec(),
        delta: single.iter().zip(multi).map(|(s, m)| Some((*m)? - (*s)?)).collect(),
    }
}

fn domain_cells(report: &EvalReport, domains: &[Domain]) -> Vec<Option<i64>> {
    domains
        .iter()
        .map(|d| report.per_domain_jga.get(d).and_then(tenths))
        .collect()
}

/// Average of the displayed per-domain cells, in hundredths.
fn domain_avg(cells: &[Option<i64>]) -> Option<i64> {
    let present: Vec<i64> = cells.iter().flatten().copied().collect();
    mean_hundredths(&present)
}

fn markdown_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n", header.join(" | "));
    out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for r in rows {
        out.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    out
}

/// Renders the per-domain JGA table and the slot-level table for each
/// model: a baseline row followed by a multi-minus-single delta row.
pub fn render_comparison(models: &[ModelComparison]) -> Result<ComparisonDocument, StatsError> {
    let domain_set: Option<BTreeSet<Domain>> = models
        .first()
        .map(|m| m.single.per_domain_jga.keys().copied().collect());
    let domain_set = domain_set.unwrap_or_default();
    for m in models {
        for (variant, report) in [("single", &m.single), ("multi", &m.multi)] {
            let got: BTreeSet<Domain> = report.per_domain_jga.keys().copied().collect();
            if got != domain_set {
                return Err(StatsError::DomainMismatch {
                    model: m.model.clone(),
                    variant,
                    expected: domain_set.iter().map(|d| d.to_string()).collect(),
                    found: got.iter().map(|d| d.to_string()).collect(),
                });
            }
        }
    }
    let domains: Vec<Domain> = Domain::ALL.into_iter().filter(|d| domain_set.contains(d)).collect();

    let mut jga_header = vec!["Models".to_string()];
    jga_header.extend(domains.iter().map(|d| d.short_label().to_string()));
    jga_header.push("Avg.".into());
    let mut slot_header = vec!["Models".to_string()];
    slot_header.extend(SlotClass::ALL.iter().map(|c| format!("\"{}\"", c.label())));
    slot_header.extend(["SA".to_string(), "JGA".to_string()]);

    let mut jga_rows = Vec::new();
    let mut slot_rows = Vec::new();
    let mut jga_json = Vec::new();
    let mut slot_json = Vec::new();
    let mut manifests = Vec::new();
    for m in models {
        let single_cells = domain_cells(&m.single, &domains);
        let multi_cells = domain_cells(&m.multi, &domains);
        let jga = row(&single_cells, &multi_cells);
        let base_avg = domain_avg(&jga.base);
        let delta_cells: Vec<i64> = jga.delta.iter().flatten().copied().collect();
        let delta_avg = if delta_cells.len() == domains.len() {
            mean_hundredths(&delta_cells)
        } else {
            None
        };

        let mut base = vec![m.model.clone()];
        base.extend(jga.base.iter().map(|c| fmt_value(*c)));
        base.push(fmt_avg(base_avg, false));
        let mut delta = vec![DELTA_LABEL.to_string()];
        delta.extend(jga.delta.iter().map(|c| fmt_delta(*c)));
        delta.push(fmt_avg(delta_avg, true));
        jga_rows.push(base);
        jga_rows.push(delta);

        let mut base_obj = Map::new();
        let mut delta_obj = Map::new();
        for (i, d) in domains.iter().enumerate() {
            base_obj.insert(d.as_str().into(), json_num(jga.base[i], 10.0));
            delta_obj.insert(d.as_str().into(), json_num(jga.delta[i], 10.0));
        }
        base_obj.insert("avg".into(), json_num(base_avg, 100.0));
        delta_obj.insert("avg".into(), json_num(delta_avg, 100.0));
        jga_json.push(json!({"model": m.model, "baseline": base_obj, "delta": delta_obj}));

        let class_cells = |r: &EvalReport| -> Vec<Option<i64>> {
            let mut cells: Vec<Option<i64>> = SlotClass::ALL
                .iter()
                .map(|c| r.class_accuracy.get(c).and_then(tenths))
                .collect();
            cells.push(tenths(&r.slot_accuracy));
            cells
        };
        let slots = row(&class_cells(&m.single), &class_cells(&m.multi));
        let mut base = vec![m.model.clone()];
        base.extend(slots.base.iter().map(|c| fmt_value(*c)));
        base.push(fmt_avg(base_avg, false));
        let mut delta = vec![DELTA_LABEL.to_string()];
        delta.extend(slots.delta.iter().map(|c| fmt_delta(*c)));
        delta.push(fmt_avg(delta_avg, true));
        slot_rows.push(base);
        slot_rows.push(delta);

        let mut base_obj = Map::new();
        let mut delta_obj = Map::new();
        for (i, c) in SlotClass::ALL.iter().enumerate() {
            base_obj.insert(c.as_str().into(), json_num(slots.base[i], 10.0));
            delta_obj.insert(c.as_str().into(), json_num(slots.delta[i], 10.0));
        }
        let sa = SlotClass::ALL.len();
        base_obj.insert("sa".into(), json_num(slots.base[sa], 10.0));
        delta_obj.insert("sa".into(), json_num(slots.delta[sa], 10.0));
        base_obj.insert("jga".into(), json_num(base_avg, 100.0));
        delta_obj.insert("jga".into(), json_num(delta_avg, 100.0));
        slot_json.push(json!({"model": m.model, "baseline": base_obj, "delta": delta_obj}));

        manifests.push(json!({"model": m.model, "single": m.single_manifest, "multi": m.multi_manifest}));
    }

    let mut markdown = String::from("## Per-domain joint goal accuracy (%)\n\n");
    markdown.push_str(&markdown_table(&jga_header, &jga_rows));
    markdown.push_str("\n## Slot-level metrics (%)\n\n");
    markdown.push_str(&markdown_table(&slot_header, &slot_rows));
    let traced: Vec<&RunManifest> = models
        .iter()
        .flat_map(|m| [m.single_manifest.as_ref(), m.multi_manifest.as_ref()])
        .flatten()
        .collect();
    if !traced.is_empty() {
        markdown.push_str(
            "\n## Runs\n\n| Model | Variant | Corpus SHA-256 | Prompt version | Finished |\n|---|---|---|---|---|\n",
        );
        for r in traced {
            markdown.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                r.model,
                r.variant,
                &r.corpus_sha256[..r.corpus_sha256.len().min(12)],
                r.prompt_version,
                r.finished_at.as_deref().unwrap_or("unfinished")
            ));
        }
    }

    let json = json!({
        "per_domain_jga": {"columns": domains.iter().map(|d| d.as_str()).collect::<Vec<_>>(), "rows": jga_json},
        "slot_level": {"columns": SlotClass::ALL.iter().map(|c| c.as_str()).chain(["sa", "jga"]).collect::<Vec<_>>(), "rows": slot_json},
        "runs": manifests,
    });
    Ok(ComparisonDocument { markdown, json })
}
