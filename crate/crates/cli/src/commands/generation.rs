use anyhow::Context as _;
use chrono::{DateTime, SecondsFormat, Utc};
use duetwoz_core::dst::{run_dst, Carriage, DstOptions, DstRunner};
use duetwoz_core::pipeline::{extend_corpus, ActPipeline, ExtendOptions};
use duetwoz_core::{save_extended, PipelineMeta};
use serde_json::json;

use super::variant_of;
use crate::args::{CarriageArg, EvaluateArgs, ExtendArgs};
use crate::context::{read_corpus, Context, UsageError};
use crate::emit_summary;

fn generated_at(flag: Option<&str>) -> anyhow::Result<String> {
    let time = match flag {
        Some(text) => DateTime::parse_from_rfc3339(text)
            .map_err(|e| UsageError::new(format!("--generated-at {text:?}: {e}")))?
            .with_timezone(&Utc),
        None => Utc::now(),
    };
    Ok(time.to_rfc3339_opts(SecondsFormat::Secs, true))
}

pub fn extend(ctx: &Context, args: &ExtendArgs) -> anyhow::Result<()> {
    let generated_at = generated_at(args.generated_at.as_deref())?;
    let dialogues = read_corpus(&args.input)?;
    let templates = ctx.templates()?;
    let gateway = ctx.gateway(&templates.version)?;
    let pipeline = ActPipeline::new(&gateway, &templates, &args.model, ctx.config.seed);
    let options = ExtendOptions {
        workers: ctx.workers(args.workers),
        checkpoint: args.checkpoint.clone(),
        trace: args.trace.clone(),
    };
    log::info!("extending {} dialogues with {}", dialogues.len(), args.model);
    let outcome = extend_corpus(&pipeline, &dialogues, &options, None)?;
    let meta = PipelineMeta {
        generator_model: args.model.clone(),
        generated_at,
        prompt_version: templates.version.clone(),
    };
    save_extended(&outcome.dialogues, &meta, &args.out).with_context(|| format!("writing {}", args.out.display()))?;

    let turns: usize = outcome.dialogues.iter().map(|d| d.turns.len()).sum();
    let user2: usize = outcome.dialogues.iter().map(|d| d.user2_count()).sum();
    emit_summary(&json!({
        "command": "extend",
        "out": args.out,
        "dialogues": outcome.dialogues.len(),
        "resumed": outcome.resumed,
        "turns": turns,
        "user2_utterances": user2,
        "discarded": turns - user2,
        "requests": gateway.call_count(),
    }))
}

pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> anyhow::Result<()> {
    let dialogues = read_corpus(&args.corpus)?;
    let templates = ctx.templates()?;
    let gateway = ctx.gateway(&templates.version)?;
    let carriage = match args.carriage {
        Some(CarriageArg::Session) => Carriage::Session,
        Some(CarriageArg::SingleShot) => Carriage::SingleShot,
        None => ctx.config.carriage,
    };
    let variant = variant_of(args.variant);
    let runner = DstRunner::new(&gateway, &templates.dst_preamble, &args.model, variant, carriage);
    let options = DstOptions {
        workers: ctx.workers(args.workers),
        corpus_path: Some(args.corpus.clone()),
    };
    log::info!("tracking {} dialogues with {} ({variant})", dialogues.len(), args.model);
    let outcome = run_dst(&runner, &dialogues, &args.out, &options, None)?;
    emit_summary(&json!({
        "command": "evaluate",
        "out": args.out,
        "manifest": duetwoz_core::dst::manifest_path(&args.out),
        "variant": variant,
        "dialogues": outcome.manifest.dialogues,
        "turns": outcome.manifest.turns,
        "resumed": outcome.resumed_dialogues,
        "parse_status": outcome.manifest.parse_status,
        "requests": outcome.manifest.requests,
    }))
}
