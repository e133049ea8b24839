use std::net::SocketAddr;
use std::sync::Arc;

use anyhow::Context as _;
use duetwoz_core::annotate::{sample_tasks, serve, AnnotateService, JudgmentStore};
use serde_json::json;

use crate::args::{ExportArgs, ServeArgs};
use crate::context::{read_corpus, Context, UsageError};
use crate::emit_summary;

pub fn annotate_serve(ctx: &Context, args: &ServeArgs) -> anyhow::Result<()> {
    if !(args.sample > 0.0 && args.sample <= 1.0) {
        return Err(UsageError::new(format!("--sample must be in (0, 1], got {}", args.sample)).into());
    }
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| UsageError::new(format!("--host {:?}: {e}", args.host)))?;
    let corpus = read_corpus(&args.corpus)?;
    let evaluators: Vec<String> = args
        .evaluators
        .iter()
        .map(|e| e.trim().to_string())
        .filter(|e| !e.is_empty())
        .collect();
    let tasks = sample_tasks(&corpus, args.sample, ctx.config.seed, &evaluators)?;
    let sampled = tasks.len();
    let store = JudgmentStore::open(&args.journal, tasks, &evaluators)?;
    let judged = store.judgments().len();
    let service = Arc::new(AnnotateService::new(corpus, store));

    let runtime = tokio::runtime::Builder::new_multi_thread().enable_io().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        let local = listener.local_addr()?;
        emit_summary(&json!({
            "command": "annotate serve",
            "url": format!("http://{local}"),
            "sampled_dialogues": sampled,
            "judgments": judged,
            "journal": args.journal,
        }))?;
        serve(listener, service, args.static_dir.clone()).await?;
        Ok(())
    })
}

pub fn annotate_export(args: &ExportArgs) -> anyhow::Result<()> {
    if !args.journal.exists() {
        anyhow::bail!("journal {} does not exist", args.journal.display());
    }
    let store = JudgmentStore::open(&args.journal, Vec::new(), &[])?;
    let count = store.export(&args.out)?;
    emit_summary(&json!({"command": "annotate export", "out": args.out, "judgments": count}))
}
