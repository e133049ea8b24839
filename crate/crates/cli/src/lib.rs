//! The `duetwoz` command line: argument definitions and command dispatch.

mod args;
mod commands;
mod context;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use serde_json::Value;

pub use args::{
    AnnotateCommand, CarriageArg, Cli, Command, CompareArgs, EvaluateArgs, ExportArgs, ExtendArgs, GlobalArgs,
    JgaModeArg, MetricArgs, ReportArgs, ScoreArgs, ServeArgs, StatsArgs, UniverseArg, VariantArg,
};
pub use context::{Context, UsageError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(&cli.global);
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

/// Exit code for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        EXIT_USAGE
    } else {
        EXIT_FAILURE
    }
}

fn init_logging(global: &GlobalArgs) {
    let level = match (global.quiet, global.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        (false, 2) => log::LevelFilter::Debug,
        (false, _) => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    let ctx = Context::new(&cli.global)?;
    match &cli.command {
        Command::Extend(a) => commands::extend(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::Score(a) => commands::score(&ctx, a),
        Command::Compare(a) => commands::compare(a),
        Command::Stats(a) => commands::stats(a),
        Command::Report(a) => commands::report(&ctx, a),
        Command::Annotate(AnnotateCommand::Serve(a)) => commands::annotate_serve(&ctx, a),
        Command::Annotate(AnnotateCommand::Export(a)) => commands::annotate_export(a),
    }
}

/// Prints the machine-readable summary line.
pub(crate) fn emit_summary(summary: &Value) -> anyhow::Result<()> {
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{}", serde_json::to_string(summary)?)?;
    stdout.flush()?;
    Ok(())
}
