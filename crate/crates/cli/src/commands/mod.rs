mod annotate;
mod evaluation;
mod generation;

pub use annotate::{annotate_export, annotate_serve};
pub use evaluation::{compare, report, score, stats};
pub use generation::{evaluate, extend};

use std::fs;
use std::path::Path;

use anyhow::Context as _;
use duetwoz_core::Variant;
use serde::Serialize;

use crate::args::VariantArg;

pub(crate) fn variant_of(arg: VariantArg) -> Variant {
    match arg {
        VariantArg::Single => Variant::SingleUser,
        VariantArg::Multi => Variant::MultiUser,
    }
}

pub(crate) fn write_pretty<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
