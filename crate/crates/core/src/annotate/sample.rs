use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AnnotateError;
use crate::model::Dialogue;
use crate::util::stable_hash64;

/// A dialogue selected for human review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub dialogue_id: String,
    pub sample_seed: u64,
    /// Empty when any registered evaluator may take the task.
    #[serde(default)]
    pub assigned_evaluators: Vec<String>,
}

/// Number of dialogues sampled: the fraction of `total`, rounded up.
pub fn sample_size(total: usize, fraction: f64) -> Result<usize, AnnotateError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(AnnotateError::InvalidFraction(fraction));
    }
    let exact = fraction * total as f64;
    Ok(((exact - 1e-9).ceil().max(0.0) as usize).min(total))
}

fn signature(d: &Dialogue) -> String {
    d.domains.iter().map(|d| d.as_str()).collect::<Vec<_>>().join("+")
}

/// Seeded sample without replacement, stratified by each dialogue's domain
/// set with largest-remainder allocation. Tasks come back sorted by id.
pub fn sample_tasks(
    dialogues: &[Dialogue],
    fraction: f64,
    seed: u64,
    evaluators: &[String],
) -> Result<Vec<AnnotationTask>, AnnotateError> {
    let total = dialogues.len();
    let n = sample_size(total, fraction)?;
    let mut strata: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for d in dialogues {
        strata.entry(signature(d)).or_default().push(&d.id);
    }

    let mut quotas: Vec<(String, usize, usize)> = strata
        .iter()
        .map(|(sig, ids)| (sig.clone(), n * ids.len() / total.max(1), n * ids.len() % total.max(1)))
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.1).sum();
    let mut by_remainder: Vec<usize> = (0..quotas.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        quotas[b]
            .2
            .cmp(&quotas[a].2)
            .then_with(|| quotas[a].0.cmp(&quotas[b].0))
    });
    for &i in by_remainder.iter().take(n - assigned) {
        quotas[i].1 += 1;
    }

    let mut chosen = Vec::with_capacity(n);
    for (sig, quota, _) in quotas {
        let mut ids = strata[&sig].clone();
        ids.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(stable_hash64(&format!("{seed}:{sig}")));
        ids.shuffle(&mut rng);
        chosen.extend(ids.into_iter().take(quota));
    }
    chosen.sort_unstable();
    Ok(chosen
        .into_iter()
        .map(|id| AnnotationTask {
            dialogue_id: id.to_string(),
            sample_seed: seed,
            assigned_evaluators: evaluators.to_vec(),
        })
        .collect())
}
