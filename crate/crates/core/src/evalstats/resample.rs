use crate::error::{Error, Result};
use crate::par;
use crate::rng::Rng64;
use crate::seed;

use super::metric::metric_on;
use super::{EvalRecord, MetricKind};

pub const BOOTSTRAP_REPLICATES: usize = 1000;

/// Bootstrap redraws allowed when a resample leaves MAE undefined.
const MAX_REDRAWS: usize = 1000;

/// Metric recomputed on `replicates` resamples (with replacement, size n).
/// Replicate `r` uses its own derived seed, so the output does not depend
/// on how replicates are scheduled.
pub fn bootstrap_distribution(
    records: &[EvalRecord],
    kind: MetricKind,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::invalid("bootstrap over zero records"));
    }
    // fail early when the metric is undefined on the full sample
    metric_on(kind, &records.iter().collect::<Vec<_>>())?;
    let n = records.len();
    par::map_range(replicates, |r| {
        let mut rng = Rng64::seed_from(seed!(seed, "bootstrap", r));
        let mut last = None;
        for _ in 0..MAX_REDRAWS {
            let sample: Vec<&EvalRecord> = (0..n).map(|_| &records[rng.below(n as u64) as usize]).collect();
            match metric_on(kind, &sample) {
                Ok(d) => return Ok(d.value),
                Err(e @ Error::Degenerate(_)) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap_or_else(|| Error::degenerate("bootstrap replicate undefined")))
    })
    .into_iter()
    .collect()
}

/// `n_pairs` draws of `a[i] - b[j]` with `i`, `j` independent uniform.
pub fn paired_diff_distribution(a: &[f64], b: &[f64], n_pairs: usize, seed: u64) -> Result<Vec<f64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("paired differences need two non-empty distributions"));
    }
    let mut rng = Rng64::seed_from(seed!(seed, "paired_diff"));
    Ok((0..n_pairs)
        .map(|_| {
            let i = rng.below(a.len() as u64) as usize;
            let j = rng.below(b.len() as u64) as usize;
            a[i] - b[j]
        })
        .collect())
}

/// Paired differences oriented so a positive value means the plot
/// modality did better: `plot - text` for accuracy-like metrics and
/// `text - plot` for errors.
pub fn oriented_diff_distribution(
    plot: &[f64],
    text: &[f64],
    kind: MetricKind,
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if kind.higher_is_better() {
        paired_diff_distribution(plot, text, n_pairs, seed)
    } else {
        paired_diff_distribution(text, plot, n_pairs, seed)
    }
}
