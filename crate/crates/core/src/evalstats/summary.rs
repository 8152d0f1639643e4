use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tscodec::quantile_sorted;

/// Location and spread of a distribution, with box-plot whiskers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// mean ± 1.96 standard errors
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Most extreme values within 1.5 IQR of the box.
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid("quantile needs data and q in [0, 1]"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&s, q))
}

pub fn summarize(dist: &[f64]) -> Result<MetricSummary> {
    if dist.is_empty() {
        return Err(Error::invalid("cannot summarize an empty distribution"));
    }
    if dist.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("cannot summarize non-finite values"));
    }
    let mut s = dist.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let mean = s.iter().sum::<f64>() / n as f64;
    let sem = if n > 1 {
        let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    let q1 = quantile_sorted(&s, 0.25);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = s.iter().copied().filter(|v| *v >= lo_fence && *v <= hi_fence).collect();
    Ok(MetricSummary {
        n,
        mean,
        median: quantile_sorted(&s, 0.5),
        q1,
        q3,
        ci_lo: mean - 1.96 * sem,
        ci_hi: mean + 1.96 * sem,
        whisker_lo: inside.first().copied().unwrap_or(q1).min(q1),
        whisker_hi: inside.last().copied().unwrap_or(q3).max(q3),
        outliers: s.iter().copied().filter(|v| *v < lo_fence || *v > hi_fence).collect(),
    })
}
