use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest effective sample size that uses the exact null distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// min(W+, W-)
    pub statistic: f64,
    pub w_plus: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub method: WilcoxonMethod,
}

/// Where the samples handed to the test came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Observed,
    /// Bootstrap replicates are not independent draws, so the test's
    /// assumptions do not hold.
    BootstrapDerived,
}

/// Average ranks (1-based) of `v`, ties sharing their mean rank.
fn mid_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Two-sided Wilcoxon signed-rank test on paired samples.
///
/// Zero differences are dropped before ranking. Up to [`EXACT_MAX_N`]
/// remaining pairs the p-value comes from the exact permutation
/// distribution of W+ given the (possibly tied) ranks; above that a
/// normal approximation with tie and continuity corrections is used.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("paired samples differ in length: {} vs {}", x.len(), y.len())));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("differences must be finite"));
    }
    let n = d.len();
    if n == 0 {
        return Err(Error::degenerate("all paired differences are zero"));
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = mid_ranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    let (p, method) = if n <= EXACT_MAX_N {
        // mid-ranks are multiples of 1/2, so work with doubled ranks
        let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0f64; max + 1];
        counts[0] = 1.0;
        for &r in &doubled {
            for s in (r..=max).rev() {
                counts[s] += counts[s - r];
            }
        }
        let all = 2f64.powi(n as i32);
        let w2 = (w_plus * 2.0).round() as usize;
        let lower: f64 = counts[..=w2].iter().sum::<f64>() / all;
        let upper: f64 = counts[w2..].iter().sum::<f64>() / all;
        ((2.0 * lower.min(upper)).min(1.0), WilcoxonMethod::Exact)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut tie_term = 0.0;
        let mut sorted = abs.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let mut dev = w_plus - mean;
        if dev != 0.0 {
            dev -= 0.5 * dev.signum();
        }
        let z = if var > 0.0 { dev.abs() / var.sqrt() } else { 0.0 };
        ((2.0 * normal_sf(z)).min(1.0), WilcoxonMethod::Normal)
    };
    Ok(WilcoxonResult {
        statistic,
        w_plus,
        p_value: p,
        n_effective: n,
        method,
    })
}

/// [`wilcoxon_signed_rank`] that refuses bootstrap-derived samples unless
/// `allow_bootstrap` is set.
pub fn wilcoxon_checked(
    x: &[f64],
    y: &[f64],
    provenance: Provenance,
    allow_bootstrap: bool,
) -> Result<WilcoxonResult> {
    if provenance == Provenance::BootstrapDerived && !allow_bootstrap {
        return Err(Error::Config(
            "Wilcoxon test on bootstrap-derived distributions violates its independence assumption; \
             set allow_bootstrap_wilcoxon to override"
                .into(),
        ));
    }
    wilcoxon_signed_rank(x, y)
}

/// `min(1, m * p)` for each of the `m` p-values of one block.
pub fn bonferroni_adjust(p_values: &[f64]) -> Result<Vec<f64>> {
    if p_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("p-values must lie in [0, 1]"));
    }
    let m = p_values.len() as f64;
    Ok(p_values.iter().map(|p| (p * m).min(1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(mid_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn all_positive_five() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
        assert_eq!(r.p_value, 0.0625);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.method, WilcoxonMethod::Exact);
    }

    #[test]
    fn identical_is_degenerate() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(wilcoxon_signed_rank(&x, &x), Err(Error::Degenerate(_))));
    }

    #[test]
    fn normal_branch_large_shift() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 + 1.0).collect();
        let r = wilcoxon_signed_rank(&x, &vec![0.0; 40]).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Normal);
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn bootstrap_refused_without_override() {
        let x = [1.0, 2.0];
        let y = [0.0, 0.0];
        assert!(matches!(
            wilcoxon_checked(&x, &y, Provenance::BootstrapDerived, false),
            Err(Error::Config(_))
        ));
        assert!(wilcoxon_checked(&x, &y, Provenance::BootstrapDerived, true).is_ok());
    }

    #[test]
    fn bonferroni_examples() {
        assert_eq!(bonferroni_adjust(&[0.01]).unwrap(), vec![0.01]);
        assert_eq!(bonferroni_adjust(&[0.02, 0.5]).unwrap(), vec![0.04, 1.0]);
        assert_eq!(bonferroni_adjust(&[0.3, 0.1, 0.2, 0.9]).unwrap()[0], 1.0);
        assert!(bonferroni_adjust(&[1.5]).is_err());
    }
}
