use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng64;

use super::function::linspace;

/// The six admissible `(m1, m2)` slope pairs.
pub const SLOPE_PAIRS: [(i32, i32); 6] = [(1, 2), (-1, 1), (5, -1), (-2, -5), (-3, 2), (2, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn name(self) -> &'static str {
        match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPair {
    pub xs: Vec<f64>,
    pub y1s: Vec<f64>,
    pub y2s: Vec<f64>,
    pub slopes: (i32, i32),
    pub label: Sign,
    pub noise_level: f64,
    pub seed: u64,
}

/// Sign of the Pearson correlation between `y1` and `y2`.
///
/// Only the sign of the centred cross product matters, so the
/// normalisation by the standard deviations is skipped.
pub fn pearson_sign(y1: &[f64], y2: &[f64]) -> Result<Sign> {
    if y1.len() != y2.len() || y1.len() < 2 {
        return Err(Error::invalid(format!(
            "pearson_sign needs equal lengths >= 2, got {} and {}",
            y1.len(),
            y2.len()
        )));
    }
    let n = y1.len() as f64;
    let m1 = y1.iter().sum::<f64>() / n;
    let m2 = y2.iter().sum::<f64>() / n;
    if y1.iter().all(|&v| v == y1[0]) || y2.iter().all(|&v| v == y2[0]) {
        return Err(Error::degenerate("pearson correlation of a constant vector"));
    }
    let cross: f64 = y1.iter().zip(y2).map(|(a, b)| (a - m1) * (b - m2)).sum();
    if cross > 0.0 {
        Ok(Sign::Positive)
    } else if cross < 0.0 {
        Ok(Sign::Negative)
    } else {
        Err(Error::degenerate("zero correlation has no sign"))
    }
}

pub fn gen_correlation_pair(
    seed: u64,
    slope_pair: (i32, i32),
    x_range: (f64, f64),
    num_points: usize,
    noise_level: f64,
) -> Result<CorrelationPair> {
    if !SLOPE_PAIRS.contains(&slope_pair) {
        return Err(Error::invalid(format!(
            "slope pair {slope_pair:?} is not one of {SLOPE_PAIRS:?}"
        )));
    }
    if num_points < 2 || !(noise_level >= 0.0) || !(x_range.0 < x_range.1) {
        return Err(Error::invalid("correlation pair needs >= 2 points, noise >= 0, increasing range"));
    }
    let mut rng = Rng64::seed_from(seed);
    let xs = linspace(x_range.0, x_range.1, num_points);
    let n1 = rng.normal_vec(0.0, noise_level, num_points);
    let n2 = rng.normal_vec(0.0, noise_level, num_points);
    let (m1, m2) = (f64::from(slope_pair.0), f64::from(slope_pair.1));
    let y1s: Vec<f64> = xs.iter().zip(&n1).map(|(x, n)| m1 * (x + n)).collect();
    let y2s: Vec<f64> = xs.iter().zip(&n2).map(|(x, n)| m2 * (x + n)).collect();
    let label = pearson_sign(&y1s, &y2s)?;
    Ok(CorrelationPair {
        xs,
        y1s,
        y2s,
        slopes: slope_pair,
        label,
        noise_level,
        seed,
    })
}
