use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRIMP_DAYS: usize = 30;
const ACUTE_DAYS: usize = 7;
const CHRONIC_DAYS: usize = 28;

/// Thirty consecutive daily training-impulse values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimpSeries {
    pub case_id: String,
    pub values: Vec<f64>,
}

impl TrimpSeries {
    pub fn new(case_id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != TRIMP_DAYS {
            return Err(Error::invalid(format!(
                "TRIMP series needs {TRIMP_DAYS} days, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("TRIMP values must be finite and non-negative"));
        }
        Ok(Self {
            case_id: case_id.into(),
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Up,
    Down,
}

impl Trend {
    pub fn name(self) -> &'static str {
        match self {
            Trend::Up => "up",
            Trend::Down => "down",
        }
    }
}

/// Trailing 7-day sums for every day that has a complete window, as
/// `(day index, sum)`.
pub fn rolling_acute_loads(values: &[f64]) -> Vec<(usize, f64)> {
    if values.len() < ACUTE_DAYS {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(values.len() - ACUTE_DAYS + 1);
    let mut acc: f64 = values[..ACUTE_DAYS].iter().sum();
    out.push((ACUTE_DAYS - 1, acc));
    for t in ACUTE_DAYS..values.len() {
        acc += values[t] - values[t - ACUTE_DAYS];
        out.push((t, acc));
    }
    out
}

/// Acute:chronic workload ratio and its binary trend label.
///
/// Acute load is the sum of the last 7 days. Chronic load is the mean of
/// the trailing 7-day sums over the most recent 28 days, restricted to
/// days whose window lies inside the series. The label is `up` only when
/// the ratio is strictly above 1.
pub fn acwr_label(trimp: &TrimpSeries) -> Result<(f64, Trend)> {
    let v = &trimp.values;
    if v.len() != TRIMP_DAYS {
        return Err(Error::invalid(format!("TRIMP series needs {TRIMP_DAYS} days")));
    }
    let loads = rolling_acute_loads(v);
    let acute = loads.last().expect("30 days").1;
    let first_day = v.len() - CHRONIC_DAYS;
    let chronic_window: Vec<f64> = loads
        .iter()
        .filter(|(day, _)| *day >= first_day)
        .map(|(_, s)| *s)
        .collect();
    let chronic = chronic_window.iter().sum::<f64>() / chronic_window.len() as f64;
    if chronic <= 0.0 {
        return Err(Error::degenerate("chronic training load is zero"));
    }
    let ratio = acute / chronic;
    Ok((ratio, if ratio > 1.0 { Trend::Up } else { Trend::Down }))
}
