use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthgen::{Label, TaskKind};

use super::EvalRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    Mae,
    MacroF1,
}

impl MetricKind {
    pub fn for_task(kind: TaskKind) -> MetricKind {
        match kind {
            TaskKind::ClusterCount => MetricKind::Mae,
            TaskKind::FallDetection | TaskKind::ActivityRecognition => MetricKind::MacroF1,
            _ => MetricKind::Accuracy,
        }
    }

    pub fn higher_is_better(self) -> bool {
        self != MetricKind::Mae
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::Mae => "mae",
            MetricKind::MacroF1 => "macro_f1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDetail {
    pub kind: MetricKind,
    pub value: f64,
    pub n: usize,
    pub parse_failures: usize,
    /// Classes that were predicted but never occur in the ground truth.
    pub excluded_classes: Vec<Label>,
}

pub fn compute_metric(kind: MetricKind, records: &[EvalRecord]) -> Result<f64> {
    compute_metric_detail(kind, records).map(|d| d.value)
}

pub fn compute_metric_detail(kind: MetricKind, records: &[EvalRecord]) -> Result<MetricDetail> {
    let refs: Vec<&EvalRecord> = records.iter().collect();
    metric_on(kind, &refs)
}

pub(crate) fn metric_on(kind: MetricKind, records: &[&EvalRecord]) -> Result<MetricDetail> {
    if records.is_empty() {
        return Err(Error::invalid("metric over zero records"));
    }
    let failures = records.iter().filter(|r| r.predicted.is_none()).count();
    let mut excluded = Vec::new();
    let value = match kind {
        MetricKind::Accuracy => records.iter().filter(|r| r.is_correct()).count() as f64 / records.len() as f64,
        MetricKind::Mae => {
            let mut sum = 0.0;
            let mut n = 0usize;
            for r in records {
                let Label::Count(t) = r.ground_truth else {
                    return Err(Error::invalid("MAE needs integer ground truth"));
                };
                match &r.predicted {
                    Some(Label::Count(p)) => {
                        sum += (p - t).abs() as f64;
                        n += 1;
                    }
                    Some(_) => return Err(Error::invalid("MAE needs integer predictions")),
                    None => {}
                }
            }
            if n == 0 {
                return Err(Error::degenerate("MAE undefined: no parsed predictions"));
            }
            sum / n as f64
        }
        MetricKind::MacroF1 => {
            let support: BTreeSet<&Label> = records.iter().map(|r| &r.ground_truth).collect();
            let predicted: BTreeSet<&Label> = records.iter().filter_map(|r| r.predicted.as_ref()).collect();
            excluded = predicted.difference(&support).map(|l| (*l).clone()).collect();
            let mut total = 0.0;
            for c in &support {
                let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
                for r in records {
                    let truth = &r.ground_truth == *c;
                    let pred = r.predicted.as_ref() == Some(*c);
                    match (truth, pred) {
                        (true, true) => tp += 1,
                        (false, true) => fp += 1,
                        (true, false) => fn_ += 1,
                        (false, false) => {}
                    }
                }
                total += 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
            }
            total / support.len() as f64
        }
    };
    Ok(MetricDetail {
        kind,
        value,
        n: records.len(),
        parse_failures: failures,
        excluded_classes: excluded,
    })
}
