//! Metrics, bootstrap resampling, paired differences and hypothesis tests
//! over evaluation records.

mod metric;
mod resample;
mod summary;
mod wilcoxon;

use serde::{Deserialize, Serialize};

pub use metric::{compute_metric, compute_metric_detail, MetricDetail, MetricKind};
pub use resample::{bootstrap_distribution, oriented_diff_distribution, paired_diff_distribution, BOOTSTRAP_REPLICATES};
pub use summary::{quantile, summarize, MetricSummary};
pub use wilcoxon::{
    bonferroni_adjust, wilcoxon_checked, wilcoxon_signed_rank, Provenance, WilcoxonMethod, WilcoxonResult,
    EXACT_MAX_N,
};

use crate::promptkit::{Modality, ParseStatus};
use crate::synthgen::{CellParams, Label, TaskKind};

/// One scored model answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub instance_id: String,
    pub task_kind: TaskKind,
    pub modality: Modality,
    pub model: String,
    pub shots: usize,
    pub template_id: String,
    pub ground_truth: Label,
    /// Present iff `parse_status` is ok.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<Label>,
    pub parse_status: ParseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub params: CellParams,
    pub cell_key: String,
    pub prompt_tokens: u64,
    pub image_count: usize,
    pub cost_usd: f64,
    pub config_hash: String,
}

impl EvalRecord {
    pub fn is_correct(&self) -> bool {
        self.predicted.as_ref() == Some(&self.ground_truth)
    }
}
