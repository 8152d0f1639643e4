use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imupipe::{ImuSegment, TrimpSeries};
use crate::rng::sha256_hex;

use super::clusters::ClusterSet;
use super::correlation::{pearson_sign, CorrelationPair};
use super::derivative::DerivativeTask;
use super::function::{FuncType, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    FunctionId,
    Correlation,
    ClusterCount,
    DerivativeId,
    QuadraticDerivativeId,
    FallDetection,
    ActivityRecognition,
    Readiness,
}

impl TaskKind {
    pub const SYNTHETIC: [TaskKind; 5] = [
        TaskKind::FunctionId,
        TaskKind::Correlation,
        TaskKind::ClusterCount,
        TaskKind::DerivativeId,
        TaskKind::QuadraticDerivativeId,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::FunctionId => "function_id",
            TaskKind::Correlation => "correlation",
            TaskKind::ClusterCount => "cluster_count",
            TaskKind::DerivativeId => "derivative_id",
            TaskKind::QuadraticDerivativeId => "quadratic_derivative_id",
            TaskKind::FallDetection => "fall_detection",
            TaskKind::ActivityRecognition => "activity_recognition",
            TaskKind::Readiness => "readiness",
        }
    }

    pub fn is_synthetic(self) -> bool {
        TaskKind::SYNTHETIC.contains(&self)
    }

    pub fn parse(s: &str) -> Result<Self> {
        [
            TaskKind::FunctionId,
            TaskKind::Correlation,
            TaskKind::ClusterCount,
            TaskKind::DerivativeId,
            TaskKind::QuadraticDerivativeId,
            TaskKind::FallDetection,
            TaskKind::ActivityRecognition,
            TaskKind::Readiness,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::invalid(format!("unknown task kind {s}")))
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ground-truth or predicted answer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Class(String),
    Count(i64),
    Choice(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Class(c) => f.write_str(c),
            Label::Count(n) => write!(f, "{n}"),
            Label::Choice(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Series(Series),
    Correlation(CorrelationPair),
    Clusters(ClusterSet),
    Derivative(DerivativeTask),
    Imu(ImuSegment),
    Trimp(TrimpSeries),
}

/// Coordinates of an instance in its generation grid. Only the axes that
/// apply to the task are populated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub func_type: Option<FuncType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_pair: Option<(i32, i32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_location: Option<String>,
    /// Recording that several body-location segments were cut from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<String>,
    /// Source segment for dataset-backed instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<String>,
}

impl CellParams {
    /// Grid-cell key with the repeat index removed; instances that differ
    /// only by repeat share a key.
    pub fn cell_key(&self) -> String {
        let mut c = self.clone();
        c.repeat = None;
        c.trial = None;
        c.segment = None;
        c.participant = None;
        serde_json::to_string(&c).expect("cell params serialize")
    }

    /// `(axis name, value)` pairs for per-parameter breakdowns.
    pub fn axes(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Some(v) = self.num_points {
            out.push(("num_points", v.to_string()));
        }
        if let Some(v) = self.noise_level {
            out.push(("noise_level", v.to_string()));
        }
        if let Some(v) = self.func_type {
            out.push(("func_type", v.to_string()));
        }
        if let Some((a, b)) = self.slope_pair {
            out.push(("slope_pair", format!("({a},{b})")));
        }
        if let Some(v) = self.cluster_std {
            out.push(("cluster_std", v.to_string()));
        }
        if let Some(v) = self.cluster_points {
            out.push(("cluster_points", v.to_string()));
        }
        if let Some(v) = self.cluster_count {
            out.push(("cluster_count", v.to_string()));
        }
        if let Some(v) = self.quadratic_scale {
            out.push(("quadratic_scale", v.to_string()));
        }
        if let Some(v) = &self.body_location {
            out.push(("body_location", v.clone()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub instance_id: String,
    pub task_kind: TaskKind,
    pub seed: u64,
    pub params: CellParams,
    pub ground_truth: Label,
    pub payload: Payload,
}

impl TaskInstance {
    pub fn new(task_kind: TaskKind, seed: u64, params: CellParams, payload: Payload) -> Result<Self> {
        let ground_truth = derive_label(task_kind, &payload)?;
        Ok(Self {
            instance_id: instance_id(task_kind, seed, &params),
            task_kind,
            seed,
            params,
            ground_truth,
            payload,
        })
    }

    pub fn with_label(
        task_kind: TaskKind,
        seed: u64,
        params: CellParams,
        payload: Payload,
        ground_truth: Label,
    ) -> Self {
        Self {
            instance_id: instance_id(task_kind, seed, &params),
            task_kind,
            seed,
            params,
            ground_truth,
            payload,
        }
    }
}

/// First 16 hex digits of SHA-256 over the canonical JSON of
/// `(task_kind, seed, params)`.
pub fn instance_id(task_kind: TaskKind, seed: u64, params: &CellParams) -> String {
    let canon = serde_json::json!({
        "task_kind": task_kind,
        "seed": seed,
        "params": params,
    });
    let mut h = sha256_hex(canon.to_string().as_bytes());
    h.truncate(16);
    h
}

/// Label implied by the payload of a synthetic task.
fn derive_label(kind: TaskKind, payload: &Payload) -> Result<Label> {
    match (kind, payload) {
        (TaskKind::FunctionId, Payload::Series(s)) => Ok(Label::Class(s.func_type.name().into())),
        (TaskKind::Correlation, Payload::Correlation(p)) => {
            Ok(Label::Class(pearson_sign(&p.y1s, &p.y2s)?.name().into()))
        }
        (TaskKind::ClusterCount, Payload::Clusters(c)) => Ok(Label::Count(c.cluster_count as i64)),
        (TaskKind::DerivativeId | TaskKind::QuadraticDerivativeId, Payload::Derivative(d)) => {
            Ok(Label::Choice(d.answer_index))
        }
        (TaskKind::FallDetection | TaskKind::ActivityRecognition, Payload::Imu(seg)) => {
            Ok(Label::Class(seg.label.clone()))
        }
        (TaskKind::Readiness, Payload::Trimp(t)) => {
            let (_, label) = crate::imupipe::acwr_label(t)?;
            Ok(Label::Class(label.name().into()))
        }
        _ => Err(Error::invalid(format!("payload does not match task kind {kind}"))),
    }
}
