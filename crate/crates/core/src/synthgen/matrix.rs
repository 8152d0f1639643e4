use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::seed;

use super::clusters::gen_clusters;
use super::correlation::{gen_correlation_pair, SLOPE_PAIRS};
use super::derivative::{
    gen_derivative_task, DerivativeVariant, QuestionParams, QUADRATIC_CHOICE_SCALES,
    QUADRATIC_QUESTION_SCALES,
};
use super::function::{gen_function, FuncType};
use super::task::{CellParams, Payload, TaskInstance, TaskKind};

pub const ARCHIVE_SCHEMA_VERSION: u32 = 1;

/// Generation grid for one task family. Axes that do not apply to the
/// family are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatrixSpec {
    pub repeats: usize,
    pub num_points: Vec<usize>,
    pub noise_levels: Vec<f64>,
    pub func_types: Vec<FuncType>,
    pub slope_pairs: Vec<(i32, i32)>,
    pub cluster_stds: Vec<f64>,
    pub cluster_points: Vec<usize>,
    pub cluster_counts: Vec<usize>,
    pub quadratic_scales: Vec<f64>,
    pub choice_scales: Vec<f64>,
    pub x_range: (f64, f64),
}

impl Default for MatrixSpec {
    fn default() -> Self {
        Self::standard(TaskKind::FunctionId)
    }
}

impl MatrixSpec {
    /// The standard grid for `kind`.
    pub fn standard(kind: TaskKind) -> Self {
        let base = MatrixSpec {
            repeats: 5,
            num_points: vec![50, 500, 1000, 2500],
            noise_levels: vec![0.0, 0.5, 1.0, 2.0, 5.0],
            func_types: FuncType::ALL.to_vec(),
            slope_pairs: SLOPE_PAIRS.to_vec(),
            cluster_stds: vec![0.025, 0.05, 0.075],
            cluster_points: vec![5, 50, 100],
            cluster_counts: (1..=9).collect(),
            quadratic_scales: QUADRATIC_QUESTION_SCALES.to_vec(),
            choice_scales: QUADRATIC_CHOICE_SCALES.to_vec(),
            x_range: (-10.0, 10.0),
        };
        match kind {
            TaskKind::Correlation => MatrixSpec {
                repeats: 1,
                noise_levels: vec![0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0],
                ..base
            },
            TaskKind::DerivativeId | TaskKind::QuadraticDerivativeId => MatrixSpec {
                num_points: vec![50, 500, 1000, 2000],
                ..base
            },
            _ => base,
        }
    }

    /// Grid cells in generation order, paired with the axis indices the
    /// per-cell seed is derived from.
    pub(crate) fn cells(&self, kind: TaskKind) -> Result<Vec<(Vec<usize>, CellParams)>> {
        fn need<T>(name: &str, v: &[T]) -> Result<()> {
            if v.is_empty() {
                Err(Error::invalid(format!("grid axis `{name}` is empty")))
            } else {
                Ok(())
            }
        }
        if self.repeats == 0 {
            return Err(Error::invalid("grid axis `repeats` is empty"));
        }
        let mut out = Vec::new();
        match kind {
            TaskKind::FunctionId | TaskKind::DerivativeId => {
                need("num_points", &self.num_points)?;
                need("noise_levels", &self.noise_levels)?;
                need("func_types", &self.func_types)?;
                for (ip, &np) in self.num_points.iter().enumerate() {
                    for (inz, &nl) in self.noise_levels.iter().enumerate() {
                        for (it, &ft) in self.func_types.iter().enumerate() {
                            for r in 0..self.repeats {
                                out.push((
                                    vec![ip, inz, it, r],
                                    CellParams {
                                        repeat: Some(r),
                                        num_points: Some(np),
                                        noise_level: Some(nl),
                                        func_type: Some(ft),
                                        ..Default::default()
                                    },
                                ));
                            }
                        }
                    }
                }
            }
            TaskKind::Correlation => {
                need("num_points", &self.num_points)?;
                need("noise_levels", &self.noise_levels)?;
                need("slope_pairs", &self.slope_pairs)?;
                for (ip, &np) in self.num_points.iter().enumerate() {
                    for (inz, &nl) in self.noise_levels.iter().enumerate() {
                        for (is, &sp) in self.slope_pairs.iter().enumerate() {
                            for r in 0..self.repeats {
                                out.push((
                                    vec![ip, inz, is, r],
                                    CellParams {
                                        repeat: Some(r),
                                        num_points: Some(np),
                                        noise_level: Some(nl),
                                        slope_pair: Some(sp),
                                        ..Default::default()
                                    },
                                ));
                            }
                        }
                    }
                }
            }
            TaskKind::ClusterCount => {
                need("cluster_stds", &self.cluster_stds)?;
                need("cluster_points", &self.cluster_points)?;
                need("cluster_counts", &self.cluster_counts)?;
                for (is, &sd) in self.cluster_stds.iter().enumerate() {
                    for (ip, &cp) in self.cluster_points.iter().enumerate() {
                        for (ic, &cc) in self.cluster_counts.iter().enumerate() {
                            for r in 0..self.repeats {
                                out.push((
                                    vec![is, ip, ic, r],
                                    CellParams {
                                        repeat: Some(r),
                                        cluster_std: Some(sd),
                                        cluster_points: Some(cp),
                                        cluster_count: Some(cc),
                                        ..Default::default()
                                    },
                                ));
                            }
                        }
                    }
                }
            }
            TaskKind::QuadraticDerivativeId => {
                need("num_points", &self.num_points)?;
                need("noise_levels", &self.noise_levels)?;
                need("quadratic_scales", &self.quadratic_scales)?;
                need("choice_scales", &self.choice_scales)?;
                for (ip, &np) in self.num_points.iter().enumerate() {
                    for (inz, &nl) in self.noise_levels.iter().enumerate() {
                        for (ia, &a) in self.quadratic_scales.iter().enumerate() {
                            for r in 0..self.repeats {
                                out.push((
                                    vec![ip, inz, ia, r],
                                    CellParams {
                                        repeat: Some(r),
                                        num_points: Some(np),
                                        noise_level: Some(nl),
                                        quadratic_scale: Some(a),
                                        ..Default::default()
                                    },
                                ));
                            }
                        }
                    }
                }
            }
            other => {
                return Err(Error::invalid(format!("{other} is not a synthetic task")));
            }
        }
        Ok(out)
    }

    fn generate(&self, kind: TaskKind, seed: u64, p: &CellParams) -> Result<TaskInstance> {
        let payload = match kind {
            TaskKind::FunctionId => Payload::Series(gen_function(
                seed,
                p.func_type.expect("cell"),
                self.x_range,
                p.num_points.expect("cell"),
                p.noise_level.expect("cell"),
            )?),
            TaskKind::Correlation => Payload::Correlation(gen_correlation_pair(
                seed,
                p.slope_pair.expect("cell"),
                self.x_range,
                p.num_points.expect("cell"),
                p.noise_level.expect("cell"),
            )?),
            TaskKind::ClusterCount => Payload::Clusters(gen_clusters(
                seed,
                p.cluster_points.expect("cell"),
                p.cluster_count.expect("cell"),
                p.cluster_std.expect("cell"),
            )?),
            TaskKind::DerivativeId => Payload::Derivative(gen_derivative_task(
                seed,
                DerivativeVariant::MixedClass,
                QuestionParams {
                    func_type: p.func_type.expect("cell"),
                    scale: 1.0,
                    x_range: self.x_range,
                    num_points: p.num_points.expect("cell"),
                    noise_level: p.noise_level.expect("cell"),
                },
                &[],
            )?),
            TaskKind::QuadraticDerivativeId => Payload::Derivative(gen_derivative_task(
                seed,
                DerivativeVariant::QuadraticScale,
                QuestionParams {
                    func_type: FuncType::Quadratic,
                    scale: p.quadratic_scale.expect("cell"),
                    x_range: self.x_range,
                    num_points: p.num_points.expect("cell"),
                    noise_level: p.noise_level.expect("cell"),
                },
                &self.choice_scales,
            )?),
            other => return Err(Error::invalid(format!("{other} is not a synthetic task"))),
        };
        TaskInstance::new(kind, seed, p.clone(), payload)
    }
}

/// Generates every instance of the grid. Cell seeds are derived from
/// `(master_seed, task kind, axis indices)` so any cell can be regenerated
/// in isolation; output order is the grid order regardless of threading.
pub fn build_task_matrix(kind: TaskKind, spec: &MatrixSpec, master_seed: u64) -> Result<Vec<TaskInstance>> {
    let cells = spec.cells(kind)?;
    let results = par::map(&cells, |(idx, params)| {
        let mut s = seed!(master_seed, kind.name());
        for &i in idx {
            s = seed!(s, i);
        }
        spec.generate(kind, s, params)
    });
    results.into_iter().collect()
}

#[derive(Serialize)]
struct ArchiveLineRef<'a> {
    schema_version: u32,
    #[serde(flatten)]
    instance: &'a TaskInstance,
}

#[derive(Deserialize)]
struct ArchiveLine {
    schema_version: u32,
    #[serde(flatten)]
    instance: TaskInstance,
}

/// Writes one schema-versioned JSON object per line.
pub fn write_archive(path: &Path, instances: &[TaskInstance]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for instance in instances {
        serde_json::to_writer(
            &mut w,
            &ArchiveLineRef {
                schema_version: ARCHIVE_SCHEMA_VERSION,
                instance,
            },
        )?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_archive(path: &Path) -> Result<Vec<TaskInstance>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ArchiveLine = serde_json::from_str(&line)?;
        if rec.schema_version != ARCHIVE_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "archive schema version {} unsupported (expected {ARCHIVE_SCHEMA_VERSION})",
                rec.schema_version
            )));
        }
        out.push(rec.instance);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_grid_sizes() {
        let counts = [
            (TaskKind::FunctionId, 500),
            (TaskKind::Correlation, 192),
            (TaskKind::ClusterCount, 405),
            (TaskKind::DerivativeId, 500),
            (TaskKind::QuadraticDerivativeId, 600),
        ];
        for (kind, n) in counts {
            assert_eq!(MatrixSpec::standard(kind).cells(kind).unwrap().len(), n, "{kind}");
        }
    }

    #[test]
    fn deterministic_ids() {
        let mut spec = MatrixSpec::standard(TaskKind::FunctionId);
        spec.num_points = vec![50];
        let a = build_task_matrix(TaskKind::FunctionId, &spec, 7).unwrap();
        let b = build_task_matrix(TaskKind::FunctionId, &spec, 7).unwrap();
        let ids_a: Vec<_> = a.iter().map(|t| &t.instance_id).collect();
        let ids_b: Vec<_> = b.iter().map(|t| &t.instance_id).collect();
        assert_eq!(ids_a, ids_b);
        assert_eq!(a, b);
        let c = build_task_matrix(TaskKind::FunctionId, &spec, 8).unwrap();
        assert_ne!(a[0].instance_id, c[0].instance_id);
    }

    #[test]
    fn empty_axis_rejected() {
        let mut spec = MatrixSpec::standard(TaskKind::Correlation);
        spec.slope_pairs.clear();
        assert!(matches!(
            build_task_matrix(TaskKind::Correlation, &spec, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn archive_round_trip() {
        let mut spec = MatrixSpec::standard(TaskKind::ClusterCount);
        spec.repeats = 1;
        spec.cluster_points = vec![5];
        let m = build_task_matrix(TaskKind::ClusterCount, &spec, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        write_archive(&p, &m).unwrap();
        assert_eq!(read_archive(&p).unwrap(), m);
    }
}
