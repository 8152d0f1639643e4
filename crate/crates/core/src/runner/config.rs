use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imupipe::{HharManifest, ImufdManifest};
use crate::modelgw::{ModelConfig, PricingTable};
use crate::plotrender::{PlotOverrides, PlotSpec};
use crate::promptkit::{Exclusion, Modality, ShotMode, SHOT_COUNTS};
use crate::rng::sha256_hex;
use crate::synthgen::{MatrixSpec, TaskKind};
use crate::tscodec::CodecSpec;

/// Unit over which synthetic plot-vs-text differences are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// One unit per grid cell, repeats pooled.
    GridCell,
    /// One unit per (grid cell, repeat).
    Repeat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub kind: TaskKind,
    /// Overrides for individual axes of the task's standard grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<serde_json::Map<String, serde_json::Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codec: Option<CodecSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<Exclusion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_mode: Option<ShotMode>,
    /// Evaluate only the first `limit` instances (by instance id).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

impl TaskConfig {
    pub fn new(kind: TaskKind) -> Self {
        Self {
            kind,
            grid: None,
            codec: None,
            plot: None,
            exclusion: None,
            shot_mode: None,
            limit: None,
        }
    }

    pub fn matrix(&self) -> Result<MatrixSpec> {
        let base = MatrixSpec::standard(self.kind);
        let Some(over) = &self.grid else {
            return Ok(base);
        };
        let mut v = serde_json::to_value(&base)?;
        let obj = v.as_object_mut().expect("grid serializes to an object");
        for (k, val) in over {
            if !obj.contains_key(k) {
                return Err(Error::Config(format!("task {}: unknown grid axis `{k}`", self.kind)));
            }
            obj.insert(k.clone(), val.clone());
        }
        serde_json::from_value(v).map_err(|e| Error::Config(format!("task {}: grid: {e}", self.kind)))
    }

    /// Activity recognition counts shots per class; every other task
    /// counts them in total.
    pub fn shot_mode(&self) -> ShotMode {
        self.shot_mode.unwrap_or(if self.kind == TaskKind::ActivityRecognition {
            ShotMode::PerClass
        } else {
            ShotMode::Total
        })
    }

    pub fn exclusion(&self) -> Exclusion {
        self.exclusion.unwrap_or(if self.kind.is_synthetic() {
            Exclusion::InstanceOnly
        } else {
            Exclusion::Participant
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Datasets {
    pub imufd: Option<ImufdManifest>,
    pub hhar: Option<HharManifest>,
    /// CSV of `case_id` plus one column per day of TRIMP.
    pub trimp: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub outdir: PathBuf,
    /// Response cache location; `<outdir>/cache` when unset.
    pub cache_dir: Option<PathBuf>,
    pub workers: usize,
    pub grouping: Grouping,
    pub modalities: Vec<Modality>,
    pub shots: Vec<usize>,
    pub bootstrap_replicates: usize,
    pub diff_pairs: usize,
    pub allow_bootstrap_wilcoxon: bool,
    pub codec: CodecSpec,
    pub plot: PlotOverrides,
    pub tasks: Vec<TaskConfig>,
    pub models: Vec<ModelConfig>,
    pub pricing: PricingTable,
    pub datasets: Datasets,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: None,
            outdir: PathBuf::from("plotbench-out"),
            cache_dir: None,
            workers: 4,
            grouping: Grouping::GridCell,
            modalities: vec![Modality::Text, Modality::Plot],
            shots: vec![0],
            bootstrap_replicates: crate::evalstats::BOOTSTRAP_REPLICATES,
            diff_pairs: 1000,
            allow_bootstrap_wilcoxon: false,
            codec: CodecSpec::default(),
            plot: PlotOverrides::default(),
            tasks: Vec::new(),
            models: Vec::new(),
            pricing: PricingTable::default(),
            datasets: Datasets::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&s)?;
        // relative dataset and output paths are taken from the config's directory
        if let Some(base) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            fix(&mut cfg.outdir);
            if let Some(c) = cfg.cache_dir.as_mut() {
                fix(c);
            }
            if let Some(m) = cfg.datasets.imufd.as_mut() {
                fix(&mut m.index);
            }
            if let Some(m) = cfg.datasets.hhar.as_mut() {
                fix(&mut m.accelerometer);
                fix(&mut m.gyroscope);
            }
            if let Some(p) = cfg.datasets.trimp.as_mut() {
                fix(p);
            }
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or_default()
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.outdir.join("cache"))
    }

    pub fn codec_for(&self, task: &TaskConfig) -> CodecSpec {
        task.codec.unwrap_or(self.codec)
    }

    pub fn plot_for(&self, task: &TaskConfig) -> PlotSpec {
        let base = self.plot.apply(PlotSpec::for_task(task.kind));
        match &task.plot {
            Some(o) => o.apply(base),
            None => base,
        }
    }

    /// Every problem with the config, so they can be fixed in one pass.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.seed.is_none() {
            errs.push("seed is required (no implicit entropy)".to_string());
        }
        if self.workers == 0 {
            errs.push("workers must be at least 1".into());
        }
        if self.tasks.is_empty() {
            errs.push("no tasks selected".into());
        }
        if self.models.is_empty() {
            errs.push("no models configured".into());
        }
        if self.modalities.is_empty() {
            errs.push("no modalities selected".into());
        }
        if self.shots.is_empty() {
            errs.push("no shot counts selected".into());
        }
        for k in &self.shots {
            if !SHOT_COUNTS.contains(k) {
                errs.push(format!("shot count {k} is not one of {SHOT_COUNTS:?}"));
            }
        }
        if self.bootstrap_replicates == 0 || self.diff_pairs == 0 {
            errs.push("bootstrap_replicates and diff_pairs must be positive".into());
        }
        if let Err(e) = self.codec.validate() {
            errs.push(format!("codec: {e}"));
        }
        if let Err(e) = self.plot.apply(PlotSpec::default()).validate() {
            errs.push(format!("plot: {e}"));
        }
        let mut seen = BTreeSet::new();
        for t in &self.tasks {
            if !seen.insert(t.kind) {
                errs.push(format!("task {} listed twice", t.kind));
            }
            if let Some(c) = &t.codec {
                if let Err(e) = c.validate() {
                    errs.push(format!("task {}: codec: {e}", t.kind));
                }
            }
            if let Err(e) = self.plot_for(t).validate() {
                errs.push(format!("task {}: plot: {e}", t.kind));
            }
            if t.kind.is_synthetic() {
                match t.matrix() {
                    Ok(m) => {
                        if let Err(e) = m.cells(t.kind) {
                            errs.push(format!("task {}: grid: {e}", t.kind));
                        }
                    }
                    Err(e) => errs.push(e.to_string()),
                }
            }
            match t.kind {
                TaskKind::FallDetection if self.datasets.imufd.is_none() => {
                    errs.push("task fall_detection needs [datasets.imufd]".into())
                }
                TaskKind::ActivityRecognition if self.datasets.hhar.is_none() => {
                    errs.push("task activity_recognition needs [datasets.hhar]".into())
                }
                TaskKind::Readiness if self.datasets.trimp.is_none() => {
                    errs.push("task readiness needs datasets.trimp".into())
                }
                _ => {}
            }
        }
        let mut names = BTreeSet::new();
        for m in &self.models {
            if !names.insert(m.model.as_str()) {
                errs.push(format!("model {} listed twice", m.model));
            }
            errs.extend(m.validate());
            if let Err(e) = self.pricing.get(&m.model) {
                errs.push(e.to_string());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigList(errs))
        }
    }

    /// Hash of everything that affects results. Output location, cache
    /// location and worker count are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.outdir = PathBuf::new();
        c.cache_dir = None;
        c.workers = 0;
        let json = serde_json::to_string(&c).expect("config serializes");
        sha256_hex(json.as_bytes())[..16].to_string()
    }
}
