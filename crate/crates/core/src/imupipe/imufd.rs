use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{sha256_hex, Rng64};

use super::{check_channels, BodyLocation, CropInfo, ImuSegment};

pub const IMUFD_RATE_HZ: f64 = 128.0;
pub const FALL_POOL_KERNEL: usize = 10;
const CROP_SECONDS: f64 = 15.0;
const TRAIN_FRACTION: f64 = 0.2;
const MIN_PARTICIPANTS: usize = 5;

/// Fall-detection classes, listed from most to least severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallClass {
    Fall,
    NearFall,
    Adl,
}

impl FallClass {
    pub const ALL: [FallClass; 3] = [FallClass::Fall, FallClass::NearFall, FallClass::Adl];

    pub fn name(self) -> &'static str {
        match self {
            FallClass::Fall => "fall",
            FallClass::NearFall => "near_fall",
            FallClass::Adl => "adl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        match norm.as_str() {
            "fall" | "falls" => Some(FallClass::Fall),
            "near_fall" | "near_falls" | "near" => Some(FallClass::NearFall),
            "adl" | "adls" => Some(FallClass::Adl),
            _ => None,
        }
    }
}

/// Combines per-body-location predictions: the most frequent class wins,
/// ties go to the more severe class.
pub fn majority_vote(predictions: &[FallClass]) -> Result<FallClass> {
    if predictions.is_empty() {
        return Err(Error::invalid("majority vote over no predictions"));
    }
    let mut counts = [0usize; 3];
    for p in predictions {
        counts[*p as usize] += 1;
    }
    let best = *counts.iter().max().expect("three classes");
    // ALL is ordered by severity, so the first class reaching `best` wins
    Ok(FallClass::ALL
        .into_iter()
        .find(|c| counts[*c as usize] == best)
        .expect("some class has the max"))
}

/// One raw IMUFD recording from a single body location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImufdTrial {
    pub trial_id: String,
    pub participant: String,
    pub label: FallClass,
    pub body_location: BodyLocation,
    pub channels: Vec<Vec<f64>>,
    pub sample_rate_hz: f64,
    /// Sample index of the labelled event, when the release provides one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_index: Option<usize>,
}

/// Cuts a 15 s window (centred on the event, else on the trial) and pools
/// it with kernel = stride = 10.
pub fn crop_trial(trial: &ImufdTrial) -> Result<ImuSegment> {
    check_channels(&trial.channels)?;
    let n = trial.channels[0].len();
    let want = (CROP_SECONDS * trial.sample_rate_hz).round() as usize;
    if n < want {
        return Err(Error::invalid(format!(
            "trial {} has {n} samples, needs {want} for a {CROP_SECONDS} s crop",
            trial.trial_id
        )));
    }
    let (center, method) = match trial.event_index {
        Some(e) if e < n => (e, "event"),
        _ => (n / 2, "trial_center"),
    };
    let start = center.saturating_sub(want / 2).min(n - want);
    let channels: Vec<Vec<f64>> = trial
        .channels
        .iter()
        .map(|c| c[start..start + want].to_vec())
        .collect();
    let mut id = sha256_hex(format!("{}/{}", trial.trial_id, trial.body_location.name()).as_bytes());
    id.truncate(16);
    let seg = ImuSegment {
        id,
        channels,
        sample_rate_hz: trial.sample_rate_hz,
        participant: trial.participant.clone(),
        device: trial.trial_id.clone(),
        body_location: Some(trial.body_location),
        label: trial.label.name().into(),
        crop: Some(CropInfo {
            method: method.into(),
            start_s: start as f64 / trial.sample_rate_hz,
            duration_s: CROP_SECONDS,
            pool_kernel: FALL_POOL_KERNEL,
        }),
    };
    seg.pooled(FALL_POOL_KERNEL)
}

/// Participant-level 20/80 train/test split.
pub fn split_imufd<T: Clone>(
    items: &[T],
    participant: impl Fn(&T) -> &str,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    let people: BTreeSet<&str> = items.iter().map(&participant).collect();
    if people.len() < MIN_PARTICIPANTS {
        return Err(Error::Config(format!(
            "participant split needs >= {MIN_PARTICIPANTS} participants, found {}",
            people.len()
        )));
    }
    let mut people: Vec<&str> = people.into_iter().collect();
    Rng64::seed_from(seed).shuffle(&mut people);
    let n_train = ((people.len() as f64 * TRAIN_FRACTION).round() as usize).max(1);
    let train_set: BTreeSet<&str> = people[..n_train].iter().copied().collect();
    let (train, test) = items
        .iter()
        .cloned()
        .partition(|it| train_set.contains(participant(it)));
    Ok((train, test))
}

/// Index of trials plus the channel columns inside each trial file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImufdManifest {
    /// CSV with columns `file, participant, label, body_location` and
    /// optional `event_time_s` and `trial` (groups the body-location files
    /// of one recording; defaults to `file`).
    pub index: PathBuf,
    #[serde(default = "default_channels")]
    pub channels: Vec<String>,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
}

fn default_channels() -> Vec<String> {
    ["acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z"]
        .map(String::from)
        .to_vec()
}

fn default_rate() -> f64 {
    IMUFD_RATE_HZ
}

fn read_trial_file(path: &Path, channels: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = channels
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h.trim() == c)
                .ok_or_else(|| Error::Config(format!("{}: missing column {c:?}", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Vec::new(); channels.len()];
    for row in rdr.records() {
        let row = row?;
        for (k, &i) in idx.iter().enumerate() {
            let v: f64 = row[i]
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("{}: bad number {:?}", path.display(), &row[i])))?;
            out[k].push(v);
        }
    }
    Ok(out)
}

/// Loads and crops every trial on the four evaluated body locations.
/// Trials too short to crop are returned as `(trial id, reason)`.
pub fn load_imufd(manifest: &ImufdManifest) -> Result<(Vec<ImuSegment>, Vec<(String, String)>)> {
    if !manifest.index.exists() {
        return Err(Error::DatasetMissing {
            path: manifest.index.clone(),
            hint: "IMUFD trial index CSV declared in the ingestion manifest".into(),
        });
    }
    if manifest.channels.len() != 6 {
        return Err(Error::Config("IMUFD manifest must name 6 channel columns".into()));
    }
    let base = manifest.index.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::Reader::from_path(&manifest.index)?;
    let mut trials = Vec::new();
    for row in rdr.deserialize::<BTreeMap<String, String>>() {
        let row = row?;
        let get = |k: &str| {
            row.get(k)
                .cloned()
                .ok_or_else(|| Error::Config(format!("IMUFD index missing column {k:?}")))
        };
        let Some(location) = BodyLocation::parse(&get("body_location")?) else {
            continue;
        };
        let label_raw = get("label")?;
        let label = FallClass::parse(&label_raw)
            .ok_or_else(|| Error::invalid(format!("unknown IMUFD label {label_raw:?}")))?;
        let file = base.join(get("file")?);
        let channels = read_trial_file(&file, &manifest.channels)?;
        let event_index = row
            .get("event_time_s")
            .and_then(|s| s.trim().parse::<f64>().ok())
            .map(|t| (t * manifest.sample_rate_hz).round() as usize);
        trials.push(ImufdTrial {
            trial_id: row.get("trial").cloned().map_or_else(|| get("file"), Ok)?,
            participant: get("participant")?,
            label,
            body_location: location,
            channels,
            sample_rate_hz: manifest.sample_rate_hz,
            event_index,
        });
    }
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for t in &trials {
        match crop_trial(t) {
            Ok(s) => kept.push(s),
            Err(e) => dropped.push((t.trial_id.clone(), e.to_string())),
        }
    }
    Ok((kept, dropped))
}
