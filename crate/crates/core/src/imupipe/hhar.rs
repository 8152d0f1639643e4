use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::sha256_hex;

use super::{CropInfo, ImuSegment};

pub const GAP_SECONDS: f64 = 2.0;
pub const CROP_SECONDS: f64 = 15.0;
pub const TARGET_RATE_HZ: f64 = 10.0;
/// Relative difference above which accelerometer and gyroscope rates are
/// considered mismatched.
const RATE_TOLERANCE: f64 = 0.05;

pub const ACTIVITY_CLASSES: [&str; 5] = ["sit", "stand", "stairs", "walk", "bike"];

/// One timestamped three-axis reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedSample {
    pub t: f64,
    pub xyz: [f64; 3],
}

/// All readings of one (user, device, activity) recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecording {
    pub user: String,
    pub device: String,
    pub label: String,
    pub accel: Vec<TimedSample>,
    pub gyro: Vec<TimedSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentOutcome {
    Kept(ImuSegment),
    Excluded { key: String, reason: String },
}

/// Maps raw activity names onto the five evaluated classes.
pub fn coalesce_activity(raw: &str) -> Option<&'static str> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "stairsup" | "stairsdown" | "stairs" => Some("stairs"),
        "sit" => Some("sit"),
        "stand" => Some("stand"),
        "walk" => Some("walk"),
        "bike" => Some("bike"),
        _ => None,
    }
}

/// Splits time-sorted samples wherever consecutive timestamps are more than
/// `gap` seconds apart. Returns half-open index ranges.
pub fn split_on_gaps(times: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    if times.is_empty() {
        return out;
    }
    let mut start = 0;
    for i in 1..times.len() {
        if times[i] - times[i - 1] > gap {
            out.push(start..i);
            start = i;
        }
    }
    out.push(start..times.len());
    out
}

fn median_rate(samples: &[TimedSample]) -> Option<f64> {
    let mut dts: Vec<f64> = samples
        .windows(2)
        .map(|w| w[1].t - w[0].t)
        .filter(|d| *d > 0.0)
        .collect();
    if dts.is_empty() {
        return None;
    }
    dts.sort_by(f64::total_cmp);
    let dt = dts[dts.len() / 2];
    Some(1.0 / dt)
}

fn window(samples: &[TimedSample], start: f64, end: f64) -> Vec<TimedSample> {
    samples
        .iter()
        .filter(|s| s.t >= start && s.t < end)
        .copied()
        .collect()
}

/// Turns one raw recording into a 15 s, ~10 Hz, six-channel segment.
///
/// The accelerometer stream is split on gaps longer than two seconds, the
/// central 15 s of the longest chunk is kept, and both streams are average
/// pooled with a kernel chosen so the output rate is close to 10 Hz.
pub fn segment_hhar(rec: &RawRecording) -> SegmentOutcome {
    let key = format!("{}/{}/{}", rec.user, rec.device, rec.label);
    let excluded = |reason: String| SegmentOutcome::Excluded {
        key: key.clone(),
        reason,
    };
    let Some(label) = coalesce_activity(&rec.label) else {
        return excluded(format!("label {:?} is not an evaluated activity", rec.label));
    };
    let (Some(acc_rate), Some(gyr_rate)) = (median_rate(&rec.accel), median_rate(&rec.gyro)) else {
        return excluded("too few samples to estimate a sample rate".into());
    };
    if (acc_rate - gyr_rate).abs() / acc_rate.max(gyr_rate) > RATE_TOLERANCE {
        return excluded(format!(
            "accelerometer {acc_rate:.1} Hz and gyroscope {gyr_rate:.1} Hz rates differ"
        ));
    }
    let mut accel = rec.accel.clone();
    let mut gyro = rec.gyro.clone();
    accel.sort_by(|a, b| a.t.total_cmp(&b.t));
    gyro.sort_by(|a, b| a.t.total_cmp(&b.t));

    let times: Vec<f64> = accel.iter().map(|s| s.t).collect();
    let longest = split_on_gaps(&times, GAP_SECONDS)
        .into_iter()
        .max_by(|a, b| {
            let da = times[a.end - 1] - times[a.start];
            let db = times[b.end - 1] - times[b.start];
            da.total_cmp(&db).then(b.start.cmp(&a.start))
        })
        .expect("non-empty");
    let chunk_start = times[longest.start];
    let chunk_end = times[longest.end - 1];
    let duration = chunk_end - chunk_start;
    if duration < CROP_SECONDS {
        return excluded(format!("longest chunk is {duration:.2} s, shorter than {CROP_SECONDS} s"));
    }
    let mid = 0.5 * (chunk_start + chunk_end);
    let (start, end) = (mid - CROP_SECONDS / 2.0, mid + CROP_SECONDS / 2.0);
    let acc_win = window(&accel, start, end);
    let gyr_win = window(&gyro, start, end);
    let n = acc_win.len().min(gyr_win.len());
    let kernel = ((acc_rate / TARGET_RATE_HZ).round() as usize).max(1);
    if n < kernel {
        return excluded("crop window holds fewer samples than one pooling kernel".into());
    }
    let mut channels = Vec::with_capacity(6);
    for src in [&acc_win, &gyr_win] {
        for axis in 0..3 {
            let raw: Vec<f64> = src[..n].iter().map(|s| s.xyz[axis]).collect();
            match super::avgpool1d(&raw, kernel, kernel) {
                Ok(p) => channels.push(p),
                Err(e) => return excluded(e.to_string()),
            }
        }
    }
    let mut id = sha256_hex(key.as_bytes());
    id.truncate(16);
    SegmentOutcome::Kept(ImuSegment {
        id,
        channels,
        sample_rate_hz: acc_rate / kernel as f64,
        participant: rec.user.clone(),
        device: rec.device.clone(),
        body_location: None,
        label: label.to_string(),
        crop: Some(CropInfo {
            method: "longest_chunk_center".into(),
            start_s: start,
            duration_s: CROP_SECONDS,
            pool_kernel: kernel,
        }),
    })
}

/// Column names of the public HHAR phone/watch CSV releases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HharColumns {
    pub time: String,
    /// Multiplier converting the time column to seconds.
    pub time_scale: f64,
    pub x: String,
    pub y: String,
    pub z: String,
    pub user: String,
    pub device: String,
    pub label: String,
}

impl Default for HharColumns {
    fn default() -> Self {
        Self {
            time: "Creation_Time".into(),
            time_scale: 1e-9,
            x: "x".into(),
            y: "y".into(),
            z: "z".into(),
            user: "User".into(),
            device: "Device".into(),
            label: "gt".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HharManifest {
    pub accelerometer: PathBuf,
    pub gyroscope: PathBuf,
    #[serde(default)]
    pub columns: HharColumns,
}

type Key = (String, String, String);

fn read_stream(path: &Path, cols: &HharColumns) -> Result<BTreeMap<Key, Vec<TimedSample>>> {
    if !path.exists() {
        return Err(Error::DatasetMissing {
            path: path.to_path_buf(),
            hint: "HHAR CSV (e.g. Phones_accelerometer.csv) declared in the ingestion manifest".into(),
        });
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: missing column {name:?}", path.display())))
    };
    let (it, ix, iy, iz, iu, id, il) = (
        col(&cols.time)?,
        col(&cols.x)?,
        col(&cols.y)?,
        col(&cols.z)?,
        col(&cols.user)?,
        col(&cols.device)?,
        col(&cols.label)?,
    );
    let mut out: BTreeMap<Key, Vec<TimedSample>> = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("{}: bad number {:?}", path.display(), &row[i])))
        };
        let key = (row[iu].to_string(), row[id].to_string(), row[il].to_string());
        out.entry(key).or_default().push(TimedSample {
            t: num(it)? * cols.time_scale,
            xyz: [num(ix)?, num(iy)?, num(iz)?],
        });
    }
    Ok(out)
}

/// Reads both HHAR streams and segments every (user, device, activity)
/// recording.
pub fn load_hhar(manifest: &HharManifest) -> Result<Vec<SegmentOutcome>> {
    let acc = read_stream(&manifest.accelerometer, &manifest.columns)?;
    let mut gyr = read_stream(&manifest.gyroscope, &manifest.columns)?;
    let recs: Vec<RawRecording> = acc
        .into_iter()
        .map(|((user, device, label), accel)| {
            let gyro = gyr.remove(&(user.clone(), device.clone(), label.clone())).unwrap_or_default();
            RawRecording {
                user,
                device,
                label,
                accel,
                gyro,
            }
        })
        .collect();
    Ok(crate::par::map(&recs, segment_hhar))
}
