//! Real-world IMU pipelines and training-load labelling.

mod acwr;
mod hhar;
mod imufd;
mod store;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use acwr::{acwr_label, rolling_acute_loads, Trend, TrimpSeries, TRIMP_DAYS};
pub use hhar::{
    coalesce_activity, load_hhar, segment_hhar, split_on_gaps, HharColumns, HharManifest,
    RawRecording, SegmentOutcome, TimedSample, ACTIVITY_CLASSES, CROP_SECONDS, GAP_SECONDS,
    TARGET_RATE_HZ,
};
pub use imufd::{
    crop_trial, load_imufd, majority_vote, split_imufd, FallClass, ImufdManifest, ImufdTrial,
    FALL_POOL_KERNEL, IMUFD_RATE_HZ,
};
pub use store::{read_segment_store, write_segment_store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyLocation {
    Head,
    Waist,
    LeftThigh,
    RightThigh,
}

impl BodyLocation {
    pub const ALL: [BodyLocation; 4] = [
        BodyLocation::Head,
        BodyLocation::Waist,
        BodyLocation::LeftThigh,
        BodyLocation::RightThigh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BodyLocation::Head => "head",
            BodyLocation::Waist => "waist",
            BodyLocation::LeftThigh => "left_thigh",
            BodyLocation::RightThigh => "right_thigh",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        BodyLocation::ALL.into_iter().find(|b| b.name() == norm)
    }
}

/// How a fixed-length window was cut from a longer recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropInfo {
    /// `event`, `trial_center` or `longest_chunk_center`.
    pub method: String,
    pub start_s: f64,
    pub duration_s: f64,
    /// Pooling kernel (and stride) applied after cropping.
    pub pool_kernel: usize,
}

/// Six aligned channels: accelerometer x/y/z then gyroscope x/y/z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImuSegment {
    pub id: String,
    pub channels: Vec<Vec<f64>>,
    pub sample_rate_hz: f64,
    pub participant: String,
    pub device: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_location: Option<BodyLocation>,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop: Option<CropInfo>,
}

impl ImuSegment {
    pub fn new(
        id: impl Into<String>,
        channels: Vec<Vec<f64>>,
        sample_rate_hz: f64,
        participant: impl Into<String>,
        label: impl Into<String>,
    ) -> Result<Self> {
        check_channels(&channels)?;
        if !(sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(Self {
            id: id.into(),
            channels,
            sample_rate_hz,
            participant: participant.into(),
            device: String::new(),
            body_location: None,
            label: label.into(),
            crop: None,
        })
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    /// Sample times in seconds from the start of the segment.
    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 / self.sample_rate_hz).collect()
    }

    /// Average-pools every channel with `kernel == stride`.
    pub fn pooled(&self, kernel: usize) -> Result<Self> {
        let channels = self
            .channels
            .iter()
            .map(|c| avgpool1d(c, kernel, kernel))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            channels,
            sample_rate_hz: self.sample_rate_hz / kernel as f64,
            ..self.clone()
        })
    }
}

pub(crate) fn check_channels(channels: &[Vec<f64>]) -> Result<()> {
    if channels.len() != 6 {
        return Err(Error::invalid(format!("IMU segment needs 6 channels, got {}", channels.len())));
    }
    let n = channels[0].len();
    if channels.iter().any(|c| c.len() != n) {
        return Err(Error::invalid("IMU channels differ in length"));
    }
    Ok(())
}

/// Mean over windows of `kernel` samples taken every `stride` samples; a
/// trailing partial window is dropped.
pub fn avgpool1d(signal: &[f64], kernel: usize, stride: usize) -> Result<Vec<f64>> {
    if kernel == 0 || stride == 0 {
        return Err(Error::invalid("kernel and stride must be >= 1"));
    }
    if signal.len() < kernel {
        return Err(Error::invalid(format!(
            "signal of length {} is shorter than kernel {kernel}",
            signal.len()
        )));
    }
    let windows = (signal.len() - kernel) / stride + 1;
    let k = kernel as f64;
    Ok((0..windows)
        .map(|i| signal[i * stride..i * stride + kernel].iter().sum::<f64>() / k)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng64;

    #[test]
    fn fifteen_seconds_at_128hz_pools_to_192() {
        let sig = vec![0.5; 1920];
        let out = avgpool1d(&sig, 10, 10).unwrap();
        assert_eq!(out.len(), 192);
        assert!(out.iter().all(|v| *v == 0.5));
    }

    #[test]
    fn matches_naive_double_loop() {
        let mut rng = Rng64::seed_from(5);
        let sig = rng.normal_vec(0.0, 3.0, 1003);
        for (kernel, stride) in [(10, 10), (7, 3), (1, 1), (25, 40)] {
            let fast = avgpool1d(&sig, kernel, stride).unwrap();
            let mut naive = Vec::new();
            let mut start = 0;
            while start + kernel <= sig.len() {
                let mut acc = 0.0;
                for j in 0..kernel {
                    acc += sig[start + j];
                }
                naive.push(acc / kernel as f64);
                start += stride;
            }
            assert_eq!(fast.len(), naive.len());
            for (a, b) in fast.iter().zip(&naive) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn short_signal_rejected() {
        assert!(avgpool1d(&[1.0; 5], 10, 10).is_err());
        assert!(avgpool1d(&[1.0; 5], 0, 1).is_err());
    }

    #[test]
    fn segment_requires_six_equal_channels() {
        assert!(ImuSegment::new("a", vec![vec![0.0; 4]; 5], 10.0, "p", "walk").is_err());
        let mut ch = vec![vec![0.0; 4]; 6];
        ch[3].push(1.0);
        assert!(ImuSegment::new("a", ch, 10.0, "p", "walk").is_err());
    }
}
