//! Text rendering of task payloads through the series codec.

use crate::error::Result;
use crate::synthgen::{Payload, TaskInstance};
use crate::tscodec::{encode_series, CodecSpec, SeriesView};

pub const IMU_CHANNEL_NAMES: [&str; 6] = ["acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z"];

/// The text-modality body for one instance.
pub fn encode_instance(inst: &TaskInstance, codec: &CodecSpec) -> Result<String> {
    match &inst.payload {
        Payload::Series(s) => encode_series(
            SeriesView {
                xs: Some(&s.xs),
                ys: &[("y", &s.ys)],
            },
            codec,
        ),
        Payload::Correlation(p) => encode_series(
            SeriesView {
                xs: Some(&p.xs),
                ys: &[("y1", &p.y1s), ("y2", &p.y2s)],
            },
            codec,
        ),
        Payload::Clusters(c) => {
            let (xs, ys): (Vec<f64>, Vec<f64>) = c.points.iter().copied().unzip();
            // points carry both coordinates, so x is never optional here
            let spec = CodecSpec {
                include_x: true,
                ..*codec
            };
            encode_series(
                SeriesView {
                    xs: Some(&xs),
                    ys: &[("y", &ys)],
                },
                &spec,
            )
        }
        Payload::Derivative(d) => {
            let mut out = vec![
                "Function:".to_string(),
                encode_series(
                    SeriesView {
                        xs: Some(&d.question.xs),
                        ys: &[("y", &d.question.ys)],
                    },
                    codec,
                )?,
            ];
            for (i, ch) in d.choices.iter().enumerate() {
                out.push(format!("Candidate {i}:"));
                out.push(encode_series(
                    SeriesView {
                        xs: Some(&ch.xs),
                        ys: &[("dy", &ch.ys)],
                    },
                    codec,
                )?);
            }
            Ok(out.join("\n"))
        }
        Payload::Imu(seg) => {
            let t = seg.times();
            let ys: Vec<(&str, &[f64])> = IMU_CHANNEL_NAMES
                .iter()
                .zip(&seg.channels)
                .map(|(n, c)| (*n, c.as_slice()))
                .collect();
            encode_series(SeriesView { xs: Some(&t), ys: &ys }, codec)
        }
        Payload::Trimp(tr) => {
            let days: Vec<f64> = (1..=tr.values.len()).map(|d| d as f64).collect();
            encode_series(
                SeriesView {
                    xs: Some(&days),
                    ys: &[("trimp", &tr.values)],
                },
                codec,
            )
        }
    }
}
