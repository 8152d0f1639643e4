//! Normalised segment store: `segments.jsonl` metadata plus one
//! little-endian f64 blob per segment (channel-major).

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{BodyLocation, CropInfo, ImuSegment};

#[derive(Serialize, Deserialize)]
struct StoreLine {
    id: String,
    participant: String,
    device: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body_location: Option<BodyLocation>,
    label: String,
    sample_rate_hz: f64,
    len: usize,
    blob: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    crop: Option<CropInfo>,
}

pub fn write_segment_store(dir: &Path, segments: &[ImuSegment]) -> Result<()> {
    let blobs = dir.join("blobs");
    fs::create_dir_all(&blobs).map_err(|e| Error::io(&blobs, e))?;
    let meta_path = dir.join("segments.jsonl");
    let f = fs::File::create(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let mut meta = BufWriter::new(f);
    for seg in segments {
        let blob_name = format!("blobs/{}.f64le", seg.id);
        let mut bytes = Vec::with_capacity(seg.len() * 6 * 8);
        for ch in &seg.channels {
            for v in ch {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        let blob_path = dir.join(&blob_name);
        fs::write(&blob_path, bytes).map_err(|e| Error::io(&blob_path, e))?;
        let line = StoreLine {
            id: seg.id.clone(),
            participant: seg.participant.clone(),
            device: seg.device.clone(),
            body_location: seg.body_location,
            label: seg.label.clone(),
            sample_rate_hz: seg.sample_rate_hz,
            len: seg.len(),
            blob: blob_name,
            crop: seg.crop.clone(),
        };
        serde_json::to_writer(&mut meta, &line)?;
        meta.write_all(b"\n").map_err(|e| Error::io(&meta_path, e))?;
    }
    meta.flush().map_err(|e| Error::io(&meta_path, e))
}

pub fn read_segment_store(dir: &Path) -> Result<Vec<ImuSegment>> {
    let meta_path = dir.join("segments.jsonl");
    let f = fs::File::open(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(&meta_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let m: StoreLine = serde_json::from_str(&line)?;
        let blob_path = dir.join(&m.blob);
        let bytes = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
        if bytes.len() != m.len * 6 * 8 {
            return Err(Error::invalid(format!("{}: blob size mismatch", blob_path.display())));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let channels = values.chunks(m.len.max(1)).take(6).map(<[f64]>::to_vec).collect();
        out.push(ImuSegment {
            id: m.id,
            channels,
            sample_rate_hz: m.sample_rate_hz,
            participant: m.participant,
            device: m.device,
            body_location: m.body_location,
            label: m.label,
            crop: m.crop,
        });
    }
    Ok(out)
}
