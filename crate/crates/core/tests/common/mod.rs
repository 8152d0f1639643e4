#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use plotbench::evalstats::EvalRecord;
use plotbench::imupipe::{HharColumns, HharManifest, ImufdManifest};
use plotbench::modelgw::{BackendKind, ModelConfig, Pricing, PricingTable};
use plotbench::promptkit::{Modality, ParseStatus};
use plotbench::runner::{ExperimentConfig, TaskConfig};
use plotbench::synthgen::{CellParams, Label, TaskKind};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const MODEL: &str = "m";

pub fn config(outdir: &Path, seed: u64, backend: BackendKind, tasks: &[TaskKind]) -> ExperimentConfig {
    ExperimentConfig {
        seed: Some(seed),
        outdir: outdir.to_path_buf(),
        tasks: tasks.iter().map(|&k| TaskConfig::new(k)).collect(),
        models: vec![ModelConfig {
            model: MODEL.into(),
            backend,
            ..ModelConfig::default()
        }],
        pricing: PricingTable(BTreeMap::from([(
            MODEL.to_string(),
            Pricing {
                text_per_1k: 0.0025,
                image_per_1k: 0.0025,
            },
        )])),
        ..ExperimentConfig::default()
    }
}

/// Rows of a report CSV, skipping the leading `# config_hash=` line.
pub fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).unwrap();
    let body = text.split_once('\n').map_or("", |(first, rest)| {
        assert!(first.starts_with("# config_hash="), "{}: missing hash line", path.display());
        rest
    });
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    rdr.deserialize().map(|r| r.unwrap()).collect()
}

/// All regular files under `dir` except the response cache, as
/// `(relative path, bytes)`.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_file() {
            out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
        }
    }
    out
}

pub fn record(task: TaskKind, id: &str, truth: Label, predicted: Option<Label>) -> EvalRecord {
    EvalRecord {
        instance_id: id.into(),
        task_kind: task,
        modality: Modality::Text,
        model: MODEL.into(),
        shots: 0,
        template_id: "t".into(),
        ground_truth: truth,
        parse_status: if predicted.is_some() {
            ParseStatus::Ok
        } else {
            ParseStatus::ParseFailure
        },
        predicted,
        raw_response: None,
        error: None,
        params: CellParams::default(),
        cell_key: String::new(),
        prompt_tokens: 0,
        image_count: 0,
        cost_usd: 0.0,
        config_hash: String::new(),
    }
}

/// Accuracy records with exactly `correct` of `n` answers right.
pub fn bernoulli_records(n: usize, correct: usize) -> Vec<EvalRecord> {
    (0..n)
        .map(|i| {
            let truth = Label::Class("a".into());
            let pred = if i < correct { "a" } else { "b" };
            record(TaskKind::FunctionId, &format!("r{i}"), truth, Some(Label::Class(pred.into())))
        })
        .collect()
}

/// IMUFD-shaped fixture: per participant, a few trials recorded at all
/// four body locations. Returns the manifest.
pub fn write_imufd_fixture(dir: &Path, participants: usize, trials_each: usize, seed: u64) -> ImufdManifest {
    let mut rng = StdRng::seed_from_u64(seed);
    fs::create_dir_all(dir).unwrap();
    let mut index = String::from("file,participant,label,body_location,trial,event_time_s\n");
    let labels = ["fall", "near_fall", "adl"];
    let n = 20 * 128;
    for p in 0..participants {
        for t in 0..trials_each {
            let label = labels[(p + t) % 3];
            let trial = format!("p{p}_t{t}");
            let event = 8.0 + rng.random::<f64>() * 4.0;
            for loc in ["head", "waist", "left_thigh", "right_thigh"] {
                let file = format!("{trial}_{loc}.csv");
                let mut body = String::from("acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z\n");
                for i in 0..n {
                    let spike = if (i as f64 / 128.0 - event).abs() < 0.5 { 3.0 } else { 0.0 };
                    let _ = writeln!(
                        body,
                        "{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
                        rng.random::<f64>() * 0.2 + spike,
                        rng.random::<f64>() * 0.2,
                        9.81 + rng.random::<f64>() * 0.2,
                        rng.random::<f64>() * 0.1,
                        rng.random::<f64>() * 0.1,
                        rng.random::<f64>() * 0.1 + spike,
                    );
                }
                fs::write(dir.join(&file), body).unwrap();
                let _ = writeln!(index, "{file},P{p},{label},{loc},{trial},{event:.3}");
            }
        }
    }
    let path = dir.join("index.csv");
    fs::write(&path, index).unwrap();
    ImufdManifest {
        index: path,
        channels: ["acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z"].map(String::from).to_vec(),
        sample_rate_hz: 128.0,
    }
}

/// HHAR-shaped fixture: accelerometer and gyroscope CSVs with one
/// 20 s recording per (user, activity) at 50 Hz.
pub fn write_hhar_fixture(dir: &Path, users: usize, seed: u64) -> HharManifest {
    let mut rng = StdRng::seed_from_u64(seed);
    fs::create_dir_all(dir).unwrap();
    let header = "Index,Arrival_Time,Creation_Time,x,y,z,User,Model,Device,gt\n";
    let mut acc = String::from(header);
    let mut gyr = String::from(header);
    let activities = ["sit", "stand", "stairsup", "stairsdown", "walk", "bike"];
    let mut idx = 0;
    for u in 0..users {
        for (ai, a) in activities.iter().enumerate() {
            let t0 = (u * 1000 + ai * 100) as f64;
            for i in 0..(20 * 50) {
                let t_ns = ((t0 + i as f64 / 50.0) * 1e9) as u64;
                for (buf, g) in [(&mut acc, 9.81), (&mut gyr, 0.0)] {
                    let _ = writeln!(
                        buf,
                        "{idx},{t_ns},{t_ns},{:.5},{:.5},{:.5},u{u},nexus4,nexus4_1,{a}",
                        rng.random::<f64>() - 0.5,
                        rng.random::<f64>() - 0.5,
                        g + rng.random::<f64>() - 0.5,
                    );
                    idx += 1;
                }
            }
        }
    }
    let (a, g) = (dir.join("Phones_accelerometer.csv"), dir.join("Phones_gyroscope.csv"));
    fs::write(&a, acc).unwrap();
    fs::write(&g, gyr).unwrap();
    HharManifest {
        accelerometer: a,
        gyroscope: g,
        columns: HharColumns::default(),
    }
}
