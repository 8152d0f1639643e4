use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::evalstats::EvalRecord;
use crate::fsutil::write_atomic;
use crate::imupipe::{load_hhar, load_imufd, split_imufd, ImuSegment, SegmentOutcome, TrimpSeries};
use crate::modelgw::{build_backend, estimate_cost, Gateway, ResponseCache};
use crate::par;
use crate::plotrender::PngCache;
use crate::promptkit::{
    assemble_fewshots_mode, build_prompt, parse_response, quadratic_shot_pool, Modality, ParseStatus, Rendering, Shot,
    Template,
};
use crate::seed;
use crate::synthgen::{build_task_matrix, write_archive, CellParams, Label, Payload, TaskInstance, TaskKind};

use super::config::{ExperimentConfig, TaskConfig};
use super::report::emit_report;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const PARTIAL_FILE: &str = "records.partial.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Quadratic worked examples generated per shot scale.
const QUADRATIC_POOL_PER_SCALE: usize = 10;

/// Instances to evaluate plus the pool few-shot examples are drawn from.
#[derive(Debug, Clone)]
pub struct TaskData {
    pub config: TaskConfig,
    pub eval: Vec<TaskInstance>,
    pub pool: Vec<TaskInstance>,
    /// `(source id, reason)` for inputs dropped during loading.
    pub excluded: Vec<(String, String)>,
}

pub fn load_task(cfg: &ExperimentConfig, task: &TaskConfig) -> Result<TaskData> {
    let seed = cfg.seed();
    let kind = task.kind;
    let mut excluded = Vec::new();
    let (mut eval, pool) = match kind {
        TaskKind::FallDetection => {
            let m = cfg
                .datasets
                .imufd
                .as_ref()
                .ok_or_else(|| Error::Config("fall_detection needs [datasets.imufd]".into()))?;
            let (segs, skipped) = load_imufd(m)?;
            excluded = skipped;
            let (train, test) = split_imufd(&segs, |s| s.participant.as_str(), seed!(seed, "imufd_split"))?;
            (imu_instances(kind, seed, &test)?, imu_instances(kind, seed, &train)?)
        }
        TaskKind::ActivityRecognition => {
            let m = cfg
                .datasets
                .hhar
                .as_ref()
                .ok_or_else(|| Error::Config("activity_recognition needs [datasets.hhar]".into()))?;
            let mut segs = Vec::new();
            for o in load_hhar(m)? {
                match o {
                    SegmentOutcome::Kept(s) => segs.push(s),
                    SegmentOutcome::Excluded { key, reason } => excluded.push((key, reason)),
                }
            }
            let all = imu_instances(kind, seed, &segs)?;
            (all.clone(), all)
        }
        TaskKind::Readiness => {
            let path = cfg
                .datasets
                .trimp
                .as_ref()
                .ok_or_else(|| Error::Config("readiness needs datasets.trimp".into()))?;
            let all = load_trimp(path)?
                .into_iter()
                .map(|t| {
                    let params = CellParams {
                        segment: Some(t.case_id.clone()),
                        ..Default::default()
                    };
                    TaskInstance::new(kind, seed!(seed, kind.name(), t.case_id.as_str()), params, Payload::Trimp(t))
                })
                .collect::<Result<Vec<_>>>()?;
            (all.clone(), all)
        }
        TaskKind::QuadraticDerivativeId => {
            let eval = build_task_matrix(kind, &task.matrix()?, seed)?;
            let pool = quadratic_shot_pool(seed!(seed, "quadratic_pool"), QUADRATIC_POOL_PER_SCALE)?;
            (eval, pool)
        }
        _ => {
            let all = build_task_matrix(kind, &task.matrix()?, seed)?;
            (all.clone(), all)
        }
    };
    if let Some(n) = task.limit {
        eval.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
        eval.truncate(n);
    }
    Ok(TaskData {
        config: task.clone(),
        eval,
        pool,
        excluded,
    })
}

fn imu_instances(kind: TaskKind, seed: u64, segs: &[ImuSegment]) -> Result<Vec<TaskInstance>> {
    segs.iter()
        .map(|s| {
            let params = CellParams {
                participant: Some(s.participant.clone()),
                body_location: s.body_location.map(|b| b.name().to_string()),
                trial: (kind == TaskKind::FallDetection).then(|| s.device.clone()),
                segment: Some(s.id.clone()),
                ..Default::default()
            };
            TaskInstance::new(kind, seed!(seed, kind.name(), s.id.as_str()), params, Payload::Imu(s.clone()))
        })
        .collect()
}

/// Reads a CSV whose first column is a case id and whose remaining columns
/// are daily TRIMP values.
pub fn load_trimp(path: &Path) -> Result<Vec<TrimpSeries>> {
    if !path.exists() {
        return Err(Error::DatasetMissing {
            path: path.to_path_buf(),
            hint: "TRIMP CSV: case_id followed by one column per day".into(),
        });
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let id = row.get(0).unwrap_or_default().trim().to_string();
        let values = row
            .iter()
            .skip(1)
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("{}: bad TRIMP value {v:?} for {id}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(TrimpSeries::new(id, values)?);
    }
    Ok(out)
}

pub fn load_tasks(cfg: &ExperimentConfig) -> Result<Vec<TaskData>> {
    cfg.tasks.iter().map(|t| load_task(cfg, t)).collect()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Keep records from an interrupted run with the same config.
    pub resume: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outdir: PathBuf,
    pub config_hash: String,
    pub records: usize,
    /// Records written by this invocation.
    pub executed: usize,
    pub backend_calls: u64,
    pub failures: usize,
    pub report_files: Vec<PathBuf>,
}

/// Creates `outdir` and stamps it with the config hash, refusing a
/// directory that holds results of another config.
pub fn claim_outdir(outdir: &Path, hash: &str) -> Result<()> {
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let path = outdir.join(MANIFEST_FILE);
    if path.exists() {
        let s = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let v: serde_json::Value = serde_json::from_str(&s)?;
        let other = v.get("config_hash").and_then(|h| h.as_str()).unwrap_or("");
        if other != hash {
            return Err(Error::Config(format!(
                "{} holds results for config {other}; refusing to mix them with config {hash}",
                outdir.display()
            )));
        }
        return Ok(());
    }
    let v = serde_json::json!({
        "config_hash": hash,
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_atomic(&path, format!("{}\n", serde_json::to_string_pretty(&v)?).as_bytes())
}

fn record_key(task: TaskKind, instance: &str, model: &str, modality: Modality, shots: usize) -> String {
    format!("{task}\t{instance}\t{model}\t{modality}\t{shots}")
}

fn key_of(r: &EvalRecord) -> String {
    record_key(r.task_kind, &r.instance_id, &r.model, r.modality, r.shots)
}

/// Parses a records file, ignoring a torn final line left by a crash.
pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = BufReader::new(f)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let mut out = Vec::with_capacity(lines.len());
    let last = lines.len().saturating_sub(1);
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if i == last => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

pub fn write_records(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

/// Deterministic record order, independent of completion order.
pub fn sort_records(records: &mut [EvalRecord]) {
    records.sort_by(|a, b| {
        (a.task_kind, &a.instance_id, &a.model, a.modality as u8, a.shots).cmp(&(
            b.task_kind,
            &b.instance_id,
            &b.model,
            b.modality as u8,
            b.shots,
        ))
    });
}

struct Job {
    task: usize,
    inst: usize,
    model: usize,
    modality: Modality,
    shots: usize,
}

fn union_modality(mods: &[Modality]) -> Modality {
    let text = mods.iter().any(|m| m.needs_text());
    let plot = mods.iter().any(|m| m.needs_plot());
    match (text, plot) {
        (true, true) => Modality::CombinedTextFirst,
        (false, true) => Modality::Plot,
        _ => Modality::Text,
    }
}

fn narrow(full: &Rendering, m: Modality) -> Rendering {
    Rendering {
        text: if m.needs_text() { full.text.clone() } else { None },
        images: if m.needs_plot() { full.images.clone() } else { Vec::new() },
    }
}

/// Few-shot selections for every (eval instance, shot count), as indices
/// into the pool. Independent of model and modality so comparisons stay
/// paired.
fn select_shots(cfg: &ExperimentConfig, td: &TaskData) -> Result<Vec<BTreeMap<usize, Vec<usize>>>> {
    let pos: HashMap<&str, usize> = td
        .pool
        .iter()
        .enumerate()
        .map(|(i, p)| (p.instance_id.as_str(), i))
        .collect();
    let exclusion = td.config.exclusion();
    let mode = td.config.shot_mode();
    td.eval
        .iter()
        .map(|inst| {
            let mut per_k = BTreeMap::new();
            for &k in &cfg.shots {
                let seed = seed!(cfg.seed(), "shots", td.config.kind.name(), k);
                let picked = assemble_fewshots_mode(&td.pool, inst, k, exclusion, mode, seed)?;
                per_k.insert(k, picked.iter().map(|p| pos[p.instance_id.as_str()]).collect());
            }
            Ok(per_k)
        })
        .collect()
}

/// Runs every (task, instance, model, modality, shot count) job, writes
/// `records.jsonl` and the report.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let hash = cfg.hash();
    let outdir = cfg.outdir.clone();
    let tasks = load_tasks(cfg)?;
    let selections = tasks
        .iter()
        .map(|td| select_shots(cfg, td))
        .collect::<Result<Vec<_>>>()?;

    claim_outdir(&outdir, &hash)?;
    write_excluded(&outdir, &hash, &tasks)?;

    let answers: HashMap<String, Label> = tasks
        .iter()
        .flat_map(|td| td.eval.iter())
        .map(|i| (i.instance_id.clone(), i.ground_truth.clone()))
        .collect();
    let answers = Arc::new(answers);
    let gateways = cfg
        .models
        .iter()
        .map(|m| {
            let mut m = m.clone();
            m.random_seed.get_or_insert(seed!(cfg.seed(), "random_backend", m.model.as_str()));
            Gateway::new(m.clone(), build_backend(&m, Some(answers.clone()))?, ResponseCache::on_disk(cfg.cache_dir()))
        })
        .collect::<Result<Vec<_>>>()?;
    let templates: Vec<Template> = tasks.iter().map(|td| Template::builtin(td.config.kind)).collect();

    let partial_path = outdir.join(PARTIAL_FILE);
    let final_path = outdir.join(RECORDS_FILE);
    let mut previous = Vec::new();
    if opts.resume {
        previous.extend(read_records(&final_path)?);
        let partial = read_records(&partial_path)?;
        if partial_path.exists() {
            // drop a torn tail before appending to the log again
            write_records(&partial_path, &partial)?;
        }
        previous.extend(partial);
        previous.retain(|r| r.config_hash == hash);
    } else if partial_path.exists() {
        fs::remove_file(&partial_path).map_err(|e| Error::io(&partial_path, e))?;
    }
    let done: HashSet<String> = previous.iter().map(key_of).collect();

    let mut jobs = Vec::new();
    let mut wanted = HashSet::new();
    for (ti, td) in tasks.iter().enumerate() {
        for (ii, inst) in td.eval.iter().enumerate() {
            for (mi, m) in cfg.models.iter().enumerate() {
                for &modality in &cfg.modalities {
                    for &shots in &cfg.shots {
                        let key = record_key(td.config.kind, &inst.instance_id, &m.model, modality, shots);
                        if !done.contains(&key) {
                            jobs.push(Job {
                                task: ti,
                                inst: ii,
                                model: mi,
                                modality,
                                shots,
                            });
                        }
                        wanted.insert(key);
                    }
                }
            }
        }
    }

    // render each needed instance once; shots reuse the pool renderings
    let full_modality = union_modality(&cfg.modalities);
    let renderings: Vec<HashMap<String, std::result::Result<Rendering, String>>> = tasks
        .iter()
        .enumerate()
        .map(|(ti, td)| {
            let codec = cfg.codec_for(&td.config);
            let plot = cfg.plot_for(&td.config);
            let mut need: Vec<&TaskInstance> = Vec::new();
            let mut seen = HashSet::new();
            for job in jobs.iter().filter(|j| j.task == ti) {
                let inst = &td.eval[job.inst];
                if seen.insert(inst.instance_id.clone()) {
                    need.push(inst);
                }
                for &p in &selections[ti][job.inst][&job.shots] {
                    if seen.insert(td.pool[p].instance_id.clone()) {
                        need.push(&td.pool[p]);
                    }
                }
            }
            let built = par::with_workers(cfg.workers, || {
                par::map(&need, |inst| {
                    Rendering::build(inst, full_modality, &codec, &plot).map_err(|e| e.to_string())
                })
            });
            need.iter().map(|i| i.instance_id.clone()).zip(built).collect()
        })
        .collect();

    let writer = Mutex::new(
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&partial_path)
            .map_err(|e| Error::io(&partial_path, e))?,
    );
    let abort = AtomicBool::new(false);
    let outcomes: Vec<Result<bool>> = par::with_workers(cfg.workers, || {
        par::map(&jobs, |job| {
            if abort.load(Ordering::SeqCst) {
                return Ok(false);
            }
            let td = &tasks[job.task];
            let inst = &td.eval[job.inst];
            let shots: Vec<&TaskInstance> = selections[job.task][job.inst][&job.shots]
                .iter()
                .map(|&p| &td.pool[p])
                .collect();
            let rec = match execute(
                cfg,
                &gateways[job.model],
                &templates[job.task],
                &renderings[job.task],
                inst,
                &shots,
                job,
                &hash,
            ) {
                Ok(r) => r,
                Err(e) => {
                    abort.store(true, Ordering::SeqCst);
                    return Err(e);
                }
            };
            let mut line = serde_json::to_vec(&rec)?;
            line.push(b'\n');
            let mut w = writer.lock().unwrap_or_else(|e| e.into_inner());
            w.write_all(&line).map_err(|e| Error::io(&partial_path, e))?;
            Ok(rec.error.is_some())
        })
    });
    drop(writer);
    let mut failures = 0;
    let mut executed = 0;
    for o in outcomes {
        if o? {
            failures += 1;
        }
        executed += 1;
    }

    let mut seen = HashSet::new();
    let mut records: Vec<EvalRecord> = previous
        .into_iter()
        .chain(read_records(&partial_path)?)
        .filter(|r| r.config_hash == hash && wanted.contains(&key_of(r)) && seen.insert(key_of(r)))
        .collect();
    sort_records(&mut records);
    write_records(&final_path, &records)?;
    if partial_path.exists() {
        fs::remove_file(&partial_path).map_err(|e| Error::io(&partial_path, e))?;
    }
    let report_files = emit_report(cfg, &records, &outdir)?;
    Ok(RunSummary {
        outdir,
        config_hash: hash,
        records: records.len(),
        executed,
        backend_calls: gateways.iter().map(Gateway::backend_calls).sum(),
        failures,
        report_files,
    })
}

#[allow(clippy::too_many_arguments)]
fn execute(
    cfg: &ExperimentConfig,
    gateway: &Gateway,
    template: &Template,
    renderings: &HashMap<String, std::result::Result<Rendering, String>>,
    inst: &TaskInstance,
    shots: &[&TaskInstance],
    job: &Job,
    hash: &str,
) -> Result<EvalRecord> {
    let mut rec = EvalRecord {
        instance_id: inst.instance_id.clone(),
        task_kind: inst.task_kind,
        modality: job.modality,
        model: gateway.config.model.clone(),
        shots: job.shots,
        template_id: template.id.clone(),
        ground_truth: inst.ground_truth.clone(),
        predicted: None,
        parse_status: ParseStatus::ParseFailure,
        raw_response: None,
        error: None,
        params: inst.params.clone(),
        cell_key: inst.params.cell_key(),
        prompt_tokens: 0,
        image_count: 0,
        cost_usd: 0.0,
        config_hash: hash.to_string(),
    };
    let rendering = |i: &TaskInstance| -> std::result::Result<Rendering, String> {
        match renderings.get(&i.instance_id) {
            Some(Ok(r)) => Ok(narrow(r, job.modality)),
            Some(Err(e)) => Err(format!("rendering {}: {e}", i.instance_id)),
            None => Err(format!("no rendering for {}", i.instance_id)),
        }
    };
    let prompt = (|| -> std::result::Result<_, String> {
        let main = rendering(inst)?;
        let shot_list = shots
            .iter()
            .map(|s| Ok(Shot::new(s, rendering(s)?)))
            .collect::<std::result::Result<Vec<_>, String>>()?;
        build_prompt(inst, job.modality, &main, &shot_list, template).map_err(|e| e.to_string())
    })();
    let prompt = match prompt {
        Ok(p) => p,
        Err(e) => {
            rec.error = Some(e);
            return Ok(rec);
        }
    };
    rec.cost_usd = estimate_cost(&prompt, cfg.pricing.get(&gateway.config.model)?).total;
    let resp = gateway.invoke(&prompt)?;
    rec.prompt_tokens = resp.prompt_tokens;
    rec.image_count = resp.image_count;
    match resp.text {
        Some(text) => {
            let parsed = parse_response(&text, &prompt.schema);
            rec.parse_status = parsed.status;
            rec.predicted = parsed.value;
            rec.raw_response = Some(text);
        }
        None => {
            rec.error = resp.error.map(|e| format!("{:?}: {}", e.kind, e.message));
        }
    }
    Ok(rec)
}

fn write_excluded(outdir: &Path, hash: &str, tasks: &[TaskData]) -> Result<()> {
    let mut buf = format!("# config_hash={hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["task", "source", "reason"])?;
        for td in tasks {
            for (id, reason) in &td.excluded {
                w.write_record([td.config.kind.name(), id, reason])?;
            }
        }
        w.flush().map_err(|e| Error::io(outdir, e))?;
    }
    write_atomic(&outdir.join("excluded.csv"), &buf)
}

/// Writes each task's evaluation instances as a line-delimited archive.
pub fn generate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    claim_outdir(&cfg.outdir, &cfg.hash())?;
    let dir = cfg.outdir.join("instances");
    let mut out = Vec::new();
    for td in load_tasks(cfg)? {
        let path = dir.join(format!("{}.jsonl", td.config.kind));
        write_archive(&path, &td.eval)?;
        out.push(path);
    }
    Ok(out)
}

/// Renders every evaluation instance to PNG under `<outdir>/plots`,
/// skipping images already on disk.
pub fn render(cfg: &ExperimentConfig) -> Result<usize> {
    cfg.validate()?;
    let hash = cfg.hash();
    claim_outdir(&cfg.outdir, &hash)?;
    let cache = PngCache::new(cfg.outdir.join("plots"));
    let mut n = 0;
    for td in load_tasks(cfg)? {
        let spec = cfg.plot_for(&td.config);
        let counts = par::with_workers(cfg.workers, || {
            par::map(&td.eval, |inst| cache.get_or_render(inst, &spec, Some(&hash)).map(|v| v.len()))
        });
        for c in counts {
            n += c?;
        }
    }
    Ok(n)
}
