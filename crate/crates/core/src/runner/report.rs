use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evalstats::{
    bonferroni_adjust, bootstrap_distribution, compute_metric_detail, oriented_diff_distribution, quantile, summarize,
    wilcoxon_checked, EvalRecord, MetricKind, MetricSummary, Provenance,
};
use crate::fsutil::write_atomic;
use crate::imupipe::{majority_vote, FallClass};
use crate::plotrender::{render_boxplot, BoxStats, PlotSpec};
use crate::promptkit::{Modality, ParseStatus};
use crate::seed;
use crate::synthgen::{CellParams, Label, TaskKind};

use super::config::{ExperimentConfig, Grouping};

/// Family-wise significance level for the stars in the comparison table.
pub const SIGNIFICANCE: f64 = 0.05;

/// Metric of one (task, model, shots, modality) group with its bootstrap
/// summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub task: TaskKind,
    pub model: String,
    pub shots: usize,
    pub modality: Modality,
    pub metric: &'static str,
    /// `None` when the metric is undefined (e.g. MAE with every answer
    /// unparseable).
    pub value: Option<f64>,
    pub n: usize,
    pub parse_failures: usize,
    pub errors: usize,
    pub bootstrap: Option<MetricSummary>,
    /// 2.5th and 97.5th percentiles of the bootstrap replicates.
    pub percentile_ci: Option<(f64, f64)>,
}

/// One plot-vs-text comparison: a cell of the headline table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub task: TaskKind,
    pub model: String,
    pub shots: usize,
    pub modality: Modality,
    pub metric: &'static str,
    /// Distribution of differences, oriented so positive favours the
    /// non-text modality.
    pub diff: Option<MetricSummary>,
    pub units: usize,
    pub test: &'static str,
    pub p_value: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub significant: bool,
    pub cell: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub summaries: Vec<SummaryRow>,
    pub table: Vec<TableRow>,
}

type GroupKey = (TaskKind, String, usize, Modality);

fn groups(records: &[EvalRecord]) -> BTreeMap<GroupKey, Vec<EvalRecord>> {
    let mut g: BTreeMap<GroupKey, Vec<EvalRecord>> = BTreeMap::new();
    for r in records {
        g.entry((r.task_kind, r.model.clone(), r.shots, r.modality))
            .or_default()
            .push(r.clone());
    }
    for v in g.values_mut() {
        if v.first().is_some_and(|r| r.task_kind == TaskKind::FallDetection) {
            *v = aggregate_trials(v);
        }
    }
    g
}

/// Collapses fall-detection records of one recording (one per body
/// location) into a single record by majority vote over the parsed
/// predictions.
pub fn aggregate_trials(records: &[EvalRecord]) -> Vec<EvalRecord> {
    let mut by_trial: BTreeMap<String, Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        let trial = r.params.trial.clone().unwrap_or_else(|| r.instance_id.clone());
        by_trial.entry(trial).or_default().push(r);
    }
    by_trial
        .into_iter()
        .map(|(trial, rs)| {
            let votes: Vec<FallClass> = rs
                .iter()
                .filter_map(|r| match &r.predicted {
                    Some(Label::Class(c)) => FallClass::parse(c),
                    _ => None,
                })
                .collect();
            let first = rs[0];
            let predicted = majority_vote(&votes).ok().map(|c| Label::Class(c.name().into()));
            EvalRecord {
                instance_id: trial.clone(),
                parse_status: if predicted.is_some() {
                    ParseStatus::Ok
                } else {
                    ParseStatus::ParseFailure
                },
                predicted,
                raw_response: None,
                error: rs.iter().find_map(|r| r.error.clone()),
                params: CellParams {
                    participant: first.params.participant.clone(),
                    trial: Some(trial),
                    ..Default::default()
                },
                cell_key: first.cell_key.clone(),
                prompt_tokens: rs.iter().map(|r| r.prompt_tokens).sum(),
                image_count: rs.iter().map(|r| r.image_count).sum(),
                cost_usd: rs.iter().map(|r| r.cost_usd).sum(),
                ..first.clone()
            }
        })
        .collect()
}

fn metric_value(kind: MetricKind, records: &[EvalRecord]) -> Option<f64> {
    compute_metric_detail(kind, records).ok().map(|d| d.value)
}

pub fn compute_summaries(cfg: &ExperimentConfig, records: &[EvalRecord]) -> Result<Vec<SummaryRow>> {
    let seed = cfg.seed();
    groups(records)
        .into_iter()
        .map(|((task, model, shots, modality), rs)| {
            let kind = MetricKind::for_task(task);
            let detail = compute_metric_detail(kind, &rs).ok();
            let (bootstrap, percentile_ci) = match bootstrap_distribution(
                &rs,
                kind,
                cfg.bootstrap_replicates,
                seed!(seed, "summary", task.name(), model.as_str(), shots, modality.name()),
            ) {
                Ok(d) => (Some(summarize(&d)?), Some((quantile(&d, 0.025)?, quantile(&d, 0.975)?))),
                Err(Error::Degenerate(_)) => (None, None),
                Err(e) => return Err(e),
            };
            Ok(SummaryRow {
                task,
                model,
                shots,
                modality,
                metric: kind.name(),
                value: detail.as_ref().map(|d| d.value),
                n: rs.len(),
                parse_failures: rs.iter().filter(|r| r.parse_status != ParseStatus::Ok).count(),
                errors: rs.iter().filter(|r| r.error.is_some()).count(),
                bootstrap,
                percentile_ci,
            })
        })
        .collect()
}

fn unit_key(r: &EvalRecord, grouping: Grouping) -> String {
    match grouping {
        Grouping::GridCell => r.cell_key.clone(),
        Grouping::Repeat => format!("{}#{}", r.cell_key, r.params.repeat.unwrap_or(0)),
    }
}

fn fmt_signed(v: f64) -> String {
    // adding zero turns -0.0 into 0.0
    format!("{:+.3}", v + 0.0)
}

/// Renders a comparison cell: `median [q1, q3]` with a star when
/// significant, `--` when there is nothing to compare.
pub fn format_cell(diff: Option<&MetricSummary>, significant: bool) -> String {
    match diff {
        None => "--".into(),
        Some(d) => format!(
            "{} [{}, {}]{}",
            fmt_signed(d.median),
            fmt_signed(d.q1),
            fmt_signed(d.q3),
            if significant { "*" } else { "" }
        ),
    }
}

/// Compares every non-text modality against text within each
/// (task, model, shots) block.
pub fn compute_table(cfg: &ExperimentConfig, records: &[EvalRecord]) -> Result<Vec<TableRow>> {
    let seed = cfg.seed();
    let g = groups(records);
    let mut blocks: BTreeMap<(TaskKind, String, usize), Vec<Modality>> = BTreeMap::new();
    for (task, model, shots, m) in g.keys() {
        blocks.entry((*task, model.clone(), *shots)).or_default().push(*m);
    }
    let others: Vec<Modality> = cfg
        .modalities
        .iter()
        .copied()
        .filter(|m| *m != Modality::Text)
        .collect();
    let others = if others.is_empty() { vec![Modality::Plot] } else { others };
    let mut rows = Vec::new();
    for (task, model, shots) in blocks.keys() {
        let kind = MetricKind::for_task(*task);
        let text = g.get(&(*task, model.clone(), *shots, Modality::Text));
        for &m in &others {
            let other = g.get(&(*task, model.clone(), *shots, m));
            let mut row = TableRow {
                task: *task,
                model: model.clone(),
                shots: *shots,
                modality: m,
                metric: kind.name(),
                diff: None,
                units: 0,
                test: "none",
                p_value: None,
                p_adjusted: None,
                significant: false,
                cell: String::new(),
            };
            if let (Some(text), Some(other)) = (text, other) {
                if task.is_synthetic() {
                    synthetic_comparison(cfg, kind, other, text, &mut row)?;
                } else {
                    let s = seed!(seed, "table", task.name(), model.as_str(), *shots, m.name());
                    realworld_comparison(cfg, kind, other, text, s, &mut row)?;
                }
            }
            rows.push(row);
        }
    }
    // Bonferroni within each task
    let mut tasks: Vec<TaskKind> = rows.iter().map(|r| r.task).collect();
    tasks.dedup();
    for t in tasks {
        let idx: Vec<usize> = (0..rows.len())
            .filter(|&i| rows[i].task == t && rows[i].p_value.is_some())
            .collect();
        let ps: Vec<f64> = idx.iter().map(|&i| rows[i].p_value.unwrap_or(1.0)).collect();
        for (&i, adj) in idx.iter().zip(bonferroni_adjust(&ps)?) {
            rows[i].p_adjusted = Some(adj);
            rows[i].significant = adj < SIGNIFICANCE;
        }
    }
    for r in &mut rows {
        r.cell = format_cell(r.diff.as_ref(), r.significant);
    }
    Ok(rows)
}

/// Per-unit metrics paired across modalities; differences form the cell
/// distribution and the Wilcoxon test runs on the paired unit metrics.
fn synthetic_comparison(
    cfg: &ExperimentConfig,
    kind: MetricKind,
    other: &[EvalRecord],
    text: &[EvalRecord],
    row: &mut TableRow,
) -> Result<()> {
    let by_unit = |rs: &[EvalRecord]| {
        let mut m: BTreeMap<String, Vec<EvalRecord>> = BTreeMap::new();
        for r in rs {
            m.entry(unit_key(r, cfg.grouping)).or_default().push(r.clone());
        }
        m
    };
    let (o, t) = (by_unit(other), by_unit(text));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (unit, ors) in &o {
        let Some(trs) = t.get(unit) else { continue };
        if let (Some(a), Some(b)) = (metric_value(kind, ors), metric_value(kind, trs)) {
            xs.push(a);
            ys.push(b);
        }
    }
    if xs.is_empty() {
        return Ok(());
    }
    let sign = if kind.higher_is_better() { 1.0 } else { -1.0 };
    let diffs: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| sign * (a - b)).collect();
    row.diff = Some(summarize(&diffs)?);
    row.units = xs.len();
    match wilcoxon_checked(&xs, &ys, Provenance::Observed, false) {
        Ok(w) => {
            row.test = "wilcoxon";
            row.p_value = Some(w.p_value);
        }
        Err(Error::Degenerate(_)) => row.test = "degenerate",
        Err(e) => return Err(e),
    }
    Ok(())
}

/// Bootstrap distributions of both modalities, paired at random into a
/// distribution of differences. No test unless explicitly allowed.
fn realworld_comparison(
    cfg: &ExperimentConfig,
    kind: MetricKind,
    other: &[EvalRecord],
    text: &[EvalRecord],
    seed: u64,
    row: &mut TableRow,
) -> Result<()> {
    let boot = |rs: &[EvalRecord], tag: &str| match bootstrap_distribution(
        rs,
        kind,
        cfg.bootstrap_replicates,
        seed!(seed, tag),
    ) {
        Ok(d) => Ok(Some(d)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let (Some(o), Some(t)) = (boot(other, "other")?, boot(text, "text")?) else {
        return Ok(());
    };
    let diffs = oriented_diff_distribution(&o, &t, kind, cfg.diff_pairs, seed!(seed, "pairs"))?;
    row.diff = Some(summarize(&diffs)?);
    row.units = other.len().min(text.len());
    row.test = "not_applicable";
    if cfg.allow_bootstrap_wilcoxon {
        match wilcoxon_checked(&o, &t, Provenance::BootstrapDerived, true) {
            Ok(w) => {
                row.test = "wilcoxon_bootstrap";
                row.p_value = Some(w.p_value);
            }
            Err(Error::Degenerate(_)) => row.test = "degenerate",
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x:.6}"))
}

fn csv_bytes(hash: &str, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut buf = format!("# config_hash={hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io("<csv buffer>", e))?;
    }
    Ok(buf)
}

fn axis_sort_key(v: &str) -> (f64, String) {
    (v.parse::<f64>().unwrap_or(f64::INFINITY), v.to_string())
}

/// Writes tables, breakdowns, summaries, cost accounting and box plots to
/// `outdir`. Every file carries the config hash.
pub fn emit_report(cfg: &ExperimentConfig, records: &[EvalRecord], outdir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::invalid("report needs at least one record"));
    }
    let hash = cfg.hash();
    let summaries = compute_summaries(cfg, records)?;
    let table = compute_table(cfg, records)?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let p = outdir.join(name);
        write_atomic(&p, &bytes)?;
        written.push(p);
        Ok(())
    };

    let mut tasks: Vec<TaskKind> = records.iter().map(|r| r.task_kind).collect();
    tasks.sort();
    tasks.dedup();

    for &task in &tasks {
        let rows: Vec<Vec<String>> = table
            .iter()
            .filter(|r| r.task == task)
            .map(|r| {
                let d = r.diff.as_ref();
                vec![
                    r.model.clone(),
                    r.shots.to_string(),
                    r.modality.name().into(),
                    r.metric.into(),
                    r.cell.clone(),
                    opt(d.map(|d| d.median)),
                    opt(d.map(|d| d.q1)),
                    opt(d.map(|d| d.q3)),
                    r.units.to_string(),
                    r.test.into(),
                    opt(r.p_value),
                    opt(r.p_adjusted),
                    r.significant.to_string(),
                ]
            })
            .collect();
        put(
            format!("table_{task}.csv"),
            csv_bytes(
                &hash,
                &[
                    "model", "shots", "vs_text", "metric", "cell", "median", "q1", "q3", "units", "test", "p",
                    "p_bonferroni", "significant",
                ],
                &rows,
            )?,
        )?;

        let task_records: Vec<&EvalRecord> = records.iter().filter(|r| r.task_kind == task).collect();
        let kind = MetricKind::for_task(task);
        if task.is_synthetic() {
            let mut cells: BTreeMap<(String, usize, Modality, String), Vec<EvalRecord>> = BTreeMap::new();
            for r in &task_records {
                cells
                    .entry((r.model.clone(), r.shots, r.modality, r.cell_key.clone()))
                    .or_default()
                    .push((*r).clone());
            }
            let rows: Vec<Vec<String>> = cells
                .iter()
                .map(|((model, shots, m, cell), rs)| {
                    vec![
                        model.clone(),
                        shots.to_string(),
                        m.name().into(),
                        cell.clone(),
                        rs.len().to_string(),
                        kind.name().into(),
                        opt(metric_value(kind, rs)),
                    ]
                })
                .collect();
            put(
                format!("cells_{task}.csv"),
                csv_bytes(&hash, &["model", "shots", "modality", "cell", "n", "metric", "value"], &rows)?,
            )?;
        }

        let mut axes: BTreeMap<&'static str, BTreeMap<(String, usize, Modality), Vec<(String, EvalRecord)>>> =
            BTreeMap::new();
        for r in &task_records {
            for (axis, v) in r.params.axes() {
                axes.entry(axis)
                    .or_default()
                    .entry((r.model.clone(), r.shots, r.modality))
                    .or_default()
                    .push((v, (*r).clone()));
            }
        }
        for (axis, by_group) in axes {
            let mut rows = Vec::new();
            for ((model, shots, m), vals) in by_group {
                let mut by_val: Vec<(String, Vec<EvalRecord>)> = Vec::new();
                let mut sorted = vals;
                sorted.sort_by(|a, b| {
                    let (ka, kb) = (axis_sort_key(&a.0), axis_sort_key(&b.0));
                    ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1))
                });
                for (v, r) in sorted {
                    match by_val.last_mut() {
                        Some((lv, rs)) if *lv == v => rs.push(r),
                        _ => by_val.push((v, vec![r])),
                    }
                }
                for (v, rs) in by_val {
                    rows.push(vec![
                        model.clone(),
                        shots.to_string(),
                        m.name().into(),
                        v,
                        rs.len().to_string(),
                        kind.name().into(),
                        opt(metric_value(kind, &rs)),
                    ]);
                }
            }
            put(
                format!("breakdown_{task}_{axis}.csv"),
                csv_bytes(&hash, &["model", "shots", "modality", axis, "n", "metric", "value"], &rows)?,
            )?;
        }

        let task_summaries: Vec<&SummaryRow> = summaries.iter().filter(|s| s.task == task).collect();
        let multi_model = task_summaries.iter().any(|s| s.model != task_summaries[0].model);
        let boxes: Vec<BoxStats> = task_summaries
            .iter()
            .filter_map(|s| {
                let b = s.bootstrap.as_ref()?;
                let short = match s.modality {
                    Modality::Text => "T",
                    Modality::Plot => "P",
                    Modality::CombinedTextFirst => "TP",
                    Modality::CombinedPlotFirst => "PT",
                };
                let label = if multi_model {
                    format!("{} {short}{}", s.model, s.shots)
                } else {
                    format!("{short}{}", s.shots)
                };
                Some(BoxStats {
                    label,
                    q1: b.q1,
                    median: b.median,
                    q3: b.q3,
                    whisker_lo: b.whisker_lo,
                    whisker_hi: b.whisker_hi,
                    outliers: b.outliers.clone(),
                })
            })
            .collect();
        if !boxes.is_empty() {
            let spec = PlotSpec {
                figsize_inches: ((0.8 * boxes.len() as f64 + 1.6).max(6.4), 4.8),
                title: format!("{task}"),
                xlabel: "modality / shots".into(),
                ylabel: kind.name().into(),
                ..PlotSpec::default()
            };
            let img = render_boxplot(boxes, &spec)?;
            put(format!("boxplot_{task}.png"), img.png_stamped(&hash)?)?;
        }
    }

    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            let b = s.bootstrap.as_ref();
            vec![
                s.task.name().into(),
                s.model.clone(),
                s.shots.to_string(),
                s.modality.name().into(),
                s.metric.into(),
                opt(s.value),
                s.n.to_string(),
                s.parse_failures.to_string(),
                s.errors.to_string(),
                opt(b.map(|b| b.median)),
                opt(b.map(|b| b.q1)),
                opt(b.map(|b| b.q3)),
                opt(s.percentile_ci.map(|c| c.0)),
                opt(s.percentile_ci.map(|c| c.1)),
            ]
        })
        .collect();
    put(
        "summaries.csv".into(),
        csv_bytes(
            &hash,
            &[
                "task", "model", "shots", "modality", "metric", "value", "n", "parse_failures", "errors",
                "boot_median", "boot_q1", "boot_q3", "ci_lo", "ci_hi",
            ],
            &rows,
        )?,
    )?;
    let report = Report {
        config_hash: hash.clone(),
        summaries,
        table,
    };
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    put("summaries.json".into(), json)?;

    let mut cost: BTreeMap<(TaskKind, String, Modality, usize), (usize, u64, usize, f64)> = BTreeMap::new();
    for r in records {
        let e = cost.entry((r.task_kind, r.model.clone(), r.modality, r.shots)).or_default();
        e.0 += 1;
        e.1 += r.prompt_tokens;
        e.2 += r.image_count;
        e.3 += r.cost_usd;
    }
    let rows: Vec<Vec<String>> = cost
        .iter()
        .map(|((t, model, m, k), (n, tok, img, usd))| {
            vec![
                t.name().into(),
                model.clone(),
                m.name().into(),
                k.to_string(),
                n.to_string(),
                tok.to_string(),
                img.to_string(),
                format!("{usd:.6}"),
            ]
        })
        .collect();
    put(
        "cost.csv".into(),
        csv_bytes(
            &hash,
            &["task", "model", "modality", "shots", "records", "prompt_tokens", "images", "cost_usd"],
            &rows,
        )?,
    )?;
    Ok(written)
}
