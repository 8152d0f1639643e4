//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Tolerances:
//! * oracle run wall clock < 300 s
//! * random baselines inside p0 ± 1.96·sqrt(p0(1-p0)/n)
//! * generator closed forms: exact equality
//! * codec scaling vs brute force: 1e-12 absolute
//! * Wilcoxon exact vs enumeration: 1e-12 absolute
//! * bootstrap percentile CI width for Bernoulli(0.7), n = 500: within 30%
//!   of 2·1.96·sqrt(0.21/500)
//! * text cost within ±25% of $0.32, image cost exact

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use plotbench::evalstats::{
    bonferroni_adjust, bootstrap_distribution, quantile, wilcoxon_signed_rank, MetricKind, EXACT_MAX_N,
};
use plotbench::imupipe::{
    coalesce_activity, crop_trial, segment_hhar, split_on_gaps, BodyLocation, FallClass, ImuSegment, ImufdTrial,
    RawRecording, SegmentOutcome, TimedSample,
};
use plotbench::modelgw::{estimate_cost, estimate_image_tokens, BackendKind, Pricing};
use plotbench::plotrender::{
    render_task, Components, Figure, Marker, MarkerSize, Palette, PlotSpec, Style, ABLATION_DPIS, ABLATION_FIGSIZES,
};
use plotbench::promptkit::{
    assemble_fewshots_mode, build_prompt, participant_of, Exclusion, Modality, Rendering, Shot, ShotMode, Template,
};
use plotbench::runner::{load_task, read_records, run_experiment, RunOptions, RECORDS_FILE};
use plotbench::synthgen::{
    build_task_matrix, gen_clusters, gen_function, CellParams, FuncType, Label, MatrixSpec, Payload, Series,
    TaskInstance, TaskKind,
};
use plotbench::tscodec::{encode_values, scale, CodecSpec, Scaling, Separator};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// 1. oracle end to end

fn oracle_end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(e2s)?;
    let cfg = common::config(dir.path(), 1, BackendKind::Oracle, &TaskKind::SYNTHETIC);
    let t0 = Instant::now();
    let s = run_experiment(&cfg, &RunOptions::default()).map_err(e2s)?;
    let secs = t0.elapsed().as_secs_f64();
    ensure(secs < 300.0, || format!("took {secs:.1} s"))?;
    let expected = [
        (TaskKind::FunctionId, 500),
        (TaskKind::Correlation, 192),
        (TaskKind::ClusterCount, 405),
        (TaskKind::DerivativeId, 500),
        (TaskKind::QuadraticDerivativeId, 600),
    ];
    let records = read_records(&dir.path().join(RECORDS_FILE)).map_err(e2s)?;
    let mut cells = 0;
    for (task, n) in expected {
        for m in [Modality::Text, Modality::Plot] {
            let got = records.iter().filter(|r| r.task_kind == task && r.modality == m).count();
            ensure(got == n, || format!("{task}/{m}: {got} records, expected {n}"))?;
        }
        let want = if MetricKind::for_task(task) == MetricKind::Mae { 0.0 } else { 1.0 };
        for row in common::read_csv(&dir.path().join(format!("cells_{task}.csv"))) {
            let v: f64 = row["value"].parse().map_err(e2s)?;
            ensure(v == want, || format!("{task} cell {} = {v}", row["cell"]))?;
            cells += 1;
        }
    }
    Ok(format!(
        "{} records, {cells} cells perfect, {:.1} s, {} backend calls",
        s.records, secs, s.backend_calls
    ))
}

// 2. random baselines

fn random_baselines() -> Check {
    let dir = tempfile::tempdir().map_err(e2s)?;
    let tasks = [
        (TaskKind::FunctionId, 0.2),
        (TaskKind::Correlation, 0.5),
        (TaskKind::DerivativeId, 0.25),
        (TaskKind::QuadraticDerivativeId, 0.25),
    ];
    let kinds: Vec<TaskKind> = tasks.iter().map(|t| t.0).collect();
    let cfg = common::config(dir.path(), 42, BackendKind::Random, &kinds);
    run_experiment(&cfg, &RunOptions::default()).map_err(e2s)?;
    let records = read_records(&dir.path().join(RECORDS_FILE)).map_err(e2s)?;
    let mut parts = Vec::new();
    let mut bad = Vec::new();
    for (task, p0) in tasks {
        let rs: Vec<_> = records.iter().filter(|r| r.task_kind == task).collect();
        let n = rs.len() as f64;
        let acc = rs.iter().filter(|r| r.is_correct()).count() as f64 / n;
        let half = 1.96 * (p0 * (1.0 - p0) / n).sqrt();
        let per: Vec<String> = [Modality::Text, Modality::Plot]
            .iter()
            .map(|&m| {
                let (k, c) = rs
                    .iter()
                    .filter(|r| r.modality == m)
                    .fold((0, 0), |(k, c), r| (k + 1, c + r.is_correct() as usize));
                format!("{m} {:.3}", c as f64 / k as f64)
            })
            .collect();
        let line = format!(
            "{task} {acc:.3} in [{:.3}, {:.3}] (n={n}; {})",
            p0 - half,
            p0 + half,
            per.join(", ")
        );
        if (acc - p0).abs() > half {
            bad.push(line.clone());
        }
        parts.push(line);
    }
    ensure(bad.is_empty(), || format!("outside CI: {}", bad.join("; ")))?;
    Ok(parts.join("; "))
}

// 3. generators

fn closed_form(ft: FuncType, t: f64) -> f64 {
    match ft {
        FuncType::Linear => t,
        FuncType::Quadratic => t * t,
        FuncType::Cubic => t * t * t,
        FuncType::Exponential => t.exp(),
        FuncType::Periodic => t.sin(),
    }
}

fn closed_derivative(ft: FuncType, x: f64, noise: f64) -> f64 {
    let t = x + noise;
    match ft {
        FuncType::Linear => 1.0 + noise,
        FuncType::Quadratic => 2.0 * t,
        FuncType::Cubic => 3.0 * (t * t),
        FuncType::Exponential => t.exp(),
        FuncType::Periodic => t.cos(),
    }
}

fn oracle_linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + i as f64 * step }).collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn series_matches(s: &Series, ft: FuncType) -> bool {
    (0..s.xs.len()).all(|i| s.ys[i] == s.scale * closed_form(ft, s.xs[i] + s.noise[i]))
}

fn rederive(inst: &TaskInstance) -> Result<Label, String> {
    match &inst.payload {
        Payload::Series(s) => {
            let hits: Vec<FuncType> = FuncType::ALL.into_iter().filter(|&f| series_matches(s, f)).collect();
            match hits.as_slice() {
                [f] => Ok(Label::Class(f.name().into())),
                _ => Err(format!("{}: classes matching data: {hits:?}", inst.instance_id)),
            }
        }
        Payload::Correlation(p) => {
            let r = pearson(&p.y1s, &p.y2s);
            Ok(Label::Class(if r > 0.0 { "positive" } else { "negative" }.into()))
        }
        Payload::Clusters(c) => {
            let distinct: BTreeSet<usize> = c.assignment.iter().copied().collect();
            if distinct.len() != c.centers.len() {
                return Err(format!("{}: {} blobs used of {}", inst.instance_id, distinct.len(), c.centers.len()));
            }
            Ok(Label::Count(distinct.len() as i64))
        }
        Payload::Derivative(d) => {
            let q = &d.question;
            let want: Vec<f64> = (0..q.xs.len())
                .map(|i| q.scale * closed_derivative(q.func_type, q.xs[i], q.noise[i]))
                .collect();
            let hits: Vec<usize> = d
                .choices
                .iter()
                .enumerate()
                .filter(|(_, c)| c.ys == want)
                .map(|(i, _)| i)
                .collect();
            match hits.as_slice() {
                [i] => Ok(Label::Choice(*i)),
                _ => Err(format!("{}: matching choices {hits:?}", inst.instance_id)),
            }
        }
        _ => Err("not a synthetic payload".into()),
    }
}

fn generators() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    let sizes = [50, 500, 1000, 2500];
    let stds = [0.025, 0.05, 0.075];
    let pts = [5, 50, 100];
    let mut series = 0;
    let mut clusters = 0;
    for _ in 0..1000 {
        let seed: u64 = rng.random();
        let n = sizes[rng.random_range(0..sizes.len())];
        let xs = oracle_linspace(-10.0, 10.0, n);
        for ft in FuncType::ALL {
            let s = gen_function(seed, ft, (-10.0, 10.0), n, 0.0).map_err(e2s)?;
            ensure(s.xs == xs, || format!("seed {seed}: grid differs"))?;
            ensure(s.noise.iter().all(|v| *v == 0.0), || format!("seed {seed}: noise drawn at level 0"))?;
            for i in 0..n {
                let want = closed_form(ft, xs[i]);
                ensure(s.ys[i] == want, || format!("seed {seed} {ft} x={}: {} != {want}", xs[i], s.ys[i]))?;
            }
            series += 1;
        }
        let k = rng.random_range(1..=9);
        let c = gen_clusters(
            seed,
            pts[rng.random_range(0..3)],
            k,
            stds[rng.random_range(0..3)],
        )
        .map_err(e2s)?;
        ensure(c.centers.len() == k, || format!("seed {seed}: {} centers", c.centers.len()))?;
        for (i, a) in c.centers.iter().enumerate() {
            ensure(a.0.abs() <= 0.9 && a.1.abs() <= 0.9, || format!("seed {seed}: center {a:?} out of bounds"))?;
            for b in &c.centers[i + 1..] {
                let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
                ensure(d >= 0.3, || format!("seed {seed}: centers {d:.4} apart"))?;
            }
        }
        clusters += 1;
    }
    let mut checked = 0;
    for kind in TaskKind::SYNTHETIC {
        for inst in build_task_matrix(kind, &MatrixSpec::standard(kind), rng.random()).map_err(e2s)? {
            let got = rederive(&inst)?;
            ensure(got == inst.ground_truth, || {
                format!("{}: label {:?}, re-derived {got:?}", inst.instance_id, inst.ground_truth)
            })?;
            checked += 1;
        }
    }
    Ok(format!(
        "{series} zero-noise series exact, {clusters} cluster sets valid, {checked}/{checked} labels re-derived"
    ))
}

// 4. codec

fn brute_quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    // insertion sort, independent of the library's sort
    for i in 1..s.len() {
        let mut j = i;
        while j > 0 && s[j - 1] > s[j] {
            s.swap(j - 1, j);
            j -= 1;
        }
    }
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

fn brute_llmtime(v: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    let mn = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let m = mn - beta * (mx - mn);
    let shifted: Vec<f64> = v.iter().map(|x| x - m).collect();
    let q = brute_quantile(&shifted, alpha);
    let q = if q == 0.0 { 1.0 } else { q };
    v.iter().map(|x| (x - m) / q).collect()
}

fn brute_minmax(v: &[f64]) -> Vec<f64> {
    let mn = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    v.iter().map(|x| (x - mn) / (mx - mn)).collect()
}

fn codec() -> Check {
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let n = rng.random_range(2..200);
        let mag = 10f64.powi(rng.random_range(-3..4));
        let v: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() - 0.3) * mag).collect();
        let alpha = rng.random_range(0.5..0.99);
        let beta = rng.random_range(0.0..0.5);
        let (got, _) = scale(&v, Scaling::Llmtime { alpha, beta }).map_err(e2s)?;
        for (a, b) in got.iter().zip(brute_llmtime(&v, alpha, beta)) {
            worst = worst.max((a - b).abs());
        }
        let (got, _) = scale(&v, Scaling::Minmax).map_err(e2s)?;
        for (a, b) in got.iter().zip(brute_minmax(&v)) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    let s = encode_values(&[1.0, 2.345], 2, Separator::CommaSpace);
    ensure(s == "1.00, 2.35", || format!("formatted {s:?}"))?;
    Ok(format!("10000 vectors, max deviation {worst:e}; precision-2 gives {s:?}"))
}

// 5. statistics

fn midranks(abs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..abs.len()).collect();
    idx.sort_by(|&a, &b| abs[a].total_cmp(&abs[b]));
    let mut r = vec![0.0; abs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && abs[idx[j + 1]] == abs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Two-sided p by listing every sign assignment.
fn enumerate_p(d: &[f64]) -> f64 {
    let ranks = midranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let obs: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let n = d.len();
    let total = 1u64 << n;
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0..total {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= obs + 1e-9 {
            le += 1;
        }
        if w >= obs - 1e-9 {
            ge += 1;
        }
    }
    (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
}

fn statistics() -> Check {
    let mut patterns = 0;
    let mut worst: f64 = 0.0;
    let mut rng = StdRng::seed_from_u64(5);
    for n in 1..=10usize {
        let tied: Vec<f64> = (0..n).map(|_| rng.random_range(1..4) as f64).collect();
        for mags in [(1..=n).map(|i| i as f64).collect::<Vec<_>>(), tied] {
            for mask in 0..(1u32 << n) {
                let d: Vec<f64> = (0..n)
                    .map(|i| if mask >> i & 1 == 1 { mags[i] } else { -mags[i] })
                    .collect();
                let zeros = vec![0.0; n];
                let w = wilcoxon_signed_rank(&d, &zeros).map_err(e2s)?;
                worst = worst.max((w.p_value - enumerate_p(&d)).abs());
                patterns += 1;
            }
        }
    }
    ensure(worst <= 1e-12, || format!("exact p deviates from enumeration by {worst:e}"))?;
    ensure(EXACT_MAX_N >= 10, || "exact path does not cover n <= 10".into())?;
    let p5 = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).map_err(e2s)?.p_value;
    ensure((p5 - 0.0625).abs() < 1e-15, || format!("all-positive n=5 p = {p5}"))?;

    let constant = common::bernoulli_records(200, 200);
    let d = bootstrap_distribution(&constant, MetricKind::Accuracy, 1000, 1).map_err(e2s)?;
    let width = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - d.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(width == 0.0, || format!("constant data bootstrap width {width}"))?;

    let bern = common::bernoulli_records(500, 350);
    let d = bootstrap_distribution(&bern, MetricKind::Accuracy, 1000, 2).map_err(e2s)?;
    let ci = quantile(&d, 0.975).map_err(e2s)? - quantile(&d, 0.025).map_err(e2s)?;
    let closed = 2.0 * 1.96 * (0.21f64 / 500.0).sqrt();
    let rel = (ci - closed).abs() / closed;
    ensure(rel <= 0.30, || format!("Bernoulli CI width {ci:.4} vs {closed:.4}"))?;

    let adj = bonferroni_adjust(&[0.3, 0.3, 0.3, 0.3]).map_err(e2s)?;
    ensure(adj.iter().all(|p| *p == 1.0), || format!("Bonferroni {adj:?}"))?;
    let adj = bonferroni_adjust(&[0.02, 0.5]).map_err(e2s)?;
    ensure(adj == vec![0.04, 1.0], || format!("Bonferroni {adj:?}"))?;
    Ok(format!(
        "{patterns} sign patterns match enumeration (max {worst:e}); n=5 p={p5}; Bernoulli CI {ci:.4} vs {closed:.4} ({:.1}%)",
        rel * 100.0
    ))
}

// 6. cost

fn activity_instance(rng: &mut StdRng, id: &str, user: &str, label: &str) -> TaskInstance {
    let n = 150;
    let mut ch = Vec::new();
    for (c, base, spread) in [(0, 0.0, 2.0), (1, 0.0, 2.0), (2, 9.81, 2.0), (3, 0.0, 0.6), (4, 0.0, 0.6), (5, 0.0, 0.6)] {
        let _ = c;
        ch.push((0..n).map(|_| base + spread * (rng.random::<f64>() - 0.5)).collect());
    }
    let seg = ImuSegment::new(id, ch, 10.0, user, label).unwrap();
    let params = CellParams {
        participant: Some(user.into()),
        segment: Some(id.into()),
        ..Default::default()
    };
    TaskInstance::new(TaskKind::ActivityRecognition, rng.random(), params, Payload::Imu(seg)).unwrap()
}

fn cost() -> Check {
    let t1 = estimate_image_tokens(300, 300);
    let t2 = estimate_image_tokens(800, 600);
    ensure(t1 == 258 && t2 == 1290, || format!("image tokens {t1}, {t2}"))?;

    let mut rng = StdRng::seed_from_u64(6);
    let classes = ["sit", "stand", "stairs", "walk", "bike"];
    let pool: Vec<TaskInstance> = (0..50)
        .map(|i| activity_instance(&mut rng, &format!("s{i}"), &format!("u{}", i % 5), classes[i % 5]))
        .collect();
    let question = activity_instance(&mut rng, "q", "u9", "walk");
    let shots = assemble_fewshots_mode(&pool, &question, 5, Exclusion::Participant, ShotMode::PerClass, 6)
        .map_err(e2s)?;
    ensure(shots.len() == 25, || format!("{} shots", shots.len()))?;

    let codec = CodecSpec {
        precision: 16,
        separator: Separator::Space,
        ..CodecSpec::default()
    };
    let plot = PlotSpec::for_task(TaskKind::ActivityRecognition);
    let template = Template::builtin(TaskKind::ActivityRecognition);
    let pricing = Pricing {
        text_per_1k: 0.0025,
        image_per_1k: 0.0025,
    };
    let mut costs = BTreeMap::new();
    for m in [Modality::Text, Modality::Plot] {
        let shot_parts: Vec<Shot> = shots
            .iter()
            .map(|s| Shot::new(s, Rendering::build(s, m, &codec, &plot).unwrap()))
            .collect();
        let r = Rendering::build(&question, m, &codec, &plot).map_err(e2s)?;
        let p = build_prompt(&question, m, &r, &shot_parts, &template).map_err(e2s)?;
        costs.insert(m, (estimate_cost(&p, &pricing), p));
    }
    let (text, _) = &costs[&Modality::Text];
    let (img, plot_prompt) = &costs[&Modality::Plot];
    let shot_images: Vec<_> = plot_prompt.image_parts().take(50).collect();
    let shot_tokens: u64 = shot_images.iter().map(|i| estimate_image_tokens(i.width_px, i.height_px)).sum();
    let shot_cost = shot_tokens as f64 / 1000.0 * pricing.image_per_1k;
    ensure(shot_images.len() == 50 && shot_tokens == 50 * 258, || {
        format!("{} shot images, {shot_tokens} tokens", shot_images.len())
    })?;
    ensure(format!("{shot_cost:.3}") == "0.032", || format!("50-image cost {shot_cost}"))?;
    ensure((0.24..=0.40).contains(&text.total), || format!("text cost {:.4} outside ±25% of 0.32", text.total))?;
    // ratio as quoted: full text prompt against the 50 shot images
    let ratio = text.total / shot_cost;
    let full_ratio = text.total / img.total;
    ensure(ratio >= 10.0, || format!("ratio {ratio:.2}: text ${:.4}, 50 images ${shot_cost:.5}", text.total))?;
    Ok(format!(
        "text {} tokens ${:.4}; 50 shot images ${shot_cost:.5}; ratio {ratio:.1}x (whole plot prompt: {} images ${:.4}, {full_ratio:.2}x)",
        text.text_tokens, text.total, img.images, img.total
    ))
}

// 7. IMU preprocessing

fn imu() -> Check {
    let n = 20 * 128;
    let trial = ImufdTrial {
        trial_id: "t".into(),
        participant: "p".into(),
        label: FallClass::Fall,
        body_location: BodyLocation::Waist,
        channels: (0..6).map(|c| (0..n).map(|i| (i * (c + 1)) as f64).collect()).collect(),
        sample_rate_hz: 128.0,
        event_index: None,
    };
    let seg = crop_trial(&trial).map_err(e2s)?;
    ensure(seg.channels.iter().all(|c| c.len() == 192), || {
        format!("pooled lengths {:?}", seg.channels.iter().map(Vec::len).collect::<Vec<_>>())
    })?;
    // first pooled value averages samples 320..330 of channel 0
    ensure(seg.channels[0][0] == (320..330).sum::<usize>() as f64 / 10.0, || "pooling window".into())?;

    let stream = |ranges: &[(f64, f64)], rate: f64| -> Vec<TimedSample> {
        ranges
            .iter()
            .flat_map(|&(a, b)| {
                let k = ((b - a) * rate) as usize;
                (0..k).map(move |i| TimedSample {
                    t: a + i as f64 / rate,
                    xyz: [a + i as f64 / rate, 0.0, 1.0],
                })
            })
            .collect()
    };
    let chunks = [(0.0, 10.0), (13.0, 40.0)];
    let rec = RawRecording {
        user: "a".into(),
        device: "d".into(),
        label: "stairsup".into(),
        accel: stream(&chunks, 50.0),
        gyro: stream(&chunks, 50.0),
    };
    let times: Vec<f64> = rec.accel.iter().map(|s| s.t).collect();
    let parts = split_on_gaps(&times, 2.0);
    ensure(parts.len() == 2 && parts[0] == (0..500), || format!("gap split {parts:?}"))?;
    let SegmentOutcome::Kept(s) = segment_hhar(&rec) else {
        return Err("HHAR fixture excluded".into());
    };
    let crop = s.crop.clone().ok_or("no crop info")?;
    let mid = (13.0 + (40.0 - 1.0 / 50.0)) / 2.0;
    ensure((crop.start_s - (mid - 7.5)).abs() < 1e-9, || format!("crop start {}", crop.start_s))?;
    ensure(s.label == "stairs" && coalesce_activity("stairsdown") == Some("stairs"), || "stairs coalescing".into())?;
    ensure((s.sample_rate_hz - 10.0).abs() < 1e-9 && s.len() == 150, || {
        format!("{} samples at {} Hz", s.len(), s.sample_rate_hz)
    })?;
    // the pooled time channel is centred on the crop window
    ensure((s.channels[0][0] - (crop.start_s + 0.04)).abs() < 0.03, || "crop placement".into())?;
    let short = RawRecording {
        accel: stream(&[(0.0, 12.0)], 50.0),
        gyro: stream(&[(0.0, 12.0)], 50.0),
        ..rec.clone()
    };
    ensure(matches!(segment_hhar(&short), SegmentOutcome::Excluded { .. }), || "short recording kept".into())?;

    let (fall_src, hhar_src) = (std::env::var("PLOTBENCH_IMUFD_INDEX"), std::env::var("PLOTBENCH_HHAR_DIR"));
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let mut cfg = common::config(tmp.path(), 7, BackendKind::Oracle, &[TaskKind::FallDetection, TaskKind::ActivityRecognition]);
    let mut source = Vec::new();
    cfg.datasets.imufd = Some(match fall_src {
        Ok(p) => {
            source.push("IMUFD");
            plotbench::imupipe::ImufdManifest {
                index: p.into(),
                channels: ["acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z"].map(String::from).to_vec(),
                sample_rate_hz: 128.0,
            }
        }
        Err(_) => common::write_imufd_fixture(&tmp.path().join("imufd"), 6, 2, 7),
    });
    cfg.datasets.hhar = Some(match hhar_src {
        Ok(d) => {
            source.push("HHAR");
            let d = Path::new(&d);
            plotbench::imupipe::HharManifest {
                accelerometer: d.join("Phones_accelerometer.csv"),
                gyroscope: d.join("Phones_gyroscope.csv"),
                columns: Default::default(),
            }
        }
        Err(_) => common::write_hhar_fixture(&tmp.path().join("hhar"), 5, 7),
    });
    let fall = load_task(&cfg, &cfg.tasks[0]).map_err(e2s)?;
    let train: BTreeSet<&str> = fall.pool.iter().filter_map(participant_of).collect();
    let test: BTreeSet<&str> = fall.eval.iter().filter_map(participant_of).collect();
    ensure(train.is_disjoint(&test) && !train.is_empty() && !test.is_empty(), || {
        format!("IMUFD split leaks: train {train:?} test {test:?}")
    })?;
    let act = load_task(&cfg, &cfg.tasks[1]).map_err(e2s)?;
    let mut shots_checked = 0;
    for task in [&fall, &act] {
        for e in &task.eval {
            let picked = assemble_fewshots_mode(&task.pool, e, 1, Exclusion::Participant, task.config.shot_mode(), 3)
                .map_err(e2s)?;
            for p in picked {
                ensure(participant_of(p) != participant_of(e), || format!("{} leaks into {}", p.instance_id, e.instance_id))?;
                shots_checked += 1;
            }
        }
    }
    let src = if source.is_empty() { "synthetic fixtures".to_string() } else { source.join("+") };
    Ok(format!(
        "192 samples/channel; gap split, crop, 10 Hz, stairs ok; no leakage over {shots_checked} shots ({src})"
    ))
}

// 8. determinism and resume

fn determinism() -> Check {
    let tasks = [TaskKind::FunctionId, TaskKind::Correlation, TaskKind::ClusterCount];
    let make = |dir: &Path, workers: usize| {
        let mut cfg = common::config(dir, 11, BackendKind::Random, &tasks);
        cfg.workers = workers;
        cfg.shots = vec![0, 1];
        for t in &mut cfg.tasks {
            t.limit = Some(60);
        }
        cfg
    };
    let (a, b, c) = (
        tempfile::tempdir().map_err(e2s)?,
        tempfile::tempdir().map_err(e2s)?,
        tempfile::tempdir().map_err(e2s)?,
    );
    run_experiment(&make(a.path(), 4), &RunOptions::default()).map_err(e2s)?;
    run_experiment(&make(b.path(), 1), &RunOptions::default()).map_err(e2s)?;
    let (sa, sb) = (common::snapshot(a.path()), common::snapshot(b.path()));
    ensure(sa.len() > 5, || format!("only {} output files", sa.len()))?;
    ensure(sa == sb, || {
        let diff: Vec<_> = sa.keys().filter(|k| sa.get(*k) != sb.get(*k)).collect();
        format!("cold runs differ in {diff:?}")
    })?;

    let warm = run_experiment(&make(a.path(), 4), &RunOptions::default()).map_err(e2s)?;
    ensure(warm.backend_calls == 0, || format!("warm rerun made {} calls", warm.backend_calls))?;
    ensure(common::snapshot(a.path()) == sa, || "warm rerun changed outputs".into())?;

    // interrupted run: keep the first records as a partial log, then resume
    let cfg_c = make(c.path(), 2);
    let records = std::fs::read_to_string(a.path().join(RECORDS_FILE)).map_err(e2s)?;
    let lines: Vec<&str> = records.lines().collect();
    let keep = lines.len() / 3;
    let mut partial = lines[..keep].join("\n");
    partial.push_str("\n{\"instance_id\":\"torn");
    std::fs::write(c.path().join("manifest.json"), &sa[Path::new("manifest.json")]).map_err(e2s)?;
    std::fs::write(c.path().join("records.partial.jsonl"), partial).map_err(e2s)?;
    let resumed = run_experiment(&cfg_c, &RunOptions { resume: true }).map_err(|e| format!("resume: {e}"))?;
    ensure(resumed.executed == lines.len() - keep, || {
        format!("resume executed {} of {} remaining", resumed.executed, lines.len() - keep)
    })?;
    ensure(common::snapshot(c.path()) == sa, || "resumed run differs from uninterrupted run".into())?;
    Ok(format!(
        "{} files identical across worker counts; warm rerun 0 calls; resume after {keep}/{} records identical",
        sa.len(),
        lines.len()
    ))
}

// 9. rendering

fn count_blobs(w: usize, h: usize, px: &[u8]) -> usize {
    let bg = [px[0], px[1], px[2]];
    let fg = |i: usize| px[3 * i..3 * i + 3] != bg;
    let mut seen = vec![false; w * h];
    let mut blobs = 0;
    for start in 0..w * h {
        if seen[start] || !fg(start) {
            continue;
        }
        blobs += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] && fg(j) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    blobs
}

fn pick<T: Copy>(rng: &mut StdRng, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}

fn rendering() -> Check {
    let mut dims = 0;
    for dpi in ABLATION_DPIS {
        for fs in ABLATION_FIGSIZES {
            let spec = PlotSpec {
                dpi,
                figsize_inches: fs,
                ..PlotSpec::default()
            };
            if spec.validate().is_err() {
                continue;
            }
            let mut f = Figure::new(spec.clone()).map_err(e2s)?;
            f.scatter(&[0.0, 1.0], &[0.0, 1.0], [0, 0, 0]).map_err(e2s)?;
            let img = f.render().map_err(e2s)?;
            let (w, h) = ((fs.0 * dpi as f64).round() as usize, (fs.1 * dpi as f64).round() as usize);
            ensure(img.width_px == w && img.height_px == h, || {
                format!("{fs:?}@{dpi}: {}x{} != {w}x{h}", img.width_px, img.height_px)
            })?;
            dims += 1;
        }
    }

    let mut rng = StdRng::seed_from_u64(9);
    let mut pool = Vec::new();
    for kind in TaskKind::SYNTHETIC {
        let mut m = MatrixSpec::standard(kind);
        m.repeats = 1;
        m.num_points = vec![50, 500];
        pool.extend(build_task_matrix(kind, &m, 9).map_err(e2s)?);
    }
    let styles = [Style::Default, Style::Classic, Style::GgplotLike, Style::Whitegrid, Style::Darkgrid];
    let palettes = [Palette::Default, Palette::BlackWhite, Palette::HighContrast, Palette::LowContrast, Palette::Invert];
    let markers = [Marker::Circle, Marker::Square, Marker::Triangle, Marker::X, Marker::Plus];
    let sizes = [MarkerSize::Small, MarkerSize::Medium, MarkerSize::Large];
    let comps = [Components::All, Components::Minimal, Components::None];
    for _ in 0..100 {
        let inst = &pool[rng.random_range(0..pool.len())];
        let spec = PlotSpec {
            dpi: pick(&mut rng, &ABLATION_DPIS[..4]),
            figsize_inches: pick(&mut rng, &ABLATION_FIGSIZES[..4]),
            style: pick(&mut rng, &styles),
            palette: pick(&mut rng, &palettes),
            marker: pick(&mut rng, &markers),
            marker_size: pick(&mut rng, &sizes),
            components: pick(&mut rng, &comps),
            ..PlotSpec::for_task(inst.task_kind)
        };
        let a = render_task(inst, &spec).map_err(e2s)?;
        let b = render_task(inst, &spec).map_err(e2s)?;
        ensure(a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.png == y.png), || {
            format!("{} renders differ under {spec:?}", inst.instance_id)
        })?;
    }

    let mut scatters = 0;
    for n in 1..=50usize {
        for marker in markers {
            let cells = rand::seq::index::sample(&mut rng, 100, n).into_vec();
            let xs: Vec<f64> = cells.iter().map(|c| (c % 10) as f64).collect();
            let ys: Vec<f64> = cells.iter().map(|c| (c / 10) as f64).collect();
            let spec = PlotSpec {
                components: Components::None,
                marker,
                ..PlotSpec::default()
            };
            let mut f = Figure::new(spec).map_err(e2s)?;
            f.set_xlim(-0.5, 9.5);
            f.set_ylim(-0.5, 9.5);
            f.scatter(&xs, &ys, [0, 0, 0]).map_err(e2s)?;
            let img = f.render().map_err(e2s)?;
            let blobs = count_blobs(img.width_px, img.height_px, &img.pixels);
            ensure(blobs == n, || format!("{n} {marker:?} markers drew {blobs} blobs"))?;
            scatters += 1;
        }
    }
    Ok(format!(
        "{dims} dpi×figsize dims exact; 100 random (task, spec) double renders identical; {scatters} sparse scatters count-exact"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("oracle end-to-end", oracle_end_to_end),
        ("random-baseline calibration", random_baselines),
        ("generator exactness", generators),
        ("codec oracles", codec),
        ("statistics oracles", statistics),
        ("cost model", cost),
        ("IMU preprocessing", imu),
        ("determinism and resumability", determinism),
        ("rendering", rendering),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.1} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.1} s): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
