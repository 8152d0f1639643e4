//! Few-shot example selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng64;
use crate::seed;
use crate::synthgen::{
    gen_derivative_task, CellParams, DerivativeVariant, FuncType, MatrixSpec, Payload, QuestionParams, TaskInstance,
    TaskKind, QUADRATIC_SHOT_SCALES,
};

use super::TEMPLATES;

/// Shot counts the benchmark grids use.
pub const SHOT_COUNTS: [usize; 6] = [0, 1, 2, 3, 5, 10];
pub const QUADRATIC_SHOT_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    /// Only the evaluation instance itself is withheld.
    InstanceOnly,
    /// Nothing from the evaluation instance's participant or user.
    Participant,
}

pub fn check_shot_count(k: usize) -> Result<()> {
    if SHOT_COUNTS.contains(&k) {
        Ok(())
    } else {
        Err(Error::invalid(format!("shot count {k} is not one of {SHOT_COUNTS:?}")))
    }
}

/// How a shot count is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotMode {
    /// `k` examples in total.
    Total,
    /// `k` examples of every class.
    PerClass,
}

/// Participant or user an instance was recorded from, if any.
pub fn participant_of(inst: &TaskInstance) -> Option<&str> {
    match &inst.payload {
        Payload::Imu(seg) if !seg.participant.is_empty() => Some(&seg.participant),
        _ => inst.params.participant.as_deref(),
    }
}

/// Picks `k` shots from `pool` for `eval`, honouring `exclusion`.
/// Selection depends only on the admissible set (ordered by instance id),
/// `seed` and the evaluation instance id.
pub fn assemble_fewshots<'a>(
    pool: &'a [TaskInstance],
    eval: &TaskInstance,
    k: usize,
    exclusion: Exclusion,
    seed: u64,
) -> Result<Vec<&'a TaskInstance>> {
    pick(pool.iter().collect(), eval, k, exclusion, seed)
}

fn pick<'a>(
    candidates: Vec<&'a TaskInstance>,
    eval: &TaskInstance,
    k: usize,
    exclusion: Exclusion,
    seed: u64,
) -> Result<Vec<&'a TaskInstance>> {
    check_shot_count(k)?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let eval_p = participant_of(eval);
    let mut admissible: Vec<&TaskInstance> = candidates
        .into_iter()
        .filter(|c| c.instance_id != eval.instance_id)
        .filter(|c| match (exclusion, eval_p) {
            (Exclusion::Participant, Some(p)) => participant_of(c) != Some(p),
            _ => true,
        })
        .collect();
    if admissible.len() < k {
        return Err(Error::Config(format!(
            "few-shot pool exhausted: {k} shots requested for {} but only {} admissible",
            eval.instance_id,
            admissible.len()
        )));
    }
    admissible.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    let mut rng = Rng64::seed_from(seed!(seed, "fewshot", eval.instance_id.as_str()));
    Ok(rng
        .sample_indices(admissible.len(), k)
        .into_iter()
        .map(|i| admissible[i])
        .collect())
}

/// Picks shots under `mode`. Per-class selection draws `k` examples of each
/// ground-truth label present in the pool (labels in sorted order),
/// each class from its own seeded stream.
pub fn assemble_fewshots_mode<'a>(
    pool: &'a [TaskInstance],
    eval: &TaskInstance,
    k: usize,
    exclusion: Exclusion,
    mode: ShotMode,
    seed: u64,
) -> Result<Vec<&'a TaskInstance>> {
    match mode {
        ShotMode::Total => assemble_fewshots(pool, eval, k, exclusion, seed),
        ShotMode::PerClass => {
            check_shot_count(k)?;
            let mut labels: Vec<&crate::synthgen::Label> = pool.iter().map(|p| &p.ground_truth).collect();
            labels.sort();
            labels.dedup();
            let mut out = Vec::with_capacity(k * labels.len());
            for label in labels {
                let class: Vec<&TaskInstance> = pool.iter().filter(|p| &p.ground_truth == label).collect();
                let s = seed!(seed, "class", label.to_string().as_str());
                out.extend(pick(class, eval, k, exclusion, s)?);
            }
            Ok(out)
        }
    }
}

/// Noise-free worked examples for the quadratic derivative task,
/// `per_scale` instances for each scale in the shot set.
pub fn quadratic_shot_pool(seed: u64, per_scale: usize) -> Result<Vec<TaskInstance>> {
    let spec = MatrixSpec::standard(TaskKind::QuadraticDerivativeId);
    let mut out = Vec::with_capacity(per_scale * QUADRATIC_SHOT_SCALES.len());
    for (ia, &a) in QUADRATIC_SHOT_SCALES.iter().enumerate() {
        for r in 0..per_scale {
            let s = seed!(seed, "quadratic_shots", ia as u64, r as u64);
            let task = gen_derivative_task(
                s,
                DerivativeVariant::QuadraticScale,
                QuestionParams {
                    func_type: FuncType::Quadratic,
                    scale: a,
                    x_range: spec.x_range,
                    num_points: QUADRATIC_SHOT_POINTS,
                    noise_level: 0.0,
                },
                &spec.choice_scales,
            )?;
            out.push(TaskInstance::new(
                TaskKind::QuadraticDerivativeId,
                s,
                CellParams {
                    repeat: Some(r),
                    num_points: Some(QUADRATIC_SHOT_POINTS),
                    noise_level: Some(0.0),
                    quadratic_scale: Some(a),
                    ..Default::default()
                },
                Payload::Derivative(task),
            )?);
        }
    }
    Ok(out)
}

fn trim_float(v: f64) -> String {
    let s = format!("{v:.1}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

/// Worked reasoning for a quadratic derivative shot: slope sign first,
/// then slope magnitude read off the function's value at the range end.
pub fn quadratic_reasoning(inst: &TaskInstance) -> Option<String> {
    let Payload::Derivative(d) = &inst.payload else {
        return None;
    };
    let (&x, &y) = d.question.xs.last().zip(d.question.ys.last())?;
    if x == 0.0 {
        return None;
    }
    let a = y / (x * x);
    let up = a > 0.0;
    Some(
        TEMPLATES
            .reasoning
            .trim_end()
            .replace("{opening}", if up { "upwards" } else { "downwards" })
            .replace("{sign}", if up { "positive" } else { "negative" })
            .replace("{peak}", &trim_float(y))
            .replace("{xmax}", &trim_float(x))
            .replace("{scale}", &trim_float(a))
            .replace("{slope}", &trim_float(2.0 * a))
            .replace("{answer}", &d.answer_index.to_string()),
    )
}
