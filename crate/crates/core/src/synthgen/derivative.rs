use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng64;

use super::function::{sample_series, series_from_noise, FuncType, Series};

/// Scales `A` of the question quadratic `A * x^2`.
pub const QUADRATIC_QUESTION_SCALES: [f64; 6] = [-10.0, -5.0, -1.0, 1.0, 5.0, 10.0];
/// Scales the four derivative choices are drawn from.
pub const QUADRATIC_CHOICE_SCALES: [f64; 10] =
    [-20.0, -15.0, -10.0, -5.0, -1.0, 1.0, 5.0, 10.0, 15.0, 20.0];
/// Scales used for worked few-shot examples (disjoint magnitudes from the
/// question set so shots never reveal an answer).
pub const QUADRATIC_SHOT_SCALES: [f64; 6] = [-20.0, -15.0, -3.0, 3.0, 15.0, 20.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeVariant {
    MixedClass,
    QuadraticScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionParams {
    pub func_type: FuncType,
    /// `A`; only read by the quadratic-scale variant.
    pub scale: f64,
    pub x_range: (f64, f64),
    pub num_points: usize,
    pub noise_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeTask {
    pub question: Series,
    pub choices: Vec<Series>,
    pub answer_index: usize,
    pub variant: DerivativeVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic_scale: Option<f64>,
}

/// Builds a four-way multiple choice question: one choice is the derivative
/// of the question series (sharing its noise draw), the other three are
/// derivatives of distractor functions with fresh noise.
pub fn gen_derivative_task(
    seed: u64,
    variant: DerivativeVariant,
    params: QuestionParams,
    choice_scale_set: &[f64],
) -> Result<DerivativeTask> {
    let QuestionParams {
        func_type,
        scale,
        x_range,
        num_points,
        noise_level,
    } = params;
    if num_points < 2 || !(noise_level >= 0.0) || !(x_range.0 < x_range.1) {
        return Err(Error::invalid("derivative task needs >= 2 points, noise >= 0, increasing range"));
    }
    let mut rng = Rng64::seed_from(seed);

    // (func_type, scale) of the three distractors
    let distractors: Vec<(FuncType, f64)> = match variant {
        DerivativeVariant::MixedClass => {
            let others: Vec<FuncType> =
                FuncType::ALL.into_iter().filter(|t| *t != func_type).collect();
            rng.sample_indices(others.len(), 3)
                .into_iter()
                .map(|i| (others[i], 1.0))
                .collect()
        }
        DerivativeVariant::QuadraticScale => {
            if func_type != FuncType::Quadratic {
                return Err(Error::invalid("quadratic-scale variant requires a quadratic question"));
            }
            if !scale.is_finite() || scale == 0.0 {
                return Err(Error::invalid(format!("quadratic scale must be non-zero, got {scale}")));
            }
            let mut pool: Vec<f64> = Vec::new();
            for &s in choice_scale_set {
                if s != scale && s != 0.0 && s.is_finite() && !pool.contains(&s) {
                    pool.push(s);
                }
            }
            if pool.len() < 3 {
                return Err(Error::invalid(format!(
                    "choice scale set {choice_scale_set:?} leaves {} distractors for A={scale}, need 3",
                    pool.len()
                )));
            }
            rng.sample_indices(pool.len(), 3)
                .into_iter()
                .map(|i| (FuncType::Quadratic, pool[i]))
                .collect()
        }
    };
    let question_scale = match variant {
        DerivativeVariant::MixedClass => 1.0,
        DerivativeVariant::QuadraticScale => scale,
    };

    let question = sample_series(
        &mut rng,
        seed,
        func_type,
        question_scale,
        false,
        x_range,
        num_points,
        noise_level,
    );
    let answer = series_from_noise(
        seed,
        func_type,
        question_scale,
        true,
        question.xs.clone(),
        question.noise.clone(),
        noise_level,
    );
    let mut choices: Vec<Series> = distractors
        .into_iter()
        .map(|(t, s)| sample_series(&mut rng, seed, t, s, true, x_range, num_points, noise_level))
        .collect();
    rng.shuffle(&mut choices);
    let answer_index = rng.below(4) as usize;
    choices.insert(answer_index, answer);

    Ok(DerivativeTask {
        question,
        choices,
        answer_index,
        variant,
        quadratic_scale: (variant == DerivativeVariant::QuadraticScale).then_some(scale),
    })
}
