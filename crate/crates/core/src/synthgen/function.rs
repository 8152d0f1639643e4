use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuncType {
    Linear,
    Quadratic,
    Cubic,
    Exponential,
    Periodic,
}

impl FuncType {
    pub const ALL: [FuncType; 5] = [
        FuncType::Linear,
        FuncType::Quadratic,
        FuncType::Cubic,
        FuncType::Exponential,
        FuncType::Periodic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FuncType::Linear => "linear",
            FuncType::Quadratic => "quadratic",
            FuncType::Cubic => "cubic",
            FuncType::Exponential => "exponential",
            FuncType::Periodic => "periodic",
        }
    }

    /// `f(t)` where `t = x + noise`.
    pub fn value(self, t: f64) -> f64 {
        match self {
            FuncType::Linear => t,
            FuncType::Quadratic => t * t,
            FuncType::Cubic => t * t * t,
            FuncType::Exponential => t.exp(),
            FuncType::Periodic => t.sin(),
        }
    }

    /// Derivative series value. The linear branch adds the raw noise to a
    /// constant one rather than differentiating, matching the generator the
    /// benchmark was defined with.
    pub fn derivative(self, x: f64, noise: f64) -> f64 {
        let t = x + noise;
        match self {
            FuncType::Linear => 1.0 + noise,
            FuncType::Quadratic => 2.0 * t,
            FuncType::Cubic => 3.0 * (t * t),
            FuncType::Exponential => t.exp(),
            FuncType::Periodic => t.cos(),
        }
    }
}

impl fmt::Display for FuncType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FuncType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FuncType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::invalid(format!("Invalid function type {s}")))
    }
}

/// A sampled one-dimensional function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub func_type: FuncType,
    /// Multiplier `A` applied to the closed form (1 except for the
    /// quadratic-scale family).
    pub scale: f64,
    /// True when `ys` holds the derivative series of `func_type`.
    pub derivative: bool,
    pub noise_level: f64,
    pub num_points: usize,
    pub seed: u64,
    /// Domain noise realised for each sample.
    pub noise: Vec<f64>,
    /// Number of values clamped to `f64::MAX` because they overflowed.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub clamped: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl Series {
    /// Re-evaluates the closed form on the recorded noise.
    pub fn closed_form(&self, i: usize) -> f64 {
        let raw = if self.derivative {
            self.scale * self.func_type.derivative(self.xs[i], self.noise[i])
        } else {
            self.scale * self.func_type.value(self.xs[i] + self.noise[i])
        };
        clamp_finite(raw).0
    }
}

/// `num` evenly spaced samples over `[start, stop]`, endpoints included.
pub fn linspace(start: f64, stop: f64, num: usize) -> Vec<f64> {
    match num {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (num - 1) as f64;
            let mut xs: Vec<f64> = (0..num).map(|i| start + i as f64 * step).collect();
            xs[num - 1] = stop;
            xs
        }
    }
}

fn clamp_finite(v: f64) -> (f64, bool) {
    if v.is_finite() {
        (v, false)
    } else if v.is_nan() {
        (v, true)
    } else {
        (f64::MAX.copysign(v), true)
    }
}

fn check_domain(x_range: (f64, f64), num_points: usize, noise_level: f64) -> Result<()> {
    if num_points < 2 {
        return Err(Error::invalid(format!("num_points must be >= 2, got {num_points}")));
    }
    if !(noise_level >= 0.0 && noise_level.is_finite()) {
        return Err(Error::invalid(format!("noise_level must be >= 0, got {noise_level}")));
    }
    if !(x_range.0 < x_range.1) || !x_range.0.is_finite() || !x_range.1.is_finite() {
        return Err(Error::invalid(format!("x_range must be increasing, got {x_range:?}")));
    }
    Ok(())
}

/// Draws the noise vector from `rng` and evaluates `scale * f(x + noise)`
/// (or its derivative).
pub(crate) fn sample_series(
    rng: &mut Rng64,
    seed: u64,
    func_type: FuncType,
    scale: f64,
    derivative: bool,
    x_range: (f64, f64),
    num_points: usize,
    noise_level: f64,
) -> Series {
    let xs = linspace(x_range.0, x_range.1, num_points);
    let noise = rng.normal_vec(0.0, noise_level, num_points);
    series_from_noise(seed, func_type, scale, derivative, xs, noise, noise_level)
}

pub(crate) fn series_from_noise(
    seed: u64,
    func_type: FuncType,
    scale: f64,
    derivative: bool,
    xs: Vec<f64>,
    noise: Vec<f64>,
    noise_level: f64,
) -> Series {
    let mut clamped = 0;
    let ys = xs
        .iter()
        .zip(&noise)
        .map(|(&x, &n)| {
            let raw = if derivative {
                scale * func_type.derivative(x, n)
            } else {
                scale * func_type.value(x + n)
            };
            let (v, hit) = clamp_finite(raw);
            clamped += hit as usize;
            v
        })
        .collect();
    Series {
        num_points: xs.len(),
        xs,
        ys,
        func_type,
        scale,
        derivative,
        noise_level,
        seed,
        noise,
        clamped,
    }
}

/// Samples `f(x + noise)` for one of the five function classes, with
/// `noise ~ N(0, noise_level)` drawn independently per sample.
pub fn gen_function(
    seed: u64,
    func_type: FuncType,
    x_range: (f64, f64),
    num_points: usize,
    noise_level: f64,
) -> Result<Series> {
    check_domain(x_range, num_points, noise_level)?;
    let mut rng = Rng64::seed_from(seed);
    Ok(sample_series(
        &mut rng, seed, func_type, 1.0, false, x_range, num_points, noise_level,
    ))
}

/// String-typed entry point; unknown class names are rejected.
pub fn gen_series(
    seed: u64,
    func_type: &str,
    x_range: (f64, f64),
    num_points: usize,
    noise_level: f64,
) -> Result<Series> {
    gen_function(seed, func_type.parse()?, x_range, num_points, noise_level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_three_points_noiseless() {
        let s = gen_function(0, FuncType::Linear, (-10.0, 10.0), 3, 0.0).unwrap();
        assert_eq!(s.xs, vec![-10.0, 0.0, 10.0]);
        assert_eq!(s.ys, vec![-10.0, 0.0, 10.0]);
    }

    #[test]
    fn quadratic_endpoint() {
        let s = gen_function(5, FuncType::Quadratic, (-10.0, 10.0), 50, 0.0).unwrap();
        assert_eq!(*s.ys.last().unwrap(), 100.0);
    }

    #[test]
    fn periodic_matches_recorded_noise() {
        let s = gen_function(42, FuncType::Periodic, (-10.0, 10.0), 50, 1.0).unwrap();
        for i in 0..50 {
            assert_eq!(s.ys[i], (s.xs[i] + s.noise[i]).sin());
        }
        assert!(s.noise.iter().any(|n| *n != 0.0));
    }

    #[test]
    fn unknown_class_rejected() {
        let err = gen_series(0, "sawtooth", (-10.0, 10.0), 10, 0.0).unwrap_err();
        assert!(err.to_string().contains("Invalid function type"));
    }

    #[test]
    fn preconditions() {
        assert!(gen_function(0, FuncType::Linear, (-10.0, 10.0), 1, 0.0).is_err());
        assert!(gen_function(0, FuncType::Linear, (-10.0, 10.0), 5, -1.0).is_err());
        assert!(gen_function(0, FuncType::Linear, (10.0, -10.0), 5, 0.0).is_err());
    }

    #[test]
    fn overflow_is_clamped_and_flagged() {
        let s = series_from_noise(
            0,
            FuncType::Exponential,
            1.0,
            false,
            vec![0.0, 10.0],
            vec![0.0, 800.0],
            5.0,
        );
        assert_eq!(s.ys[1], f64::MAX);
        assert_eq!(s.clamped, 1);
        assert!(s.ys.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn linspace_strictly_increasing() {
        let xs = linspace(-10.0, 10.0, 2500);
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(xs[0], -10.0);
        assert_eq!(xs[2499], 10.0);
    }
}
