//! Numeric series to model-facing text.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Separator {
    Space,
    CommaSpace,
}

impl Separator {
    pub fn as_str(self) -> &'static str {
        match self {
            Separator::Space => " ",
            Separator::CommaSpace => ", ",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scaling {
    None,
    Minmax,
    Llmtime { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodecSpec {
    /// Digits after the decimal point.
    pub precision: usize,
    pub separator: Separator,
    pub scaling: Scaling,
    pub include_x: bool,
    /// Apply `scaling` to x-values as well as y-values.
    pub scale_x: bool,
}

impl Default for CodecSpec {
    fn default() -> Self {
        Self {
            precision: 2,
            separator: Separator::Space,
            scaling: Scaling::None,
            include_x: true,
            scale_x: false,
        }
    }
}

pub const PRECISIONS: [usize; 4] = [2, 4, 8, 16];

impl CodecSpec {
    pub fn validate(&self) -> Result<()> {
        if !PRECISIONS.contains(&self.precision) {
            return Err(Error::invalid(format!(
                "precision {} not in {PRECISIONS:?}",
                self.precision
            )));
        }
        if let Scaling::Llmtime { alpha, beta } = self.scaling {
            if !(alpha > 0.0 && alpha <= 1.0) || !(0.0..=1.0).contains(&beta) {
                return Err(Error::invalid(format!(
                    "llmtime needs alpha in (0, 1] and beta in [0, 1], got ({alpha}, {beta})"
                )));
            }
        }
        Ok(())
    }
}

/// Affine map `x -> (x - offset) / divisor` applied by [`scale`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub offset: f64,
    pub divisor: f64,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        offset: 0.0,
        divisor: 1.0,
    };

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.offset) / self.divisor
    }

    pub fn inverse(&self, v: f64) -> f64 {
        v * self.divisor + self.offset
    }
}

/// Linear-interpolation quantile of an ascending slice, `q` in `[0, 1]`.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Rescales `values` and returns the transform used.
///
/// * `minmax`: offset `min`, divisor `max - min`.
/// * `llmtime(α, β)`: offset `m = min - β (max - min)`, divisor the
///   α-quantile of `values - m` (1 when that quantile is 0).
pub fn scale(values: &[f64], scaling: Scaling) -> Result<(Vec<f64>, Transform)> {
    if values.is_empty() {
        return Err(Error::invalid("cannot scale an empty series"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("cannot scale non-finite values"));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let transform = match scaling {
        Scaling::None => Transform::IDENTITY,
        Scaling::Minmax => {
            if max <= min {
                return Err(Error::degenerate("min-max scaling of a constant series"));
            }
            Transform {
                offset: min,
                divisor: max - min,
            }
        }
        Scaling::Llmtime { alpha, beta } => {
            let offset = min - beta * (max - min);
            let mut shifted: Vec<f64> = values.iter().map(|v| v - offset).collect();
            shifted.sort_by(f64::total_cmp);
            let q = quantile_sorted(&shifted, alpha);
            Transform {
                offset,
                divisor: if q == 0.0 { 1.0 } else { q },
            }
        }
    };
    if matches!(scaling, Scaling::None) {
        return Ok((values.to_vec(), transform));
    }
    Ok((values.iter().map(|&v| transform.apply(v)).collect(), transform))
}

/// Fixed-point formatting. Rounding is done on the exact binary value with
/// ties to even; negative zero prints without a sign.
pub fn format_value(v: f64, precision: usize) -> String {
    let s = format!("{v:.precision$}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn encode_values(values: &[f64], precision: usize, sep: Separator) -> String {
    let mut out = String::with_capacity(values.len() * (precision + 4));
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(sep.as_str());
        }
        out.push_str(&format_value(*v, precision));
    }
    out
}

/// Inverse of [`encode_values`] for either separator.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split([' ', ','])
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::invalid(format!("not a number: {t:?}")))
        })
        .collect()
}

/// Named series sharing an optional x-vector.
#[derive(Debug, Clone, Copy)]
pub struct SeriesView<'a> {
    pub xs: Option<&'a [f64]>,
    pub ys: &'a [(&'a str, &'a [f64])],
}

/// Encodes each vector on its own line as `name: v1<sep>v2...`.
pub fn encode_series(view: SeriesView<'_>, spec: &CodecSpec) -> Result<String> {
    spec.validate()?;
    if view.ys.is_empty() || view.ys.iter().any(|(_, v)| v.is_empty()) {
        return Err(Error::invalid("cannot encode an empty series"));
    }
    let mut lines = Vec::new();
    if spec.include_x {
        if let Some(xs) = view.xs {
            let xs = if spec.scale_x {
                scale(xs, spec.scaling)?.0
            } else {
                xs.to_vec()
            };
            lines.push(format!("x: {}", encode_values(&xs, spec.precision, spec.separator)));
        }
    }
    for (name, ys) in view.ys {
        let (scaled, _) = scale(ys, spec.scaling)?;
        lines.push(format!(
            "{name}: {}",
            encode_values(&scaled, spec.precision, spec.separator)
        ));
    }
    Ok(lines.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minmax_endpoints() {
        let (v, t) = scale(&[0.0, 5.0, 10.0], Scaling::Minmax).unwrap();
        assert_eq!(v, vec![0.0, 0.5, 1.0]);
        assert_eq!(t.offset, 0.0);
    }

    #[test]
    fn llmtime_hand_example() {
        let (v, t) = scale(&[1.0, 2.0, 3.0], Scaling::Llmtime { alpha: 0.5, beta: 0.0 }).unwrap();
        assert_eq!((t.offset, t.divisor), (1.0, 1.0));
        assert_eq!(v, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn llmtime_zero_quantile_falls_back_to_one() {
        let (_, t) = scale(&[2.0, 2.0, 2.0, 5.0], Scaling::Llmtime { alpha: 0.5, beta: 0.0 }).unwrap();
        assert_eq!(t.divisor, 1.0);
    }

    #[test]
    fn none_is_identity() {
        let xs = [3.5, -1.25, 7.0];
        assert_eq!(scale(&xs, Scaling::None).unwrap().0, xs.to_vec());
    }

    #[test]
    fn scale_errors() {
        assert!(matches!(scale(&[1.0, 1.0], Scaling::Minmax), Err(Error::Degenerate(_))));
        assert!(matches!(scale(&[1.0, f64::NAN], Scaling::None), Err(Error::InvalidInput(_))));
        assert!(scale(&[], Scaling::None).is_err());
    }

    #[test]
    fn fixed_precision_formatting() {
        assert_eq!(encode_values(&[1.0, 2.345], 2, Separator::CommaSpace), "1.00, 2.35");
        assert_eq!(encode_values(&[1.23456], 4, Separator::Space), "1.2346");
        assert_eq!(format_value(-0.0, 2), "0.00");
        assert_eq!(format_value(-0.001, 2), "0.00");
        assert_eq!(format_value(-0.5, 2), "-0.50");
        // exact binary ties round to even
        assert_eq!(format_value(0.125, 2), "0.12");
        assert_eq!(format_value(0.375, 2), "0.38");
    }

    #[test]
    fn encode_includes_x_when_asked() {
        let xs = [0.0, 1.0];
        let ys = [2.0, 3.0];
        let named = [("y", &ys[..])];
        let view = SeriesView {
            xs: Some(&xs),
            ys: &named,
        };
        let with = encode_series(view, &CodecSpec::default()).unwrap();
        assert_eq!(with, "x: 0.00 1.00\ny: 2.00 3.00");
        let without = encode_series(
            view,
            &CodecSpec {
                include_x: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(without, "y: 2.00 3.00");
    }

    #[test]
    fn precision_outside_ablation_set() {
        let ys = [1.0];
        let named = [("y", &ys[..])];
        let spec = CodecSpec {
            precision: 3,
            ..Default::default()
        };
        assert!(encode_series(SeriesView { xs: None, ys: &named }, &spec).is_err());
    }
}
