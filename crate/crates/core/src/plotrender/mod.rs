//! Deterministic raster plots of task instances.
//!
//! Every image is drawn by a small built-in rasteriser (no anti-aliasing,
//! embedded bitmap font) and encoded as PNG, so identical inputs give
//! byte-identical files on every platform.

mod axes;
mod canvas;
mod spec;
mod text;

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

pub use axes::{nice_ticks, BoxStats, Figure, LegendLoc};
pub use canvas::{Canvas, Rect, Rgb};
pub use spec::{
    Components, Marker, MarkerSize, Palette, PlotOverrides, PlotSpec, Style, Theme, ABLATION_DPIS,
    ABLATION_FIGSIZES, BLACK, BLUE, RED,
};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::imupipe::{ImuSegment, TrimpSeries};
use crate::rng::sha256_hex;
use crate::synthgen::{Payload, TaskInstance};

/// PNG `tEXt` key carrying the experiment configuration hash.
pub const CONFIG_HASH_KEY: &str = "plotbench-config-hash";

/// A rendered RGB image plus its PNG encoding.
#[derive(Debug, Clone)]
pub struct Image {
    pub width_px: usize,
    pub height_px: usize,
    /// Row-major RGB8.
    pub pixels: Vec<u8>,
    /// PNG without metadata chunks.
    pub png: Vec<u8>,
    /// SHA-256 of `png`, hex.
    pub hash: String,
    pub spec: PlotSpec,
}

impl Image {
    pub(crate) fn from_canvas(c: Canvas, spec: PlotSpec) -> Result<Self> {
        let (w, h) = (c.width, c.height);
        let pixels = c.into_pixels();
        let png = encode_png(w, h, &pixels, None)?;
        Ok(Self {
            width_px: w,
            height_px: h,
            hash: sha256_hex(&png),
            pixels,
            png,
            spec,
        })
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width_px + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// PNG bytes with a `tEXt` chunk stamping `config_hash`.
    pub fn png_stamped(&self, config_hash: &str) -> Result<Vec<u8>> {
        encode_png(self.width_px, self.height_px, &self.pixels, Some((CONFIG_HASH_KEY, config_hash)))
    }
}

pub fn encode_png(w: usize, h: usize, pixels: &[u8], text: Option<(&str, &str)>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Fast);
        if let Some((k, v)) = text {
            enc.add_text_chunk(k.to_string(), v.to_string())?;
        }
        let mut writer = enc.write_header()?;
        writer.write_image_data(pixels)?;
        writer.finish()?;
    }
    Ok(out)
}

/// Decodes an RGB8 PNG; returns `(width, height, pixels, text chunks)`.
pub fn decode_png(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>, Vec<(String, String)>)> {
    let dec = png::Decoder::new(Cursor::new(bytes));
    let mut reader = dec.read_info()?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf)?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::invalid("only RGB8 PNG images are supported"));
    }
    buf.truncate(info.buffer_size());
    let text = reader
        .info()
        .uncompressed_latin1_text
        .iter()
        .map(|t| (t.keyword.clone(), t.text.clone()))
        .collect();
    Ok((info.width as usize, info.height as usize, buf, text))
}

/// Renders every image a task instance is shown with.
///
/// Derivative tasks yield the question followed by the four choices;
/// activity recognition yields accelerometer then gyroscope; all other
/// tasks yield one image.
pub fn render_task(inst: &TaskInstance, spec: &PlotSpec) -> Result<Vec<Image>> {
    match &inst.payload {
        Payload::Series(s) => {
            let mut f = Figure::new(spec.clone())?;
            let col = f.theme.series(0);
            f.scatter(&s.xs, &s.ys, col)?;
            Ok(vec![f.render()?])
        }
        Payload::Correlation(p) => {
            let mut f = Figure::new(spec.clone())?;
            let (r, b) = (f.theme.recolor(spec.palette, RED), f.theme.recolor(spec.palette, BLUE));
            f.line(&p.xs, &p.y1s, r, 3.0, Some("y1"))?;
            f.line(&p.xs, &p.y2s, b, 3.0, Some("y2"))?;
            f.legend(LegendLoc::LowerRight);
            Ok(vec![f.render()?])
        }
        Payload::Clusters(c) => {
            let mut f = Figure::new(spec.clone())?;
            let col = f.theme.recolor(spec.palette, BLACK);
            let (xs, ys): (Vec<f64>, Vec<f64>) = c.points.iter().copied().unzip();
            f.scatter(&xs, &ys, col)?;
            f.set_xlim(-1.0, 1.0);
            f.set_ylim(-1.0, 1.0);
            Ok(vec![f.render()?])
        }
        Payload::Derivative(d) => {
            let mut out = Vec::with_capacity(1 + d.choices.len());
            let mut f = Figure::new(spec.clone())?;
            let col = f.theme.series(0);
            f.line(&d.question.xs, &d.question.ys, col, 1.5, None)?;
            out.push(f.render()?);
            for (i, ch) in d.choices.iter().enumerate() {
                let cs = PlotSpec {
                    title: format!("Potential derivative choice {i}"),
                    ylabel: "dy".into(),
                    ..spec.clone()
                };
                let mut f = Figure::new(cs)?;
                let col = f.theme.series(0);
                f.line(&ch.xs, &ch.ys, col, 1.5, None)?;
                out.push(f.render()?);
            }
            Ok(out)
        }
        Payload::Imu(seg) => match inst.task_kind {
            crate::synthgen::TaskKind::ActivityRecognition => render_imu_split(seg, spec),
            _ => Ok(vec![render_imu_combined(seg, spec)?]),
        },
        Payload::Trimp(t) => Ok(vec![render_trimp(t, spec)?]),
    }
}

/// All six channels against sample index, no legend.
pub fn render_imu_combined(seg: &ImuSegment, spec: &PlotSpec) -> Result<Image> {
    let mut f = Figure::new(spec.clone())?;
    let idx: Vec<f64> = (0..seg.len()).map(|i| i as f64).collect();
    for (i, ch) in seg.channels.iter().enumerate() {
        let col = f.theme.series(i);
        f.line(&idx, ch, col, 1.0, None)?;
    }
    f.render()
}

/// One image per sensor (accelerometer, gyroscope), x/y/z against time.
pub fn render_imu_split(seg: &ImuSegment, spec: &PlotSpec) -> Result<Vec<Image>> {
    let t = seg.times();
    let mut out = Vec::with_capacity(2);
    for (s, name) in ["Accelerometer", "Gyroscope"].into_iter().enumerate() {
        let sp = PlotSpec {
            title: name.into(),
            ..spec.clone()
        };
        let mut f = Figure::new(sp)?;
        for (k, axis) in ["x", "y", "z"].into_iter().enumerate() {
            let col = f.theme.series(k);
            f.line(&t, &seg.channels[s * 3 + k], col, 1.0, Some(axis))?;
        }
        f.set_xlim(0.0, 15.0);
        f.legend(LegendLoc::UpperRight);
        out.push(f.render()?);
    }
    Ok(out)
}

/// Daily TRIMP values as bars, day 1 leftmost.
pub fn render_trimp(t: &TrimpSeries, spec: &PlotSpec) -> Result<Image> {
    render_bars(&t.values, spec)
}

/// Bar chart of 1..=60 non-negative values at x = 1, 2, ...
pub fn render_bars(values: &[f64], spec: &PlotSpec) -> Result<Image> {
    if values.is_empty() || values.len() > 60 {
        return Err(Error::invalid(format!("bar chart needs 1..=60 values, got {}", values.len())));
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("bar heights must be finite and non-negative"));
    }
    let mut f = Figure::new(spec.clone())?;
    let xs: Vec<f64> = (1..=values.len()).map(|i| i as f64).collect();
    let col = f.theme.series(0);
    f.bars(&xs, values, 0.8, col)?;
    f.set_xlim(0.5, values.len() as f64 + 0.5);
    f.render()
}

/// Box plot of pre-computed group statistics.
pub fn render_boxplot(stats: Vec<BoxStats>, spec: &PlotSpec) -> Result<Image> {
    if stats.is_empty() {
        return Err(Error::invalid("box plot needs at least one group"));
    }
    let mut f = Figure::new(spec.clone())?;
    let col = f.theme.recolor(spec.palette, BLACK);
    f.hline(0.0, f.theme.grid);
    f.boxes(stats, col)?;
    f.render()
}

/// Hash identifying a plot spec, used in cache paths.
pub fn spec_hash(spec: &PlotSpec) -> String {
    let json = serde_json::to_vec(spec).unwrap_or_default();
    sha256_hex(&json)[..16].to_string()
}

/// Content-addressed on-disk cache of rendered PNGs.
#[derive(Debug, Clone)]
pub struct PngCache {
    pub dir: PathBuf,
}

impl PngCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, instance_id: &str, spec: &PlotSpec, index: usize) -> PathBuf {
        self.dir.join(format!("{instance_id}-{}-{index}.png", spec_hash(spec)))
    }

    /// Loads the instance's images from disk, rendering and writing any
    /// that are missing. `stamp` is embedded as a PNG text chunk.
    pub fn get_or_render(&self, inst: &TaskInstance, spec: &PlotSpec, stamp: Option<&str>) -> Result<Vec<Image>> {
        let first = self.path_for(&inst.instance_id, spec, 0);
        if first.exists() {
            let mut out = Vec::new();
            for i in 0.. {
                let p = self.path_for(&inst.instance_id, spec, i);
                if !p.exists() {
                    break;
                }
                out.push(load_image(&p, spec)?);
            }
            return Ok(out);
        }
        let imgs = render_task(inst, spec)?;
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        for (i, img) in imgs.iter().enumerate() {
            let bytes = match stamp {
                Some(h) => img.png_stamped(h)?,
                None => img.png.clone(),
            };
            write_atomic(&self.path_for(&inst.instance_id, spec, i), &bytes)?;
        }
        Ok(imgs)
    }
}

fn load_image(path: &Path, spec: &PlotSpec) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (w, h, pixels, _) = decode_png(&bytes)?;
    let png = encode_png(w, h, &pixels, None)?;
    Ok(Image {
        width_px: w,
        height_px: h,
        hash: sha256_hex(&png),
        pixels,
        png,
        spec: spec.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{build_task_matrix, MatrixSpec, TaskKind};

    fn first(kind: TaskKind) -> TaskInstance {
        let mut spec = MatrixSpec::standard(kind);
        spec.repeats = 1;
        build_task_matrix(kind, &spec, 3).unwrap().remove(0)
    }

    #[test]
    fn dimensions_follow_figsize_and_dpi() {
        let inst = first(TaskKind::FunctionId);
        for &dpi in &ABLATION_DPIS {
            for &fs in &ABLATION_FIGSIZES {
                let spec = PlotSpec {
                    dpi,
                    figsize_inches: fs,
                    ..PlotSpec::for_task(TaskKind::FunctionId)
                };
                if fs.0 * fs.1 * f64::from(dpi * dpi) > 3e6 {
                    continue;
                }
                let img = &render_task(&inst, &spec).unwrap()[0];
                assert_eq!(img.width_px, (fs.0 * f64::from(dpi)).round() as usize);
                assert_eq!(img.height_px, (fs.1 * f64::from(dpi)).round() as usize);
            }
        }
    }

    #[test]
    fn rendering_is_byte_identical() {
        let inst = first(TaskKind::Correlation);
        let spec = PlotSpec::for_task(TaskKind::Correlation);
        let a = render_task(&inst, &spec).unwrap();
        let b = render_task(&inst, &spec).unwrap();
        assert_eq!(a[0].png, b[0].png);
        assert_eq!(a[0].hash, b[0].hash);
    }

    #[test]
    fn image_counts_per_task() {
        let n = |k| render_task(&first(k), &PlotSpec::for_task(k)).unwrap().len();
        assert_eq!(n(TaskKind::FunctionId), 1);
        assert_eq!(n(TaskKind::DerivativeId), 5);
        assert_eq!(n(TaskKind::QuadraticDerivativeId), 5);
    }

    #[test]
    fn bars_reject_bad_input() {
        let spec = PlotSpec::for_task(TaskKind::Readiness);
        assert!(render_bars(&[], &spec).is_err());
        assert!(render_bars(&[1.0, -1.0], &spec).is_err());
        assert!(render_bars(&vec![1.0; 61], &spec).is_err());
        assert!(render_bars(&[0.0; 30], &spec).is_ok());
    }

    #[test]
    fn non_finite_points_rejected() {
        let mut f = Figure::new(PlotSpec::default()).unwrap();
        assert!(matches!(f.scatter(&[0.0, f64::NAN], &[1.0, 2.0], BLACK), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn stamped_png_carries_hash() {
        let inst = first(TaskKind::FunctionId);
        let img = &render_task(&inst, &PlotSpec::for_task(TaskKind::FunctionId)).unwrap()[0];
        let bytes = img.png_stamped("abc123").unwrap();
        let (w, h, px, text) = decode_png(&bytes).unwrap();
        assert_eq!((w, h), (img.width_px, img.height_px));
        assert_eq!(px, img.pixels);
        assert!(text.contains(&(CONFIG_HASH_KEY.to_string(), "abc123".to_string())));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PngCache::new(dir.path());
        let inst = first(TaskKind::DerivativeId);
        let spec = PlotSpec::for_task(TaskKind::DerivativeId);
        let a = cache.get_or_render(&inst, &spec, Some("h")).unwrap();
        let b = cache.get_or_render(&inst, &spec, Some("h")).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.hash, y.hash);
        }
    }
}
