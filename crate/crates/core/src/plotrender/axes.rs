//! Single-axes figure: layout, autoscaling, ticks, artists and legend.

use crate::error::{Error, Result};

use super::canvas::{Canvas, Rect, Rgb};
use super::spec::{Components, Marker, PlotSpec, Theme};
use super::text;

const TITLE_PT: f64 = 12.0;
const LABEL_PT: f64 = 10.0;
const TICK_PT: f64 = 10.0;
const TICK_LEN_PT: f64 = 3.5;
const GRID_PT: f64 = 0.8;
const SPINE_PT: f64 = 0.8;
const AUTO_MARGIN: f64 = 0.05;

/// Five-number box-plot statistics for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub label: String,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegendLoc {
    UpperRight,
    LowerRight,
}

#[derive(Debug, Clone)]
enum Artist {
    Scatter {
        pts: Vec<(f64, f64)>,
        color: Rgb,
        marker: Marker,
        diameter_px: f64,
    },
    Line {
        pts: Vec<(f64, f64)>,
        color: Rgb,
        width_px: f64,
    },
    Bars {
        xs: Vec<f64>,
        heights: Vec<f64>,
        width: f64,
        color: Rgb,
    },
    Boxes {
        stats: Vec<BoxStats>,
        color: Rgb,
    },
    HLine {
        y: f64,
        color: Rgb,
    },
}

pub struct Figure {
    pub spec: PlotSpec,
    pub theme: Theme,
    artists: Vec<Artist>,
    legend: Vec<(String, Rgb)>,
    legend_loc: Option<LegendLoc>,
    xlim: Option<(f64, f64)>,
    ylim: Option<(f64, f64)>,
    xticks: Option<Vec<(f64, String)>>,
}

fn check_finite(pts: &[(f64, f64)]) -> Result<()> {
    if pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::invalid("plot coordinates must be finite"));
    }
    Ok(())
}

impl Figure {
    pub fn new(spec: PlotSpec) -> Result<Self> {
        spec.validate()?;
        let theme = Theme::resolve(spec.style, spec.palette);
        Ok(Self {
            spec,
            theme,
            artists: Vec::new(),
            legend: Vec::new(),
            legend_loc: None,
            xlim: None,
            ylim: None,
            xticks: None,
        })
    }

    pub fn scatter(&mut self, xs: &[f64], ys: &[f64], color: Rgb) -> Result<()> {
        let pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
        check_finite(&pts)?;
        let diameter_px = self.spec.pt(self.spec.marker_size.area_pt2().sqrt());
        self.artists.push(Artist::Scatter {
            pts,
            color,
            marker: self.spec.marker,
            diameter_px,
        });
        Ok(())
    }

    pub fn line(&mut self, xs: &[f64], ys: &[f64], color: Rgb, width_pt: f64, label: Option<&str>) -> Result<()> {
        let pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
        check_finite(&pts)?;
        self.artists.push(Artist::Line {
            pts,
            color,
            width_px: self.spec.pt(width_pt),
        });
        if let Some(l) = label {
            self.legend.push((l.to_string(), color));
        }
        Ok(())
    }

    /// Bars centred at `xs`, `width` in data units, based at zero.
    pub fn bars(&mut self, xs: &[f64], heights: &[f64], width: f64, color: Rgb) -> Result<()> {
        let pts: Vec<(f64, f64)> = xs.iter().copied().zip(heights.iter().copied()).collect();
        check_finite(&pts)?;
        self.artists.push(Artist::Bars {
            xs: xs.to_vec(),
            heights: heights.to_vec(),
            width,
            color,
        });
        Ok(())
    }

    /// One box per group at x = 1, 2, ...; group labels become x ticks.
    pub fn boxes(&mut self, stats: Vec<BoxStats>, color: Rgb) -> Result<()> {
        for s in &stats {
            let vals = [s.q1, s.median, s.q3, s.whisker_lo, s.whisker_hi];
            if vals.iter().chain(&s.outliers).any(|v| !v.is_finite()) {
                return Err(Error::invalid("box statistics must be finite"));
            }
        }
        self.xticks = Some(
            stats
                .iter()
                .enumerate()
                .map(|(i, s)| ((i + 1) as f64, s.label.clone()))
                .collect(),
        );
        self.xlim = Some((0.5, stats.len() as f64 + 0.5));
        self.artists.push(Artist::Boxes { stats, color });
        Ok(())
    }

    pub fn hline(&mut self, y: f64, color: Rgb) {
        self.artists.push(Artist::HLine { y, color });
    }

    pub fn set_xlim(&mut self, lo: f64, hi: f64) {
        self.xlim = Some((lo, hi));
    }

    pub fn set_ylim(&mut self, lo: f64, hi: f64) {
        self.ylim = Some((lo, hi));
    }

    pub fn set_xticks(&mut self, ticks: Vec<(f64, String)>) {
        self.xticks = Some(ticks);
    }

    pub fn legend(&mut self, loc: LegendLoc) {
        self.legend_loc = Some(loc);
    }

    /// Axes rectangle in pixel coordinates (y grows downwards).
    pub fn axes_rect(spec: &PlotSpec) -> Rect {
        let w = spec.width_px() as f64;
        let h = spec.height_px() as f64;
        Rect {
            x0: (0.125 * w).round(),
            y0: ((1.0 - 0.88) * h).round(),
            x1: (0.9 * w).round(),
            y1: ((1.0 - 0.11) * h).round(),
        }
    }

    fn data_bounds(&self) -> (Option<(f64, f64)>, Option<(f64, f64)>) {
        let mut xb: Option<(f64, f64)> = None;
        let mut yb: Option<(f64, f64)> = None;
        let add = |b: &mut Option<(f64, f64)>, v: f64| {
            *b = Some(b.map_or((v, v), |(lo, hi)| (lo.min(v), hi.max(v))));
        };
        for a in &self.artists {
            match a {
                Artist::Scatter { pts, .. } | Artist::Line { pts, .. } => {
                    for &(x, y) in pts {
                        add(&mut xb, x);
                        add(&mut yb, y);
                    }
                }
                Artist::Bars { xs, heights, width, .. } => {
                    for (&x, &h) in xs.iter().zip(heights) {
                        add(&mut xb, x - width / 2.0);
                        add(&mut xb, x + width / 2.0);
                        add(&mut yb, h);
                        add(&mut yb, 0.0);
                    }
                }
                Artist::Boxes { stats, .. } => {
                    for s in stats {
                        add(&mut yb, s.whisker_lo.min(s.q1));
                        add(&mut yb, s.whisker_hi.max(s.q3));
                        for &o in &s.outliers {
                            add(&mut yb, o);
                        }
                    }
                }
                Artist::HLine { y, .. } => add(&mut yb, *y),
            }
        }
        (xb, yb)
    }

    fn resolve_limits(&self) -> ((f64, f64), (f64, f64)) {
        let (xb, yb) = self.data_bounds();
        let pad = |b: Option<(f64, f64)>| -> (f64, f64) {
            let (lo, hi) = b.unwrap_or((0.0, 1.0));
            if hi > lo {
                let m = (hi - lo) * AUTO_MARGIN;
                let (a, b) = (lo - m, hi + m);
                if a.is_finite() && b.is_finite() {
                    return (a, b);
                }
                return (lo, hi);
            }
            let d = if lo == 0.0 { 0.5 } else { lo.abs() * 0.05 };
            (lo - d, hi + d)
        };
        let mut x = self.xlim.unwrap_or_else(|| pad(xb));
        let mut y = self.ylim.unwrap_or_else(|| pad(yb));
        // bar charts sit on the axis
        if self.ylim.is_none() && self.artists.iter().any(|a| matches!(a, Artist::Bars { .. })) {
            if let Some((lo, hi)) = yb {
                if lo >= 0.0 {
                    y = (0.0, if hi > 0.0 { hi * (1.0 + AUTO_MARGIN) } else { 1.0 });
                }
            }
        }
        if self.xlim.is_none() && self.artists.iter().any(|a| matches!(a, Artist::Bars { .. })) {
            if let Some(b) = xb {
                x = b;
            }
        }
        (x, y)
    }

    pub fn render(&self) -> Result<super::Image> {
        let spec = &self.spec;
        let theme = &self.theme;
        let (w, h) = (spec.width_px(), spec.height_px());
        let mut c = Canvas::new(w, h, theme.figure_bg);
        let ax = Self::axes_rect(spec);
        let ((x0, x1), (y0, y1)) = self.resolve_limits();
        let xspan = x1 - x0;
        let yspan = y1 - y0;
        let to_px = |x: f64, y: f64| -> (f64, f64) {
            (
                ax.x0 + (x - x0) / xspan * ax.width(),
                ax.y1 - (y - y0) / yspan * ax.height(),
            )
        };
        let comps = spec.components;
        let show_frame = comps != Components::None;
        let show_text = comps == Components::All;

        if show_frame {
            c.fill_rect(ax, theme.axes_bg);
        }

        let xticks: Vec<(f64, String)> = match &self.xticks {
            Some(t) => t.clone(),
            None => nice_ticks(x0, x1, 6).into_iter().map(|v| (v, tick_label(v, x0, x1))).collect(),
        };
        let yticks: Vec<(f64, String)> = nice_ticks(y0, y1, 6)
            .into_iter()
            .map(|v| (v, tick_label(v, y0, y1)))
            .collect();

        if show_frame {
            let gw = spec.pt(GRID_PT);
            c.set_clip(Some(ax));
            for (v, _) in &xticks {
                let (px, _) = to_px(*v, y0);
                c.line_pattern((px, ax.y0), (px, ax.y1), gw, theme.grid, theme.grid_dash.map(|d| spec.pt(d)));
            }
            for (v, _) in &yticks {
                let (_, py) = to_px(x0, *v);
                c.line_pattern((ax.x0, py), (ax.x1, py), gw, theme.grid, theme.grid_dash.map(|d| spec.pt(d)));
            }
            c.set_clip(None);
        }

        c.set_clip(Some(ax));
        for a in &self.artists {
            match a {
                Artist::Scatter {
                    pts,
                    color,
                    marker,
                    diameter_px,
                } => {
                    for &(x, y) in pts {
                        let (px, py) = to_px(x, y);
                        draw_marker(&mut c, *marker, px, py, *diameter_px, *color);
                    }
                }
                Artist::Line { pts, color, width_px } => {
                    let p: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| to_px(x, y)).collect();
                    c.polyline(&p, *width_px, *color);
                }
                Artist::Bars {
                    xs,
                    heights,
                    width,
                    color,
                } => {
                    for (&x, &hgt) in xs.iter().zip(heights) {
                        let (l, top) = to_px(x - width / 2.0, hgt);
                        let (r, base) = to_px(x + width / 2.0, 0.0);
                        c.fill_rect(
                            Rect {
                                x0: l,
                                y0: top.min(base),
                                x1: r,
                                y1: top.max(base),
                            },
                            *color,
                        );
                    }
                }
                Artist::Boxes { stats, color } => {
                    let lw = spec.pt(1.0).max(1.0);
                    for (i, s) in stats.iter().enumerate() {
                        let xc = (i + 1) as f64;
                        let (l, q3) = to_px(xc - 0.25, s.q3);
                        let (r, q1) = to_px(xc + 0.25, s.q1);
                        let (mid, _) = to_px(xc, 0.0);
                        let (_, wlo) = to_px(xc, s.whisker_lo);
                        let (_, whi) = to_px(xc, s.whisker_hi);
                        let (_, med) = to_px(xc, s.median);
                        let (cl, _) = to_px(xc - 0.12, 0.0);
                        let (cr, _) = to_px(xc + 0.12, 0.0);
                        c.stroke_rect(
                            Rect {
                                x0: l,
                                y0: q3,
                                x1: r,
                                y1: q1,
                            },
                            lw,
                            *color,
                        );
                        c.line((mid, q1), (mid, wlo), lw, *color);
                        c.line((mid, q3), (mid, whi), lw, *color);
                        c.line((cl, wlo), (cr, wlo), lw, *color);
                        c.line((cl, whi), (cr, whi), lw, *color);
                        c.line((l, med), (r, med), lw * 2.0, theme.recolor(spec.palette, [0xff, 0x7f, 0x0e]));
                        for &o in &s.outliers {
                            let (_, py) = to_px(xc, o);
                            c.fill_circle(mid, py, spec.pt(2.5), *color);
                        }
                    }
                }
                Artist::HLine { y, color } => {
                    let (_, py) = to_px(x0, *y);
                    c.line((ax.x0, py), (ax.x1, py), spec.pt(0.8), *color);
                }
            }
        }
        c.set_clip(None);

        if show_frame && theme.show_spines {
            c.stroke_rect(ax, spec.pt(SPINE_PT).max(1.0), theme.spine);
        }

        if show_text {
            let tick_len = spec.pt(TICK_LEN_PT);
            let tw = spec.pt(SPINE_PT).max(1.0);
            let gap = spec.pt(3.5);
            let widest = yticks.iter().map(|(_, l)| l.chars().count()).max().unwrap_or(0);
            let tick_scale = fit_scale(text::scale_for(TICK_PT, f64::from(spec.dpi)), widest, ax.x0 - tick_len - gap);
            let glyph_h = (text::GLYPH * tick_scale) as f64;
            for (v, label) in &xticks {
                let (px, _) = to_px(*v, y0);
                if px < ax.x0 - 0.5 || px > ax.x1 + 0.5 {
                    continue;
                }
                c.line((px, ax.y1), (px, ax.y1 + tick_len), tw, theme.text);
                let lw = text::text_width(label, tick_scale) as f64;
                text::draw(
                    &mut c,
                    label,
                    (px - lw / 2.0).round() as i64,
                    (ax.y1 + tick_len + gap).round() as i64,
                    tick_scale,
                    theme.text,
                );
            }
            let mut max_ylabel_w = 0.0f64;
            for (v, label) in &yticks {
                let (_, py) = to_px(x0, *v);
                if py < ax.y0 - 0.5 || py > ax.y1 + 0.5 {
                    continue;
                }
                c.line((ax.x0 - tick_len, py), (ax.x0, py), tw, theme.text);
                let lw = text::text_width(label, tick_scale) as f64;
                max_ylabel_w = max_ylabel_w.max(lw);
                text::draw(
                    &mut c,
                    label,
                    (ax.x0 - tick_len - gap - lw).round() as i64,
                    (py - glyph_h / 2.0).round() as i64,
                    tick_scale,
                    theme.text,
                );
            }
            let label_scale = text::scale_for(LABEL_PT, f64::from(spec.dpi));
            if !spec.xlabel.is_empty() {
                let lw = text::text_width(&spec.xlabel, label_scale) as f64;
                text::draw(
                    &mut c,
                    &spec.xlabel,
                    ((ax.x0 + ax.x1) / 2.0 - lw / 2.0).round() as i64,
                    (ax.y1 + tick_len + 2.0 * gap + glyph_h).round() as i64,
                    label_scale,
                    theme.text,
                );
            }
            if !spec.ylabel.is_empty() {
                let lw = text::text_width(&spec.ylabel, label_scale) as f64;
                let lh = (text::GLYPH * label_scale) as f64;
                text::draw_vertical(
                    &mut c,
                    &spec.ylabel,
                    (ax.x0 - tick_len - 2.0 * gap - max_ylabel_w - lh).round() as i64,
                    ((ax.y0 + ax.y1) / 2.0 - lw / 2.0).round() as i64,
                    label_scale,
                    theme.text,
                );
            }
            if !spec.title.is_empty() {
                let ts = fit_scale(
                    text::scale_for(TITLE_PT, f64::from(spec.dpi)),
                    spec.title.chars().count(),
                    w as f64,
                );
                let lw = text::text_width(&spec.title, ts) as f64;
                let th = (text::GLYPH * ts) as f64;
                text::draw(
                    &mut c,
                    &spec.title,
                    ((ax.x0 + ax.x1) / 2.0 - lw / 2.0).round() as i64,
                    (ax.y0 - gap - th).round() as i64,
                    ts,
                    theme.text,
                );
            }
            if let Some(loc) = self.legend_loc {
                self.draw_legend(&mut c, ax, loc);
            }
        }

        super::Image::from_canvas(c, spec.clone())
    }

    fn draw_legend(&self, c: &mut Canvas, ax: Rect, loc: LegendLoc) {
        if self.legend.is_empty() {
            return;
        }
        let spec = &self.spec;
        let s = text::scale_for(LABEL_PT, f64::from(spec.dpi));
        let gh = (text::GLYPH * s) as f64;
        let row = gh * 1.5;
        let sample = gh * 2.0;
        let pad = spec.pt(4.0);
        let text_w = self
            .legend
            .iter()
            .map(|(l, _)| text::text_width(l, s))
            .max()
            .unwrap_or(0) as f64;
        let bw = pad * 3.0 + sample + text_w;
        let bh = pad * 2.0 + row * self.legend.len() as f64 - (row - gh);
        let x0 = ax.x1 - pad - bw;
        let y0 = match loc {
            LegendLoc::UpperRight => ax.y0 + pad,
            LegendLoc::LowerRight => ax.y1 - pad - bh,
        };
        let bx = Rect {
            x0,
            y0,
            x1: x0 + bw,
            y1: y0 + bh,
        };
        c.fill_rect(bx, self.theme.axes_bg);
        c.stroke_rect(bx, 1.0, self.theme.grid);
        for (i, (label, color)) in self.legend.iter().enumerate() {
            let ty = y0 + pad + row * i as f64;
            let cy = ty + gh / 2.0;
            c.line((x0 + pad, cy), (x0 + pad + sample, cy), spec.pt(1.5).max(1.0), *color);
            text::draw(
                c,
                label,
                (x0 + 2.0 * pad + sample).round() as i64,
                ty.round() as i64,
                s,
                self.theme.text,
            );
        }
    }
}

/// Largest scale up to `scale` at which `chars` glyphs fit in `room` pixels.
fn fit_scale(scale: usize, chars: usize, room: f64) -> usize {
    let mut s = scale;
    while s > 1 && (text::text_width(&"x".repeat(chars), s) as f64) > room {
        s -= 1;
    }
    s
}

fn draw_marker(c: &mut Canvas, marker: Marker, x: f64, y: f64, d: f64, color: Rgb) {
    let r = d / 2.0;
    match marker {
        Marker::Circle => c.fill_circle(x, y, r, color),
        Marker::Square => c.fill_rect(
            Rect {
                x0: x - r,
                y0: y - r,
                x1: x + r,
                y1: y + r,
            },
            color,
        ),
        Marker::Triangle => c.fill_triangle((x, y - r), (x - r, y + r), (x + r, y + r), color),
        Marker::X => {
            let lw = (d / 5.0).max(1.0);
            let k = r * std::f64::consts::FRAC_1_SQRT_2;
            c.line((x - k, y - k), (x + k, y + k), lw, color);
            c.line((x - k, y + k), (x + k, y - k), lw, color);
        }
        Marker::Plus => {
            let lw = (d / 5.0).max(1.0);
            c.line((x - r, y), (x + r, y), lw, color);
            c.line((x, y - r), (x, y + r), lw, color);
        }
    }
}

fn nice_step(lo: f64, hi: f64, target: usize) -> Option<f64> {
    let raw = (hi - lo) / target.max(1) as f64;
    if !(raw > 0.0) || !raw.is_finite() {
        return None;
    }
    let mag = 10f64.powf(raw.log10().floor());
    Some(
        [1.0, 2.0, 2.5, 5.0, 10.0]
            .into_iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag),
    )
}

/// Round-number tick positions inside `[lo, hi]`, about `target` of them.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return vec![lo];
    }
    let Some(step) = nice_step(lo, hi, target) else {
        return vec![lo, hi];
    };
    let first = (lo / step).ceil();
    let last = (hi / step).floor();
    if !(last - first < 1000.0) {
        return vec![lo, hi];
    }
    let mut out = Vec::new();
    let mut k = first;
    while k <= last {
        let v = k * step;
        out.push(if v == 0.0 { 0.0 } else { v });
        k += 1.0;
    }
    out
}

fn tick_label(v: f64, lo: f64, hi: f64) -> String {
    let span = (hi - lo).abs();
    let mag = v.abs().max(span);
    if mag >= 1e6 || (mag < 1e-3 && mag > 0.0) {
        return format!("{v:.1e}");
    }
    let decimals = match nice_step(lo, hi, 6) {
        Some(step) if step < 1.0 => {
            let d = (-step.log10().floor()) as usize;
            let m = step / 10f64.powi(-(d as i32));
            if (m - 2.5).abs() < 1e-9 { d + 1 } else { d }
        }
        _ => 0,
    };
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_ticks(-11.0, 11.0, 6), vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
        assert_eq!(nice_ticks(0.0, 1.0, 5), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(nice_ticks(1.0, 1.0, 6), vec![1.0]);
    }

    #[test]
    fn labels_drop_negative_zero() {
        assert_eq!(tick_label(-0.0, -1.0, 1.0), "0.0");
        assert_eq!(tick_label(0.25, 0.0, 1.5), "0.25");
        assert_eq!(tick_label(5.0, -10.0, 10.0), "5");
    }
}
