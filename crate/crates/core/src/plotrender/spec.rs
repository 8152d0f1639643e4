use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthgen::TaskKind;

use super::canvas::Rgb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    Default,
    Classic,
    GgplotLike,
    Whitegrid,
    Darkgrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Palette {
    Default,
    BlackWhite,
    HighContrast,
    LowContrast,
    Invert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marker {
    Circle,
    Square,
    Triangle,
    X,
    Plus,
}

/// Scatter marker area in points².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerSize {
    Small,
    Medium,
    Large,
}

impl MarkerSize {
    pub fn area_pt2(self) -> f64 {
        match self {
            MarkerSize::Small => 10.0,
            MarkerSize::Medium => 50.0,
            MarkerSize::Large => 100.0,
        }
    }
}

/// Which non-data elements are drawn. `Minimal` keeps grid and axis lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Components {
    All,
    Minimal,
    None,
}

pub const ABLATION_DPIS: [u32; 5] = [25, 50, 100, 200, 400];
pub const ABLATION_FIGSIZES: [(f64, f64); 5] = [(3.5, 3.5), (4.0, 3.0), (7.0, 7.0), (8.0, 6.0), (12.0, 12.0)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub figsize_inches: (f64, f64),
    pub dpi: u32,
    pub style: Style,
    pub palette: Palette,
    pub marker: Marker,
    pub marker_size: MarkerSize,
    pub components: Components,
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            figsize_inches: (6.4, 4.8),
            dpi: 100,
            style: Style::Default,
            palette: Palette::Default,
            marker: Marker::Circle,
            marker_size: MarkerSize::Medium,
            components: Components::All,
            title: String::new(),
            xlabel: "x".into(),
            ylabel: "y".into(),
        }
    }
}

impl PlotSpec {
    /// Figure defaults for each task.
    pub fn for_task(kind: TaskKind) -> Self {
        let base = PlotSpec::default();
        match kind {
            TaskKind::FunctionId => PlotSpec {
                title: "Data showing a trend to be identified.".into(),
                ..base
            },
            TaskKind::Correlation => PlotSpec {
                figsize_inches: (4.0, 4.0),
                dpi: 96,
                title: "Synthetic Function Comparison".into(),
                ..base
            },
            TaskKind::ClusterCount => PlotSpec {
                figsize_inches: (8.0, 8.0),
                dpi: 96,
                title: "Synthetic Clustered Data".into(),
                ..base
            },
            TaskKind::DerivativeId => PlotSpec {
                figsize_inches: (6.0, 4.0),
                title: "Function whose derivative is to be identified.".into(),
                ..base
            },
            TaskKind::QuadraticDerivativeId => PlotSpec {
                figsize_inches: (6.0, 4.0),
                title: "Quadratic function whose derivative is to be identified.".into(),
                ..base
            },
            TaskKind::FallDetection => PlotSpec {
                figsize_inches: (6.0, 4.0),
                xlabel: String::new(),
                ylabel: String::new(),
                ..base
            },
            TaskKind::ActivityRecognition => PlotSpec {
                figsize_inches: (4.0, 4.0),
                dpi: 90,
                xlabel: "Time (s)".into(),
                ylabel: String::new(),
                ..base
            },
            TaskKind::Readiness => PlotSpec {
                title: "Daily training load (TRIMP)".into(),
                xlabel: "Day".into(),
                ylabel: "TRIMP".into(),
                ..base
            },
        }
    }

    pub fn width_px(&self) -> usize {
        (self.figsize_inches.0 * f64::from(self.dpi)).round() as usize
    }

    pub fn height_px(&self) -> usize {
        (self.figsize_inches.1 * f64::from(self.dpi)).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.figsize_inches;
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) || self.dpi == 0 {
            return Err(Error::invalid(format!(
                "figure size {:?} at {} dpi is not drawable",
                self.figsize_inches, self.dpi
            )));
        }
        if self.width_px() < 8 || self.height_px() < 8 || self.width_px() * self.height_px() > 40_000_000 {
            return Err(Error::invalid(format!(
                "figure of {}x{} px is out of range",
                self.width_px(),
                self.height_px()
            )));
        }
        Ok(())
    }

    /// Points to pixels at this spec's dpi.
    pub fn pt(&self, points: f64) -> f64 {
        points * f64::from(self.dpi) / 72.0
    }
}

/// Optional per-axis overrides layered on top of [`PlotSpec::for_task`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlotOverrides {
    pub figsize_inches: Option<(f64, f64)>,
    pub dpi: Option<u32>,
    pub style: Option<Style>,
    pub palette: Option<Palette>,
    pub marker: Option<Marker>,
    pub marker_size: Option<MarkerSize>,
    pub components: Option<Components>,
}

impl PlotOverrides {
    pub fn apply(&self, mut spec: PlotSpec) -> PlotSpec {
        if let Some(v) = self.figsize_inches {
            spec.figsize_inches = v;
        }
        if let Some(v) = self.dpi {
            spec.dpi = v;
        }
        if let Some(v) = self.style {
            spec.style = v;
        }
        if let Some(v) = self.palette {
            spec.palette = v;
        }
        if let Some(v) = self.marker {
            spec.marker = v;
        }
        if let Some(v) = self.marker_size {
            spec.marker_size = v;
        }
        if let Some(v) = self.components {
            spec.components = v;
        }
        spec
    }
}

/// Resolved colours for one figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Theme {
    pub figure_bg: Rgb,
    pub axes_bg: Rgb,
    pub grid: Rgb,
    pub grid_dash: Option<f64>,
    pub spine: Rgb,
    pub text: Rgb,
    pub cycle: Vec<Rgb>,
    pub show_spines: bool,
}

const TAB10: [Rgb; 6] = [
    [0x1f, 0x77, 0xb4],
    [0xff, 0x7f, 0x0e],
    [0x2c, 0xa0, 0x2c],
    [0xd6, 0x27, 0x28],
    [0x94, 0x67, 0xbd],
    [0x8c, 0x56, 0x4b],
];

pub const RED: Rgb = [0xff, 0x00, 0x00];
pub const BLUE: Rgb = [0x00, 0x00, 0xff];
pub const BLACK: Rgb = [0x00, 0x00, 0x00];

impl Theme {
    pub fn resolve(style: Style, palette: Palette) -> Theme {
        let mut t = match style {
            Style::Default => Theme {
                figure_bg: [255; 3],
                axes_bg: [255; 3],
                grid: [0xb0; 3],
                grid_dash: None,
                spine: BLACK,
                text: BLACK,
                cycle: TAB10.to_vec(),
                show_spines: true,
            },
            Style::Classic => Theme {
                figure_bg: [0xbf; 3],
                axes_bg: [255; 3],
                grid: BLACK,
                grid_dash: Some(2.0),
                spine: BLACK,
                text: BLACK,
                cycle: vec![[0, 0, 255], [0, 128, 0], [255, 0, 0], [0, 191, 191], [191, 0, 191], [191, 191, 0]],
                show_spines: true,
            },
            Style::GgplotLike => Theme {
                figure_bg: [255; 3],
                axes_bg: [0xe5; 3],
                grid: [255; 3],
                grid_dash: None,
                spine: [255; 3],
                text: [0x55; 3],
                cycle: vec![
                    [0xe2, 0x4a, 0x33],
                    [0x34, 0x8a, 0xbd],
                    [0x98, 0x8e, 0xd5],
                    [0x77, 0x77, 0x77],
                    [0xfb, 0xc1, 0x5e],
                    [0x8e, 0xba, 0x42],
                ],
                show_spines: false,
            },
            Style::Whitegrid => Theme {
                figure_bg: [255; 3],
                axes_bg: [255; 3],
                grid: [0xcc; 3],
                grid_dash: None,
                spine: [0xcc; 3],
                text: [0x26; 3],
                cycle: vec![
                    [0x4c, 0x72, 0xb0],
                    [0xdd, 0x84, 0x52],
                    [0x55, 0xa8, 0x68],
                    [0xc4, 0x4e, 0x52],
                    [0x81, 0x72, 0xb3],
                    [0x93, 0x78, 0x60],
                ],
                show_spines: true,
            },
            Style::Darkgrid => Theme {
                figure_bg: [255; 3],
                axes_bg: [0xea, 0xea, 0xf2],
                grid: [255; 3],
                grid_dash: None,
                spine: [255; 3],
                text: [0x26; 3],
                cycle: vec![
                    [0x4c, 0x72, 0xb0],
                    [0xdd, 0x84, 0x52],
                    [0x55, 0xa8, 0x68],
                    [0xc4, 0x4e, 0x52],
                    [0x81, 0x72, 0xb3],
                    [0x93, 0x78, 0x60],
                ],
                show_spines: false,
            },
        };
        match palette {
            Palette::Default => {}
            Palette::BlackWhite => {
                t.figure_bg = [255; 3];
                t.axes_bg = [255; 3];
                t.grid = [0x80; 3];
                t.spine = BLACK;
                t.text = BLACK;
                t.cycle = vec![BLACK];
            }
            Palette::HighContrast => {
                t.figure_bg = [255; 3];
                t.axes_bg = [255; 3];
                t.grid = [0x60; 3];
                t.spine = BLACK;
                t.text = BLACK;
                t.cycle = vec![[0, 0, 255], [255, 0, 0], [0, 160, 0], [0, 0, 0], [200, 0, 200], [230, 120, 0]];
            }
            Palette::LowContrast => {
                t.figure_bg = [0xf0; 3];
                t.axes_bg = [0xf0; 3];
                t.grid = [0xe0; 3];
                t.spine = [0xc8; 3];
                t.text = [0xa8; 3];
                t.cycle = t.cycle.iter().map(|c| blend(*c, [0xf0; 3], 0.55)).collect();
            }
            Palette::Invert => {
                t.figure_bg = invert(t.figure_bg);
                t.axes_bg = invert(t.axes_bg);
                t.grid = invert(t.grid);
                t.spine = invert(t.spine);
                t.text = invert(t.text);
                t.cycle = t.cycle.iter().map(|c| invert(*c)).collect();
            }
        }
        t
    }

    /// Maps a colour named by a task's plot recipe through the palette.
    pub fn recolor(&self, palette: Palette, c: Rgb) -> Rgb {
        match palette {
            Palette::Default | Palette::HighContrast => c,
            Palette::BlackWhite => BLACK,
            Palette::LowContrast => blend(c, [0xf0; 3], 0.55),
            Palette::Invert => invert(c),
        }
    }

    pub fn series(&self, i: usize) -> Rgb {
        self.cycle[i % self.cycle.len()]
    }
}

fn invert(c: Rgb) -> Rgb {
    [255 - c[0], 255 - c[1], 255 - c[2]]
}

fn blend(c: Rgb, bg: Rgb, amount: f64) -> Rgb {
    let mix = |a: u8, b: u8| (f64::from(a) * (1.0 - amount) + f64::from(b) * amount).round() as u8;
    [mix(c[0], bg[0]), mix(c[1], bg[1]), mix(c[2], bg[2])]
}
