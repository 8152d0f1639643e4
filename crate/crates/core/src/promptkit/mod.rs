//! Prompt assembly for text, plot and combined modalities, and parsing of
//! model replies back into labels.
//!
//! Prompt wording lives in versioned template files under `templates/`;
//! each template has `## preamble`, `## shot` and `## question` sections
//! with `{data}`, `{k}`, `{answer}`, `{reasoning}` and `{instruction}`
//! placeholders.

mod encode;
mod parse;
mod shots;

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use encode::{encode_instance, IMU_CHANNEL_NAMES};
pub use parse::{parse_response, ParseStatus, ParsedLabel};
pub use shots::{
    assemble_fewshots, assemble_fewshots_mode, check_shot_count, participant_of, quadratic_reasoning, quadratic_shot_pool, Exclusion,
    ShotMode, QUADRATIC_SHOT_POINTS, SHOT_COUNTS,
};

use crate::error::{Error, Result};
use crate::imupipe::{FallClass, ACTIVITY_CLASSES};
use crate::plotrender::{render_task, Image, PlotSpec};
use crate::synthgen::{FuncType, Label, Payload, TaskInstance, TaskKind};
use crate::tscodec::CodecSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Text,
    Plot,
    CombinedTextFirst,
    CombinedPlotFirst,
}

impl Modality {
    pub const ALL: [Modality; 4] = [
        Modality::Text,
        Modality::Plot,
        Modality::CombinedTextFirst,
        Modality::CombinedPlotFirst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Text => "text",
            Modality::Plot => "plot",
            Modality::CombinedTextFirst => "combined_text_first",
            Modality::CombinedPlotFirst => "combined_plot_first",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Modality::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown modality {s}")))
    }

    pub fn needs_text(self) -> bool {
        self != Modality::Plot
    }

    pub fn needs_plot(self) -> bool {
        self != Modality::Text
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Admissible answers for a task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    Classes(Vec<String>),
    IntegerRange { lo: i64, hi: i64 },
    /// Answer is an index into `options`; the option text also counts.
    Choice { options: Vec<String> },
}

impl Schema {
    pub fn for_task(kind: TaskKind) -> Schema {
        let classes = |v: &[&str]| Schema::Classes(v.iter().map(|s| s.to_string()).collect());
        match kind {
            TaskKind::FunctionId => Schema::Classes(FuncType::ALL.iter().map(|t| t.name().to_string()).collect()),
            TaskKind::Correlation => classes(&["positive", "negative"]),
            TaskKind::ClusterCount => Schema::IntegerRange { lo: 1, hi: 9 },
            TaskKind::DerivativeId | TaskKind::QuadraticDerivativeId => Schema::Choice {
                options: (0..4).map(|i| format!("candidate {i}")).collect(),
            },
            TaskKind::FallDetection => Schema::Classes(
                [FallClass::Fall, FallClass::NearFall, FallClass::Adl]
                    .iter()
                    .map(|c| c.name().to_string())
                    .collect(),
            ),
            TaskKind::ActivityRecognition => classes(&ACTIVITY_CLASSES),
            TaskKind::Readiness => classes(&["up", "down"]),
        }
    }

    pub fn admits(&self, label: &Label) -> bool {
        match (self, label) {
            (Schema::Classes(c), Label::Class(l)) => c.contains(l),
            (Schema::IntegerRange { lo, hi }, Label::Count(n)) => (lo..=hi).contains(&n),
            (Schema::Choice { options }, Label::Choice(i)) => *i < options.len(),
            _ => false,
        }
    }

    /// Every admissible value, in schema order.
    pub fn values(&self) -> Vec<Label> {
        match self {
            Schema::Classes(c) => c.iter().cloned().map(Label::Class).collect(),
            Schema::IntegerRange { lo, hi } => (*lo..=*hi).map(Label::Count).collect(),
            Schema::Choice { options } => (0..options.len()).map(Label::Choice).collect(),
        }
    }

    pub fn instruction(&self) -> String {
        match self {
            Schema::Classes(c) => format!("Answer with exactly one of: {}.", c.join(", ")),
            Schema::IntegerRange { lo, hi } => format!("Answer with a single integer from {lo} to {hi}."),
            Schema::Choice { options } => {
                let idx: Vec<String> = (0..options.len()).map(|i| i.to_string()).collect();
                format!("Answer with exactly one candidate number: {}.", idx.join(", "))
            }
        }
    }
}

/// An encoded image attached to a prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePart {
    pub caption: Option<String>,
    pub width_px: usize,
    pub height_px: usize,
    pub hash: String,
    pub png: Arc<Vec<u8>>,
}

impl ImagePart {
    pub fn from_image(img: &Image, caption: Option<String>) -> Self {
        Self {
            caption,
            width_px: img.width_px,
            height_px: img.height_px,
            hash: img.hash.clone(),
            png: Arc::new(img.png.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Part {
    Text(String),
    Image(ImagePart),
}

/// Text and/or images for one instance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Rendering {
    pub text: Option<String>,
    pub images: Vec<ImagePart>,
}

impl Rendering {
    /// Renders whatever `modality` needs.
    pub fn build(inst: &TaskInstance, modality: Modality, codec: &CodecSpec, plot: &PlotSpec) -> Result<Self> {
        let text = if modality.needs_text() {
            Some(encode_instance(inst, codec)?)
        } else {
            None
        };
        let images = if modality.needs_plot() {
            Self::attach(inst, &render_task(inst, plot)?)
        } else {
            Vec::new()
        };
        Ok(Self { text, images })
    }

    /// Wraps already rendered images, adding captions where a task shows
    /// several related plots.
    pub fn attach(inst: &TaskInstance, imgs: &[Image]) -> Vec<ImagePart> {
        imgs.iter()
            .enumerate()
            .map(|(i, img)| {
                let caption = match inst.payload {
                    Payload::Derivative(_) if i == 0 => Some("Function:".to_string()),
                    Payload::Derivative(_) => Some(format!("Candidate {}:", i - 1)),
                    _ => None,
                };
                ImagePart::from_image(img, caption)
            })
            .collect()
    }

    fn parts(&self, modality: Modality) -> Result<Vec<Part>> {
        let text = || -> Result<Vec<Part>> {
            match &self.text {
                Some(t) => Ok(vec![Part::Text(t.clone())]),
                None => Err(Error::invalid(format!("{modality} prompt needs a text rendering"))),
            }
        };
        let plot = || -> Result<Vec<Part>> {
            if self.images.is_empty() {
                return Err(Error::invalid(format!("{modality} prompt needs at least one image")));
            }
            let mut v = Vec::new();
            for img in &self.images {
                if let Some(c) = &img.caption {
                    v.push(Part::Text(c.clone()));
                }
                v.push(Part::Image(img.clone()));
            }
            Ok(v)
        };
        match modality {
            Modality::Text => {
                if !self.images.is_empty() {
                    return Err(Error::invalid("text prompt must not carry images"));
                }
                text()
            }
            Modality::Plot => {
                if self.text.is_some() {
                    return Err(Error::invalid("plot prompt must not carry a text encoding"));
                }
                plot()
            }
            Modality::CombinedTextFirst => Ok([text()?, plot()?].concat()),
            Modality::CombinedPlotFirst => Ok([plot()?, text()?].concat()),
        }
    }
}

/// A worked example shown before the question.
#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    pub instance_id: String,
    pub rendering: Rendering,
    pub label: Label,
    pub reasoning: Option<String>,
}

impl Shot {
    pub fn new(inst: &TaskInstance, rendering: Rendering) -> Self {
        let reasoning = match inst.task_kind {
            TaskKind::QuadraticDerivativeId => quadratic_reasoning(inst),
            _ => None,
        };
        Self {
            instance_id: inst.instance_id.clone(),
            rendering,
            label: inst.ground_truth.clone(),
            reasoning,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    pub parts: Vec<Part>,
    pub modality: Modality,
    pub schema: Schema,
    pub task_kind: TaskKind,
    pub instance_id: String,
    pub template_id: String,
    pub shot_ids: Vec<String>,
}

impl Prompt {
    pub fn image_parts(&self) -> impl Iterator<Item = &ImagePart> {
        self.parts.iter().filter_map(|p| match p {
            Part::Image(i) => Some(i),
            Part::Text(_) => None,
        })
    }

    pub fn text_chars(&self) -> usize {
        self.parts
            .iter()
            .map(|p| match p {
                Part::Text(t) => t.chars().count(),
                Part::Image(_) => 0,
            })
            .sum()
    }

    /// All text joined, images shown as `[image <hash>]`.
    pub fn transcript(&self) -> String {
        let mut s = String::new();
        for p in &self.parts {
            match p {
                Part::Text(t) => s.push_str(t),
                Part::Image(i) => {
                    let _ = write!(s, "[image {}]", i.hash);
                }
            }
            s.push('\n');
        }
        s
    }

    /// Canonical byte serialisation: every part tagged and length-prefixed,
    /// images by their content hash.
    pub fn content_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for p in &self.parts {
            let (tag, body) = match p {
                Part::Text(t) => (b'T', t.as_bytes()),
                Part::Image(i) => (b'I', i.hash.as_bytes()),
            };
            out.push(tag);
            out.extend_from_slice(&(body.len() as u64).to_le_bytes());
            out.extend_from_slice(body);
        }
        out
    }
}

/// Parsed prompt template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub id: String,
    pub preamble: String,
    pub shot: String,
    pub question: String,
}

pub const TEMPLATE_VERSION: &str = "v1";

struct Builtin {
    reasoning: &'static str,
}

static TEMPLATES: Builtin = Builtin {
    reasoning: include_str!("../../templates/quadratic_reasoning.v1.txt"),
};

fn builtin_source(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::FunctionId => include_str!("../../templates/function_id.v1.txt"),
        TaskKind::Correlation => include_str!("../../templates/correlation.v1.txt"),
        TaskKind::ClusterCount => include_str!("../../templates/cluster_count.v1.txt"),
        TaskKind::DerivativeId => include_str!("../../templates/derivative_id.v1.txt"),
        TaskKind::QuadraticDerivativeId => include_str!("../../templates/quadratic_derivative_id.v1.txt"),
        TaskKind::FallDetection => include_str!("../../templates/fall_detection.v1.txt"),
        TaskKind::ActivityRecognition => include_str!("../../templates/activity_recognition.v1.txt"),
        TaskKind::Readiness => include_str!("../../templates/readiness.v1.txt"),
    }
}

impl Template {
    pub fn builtin(kind: TaskKind) -> Template {
        Template::parse(&format!("{}.{TEMPLATE_VERSION}", kind.name()), builtin_source(kind))
            .expect("built-in templates are well formed")
    }

    pub fn parse(id: &str, source: &str) -> Result<Template> {
        let mut sections: Vec<(String, Vec<&str>)> = Vec::new();
        for line in source.lines() {
            if let Some(name) = line.strip_prefix("## ") {
                sections.push((name.trim().to_string(), Vec::new()));
            } else if let Some((_, body)) = sections.last_mut() {
                body.push(line);
            } else if !line.trim().is_empty() {
                return Err(Error::invalid(format!("template {id}: text before first section")));
            }
        }
        let get = |n: &str| -> Result<String> {
            sections
                .iter()
                .find(|(s, _)| s == n)
                .map(|(_, b)| b.join("\n").trim_end().to_string())
                .ok_or_else(|| Error::invalid(format!("template {id} lacks a `{n}` section")))
        };
        let t = Template {
            id: id.to_string(),
            preamble: get("preamble")?,
            shot: get("shot")?,
            question: get("question")?,
        };
        if !t.shot.contains("{data}") || !t.question.contains("{data}") {
            return Err(Error::invalid(format!("template {id}: shot and question need a {{data}} slot")));
        }
        Ok(t)
    }
}

fn push_text(parts: &mut Vec<Part>, s: &str) {
    if s.is_empty() {
        return;
    }
    if let Some(Part::Text(prev)) = parts.last_mut() {
        prev.push('\n');
        prev.push_str(s);
    } else {
        parts.push(Part::Text(s.to_string()));
    }
}

fn push_section(parts: &mut Vec<Part>, section: &str, data: Vec<Part>) {
    let (before, after) = section.split_once("{data}").unwrap_or((section, ""));
    push_text(parts, before.trim_end_matches('\n'));
    for p in data {
        match p {
            Part::Text(t) => push_text(parts, &t),
            img => parts.push(img),
        }
    }
    push_text(parts, after.trim_start_matches('\n'));
}

/// Assembles the prompt for `inst`: preamble, each shot, then the question
/// with the schema instruction.
pub fn build_prompt(
    inst: &TaskInstance,
    modality: Modality,
    rendering: &Rendering,
    shots: &[Shot],
    template: &Template,
) -> Result<Prompt> {
    let schema = Schema::for_task(inst.task_kind);
    let instruction = schema.instruction();
    let mut parts = Vec::new();
    push_text(&mut parts, &template.preamble);
    for (k, shot) in shots.iter().enumerate() {
        let sec = template
            .shot
            .replace("{k}", &(k + 1).to_string())
            .replace("{answer}", &shot.label.to_string())
            .replace("{reasoning}", shot.reasoning.as_deref().unwrap_or(""))
            .replace("{instruction}", &instruction);
        push_section(&mut parts, &sec, shot.rendering.parts(modality)?);
    }
    let q = template.question.replace("{instruction}", &instruction);
    push_section(&mut parts, &q, rendering.parts(modality)?);
    Ok(Prompt {
        parts,
        modality,
        schema,
        task_kind: inst.task_kind,
        instance_id: inst.instance_id.clone(),
        template_id: template.id.clone(),
        shot_ids: shots.iter().map(|s| s.instance_id.clone()).collect(),
    })
}
