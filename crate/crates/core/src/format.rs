//! skp-lite: the JSON interchange format for programs.
//!
//! Colors are stored straight-alpha in files and premultiplied in memory;
//! the conversion happens exactly at [`load_program`] and [`save_program`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{BlendMode, Color, Fill, FilterKind, GradientStop, Point};
use crate::command::{check_balanced, BalanceError, Command, Program};
use crate::layer::Paint;
use crate::shape::{normalize_shape, Shape};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum LoadError {
    #[error("schema error at {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error("invalid command {index}: {reason}")]
    Invariant { index: usize, reason: String },
    #[error("unbalanced program: {0}")]
    Unbalanced(#[from] BalanceError),
}

impl LoadError {
    pub fn class(&self) -> &'static str {
        match self {
            LoadError::Schema { .. } => "schema-error",
            LoadError::Invariant { .. } => "invariant-error",
            LoadError::Unbalanced(_) => "unbalanced",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    version: u32,
    commands: Vec<RawCommand>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase", deny_unknown_fields)]
enum RawCommand {
    Draw {
        shape: RawShape,
        #[serde(default)]
        paint: RawPaint,
    },
    Clip {
        shape: RawShape,
    },
    Save {},
    SaveLayer {
        #[serde(default)]
        paint: RawPaint,
    },
    Restore {},
    /// Only written for optimizer trace snapshots, where record indices
    /// must survive serialization.
    Noop {},
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPaint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fill: Option<RawFill>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    filter: Option<RawFilter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    blend: Option<RawBlend>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "camelCase")]
enum RawFilter {
    Id,
    Luma,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "camelCase")]
enum RawBlend {
    SrcOver,
    DstIn,
    Multiply,
    SrcOut,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
enum RawFill {
    Solid {
        color: RawColor,
    },
    LinearGradient {
        p0: [f64; 2],
        p1: [f64; 2],
        stops: Vec<(f64, RawColor)>,
    },
    RadialGradient {
        center: [f64; 2],
        radius: f64,
        stops: Vec<(f64, RawColor)>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
enum RawShape {
    Rect { ltrb: [f64; 4] },
    Circle { center: [f64; 2], radius: f64 },
    Full,
    Empty,
    Intersect { lhs: Box<RawShape>, rhs: Box<RawShape> },
    Union { lhs: Box<RawShape>, rhs: Box<RawShape> },
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct RawColor {
    a: f64,
    r: f64,
    g: f64,
    b: f64,
}

impl From<RawBlend> for BlendMode {
    fn from(b: RawBlend) -> Self {
        match b {
            RawBlend::SrcOver => BlendMode::SrcOver,
            RawBlend::DstIn => BlendMode::DstIn,
            RawBlend::Multiply => BlendMode::Multiply,
            RawBlend::SrcOut => BlendMode::SrcOut,
        }
    }
}

impl From<BlendMode> for RawBlend {
    fn from(b: BlendMode) -> Self {
        match b {
            BlendMode::SrcOver => RawBlend::SrcOver,
            BlendMode::DstIn => RawBlend::DstIn,
            BlendMode::Multiply => RawBlend::Multiply,
            BlendMode::SrcOut => RawBlend::SrcOut,
        }
    }
}

impl From<RawFilter> for FilterKind {
    fn from(f: RawFilter) -> Self {
        match f {
            RawFilter::Id => FilterKind::Id,
            RawFilter::Luma => FilterKind::Luma,
        }
    }
}

impl From<FilterKind> for RawFilter {
    fn from(f: FilterKind) -> Self {
        match f {
            FilterKind::Id => RawFilter::Id,
            FilterKind::Luma => RawFilter::Luma,
        }
    }
}

fn decode_color(c: RawColor) -> Result<Color, String> {
    for (name, v) in [("a", c.a), ("r", c.r), ("g", c.g), ("b", c.b)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("color channel {name} = {v} outside [0, 1]"));
        }
    }
    let color = Color::from_unpremul(c.a, c.r, c.g, c.b);
    color.validate()?;
    Ok(color)
}

fn encode_color(c: Color) -> RawColor {
    let (a, r, g, b) = c.to_unpremul();
    RawColor { a, r, g, b }
}

fn point([x, y]: [f64; 2]) -> Point {
    Point::new(x, y)
}

/// Clamps offsets into `[0, 1]`, forces them non-decreasing, and pads the
/// ends so the stops span the whole range.
pub fn normalize_stops(stops: &[GradientStop]) -> Vec<GradientStop> {
    let mut out: Vec<GradientStop> = Vec::with_capacity(stops.len() + 2);
    let mut prev = 0.0f64;
    for s in stops {
        let offset = s.offset.clamp(0.0, 1.0).max(prev);
        prev = offset;
        out.push(GradientStop::new(offset, s.color));
    }
    if let Some(first) = out.first().copied() {
        if first.offset > 0.0 {
            out.insert(0, GradientStop::new(0.0, first.color));
        }
    }
    if let Some(last) = out.last().copied() {
        if last.offset < 1.0 {
            out.push(GradientStop::new(1.0, last.color));
        }
    }
    out
}

fn decode_stops(raw: Vec<(f64, RawColor)>) -> Result<Vec<GradientStop>, String> {
    if raw.is_empty() {
        return Err("gradient has no stops".into());
    }
    let stops = raw
        .into_iter()
        .enumerate()
        .map(|(i, (t, c))| {
            decode_color(c)
                .map(|color| GradientStop::new(t, color))
                .map_err(|e| format!("stop {i}: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(normalize_stops(&stops))
}

fn decode_fill(raw: RawFill) -> Result<Fill, String> {
    let fill = match raw {
        RawFill::Solid { color } => Fill::Solid(decode_color(color)?),
        RawFill::LinearGradient { p0, p1, stops } => Fill::LinearGradient {
            p0: point(p0),
            p1: point(p1),
            stops: decode_stops(stops)?.into(),
        },
        RawFill::RadialGradient { center, radius, stops } => Fill::RadialGradient {
            center: point(center),
            radius,
            stops: decode_stops(stops)?.into(),
        },
    };
    fill.validate()?;
    Ok(fill)
}

fn encode_fill(fill: &Fill) -> RawFill {
    let stops = |s: &[GradientStop]| s.iter().map(|s| (s.offset, encode_color(s.color))).collect();
    match fill {
        Fill::Solid(c) => RawFill::Solid {
            color: encode_color(*c),
        },
        Fill::LinearGradient { p0, p1, stops: s } => RawFill::LinearGradient {
            p0: [p0.x, p0.y],
            p1: [p1.x, p1.y],
            stops: stops(s),
        },
        Fill::RadialGradient {
            center,
            radius,
            stops: s,
        } => RawFill::RadialGradient {
            center: [center.x, center.y],
            radius: *radius,
            stops: stops(s),
        },
    }
}

fn decode_paint(raw: RawPaint) -> Result<Paint, String> {
    Ok(Paint {
        fill: match raw.fill {
            Some(f) => decode_fill(f)?,
            None => Fill::Solid(Color::BLACK),
        },
        filter: raw.filter.map_or(FilterKind::Id, Into::into),
        blend: raw.blend.map_or(BlendMode::SrcOver, Into::into),
    })
}

fn encode_paint(p: &Paint) -> RawPaint {
    RawPaint {
        fill: Some(encode_fill(&p.fill)),
        filter: Some(p.filter.into()),
        blend: Some(p.blend.into()),
    }
}

fn decode_shape(raw: RawShape) -> Shape {
    match raw {
        RawShape::Rect { ltrb: [l, t, r, b] } => Shape::rect(l, t, r, b),
        RawShape::Circle { center, radius } => Shape::Circle {
            center: point(center),
            radius,
        },
        RawShape::Full => Shape::Full,
        RawShape::Empty => Shape::Empty,
        RawShape::Intersect { lhs, rhs } => Shape::intersect_node(decode_shape(*lhs), decode_shape(*rhs)),
        RawShape::Union { lhs, rhs } => Shape::union(decode_shape(*lhs), decode_shape(*rhs)),
    }
}

fn checked_shape(raw: RawShape) -> Result<Shape, String> {
    let shape = decode_shape(raw);
    shape.validate()?;
    Ok(normalize_shape(&shape))
}

fn encode_shape(s: &Shape) -> RawShape {
    match s {
        Shape::Rect {
            left,
            top,
            right,
            bottom,
        } => RawShape::Rect {
            ltrb: [*left, *top, *right, *bottom],
        },
        Shape::Circle { center, radius } => RawShape::Circle {
            center: [center.x, center.y],
            radius: *radius,
        },
        Shape::Full => RawShape::Full,
        Shape::Empty => RawShape::Empty,
        Shape::Intersect(a, b) => RawShape::Intersect {
            lhs: Box::new(encode_shape(a)),
            rhs: Box::new(encode_shape(b)),
        },
        Shape::Union(a, b) => RawShape::Union {
            lhs: Box::new(encode_shape(a)),
            rhs: Box::new(encode_shape(b)),
        },
    }
}

fn decode_command(raw: RawCommand) -> Result<Command, String> {
    Ok(match raw {
        RawCommand::Draw { shape, paint } => Command::draw(checked_shape(shape)?, decode_paint(paint)?),
        RawCommand::Clip { shape } => Command::clip(checked_shape(shape)?),
        RawCommand::Save {} => Command::Save,
        RawCommand::SaveLayer { paint } => Command::save_layer(decode_paint(paint)?),
        RawCommand::Restore {} => Command::Restore,
        RawCommand::Noop {} => Command::NoOp,
    })
}

fn encode_command(c: &Command) -> RawCommand {
    match c {
        Command::Draw { shape, paint } => RawCommand::Draw {
            shape: encode_shape(shape),
            paint: encode_paint(paint),
        },
        Command::Clip { shape } => RawCommand::Clip {
            shape: encode_shape(shape),
        },
        Command::Save => RawCommand::Save {},
        Command::SaveLayer { paint } => RawCommand::SaveLayer {
            paint: encode_paint(paint),
        },
        Command::Restore => RawCommand::Restore {},
        Command::NoOp => RawCommand::Noop {},
    }
}

fn parse_document(bytes: &[u8]) -> Result<RawDocument, LoadError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: RawDocument = serde_path_to_error::deserialize(de).map_err(|e| LoadError::Schema {
        path: match e.path().to_string() {
            p if p == "." => "$".to_string(),
            p => format!("$.{p}"),
        },
        reason: e.inner().to_string(),
    })?;
    if doc.version != FORMAT_VERSION {
        return Err(LoadError::Schema {
            path: "$.version".into(),
            reason: format!("unsupported version {}, expected {FORMAT_VERSION}", doc.version),
        });
    }
    Ok(doc)
}

/// Parses, validates and normalizes an skp-lite document.
pub fn load_program(bytes: &[u8]) -> Result<Program, LoadError> {
    let doc = parse_document(bytes)?;
    let records = doc
        .commands
        .into_iter()
        .enumerate()
        .map(|(index, raw)| decode_command(raw).map_err(|reason| LoadError::Invariant { index, reason }))
        .collect::<Result<Vec<_>, _>>()?;
    let program = Program::new(records);
    check_balanced(&program)?;
    Ok(program)
}

pub fn load_program_str(s: &str) -> Result<Program, LoadError> {
    load_program(s.as_bytes())
}

fn to_json(p: &Program, keep_noops: bool) -> serde_json::Value {
    let doc = RawDocument {
        version: FORMAT_VERSION,
        commands: p
            .records
            .iter()
            .filter(|c| keep_noops || !c.is_noop())
            .map(encode_command)
            .collect(),
    };
    serde_json::to_value(doc).expect("skp-lite documents always serialize")
}

/// Serializes a program, omitting `NoOp` tombstones.
pub fn save_program(p: &Program) -> Vec<u8> {
    serde_json::to_vec_pretty(&to_json(p, false)).expect("serializable")
}

pub fn save_program_string(p: &Program) -> String {
    String::from_utf8(save_program(p)).expect("JSON is UTF-8")
}

/// The document as a JSON value, keeping tombstones as `{"op":"noop"}` so
/// record indices are preserved.
pub fn program_to_json_with_tombstones(p: &Program) -> serde_json::Value {
    to_json(p, true)
}

pub fn program_from_json(v: &serde_json::Value) -> Result<Program, LoadError> {
    let bytes = serde_json::to_vec(v).expect("JSON values serialize");
    load_program(&bytes)
}

/// Decodes a document without the balance check. Trace snapshots go through
/// here so a malformed snapshot reaches the validator instead of failing at
/// load time.
pub fn program_from_json_unchecked(v: &serde_json::Value) -> Result<Program, LoadError> {
    let bytes = serde_json::to_vec(v).expect("JSON values serialize");
    let doc = parse_document(&bytes)?;
    let records = doc
        .commands
        .into_iter()
        .enumerate()
        .map(|(index, raw)| decode_command(raw).map_err(|reason| LoadError::Invariant { index, reason }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Program::new(records))
}

pub fn command_to_json(c: &Command) -> serde_json::Value {
    serde_json::to_value(encode_command(c)).expect("commands always serialize")
}

pub fn command_from_json(v: &serde_json::Value) -> Result<Command, LoadError> {
    let raw: RawCommand = serde_path_to_error::deserialize(v.clone()).map_err(|e| LoadError::Schema {
        path: format!("$.{}", e.path()),
        reason: e.inner().to_string(),
    })?;
    decode_command(raw).map_err(|reason| LoadError::Invariant { index: 0, reason })
}

/// Applies the loader's normalizations to an in-memory program: shape
/// simplification and gradient stop clamping/padding.
pub fn normalize_program(p: &Program) -> Program {
    let paint = |p: &Paint| Paint {
        fill: match &p.fill {
            Fill::Solid(c) => Fill::Solid(*c),
            Fill::LinearGradient { p0, p1, stops } => Fill::LinearGradient {
                p0: *p0,
                p1: *p1,
                stops: normalize_stops(stops).into(),
            },
            Fill::RadialGradient { center, radius, stops } => Fill::RadialGradient {
                center: *center,
                radius: *radius,
                stops: normalize_stops(stops).into(),
            },
        },
        ..p.clone()
    };
    Program::new(
        p.records
            .iter()
            .map(|c| match c {
                Command::Draw { shape, paint: p } => Command::draw(normalize_shape(shape), paint(p)),
                Command::Clip { shape } => Command::clip(normalize_shape(shape)),
                Command::SaveLayer { paint: p } => Command::save_layer(paint(p)),
                other => other.clone(),
            })
            .collect(),
    )
}
