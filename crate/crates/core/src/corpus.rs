//! Seeded program generator.
//!
//! Pattern programs embed one or more instances of a rewrite in randomized
//! surroundings and carry the number of times each pass is expected to fire
//! under the default pipeline. Near-miss programs break exactly one side
//! condition and are expected to come through untouched. Random programs are
//! unstructured and carry no expectation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::color::{BlendMode, Color, Fill, FilterKind, GradientStop, Point};
use crate::command::{Command, Program};
use crate::format::normalize_program;
use crate::layer::Paint;
use crate::optimizer::PassKind;
use crate::shape::Shape;

/// Side of the square the generated coordinates are aimed at.
pub const CANVAS: f64 = 256.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Pattern(PassKind),
    NearMiss(PassKind),
    Random,
}

impl Family {
    pub fn patterns() -> [Family; 4] {
        PassKind::ALL.map(Family::Pattern)
    }

    pub fn near_misses() -> [Family; 4] {
        PassKind::ALL.map(Family::NearMiss)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Pattern(k) => write!(f, "{k}"),
            Family::NearMiss(k) => write!(f, "{k}-near-miss"),
            Family::Random => f.write_str("random"),
        }
    }
}

/// Relative weights of each family.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusMix {
    pub weights: Vec<(Family, u32)>,
}

impl Default for CorpusMix {
    fn default() -> Self {
        let mut weights: Vec<(Family, u32)> = Family::patterns().into_iter().map(|f| (f, 3)).collect();
        weights.extend(Family::near_misses().into_iter().map(|f| (f, 1)));
        weights.push((Family::Random, 2));
        CorpusMix { weights }
    }
}

impl CorpusMix {
    pub fn only(family: Family) -> Self {
        CorpusMix {
            weights: vec![(family, 1)],
        }
    }

    fn pick(&self, rng: &mut impl Rng) -> Family {
        let total: u32 = self.weights.iter().map(|(_, w)| w).sum();
        assert!(total > 0, "corpus mix has no weight");
        let mut r = rng.random_range(0..total);
        for &(f, w) in &self.weights {
            if r < w {
                return f;
            }
            r -= w;
        }
        unreachable!("weights sum to total")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusProgram {
    pub name: String,
    pub family: Family,
    pub variant: &'static str,
    pub program: Program,
    /// Firings per pass under the default pipeline; `None` for random
    /// programs. Passes that should not fire are absent.
    pub expected: Option<BTreeMap<PassKind, usize>>,
}

impl CorpusProgram {
    pub fn expected_total(&self) -> Option<usize> {
        self.expected.as_ref().map(|m| m.values().sum())
    }
}

pub fn generate_corpus(seed: u64, count: usize, mix: &CorpusMix) -> Vec<CorpusProgram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let family = mix.pick(&mut rng);
            let mut g = Gen::new(rng.random());
            let (variant, program, expected) = g.family(family);
            CorpusProgram {
                name: format!("{family}-{i:04}"),
                family,
                variant,
                program: normalize_program(&program),
                expected,
            }
        })
        .collect()
}

/// A luminance mask inside a DstIn layer inside an opaque SrcOver layer.
pub fn pinterest_nest() -> Program {
    let photo = Fill::LinearGradient {
        p0: Point::new(0.0, 0.0),
        p1: Point::new(256.0, 256.0),
        stops: vec![
            GradientStop::new(0.0, Color::from_unpremul(1.0, 0.9, 0.2, 0.1)),
            GradientStop::new(1.0, Color::from_unpremul(1.0, 0.1, 0.3, 0.8)),
        ]
        .into(),
    };
    Program::new(vec![
        Command::save_layer(Paint::src_over()),
        Command::draw(
            Shape::rect(16.0, 16.0, 240.0, 240.0),
            Paint::new(photo, FilterKind::Id, BlendMode::SrcOver),
        ),
        Command::draw(
            Shape::circle(128.0, 100.0, 40.0),
            Paint::solid(Color::from_unpremul(0.6, 1.0, 1.0, 1.0), BlendMode::SrcOver),
        ),
        Command::save_layer(Paint::solid(Color::BLACK, BlendMode::DstIn)),
        Command::save_layer(Paint::src_over().with_filter(FilterKind::Luma)),
        Command::draw(
            Shape::intersect_node(
                Shape::rect(24.0, 24.0, 232.0, 232.0),
                Shape::circle(128.0, 128.0, 110.0),
            ),
            Paint::solid(Color::WHITE, BlendMode::SrcOver),
        ),
        Command::Restore,
        Command::Restore,
        Command::Restore,
    ])
}

/// A balanced program of exactly `len` records mixing pattern instances,
/// near misses and unstructured content.
pub fn large_program(seed: u64, len: usize) -> Program {
    let mut g = Gen::new(seed);
    let mix = CorpusMix::default();
    let mut records = Vec::with_capacity(len + 64);
    while records.len() < len {
        let family = mix.pick(&mut g.rng);
        let (_, p, _) = g.family(family);
        if records.len() + p.len() > len {
            break;
        }
        records.extend(p.records);
    }
    while records.len() < len {
        let shape = g.shape();
        let paint = g.any_paint();
        records.push(Command::draw(shape, paint));
    }
    normalize_program(&Program::new(records))
}

type Expected = Option<BTreeMap<PassKind, usize>>;

fn expect(pairs: &[(PassKind, usize)]) -> Expected {
    Some(pairs.iter().copied().collect())
}

fn none_fire() -> Expected {
    Some(BTreeMap::new())
}

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn family(&mut self, family: Family) -> (&'static str, Program, Expected) {
        let (variant, records, expected) = match family {
            Family::Pattern(PassKind::SrcOverSaveLayer) => self.srcover_pattern(),
            Family::Pattern(PassKind::DstInToClip) => self.dstin_pattern(),
            Family::Pattern(PassKind::SubsumeLuma) => self.luma_pattern(),
            Family::Pattern(PassKind::GradientMask) => self.gradient_pattern(),
            Family::NearMiss(PassKind::SrcOverSaveLayer) => self.srcover_near_miss(),
            Family::NearMiss(PassKind::DstInToClip) => self.dstin_near_miss(),
            Family::NearMiss(PassKind::SubsumeLuma) => self.luma_near_miss(),
            Family::NearMiss(PassKind::GradientMask) => self.gradient_near_miss(),
            Family::Random => ("unstructured", self.random_records(0), None),
        };
        (variant, Program::new(records), expected)
    }

    // Leaves.

    /// A coordinate on a quarter-pixel grid, so files round-trip exactly.
    fn coord(&mut self, lo: f64, hi: f64) -> f64 {
        let steps = ((hi - lo) * 4.0) as i64;
        lo + self.rng.random_range(0..=steps) as f64 / 4.0
    }

    fn unit(&mut self) -> f64 {
        self.rng.random_range(0..=20) as f64 / 20.0
    }

    fn color_with_alpha(&mut self, a: f64) -> Color {
        let (r, g, b) = (self.unit(), self.unit(), self.unit());
        Color::from_unpremul(a, r, g, b)
    }

    fn opaque_color(&mut self) -> Color {
        self.color_with_alpha(1.0)
    }

    fn any_color(&mut self) -> Color {
        let a = self.rng.random_range(1..=20) as f64 / 20.0;
        self.color_with_alpha(a)
    }

    fn rect(&mut self) -> Shape {
        let l = self.coord(-16.0, 224.0);
        let t = self.coord(-16.0, 224.0);
        let w = self.coord(4.0, 160.0);
        let h = self.coord(4.0, 160.0);
        Shape::rect(l, t, l + w, t + h)
    }

    fn circle(&mut self) -> Shape {
        let cx = self.coord(0.0, CANVAS);
        let cy = self.coord(0.0, CANVAS);
        let r = self.coord(4.0, 110.0);
        Shape::circle(cx, cy, r)
    }

    fn shape(&mut self) -> Shape {
        match self.rng.random_range(0..10) {
            0..=4 => self.rect(),
            5..=7 => self.circle(),
            8 => {
                let (a, b) = (self.rect(), self.circle());
                Shape::intersect_node(a, b)
            }
            _ => {
                let (a, b) = (self.circle(), self.rect());
                Shape::union(a, b)
            }
        }
    }

    fn stops(&mut self, opaque: bool) -> Vec<GradientStop> {
        let n = self.rng.random_range(2..=4);
        let mut offsets: Vec<f64> = (0..n).map(|_| self.unit()).collect();
        offsets.sort_by(f64::total_cmp);
        offsets[0] = 0.0;
        offsets[n - 1] = 1.0;
        offsets
            .into_iter()
            .map(|o| {
                let c = if opaque { self.opaque_color() } else { self.any_color() };
                GradientStop::new(o, c)
            })
            .collect()
    }

    fn gradient(&mut self, opaque: bool) -> Fill {
        let stops = self.stops(opaque);
        if self.rng.random_bool(0.5) {
            let p0 = Point::new(self.coord(0.0, CANVAS), self.coord(0.0, CANVAS));
            let p1 = Point::new(self.coord(0.0, CANVAS), self.coord(0.0, CANVAS));
            Fill::LinearGradient {
                p0,
                p1,
                stops: stops.into(),
            }
        } else {
            let center = Point::new(self.coord(0.0, CANVAS), self.coord(0.0, CANVAS));
            let radius = self.coord(8.0, 180.0);
            Fill::RadialGradient {
                center,
                radius,
                stops: stops.into(),
            }
        }
    }

    fn fill(&mut self) -> Fill {
        if self.rng.random_bool(0.25) {
            self.gradient(false)
        } else {
            Fill::Solid(self.any_color())
        }
    }

    fn filter(&mut self) -> FilterKind {
        if self.rng.random_bool(0.15) {
            FilterKind::Luma
        } else {
            FilterKind::Id
        }
    }

    fn blend(&mut self) -> BlendMode {
        *BlendMode::ALL.choose(&mut self.rng).expect("non-empty")
    }

    fn non_src_over(&mut self) -> BlendMode {
        *[BlendMode::DstIn, BlendMode::Multiply, BlendMode::SrcOut]
            .choose(&mut self.rng)
            .expect("non-empty")
    }

    fn src_over_paint(&mut self) -> Paint {
        let (fill, filter) = (self.fill(), self.filter());
        Paint::new(fill, filter, BlendMode::SrcOver)
    }

    fn any_paint(&mut self) -> Paint {
        let (fill, filter, blend) = (self.fill(), self.filter(), self.blend());
        Paint::new(fill, filter, blend)
    }

    fn opaque_layer_paint(&mut self) -> Paint {
        let c = self.opaque_color();
        Paint::solid(c, BlendMode::SrcOver)
    }

    /// A layer paint the SrcOver pass never accepts.
    fn wrapper_paint(&mut self) -> Paint {
        let blend = self.non_src_over();
        let c = self.any_color();
        Paint::solid(c, blend)
    }

    // Content runs.

    /// Draws of any blend mode; no brackets.
    fn any_draws(&mut self, max: usize) -> Vec<Command> {
        let n = self.rng.random_range(0..=max);
        (0..n)
            .map(|_| {
                let (s, p) = (self.shape(), self.any_paint());
                Command::draw(s, p)
            })
            .collect()
    }

    /// SrcOver draws, optionally wrapped in `Save Clip .. Restore`, with
    /// scope-level clips only when allowed.
    fn src_over_run(&mut self, min: usize, max: usize, scope_clips: bool) -> Vec<Command> {
        let n = self.rng.random_range(min..=max);
        let mut out = Vec::new();
        for _ in 0..n {
            match self.rng.random_range(0..8) {
                0 => {
                    out.push(Command::Save);
                    out.push(Command::clip(self.shape()));
                    for _ in 0..self.rng.random_range(1..=2) {
                        let (s, p) = (self.shape(), self.src_over_paint());
                        out.push(Command::draw(s, p));
                    }
                    out.push(Command::Restore);
                }
                1 if scope_clips => out.push(Command::clip(self.shape())),
                _ => {
                    let (s, p) = (self.shape(), self.src_over_paint());
                    out.push(Command::draw(s, p));
                }
            }
        }
        out
    }

    fn wrap(&mut self, paint: Paint, body: Vec<Command>) -> Vec<Command> {
        let mut out = Vec::with_capacity(body.len() + 2);
        out.push(Command::save_layer(paint));
        out.extend(body);
        out.push(Command::Restore);
        out
    }

    fn concat(parts: Vec<Vec<Command>>) -> Vec<Command> {
        parts.into_iter().flatten().collect()
    }

    // Pattern instances.

    fn srcover_layer(&mut self) -> Vec<Command> {
        let paint = self.opaque_layer_paint();
        let body = self.src_over_run(1, 6, true);
        self.wrap(paint, body)
    }

    fn srcover_pattern(&mut self) -> (&'static str, Vec<Command>, Expected) {
        use PassKind::SrcOverSaveLayer as S;
        let before = self.any_draws(3);
        let after = self.any_draws(2);
        match self.rng.random_range(0..4) {
            0 => {
                let layer = self.srcover_layer();
                ("single", Self::concat(vec![before, layer, after]), expect(&[(S, 1)]))
            }
            1 => {
                let outer = self.opaque_layer_paint();
                let pre = self.src_over_run(0, 3, true);
                let inner = self.srcover_layer();
                let post = self.src_over_run(0, 3, true);
                let layer = self.wrap(outer, Self::concat(vec![pre, inner, post]));
                ("nested", Self::concat(vec![before, layer, after]), expect(&[(S, 2)]))
            }
            2 => {
                let (a, b) = (self.srcover_layer(), self.srcover_layer());
                let mid = self.any_draws(2);
                (
                    "siblings",
                    Self::concat(vec![before, a, mid, b, after]),
                    expect(&[(S, 2)]),
                )
            }
            _ => {
                let paint = self.wrapper_paint();
                let pre = self.any_draws(2);
                let layer = self.srcover_layer();
                let body = Self::concat(vec![pre, layer]);
                let wrapped = self.wrap(paint, body);
                (
                    "in-wrapper",
                    Self::concat(vec![before, wrapped, after]),
                    expect(&[(S, 1)]),
                )
            }
        }
    }

    /// `l1` followed by a qualifying mask layer.
    fn dstin_scope(&mut self) -> Vec<Command> {
        let l1 = self.src_over_run(0, 6, false);
        let luma_mask = self.rng.random_bool(0.25);
        let mask_paint = Paint::solid(Color::BLACK, BlendMode::DstIn).with_filter(if luma_mask {
            FilterKind::Luma
        } else {
            FilterKind::Id
        });
        let mut body = Vec::new();
        for _ in 0..self.rng.random_range(0..=2) {
            body.push(Command::clip(self.shape()));
        }
        let color = if luma_mask { Color::WHITE } else { self.opaque_color() };
        body.push(Command::draw(self.shape(), Paint::solid(color, BlendMode::SrcOver)));
        let mask = self.wrap(mask_paint, body);
        Self::concat(vec![l1, mask])
    }

    fn dstin_pattern(&mut self) -> (&'static str, Vec<Command>, Expected) {
        use PassKind::{DstInToClip as D, SrcOverSaveLayer as S};
        match self.rng.random_range(0..3) {
            0 => ("root", self.dstin_scope(), expect(&[(D, 1)])),
            1 => {
                let before = self.any_draws(3);
                let paint = self.wrapper_paint();
                let scope = self.dstin_scope();
                let layer = self.wrap(paint, scope);
                let after = self.any_draws(2);
                (
                    "in-wrapper",
                    Self::concat(vec![before, layer, after]),
                    expect(&[(D, 1)]),
                )
            }
            _ => {
                let before = self.any_draws(3);
                let paint = self.opaque_layer_paint();
                let scope = self.dstin_scope();
                let layer = self.wrap(paint, scope);
                let after = self.any_draws(2);
                (
                    "nested",
                    Self::concat(vec![before, layer, after]),
                    expect(&[(D, 1), (S, 1)]),
                )
            }
        }
    }

    fn luma_block(&mut self, mask_color: Color) -> Vec<Command> {
        let s = self.shape();
        vec![
            Command::save_layer(Paint::solid(Color::BLACK, BlendMode::DstIn)),
            Command::save_layer(Paint::src_over().with_filter(FilterKind::Luma)),
            Command::draw(s, Paint::solid(mask_color, BlendMode::SrcOver)),
            Command::Restore,
            Command::Restore,
        ]
    }

    /// A mask color whose luminance stays visibly below one.
    fn dim_color(&mut self) -> Color {
        let a = self.rng.random_range(4..=20) as f64 / 20.0;
        let r = self.rng.random_range(0..=18) as f64 / 20.0;
        let g = self.rng.random_range(0..=18) as f64 / 20.0;
        let b = self.rng.random_range(0..=18) as f64 / 20.0;
        Color::from_unpremul(a, r, g, b)
    }

    fn luma_pattern(&mut self) -> (&'static str, Vec<Command>, Expected) {
        use PassKind::{DstInToClip as D, SrcOverSaveLayer as S, SubsumeLuma as L};
        match self.rng.random_range(0..4) {
            0 => {
                let before = self.any_draws(3);
                let c = self.dim_color();
                let block = self.luma_block(c);
                let after = self.any_draws(2);
                ("root", Self::concat(vec![before, block, after]), expect(&[(L, 1)]))
            }
            1 => {
                let l1 = self.src_over_run(0, 4, false);
                let block = self.luma_block(Color::WHITE);
                ("white-mask", Self::concat(vec![l1, block]), expect(&[(L, 1), (D, 1)]))
            }
            2 => {
                let before = self.any_draws(3);
                let paint = self.wrapper_paint();
                let pre = self.any_draws(2);
                let c = self.dim_color();
                let block = self.luma_block(c);
                let layer = self.wrap(paint, Self::concat(vec![pre, block]));
                ("in-wrapper", Self::concat(vec![before, layer]), expect(&[(L, 1)]))
            }
            _ => {
                let before = self.any_draws(3);
                let paint = self.opaque_layer_paint();
                let l1 = self.src_over_run(1, 4, false);
                let block = self.luma_block(Color::WHITE);
                let layer = self.wrap(paint, Self::concat(vec![l1, block]));
                (
                    "pinterest",
                    Self::concat(vec![before, layer]),
                    expect(&[(L, 1), (D, 1), (S, 1)]),
                )
            }
        }
    }

    /// Scope-level clips, then the four-record gradient mask pattern.
    fn gradient_block(&mut self, stops_opaque: bool, same_shape: bool) -> Vec<Command> {
        let mut out = Vec::new();
        for _ in 0..self.rng.random_range(0..=2) {
            out.push(Command::clip(self.shape()));
        }
        let s = self.shape();
        let s2 = if same_shape {
            s.clone()
        } else {
            Shape::union(s.clone(), self.circle())
        };
        let lead = self.src_over_paint();
        let g = if stops_opaque {
            self.gradient(true)
        } else {
            self.gradient_with_translucent_stop()
        };
        out.push(Command::draw(s, lead));
        out.push(Command::save_layer(Paint::solid(Color::BLACK, BlendMode::DstIn)));
        out.push(Command::draw(s2, Paint::new(g, FilterKind::Id, BlendMode::SrcOver)));
        out.push(Command::Restore);
        out
    }

    fn gradient_with_translucent_stop(&mut self) -> Fill {
        let mut g = self.gradient(true);
        let stops = match &mut g {
            Fill::LinearGradient { stops, .. } | Fill::RadialGradient { stops, .. } => stops,
            Fill::Solid(_) => unreachable!("gradient() makes gradients"),
        };
        let i = self.rng.random_range(0..stops.len());
        let c = stops[i].color;
        Arc::make_mut(stops)[i].color = Color::premul(0.9, 0.9 * c.r, 0.9 * c.g, 0.9 * c.b);
        g
    }

    fn gradient_pattern(&mut self) -> (&'static str, Vec<Command>, Expected) {
        use PassKind::{GradientMask as G, SrcOverSaveLayer as S};
        match self.rng.random_range(0..3) {
            0 => {
                let block = self.gradient_block(true, true);
                let after = self.any_draws(3);
                ("root", Self::concat(vec![block, after]), expect(&[(G, 1)]))
            }
            1 => {
                let before = self.any_draws(3);
                let paint = self.opaque_layer_paint();
                let block = self.gradient_block(true, true);
                let post = self.src_over_run(0, 3, true);
                let layer = self.wrap(paint, Self::concat(vec![block, post]));
                ("nested", Self::concat(vec![before, layer]), expect(&[(G, 1), (S, 1)]))
            }
            _ => {
                let before = self.any_draws(3);
                let paint = self.wrapper_paint();
                let block = self.gradient_block(true, true);
                let post = self.any_draws(2);
                let layer = self.wrap(paint, Self::concat(vec![block, post]));
                ("in-wrapper", Self::concat(vec![before, layer]), expect(&[(G, 1)]))
            }
        }
    }

    // Near misses: one side condition broken, nothing fires.

    fn srcover_near_miss(&mut self) -> (&'static str, Vec<Command>, Expected) {
        let before = self.any_draws(3);
        let (variant, paint, body) = match self.rng.random_range(0..3) {
            0 => {
                let mut body = self.src_over_run(0, 4, true);
                let at = self.rng.random_range(0..=body.len());
                let (s, c, blend) = (self.shape(), self.any_color(), self.non_src_over());
                body.insert(at, Command::draw(s, Paint::solid(c, blend)));
                let paint = self.opaque_layer_paint();
                ("foreign-blend", paint, body)
            }
            1 => {
                let a = self.rng.random_range(4..=18) as f64 / 20.0;
                let c = self.color_with_alpha(a);
                let body = self.src_over_run(1, 4, true);
                ("translucent-paint", Paint::solid(c, BlendMode::SrcOver), body)
            }
            _ => {
                let body = self.src_over_run(1, 4, true);
                let paint = self.opaque_layer_paint().with_filter(FilterKind::Luma);
                ("filtered-paint", paint, body)
            }
        };
        let layer = self.wrap(paint, body);
        (variant, Self::concat(vec![before, layer]), none_fire())
    }

    fn dstin_near_miss(&mut self) -> (&'static str, Vec<Command>, Expected) {
        let mask = |g: &mut Gen, alpha: f64| {
            let s = g.shape();
            let c = g.color_with_alpha(alpha);
            vec![
                Command::save_layer(Paint::solid(Color::BLACK, BlendMode::DstIn)),
                Command::draw(s, Paint::solid(c, BlendMode::SrcOver)),
                Command::Restore,
            ]
        };
        match self.rng.random_range(0..4) {
            0 => {
                let l1 = self.src_over_run(1, 5, false);
                let a = self.rng.random_range(4..=18) as f64 / 20.0;
                let m = mask(self, a);
                ("translucent-mask", Self::concat(vec![l1, m]), none_fire())
            }
            1 => {
                let mut l1 = self.src_over_run(0, 4, false);
                let at = self.rng.random_range(0..=l1.len());
                let (s, c, blend) = (self.shape(), self.any_color(), self.non_src_over());
                l1.insert(at, Command::draw(s, Paint::solid(c, blend)));
                let m = mask(self, 1.0);
                ("foreign-blend", Self::concat(vec![l1, m]), none_fire())
            }
            2 => {
                let pre = self.src_over_run(0, 3, false);
                let paint = self.wrapper_paint();
                let inner = self.src_over_run(1, 3, false);
                let layer = self.wrap(paint, inner);
                let m = mask(self, 1.0);
                ("layer-in-prefix", Self::concat(vec![pre, layer, m]), none_fire())
            }
            _ => {
                let l1 = self.src_over_run(1, 4, false);
                let m = mask(self, 1.0);
                let (s, p) = (self.shape(), self.src_over_paint());
                (
                    "not-last",
                    Self::concat(vec![l1, m, vec![Command::draw(s, p)]]),
                    none_fire(),
                )
            }
        }
    }

    fn luma_near_miss(&mut self) -> (&'static str, Vec<Command>, Expected) {
        let before = self.any_draws(3);
        let c = self.dim_color();
        let mut block = self.luma_block(c);
        let variant = match self.rng.random_range(0..3) {
            0 => {
                let (s, c2) = (self.shape(), self.dim_color());
                block.insert(3, Command::draw(s, Paint::solid(c2, BlendMode::SrcOver)));
                "two-draws"
            }
            1 => {
                block.insert(1, Command::clip(self.shape()));
                "not-adjacent"
            }
            _ => {
                block[0] = Command::save_layer(Paint::src_over());
                "outer-not-dstin"
            }
        };
        (variant, Self::concat(vec![before, block]), none_fire())
    }

    fn gradient_near_miss(&mut self) -> (&'static str, Vec<Command>, Expected) {
        match self.rng.random_range(0..3) {
            0 => ("translucent-stop", self.gradient_block(false, true), none_fire()),
            1 => ("different-shape", self.gradient_block(true, false), none_fire()),
            _ => {
                let (s, p) = (self.shape(), self.src_over_paint());
                let block = self.gradient_block(true, true);
                (
                    "layer-not-empty",
                    Self::concat(vec![vec![Command::draw(s, p)], block]),
                    none_fire(),
                )
            }
        }
    }

    // Unstructured programs.

    fn random_records(&mut self, depth: usize) -> Vec<Command> {
        let n = self.rng.random_range(1..=if depth == 0 { 12 } else { 5 });
        let mut out = Vec::new();
        for _ in 0..n {
            match self.rng.random_range(0..10) {
                0..=4 => {
                    let (s, p) = (self.shape(), self.any_paint());
                    out.push(Command::draw(s, p));
                }
                5 => out.push(Command::clip(self.shape())),
                6 if depth < 3 => {
                    out.push(Command::Save);
                    out.extend(self.random_records(depth + 1));
                    out.push(Command::Restore);
                }
                7..=9 if depth < 3 => {
                    let paint = self.any_paint();
                    let body = self.random_records(depth + 1);
                    out.extend(self.wrap(paint, body));
                }
                _ => {
                    let (s, p) = (self.shape(), self.any_paint());
                    out.push(Command::draw(s, p));
                }
            }
        }
        out
    }
}

/// Unstructured random programs, for tests that want no pattern bias.
pub fn random_programs(seed: u64, count: usize) -> Vec<Program> {
    generate_corpus(seed, count, &CorpusMix::only(Family::Random))
        .into_iter()
        .map(|c| c.program)
        .collect()
}
