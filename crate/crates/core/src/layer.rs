//! Layer terms and their denotation as images (`Point -> Color`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::color::{BlendMode, Color, Fill, FilterKind, Point};
use crate::shape::{shape_intersect, BoundsRect, Shape};

/// Offset used around shape corners when building adversarial samples.
pub const CORNER_DELTA: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct Paint {
    pub fill: Fill,
    pub filter: FilterKind,
    pub blend: BlendMode,
}

impl Paint {
    pub fn new(fill: Fill, filter: FilterKind, blend: BlendMode) -> Self {
        Paint { fill, filter, blend }
    }

    /// Solid fill, identity filter.
    pub fn solid(color: Color, blend: BlendMode) -> Self {
        Paint::new(Fill::Solid(color), FilterKind::Id, blend)
    }

    /// Opaque black `SrcOver` with identity filter.
    pub fn src_over() -> Self {
        Paint::solid(Color::BLACK, BlendMode::SrcOver)
    }

    pub fn with_filter(mut self, filter: FilterKind) -> Self {
        self.filter = filter;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        self.fill.validate()
    }
}

impl Default for Paint {
    fn default() -> Self {
        Paint::src_over()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LayerTerm {
    Empty,
    DrawShape {
        base: Box<LayerTerm>,
        shape: Shape,
        paint: Paint,
    },
    BlendLayer {
        bottom: Box<LayerTerm>,
        top: Box<LayerTerm>,
        paint: Paint,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum LayerError {
    #[error("clip_all is not defined on BlendLayer terms")]
    BlendLayerInClipAll,
}

impl LayerTerm {
    pub fn draw(base: LayerTerm, shape: Shape, paint: Paint) -> Self {
        LayerTerm::DrawShape {
            base: Box::new(base),
            shape,
            paint,
        }
    }

    pub fn blend(bottom: LayerTerm, top: LayerTerm, paint: Paint) -> Self {
        LayerTerm::BlendLayer {
            bottom: Box::new(bottom),
            top: Box::new(top),
            paint,
        }
    }

    pub fn denote(&self, pt: Point) -> Color {
        denote(self, pt)
    }

    pub fn contains_blend_layer(&self) -> bool {
        match self {
            LayerTerm::Empty => false,
            LayerTerm::DrawShape { base, .. } => base.contains_blend_layer(),
            LayerTerm::BlendLayer { .. } => true,
        }
    }

    /// Every shape mentioned by the term, outermost first.
    pub fn shapes(&self) -> Vec<&Shape> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                LayerTerm::Empty => {}
                LayerTerm::DrawShape { base, shape, .. } => {
                    out.push(shape);
                    stack.push(base);
                }
                LayerTerm::BlendLayer { bottom, top, .. } => {
                    stack.push(top);
                    stack.push(bottom);
                }
            }
        }
        out
    }
}

pub fn denote(term: &LayerTerm, pt: Point) -> Color {
    match term {
        LayerTerm::Empty => Color::TRANSPARENT,
        LayerTerm::BlendLayer { bottom, top, paint } => {
            paint.blend.eval(denote(bottom, pt), paint.filter.eval(denote(top, pt)))
        }
        LayerTerm::DrawShape { base, shape, paint } => {
            let src = if shape.contains(pt) {
                paint.fill.eval(pt)
            } else {
                Color::TRANSPARENT
            };
            // Outside the shape the blend still runs, against Transparent.
            paint.blend.eval(denote(base, pt), paint.filter.eval(src))
        }
    }
}

/// Intersects every draw's shape with `m`. Only defined on BlendLayer-free
/// terms.
pub fn clip_all(term: &LayerTerm, m: &Shape) -> Result<LayerTerm, LayerError> {
    match term {
        LayerTerm::Empty => Ok(LayerTerm::Empty),
        LayerTerm::DrawShape { base, shape, paint } => Ok(LayerTerm::draw(
            clip_all(base, m)?,
            shape_intersect(shape, m),
            paint.clone(),
        )),
        LayerTerm::BlendLayer { .. } => Err(LayerError::BlendLayerInClipAll),
    }
}

/// Points at which two images are compared.
#[derive(Clone, Debug, Default)]
pub struct SampleSet {
    pub points: Vec<Point>,
}

impl SampleSet {
    pub fn new() -> Self {
        SampleSet::default()
    }

    /// Corners of every rect and the axis extremes of every circle, each
    /// perturbed by `{-delta, 0, +delta}` in both coordinates.
    pub fn with_corners<'a>(mut self, shapes: impl IntoIterator<Item = &'a Shape>, delta: f64) -> Self {
        let mut anchors = Vec::new();
        for s in shapes {
            s.for_each_leaf(&mut |leaf| match leaf {
                Shape::Rect {
                    left,
                    top,
                    right,
                    bottom,
                } => {
                    for x in [*left, *right] {
                        for y in [*top, *bottom] {
                            anchors.push(Point::new(x, y));
                        }
                    }
                }
                Shape::Circle { center, radius } => {
                    anchors.push(*center);
                    anchors.push(Point::new(center.x - radius, center.y));
                    anchors.push(Point::new(center.x + radius, center.y));
                    anchors.push(Point::new(center.x, center.y - radius));
                    anchors.push(Point::new(center.x, center.y + radius));
                }
                _ => {}
            });
        }
        for a in anchors {
            for dx in [-delta, 0.0, delta] {
                for dy in [-delta, 0.0, delta] {
                    self.points.push(Point::new(a.x + dx, a.y + dy));
                }
            }
        }
        self
    }

    /// Seeded uniform points inside `area`.
    pub fn with_random(mut self, seed: u64, count: usize, area: BoundsRect) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            let x = area.left + rng.random::<f64>() * (area.right - area.left);
            let y = area.top + rng.random::<f64>() * (area.bottom - area.top);
            self.points.push(Point::new(x, y));
        }
        self
    }

    /// Adversarial corners of both terms plus `count` random points.
    pub fn for_terms(a: &LayerTerm, b: &LayerTerm, seed: u64, count: usize, area: BoundsRect) -> Self {
        SampleSet::new()
            .with_corners(a.shapes().into_iter().chain(b.shapes()), CORNER_DELTA)
            .with_random(seed, count, area)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// The worst disagreement between two terms over a sample set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleMismatch {
    pub point: Point,
    pub delta: f64,
}

/// Largest per-channel disagreement over the samples, if any sample differs
/// by more than `tol`.
pub fn first_mismatch(a: &LayerTerm, b: &LayerTerm, points: &SampleSet, tol: f64) -> Option<SampleMismatch> {
    points.points.iter().find_map(|&pt| {
        let delta = denote(a, pt).max_delta(&denote(b, pt));
        (delta > tol || delta.is_nan()).then_some(SampleMismatch { point: pt, delta })
    })
}

pub fn layer_equiv_sampled(a: &LayerTerm, b: &LayerTerm, points: &SampleSet, tol: f64) -> bool {
    first_mismatch(a, b, points, tol).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;

    const RED: Color = Color::premul(1.0, 1.0, 0.0, 0.0);
    const BLUE: Color = Color::premul(1.0, 0.0, 0.0, 1.0);

    fn area() -> BoundsRect {
        BoundsRect::new(-5.0, -5.0, 40.0, 40.0)
    }

    fn samples(a: &LayerTerm, b: &LayerTerm) -> SampleSet {
        SampleSet::for_terms(a, b, 7, 1000, area())
    }

    #[test]
    fn empty_denotes_transparent() {
        assert_eq!(LayerTerm::Empty.denote(Point::new(3.0, 4.0)), Color::TRANSPARENT);
    }

    #[test]
    fn draw_paints_inside_only() {
        let t = LayerTerm::draw(
            LayerTerm::Empty,
            Shape::rect(0.0, 0.0, 10.0, 10.0),
            Paint::solid(RED, BlendMode::SrcOver),
        );
        assert_eq!(t.denote(Point::new(5.0, 5.0)), RED);
        assert_eq!(t.denote(Point::new(20.0, 20.0)), Color::TRANSPARENT);
    }

    #[test]
    fn multiply_layer_blend_is_black_in_overlap() {
        let red = LayerTerm::draw(
            LayerTerm::Empty,
            Shape::rect(0.0, 0.0, 10.0, 10.0),
            Paint::solid(RED, BlendMode::SrcOver),
        );
        let blue = LayerTerm::draw(
            LayerTerm::Empty,
            Shape::rect(5.0, 5.0, 15.0, 15.0),
            Paint::solid(BLUE, BlendMode::SrcOver),
        );
        let t = LayerTerm::blend(red, blue, Paint::solid(Color::BLACK, BlendMode::Multiply));
        assert_eq!(t.denote(Point::new(7.0, 7.0)), Color::BLACK);
        assert_eq!(t.denote(Point::new(2.0, 2.0)), RED);
        assert_eq!(t.denote(Point::new(12.0, 12.0)), BLUE);
    }

    #[test]
    fn clip_all_examples() {
        let m = Shape::rect(2.0, 2.0, 6.0, 6.0);
        assert_eq!(clip_all(&LayerTerm::Empty, &m), Ok(LayerTerm::Empty));
        let g = Shape::circle(3.0, 3.0, 2.0);
        let one = LayerTerm::draw(LayerTerm::Empty, g, Paint::src_over());
        assert_eq!(clip_all(&one, &Shape::Full), Ok(one.clone()));
        let blended = LayerTerm::blend(LayerTerm::Empty, one, Paint::src_over());
        assert_eq!(clip_all(&blended, &m), Err(LayerError::BlendLayerInClipAll));
    }

    #[test]
    fn clip_all_matches_manual_definition() {
        let m = Shape::rect(3.0, 1.0, 12.0, 9.0);
        let shapes = [
            Shape::rect(0.0, 0.0, 8.0, 8.0),
            Shape::circle(10.0, 5.0, 4.0),
            Shape::rect(5.0, 5.0, 20.0, 7.0),
        ];
        let colors = [RED, BLUE, Color::from_unpremul(0.5, 0.2, 0.8, 0.1)];
        let mut chain = LayerTerm::Empty;
        for (s, c) in shapes.iter().zip(colors) {
            chain = LayerTerm::draw(chain, s.clone(), Paint::solid(c, BlendMode::SrcOver));
        }
        let clipped = clip_all(&chain, &m).unwrap();
        let pts = samples(&chain, &clipped);
        // Manual fold: each draw only paints inside shape and m.
        for &pt in &pts.points {
            let mut expected = Color::TRANSPARENT;
            for (s, c) in shapes.iter().zip(colors) {
                if s.contains(pt) && m.contains(pt) {
                    expected = BlendMode::SrcOver.eval(expected, c);
                }
            }
            assert_eq!(clipped.denote(pt), expected);
        }
    }

    #[test]
    fn equivalence_examples() {
        let g = Shape::rect(1.0, 1.0, 9.0, 9.0);
        let c = Color::from_unpremul(0.6, 0.9, 0.3, 0.2);
        let drawn = LayerTerm::draw(LayerTerm::Empty, g.clone(), Paint::solid(c, BlendMode::SrcOver));
        assert!(layer_equiv_sampled(
            &drawn,
            &drawn.clone(),
            &samples(&drawn, &drawn),
            0.0
        ));

        let wrapped = LayerTerm::blend(LayerTerm::Empty, drawn.clone(), Paint::src_over());
        assert!(layer_equiv_sampled(&drawn, &wrapped, &samples(&drawn, &wrapped), 1e-9));

        // Multiply over a transparent base reduces to the source color, so
        // the two blends only disagree over a non-empty base.
        let empty_mul = LayerTerm::blend(
            LayerTerm::Empty,
            drawn.clone(),
            Paint::solid(Color::BLACK, BlendMode::Multiply),
        );
        assert!(layer_equiv_sampled(
            &wrapped,
            &empty_mul,
            &samples(&wrapped, &empty_mul),
            1e-12
        ));
        let base = LayerTerm::draw(LayerTerm::Empty, g.clone(), Paint::solid(RED, BlendMode::SrcOver));
        let over = LayerTerm::blend(base.clone(), drawn.clone(), Paint::src_over());
        let mul = LayerTerm::blend(base, drawn, Paint::solid(Color::BLACK, BlendMode::Multiply));
        let interior = Point::new(5.0, 5.0);
        assert!(over.denote(interior).max_delta(&mul.denote(interior)) > 0.1);
        assert!(!layer_equiv_sampled(&over, &mul, &samples(&over, &mul), 1e-9));
    }

    #[test]
    fn corners_are_sampled() {
        let s = Shape::rect(1.0, 2.0, 3.0, 4.0);
        let set = SampleSet::new().with_corners([&s], CORNER_DELTA);
        assert_eq!(set.len(), 4 * 9);
        assert!(set.points.contains(&Point::new(3.0 - CORNER_DELTA, 4.0 - CORNER_DELTA)));
    }
}
