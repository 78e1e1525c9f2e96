//! The abstract model: points, premultiplied colors, fills, blends and filters.
//!
//! Colors are real-valued (`f64`) premultiplied ARGB. All evaluation functions
//! are total on valid inputs and keep their results inside the premultiplied
//! bounds `0 <= a <= 1`, `0 <= r, g, b <= a`.

use std::fmt;
use std::sync::Arc;

/// Alpha at or above `1 - OPAQUE_EPSILON` counts as opaque.
pub const OPAQUE_EPSILON: f64 = 1e-6;

/// Rec.709 luminance weights.
pub const LUMA_R: f64 = 0.2126;
pub const LUMA_G: f64 = 0.7152;
pub const LUMA_B: f64 = 0.0722;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A premultiplied ARGB color.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Color {
    pub a: f64,
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl Color {
    pub const TRANSPARENT: Color = Color::premul(0.0, 0.0, 0.0, 0.0);
    pub const BLACK: Color = Color::premul(1.0, 0.0, 0.0, 0.0);
    pub const WHITE: Color = Color::premul(1.0, 1.0, 1.0, 1.0);

    /// Builds a color from already-premultiplied components without checking.
    pub const fn premul(a: f64, r: f64, g: f64, b: f64) -> Self {
        Color { a, r, g, b }
    }

    /// Premultiplies straight-alpha components.
    pub fn from_unpremul(a: f64, r: f64, g: f64, b: f64) -> Self {
        Color {
            a,
            r: r * a,
            g: g * a,
            b: b * a,
        }
    }

    /// Straight-alpha components `(a, r, g, b)`. Fully transparent colors map
    /// to all zeros.
    ///
    /// Each channel is chosen so that premultiplying it again reproduces the
    /// stored value bit for bit whenever such a float exists within a few
    /// ulps, which keeps serialization round trips exact.
    pub fn to_unpremul(&self) -> (f64, f64, f64, f64) {
        if self.a <= 0.0 {
            return (0.0, 0.0, 0.0, 0.0);
        }
        let a = self.a;
        let channel = |c: f64| unpremul_channel(c, a);
        (a, channel(self.r), channel(self.g), channel(self.b))
    }

    pub fn channels(&self) -> [f64; 4] {
        [self.a, self.r, self.g, self.b]
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Checks the premultiplied bounds, describing the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let Color { a, r, g, b } = *self;
        if !(a.is_finite() && r.is_finite() && g.is_finite() && b.is_finite()) {
            return Err(format!("non-finite channel in {self}"));
        }
        if !(0.0..=1.0).contains(&a) {
            return Err(format!("alpha {a} outside [0, 1]"));
        }
        for (name, c) in [("red", r), ("green", g), ("blue", b)] {
            if c < 0.0 || c > a {
                return Err(format!("{name} {c} outside [0, alpha = {a}]"));
            }
        }
        Ok(())
    }

    pub fn is_opaque(&self) -> bool {
        self.a >= 1.0 - OPAQUE_EPSILON
    }

    /// Largest absolute per-channel difference.
    pub fn max_delta(&self, other: &Color) -> f64 {
        self.channels()
            .iter()
            .zip(other.channels())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn lerp(&self, other: &Color, t: f64) -> Color {
        let mix = |x: f64, y: f64| x + (y - x) * t;
        Color {
            a: mix(self.a, other.a),
            r: mix(self.r, other.r),
            g: mix(self.g, other.g),
            b: mix(self.b, other.b),
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a={}, r={}, g={}, b={})", self.a, self.r, self.g, self.b)
    }
}

fn unpremul_channel(c: f64, a: f64) -> f64 {
    let guess = (c / a).clamp(0.0, 1.0);
    if guess * a == c {
        return guess;
    }
    let mut down = guess;
    let mut up = guess;
    for _ in 0..8 {
        down = down.next_down();
        up = up.next_up();
        if (0.0..=1.0).contains(&up) && up * a == c {
            return up;
        }
        if (0.0..=1.0).contains(&down) && down * a == c {
            return down;
        }
    }
    guess
}

/// Porter-Duff / separable blend modes, applied as `blend(dst, src)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlendMode {
    SrcOver,
    DstIn,
    Multiply,
    SrcOut,
}

impl BlendMode {
    pub const ALL: [BlendMode; 4] = [
        BlendMode::SrcOver,
        BlendMode::DstIn,
        BlendMode::Multiply,
        BlendMode::SrcOut,
    ];

    pub fn eval(self, dst: Color, src: Color) -> Color {
        blend_eval(self, dst, src)
    }
}

/// Color filters applied to a source color before blending.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Id,
    Luma,
}

impl FilterKind {
    pub fn eval(self, c: Color) -> Color {
        filter_eval(self, c)
    }
}

/// Blends `src` onto `dst`. Argument order is destination (bottom) first.
pub fn blend_eval(mode: BlendMode, dst: Color, src: Color) -> Color {
    match mode {
        BlendMode::SrcOver => {
            let k = 1.0 - src.a;
            Color {
                a: src.a + dst.a * k,
                r: src.r + dst.r * k,
                g: src.g + dst.g * k,
                b: src.b + dst.b * k,
            }
        }
        BlendMode::DstIn => Color {
            a: dst.a * src.a,
            r: dst.r * src.a,
            g: dst.g * src.a,
            b: dst.b * src.a,
        },
        BlendMode::SrcOut => {
            let k = 1.0 - dst.a;
            Color {
                a: src.a * k,
                r: src.r * k,
                g: src.g * k,
                b: src.b * k,
            }
        }
        BlendMode::Multiply => {
            let ks = 1.0 - src.a;
            let kd = 1.0 - dst.a;
            let mul = |s: f64, d: f64| s * d + s * kd + d * ks;
            Color {
                a: src.a + dst.a * ks,
                r: mul(src.r, dst.r),
                g: mul(src.g, dst.g),
                b: mul(src.b, dst.b),
            }
        }
    }
}

pub fn filter_eval(kind: FilterKind, c: Color) -> Color {
    match kind {
        FilterKind::Id => c,
        // Luminance of the premultiplied channels moves into alpha. Clamped
        // because the weights sum to one only up to rounding.
        FilterKind::Luma => {
            let y = (LUMA_R * c.r + LUMA_G * c.g + LUMA_B * c.b).clamp(0.0, 1.0);
            Color::premul(y, 0.0, 0.0, 0.0)
        }
    }
}

pub fn is_opaque(c: Color) -> bool {
    c.is_opaque()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientStop {
    pub offset: f64,
    pub color: Color,
}

impl GradientStop {
    pub const fn new(offset: f64, color: Color) -> Self {
        GradientStop { offset, color }
    }
}

/// A fill image: what color a draw paints at each point.
#[derive(Clone, Debug, PartialEq)]
pub enum Fill {
    Solid(Color),
    LinearGradient {
        p0: Point,
        p1: Point,
        stops: Arc<[GradientStop]>,
    },
    RadialGradient {
        center: Point,
        radius: f64,
        stops: Arc<[GradientStop]>,
    },
}

impl Fill {
    pub fn solid(c: Color) -> Self {
        Fill::Solid(c)
    }

    pub fn eval(&self, pt: Point) -> Color {
        fill_eval(self, pt)
    }

    pub fn is_gradient(&self) -> bool {
        !matches!(self, Fill::Solid(_))
    }

    pub fn stops(&self) -> &[GradientStop] {
        match self {
            Fill::Solid(_) => &[],
            Fill::LinearGradient { stops, .. } | Fill::RadialGradient { stops, .. } => stops,
        }
    }

    /// `true` when every color this fill can produce is opaque.
    pub fn is_opaque(&self) -> bool {
        match self {
            Fill::Solid(c) => c.is_opaque(),
            _ => gradient_all_stops_opaque(self),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Fill::Solid(c) => c.validate(),
            Fill::LinearGradient { p0, p1, stops } => {
                if !p0.is_finite() || !p1.is_finite() {
                    return Err("non-finite gradient endpoint".into());
                }
                if p0 == p1 {
                    return Err("linear gradient endpoints coincide".into());
                }
                validate_stops(stops)
            }
            Fill::RadialGradient { center, radius, stops } => {
                if !center.is_finite() {
                    return Err("non-finite gradient center".into());
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(format!("radial gradient radius {radius} must be positive"));
                }
                validate_stops(stops)
            }
        }
    }
}

fn validate_stops(stops: &[GradientStop]) -> Result<(), String> {
    let (first, last) = match (stops.first(), stops.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err("gradient has no stops".into()),
    };
    if first.offset != 0.0 || last.offset != 1.0 {
        return Err("gradient stops must span offsets 0 to 1".into());
    }
    let mut prev = 0.0;
    for (i, stop) in stops.iter().enumerate() {
        if !stop.offset.is_finite() || stop.offset < prev || stop.offset > 1.0 {
            return Err(format!("stop {i} offset {} out of order", stop.offset));
        }
        prev = stop.offset;
        stop.color.validate().map_err(|e| format!("stop {i}: {e}"))?;
    }
    Ok(())
}

/// Evaluates a fill at a point. Gradients interpolate premultiplied stop
/// colors linearly and clamp to the edge stops.
pub fn fill_eval(img: &Fill, pt: Point) -> Color {
    match img {
        Fill::Solid(c) => *c,
        Fill::LinearGradient { p0, p1, stops } => {
            let dx = p1.x - p0.x;
            let dy = p1.y - p0.y;
            let len2 = dx * dx + dy * dy;
            let t = ((pt.x - p0.x) * dx + (pt.y - p0.y) * dy) / len2;
            sample_stops(stops, t)
        }
        Fill::RadialGradient { center, radius, stops } => sample_stops(stops, pt.distance(*center) / radius),
    }
}

fn sample_stops(stops: &[GradientStop], t: f64) -> Color {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let Some(first) = stops.first() else {
        return Color::TRANSPARENT;
    };
    if t <= first.offset {
        return first.color;
    }
    for pair in stops.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        if t <= hi.offset {
            let span = hi.offset - lo.offset;
            if span <= 0.0 {
                return hi.color;
            }
            return lo.color.lerp(&hi.color, (t - lo.offset) / span);
        }
    }
    stops[stops.len() - 1].color
}

/// `true` when every stop is opaque; for a solid fill, whether its color is.
pub fn gradient_all_stops_opaque(img: &Fill) -> bool {
    match img {
        Fill::Solid(c) => c.is_opaque(),
        _ => img.stops().iter().all(|s| s.color.is_opaque()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const RED: Color = Color::premul(1.0, 1.0, 0.0, 0.0);
    const BLUE: Color = Color::premul(1.0, 0.0, 0.0, 1.0);

    fn color() -> impl Strategy<Value = Color> {
        (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64)
            .prop_map(|(a, r, g, b)| Color::from_unpremul(a, r, g, b))
    }

    fn close(x: Color, y: Color, tol: f64) -> bool {
        x.max_delta(&y) <= tol
    }

    #[test]
    fn srcover_transparent_source_is_identity() {
        let c = Color::from_unpremul(0.4, 0.2, 0.9, 0.5);
        assert_eq!(blend_eval(BlendMode::SrcOver, c, Color::TRANSPARENT), c);
        assert_eq!(blend_eval(BlendMode::SrcOver, Color::TRANSPARENT, c), c);
    }

    #[test]
    fn multiply_red_blue_is_black() {
        assert_eq!(blend_eval(BlendMode::Multiply, RED, BLUE), Color::BLACK);
    }

    #[test]
    fn dstin_with_opaque_source_keeps_destination() {
        let c = Color::from_unpremul(0.3, 0.5, 0.25, 1.0);
        assert_eq!(blend_eval(BlendMode::DstIn, c, BLUE), c);
        assert_eq!(blend_eval(BlendMode::DstIn, c, Color::TRANSPARENT), Color::TRANSPARENT);
    }

    #[test]
    fn luma_examples() {
        assert_eq!(filter_eval(FilterKind::Id, RED), RED);
        let white = filter_eval(FilterKind::Luma, Color::WHITE);
        assert!((white.a - 1.0).abs() < 1e-15);
        assert_eq!((white.r, white.g, white.b), (0.0, 0.0, 0.0));
        assert_eq!(filter_eval(FilterKind::Luma, Color::TRANSPARENT), Color::TRANSPARENT);
    }

    fn black_to_white() -> Fill {
        Fill::LinearGradient {
            p0: Point::new(0.0, 0.0),
            p1: Point::new(10.0, 0.0),
            stops: vec![
                GradientStop::new(0.0, Color::BLACK),
                GradientStop::new(1.0, Color::WHITE),
            ]
            .into(),
        }
    }

    #[test]
    fn linear_gradient_midpoint_and_clamp() {
        let g = black_to_white();
        assert_eq!(fill_eval(&g, Point::new(5.0, 0.0)), Color::premul(1.0, 0.5, 0.5, 0.5));
        // Projection of (-3, 7) onto the x axis is -3, clamped to offset 0.
        let projected = -3.0 / 10.0;
        assert!(projected < 0.0);
        assert_eq!(fill_eval(&g, Point::new(-3.0, 7.0)), Color::BLACK);
        assert_eq!(fill_eval(&g, Point::new(42.0, -1.0)), Color::WHITE);
    }

    #[test]
    fn radial_gradient_clamps_outside_radius() {
        let g = Fill::RadialGradient {
            center: Point::new(0.0, 0.0),
            radius: 2.0,
            stops: vec![
                GradientStop::new(0.0, Color::WHITE),
                GradientStop::new(1.0, Color::BLACK),
            ]
            .into(),
        };
        assert_eq!(fill_eval(&g, Point::new(0.0, 0.0)), Color::WHITE);
        assert_eq!(fill_eval(&g, Point::new(1.0, 0.0)), Color::premul(1.0, 0.5, 0.5, 0.5));
        assert_eq!(fill_eval(&g, Point::new(5.0, 5.0)), Color::BLACK);
    }

    #[test]
    fn opacity_thresholds() {
        assert!(is_opaque(Color::BLACK));
        assert!(!is_opaque(Color::premul(0.5, 0.5, 0.0, 0.0)));
        let stops = [1.0, 1.0, 0.996]
            .iter()
            .enumerate()
            .map(|(i, &a)| GradientStop::new(i as f64 / 2.0, Color::premul(a, 0.0, 0.0, 0.0)))
            .collect();
        let g = Fill::LinearGradient {
            p0: Point::new(0.0, 0.0),
            p1: Point::new(1.0, 0.0),
            stops,
        };
        assert!(!gradient_all_stops_opaque(&g));
        assert!(gradient_all_stops_opaque(&black_to_white()));
        assert!(gradient_all_stops_opaque(&Fill::Solid(RED)));
        assert!(!gradient_all_stops_opaque(&Fill::Solid(Color::TRANSPARENT)));
    }

    #[test]
    fn unpremul_round_trips_exactly() {
        for &(a, r) in &[(0.3, 0.7), (0.1, 0.9), (0.77, 0.123456789), (1.0, 0.5)] {
            let c = Color::from_unpremul(a, r, r / 2.0, 1.0);
            let (a2, r2, g2, b2) = c.to_unpremul();
            assert_eq!(Color::from_unpremul(a2, r2, g2, b2), c);
        }
    }

    #[test]
    fn validate_rejects_out_of_bounds() {
        assert!(Color::premul(0.5, 0.6, 0.0, 0.0).validate().is_err());
        assert!(Color::premul(1.1, 0.0, 0.0, 0.0).validate().is_err());
        assert!(Color::premul(f64::NAN, 0.0, 0.0, 0.0).validate().is_err());
    }

    proptest! {
        #[test]
        fn blends_and_filters_stay_valid(d in color(), s in color()) {
            for mode in BlendMode::ALL {
                let out = blend_eval(mode, d, s);
                // Rounding can push a channel past alpha by an ulp or so.
                let clamped = Color::premul(
                    out.a,
                    out.r.min(out.a),
                    out.g.min(out.a),
                    out.b.min(out.a),
                );
                prop_assert!(clamped.is_valid(), "{mode:?} {out}");
                prop_assert!(out.max_delta(&clamped) <= 1e-12);
            }
            prop_assert!(filter_eval(FilterKind::Luma, s).is_valid());
        }

        #[test]
        fn srcover_is_associative(a in color(), b in color(), c in color()) {
            let lhs = blend_eval(BlendMode::SrcOver, a, blend_eval(BlendMode::SrcOver, b, c));
            let rhs = blend_eval(BlendMode::SrcOver, blend_eval(BlendMode::SrcOver, a, b), c);
            prop_assert!(close(lhs, rhs, 1e-9));
        }

        #[test]
        fn opaque_source_overrides(d in color(), s in color()) {
            let s = Color::premul(1.0, s.r / s.a.max(1e-300), s.g / s.a.max(1e-300), s.b / s.a.max(1e-300));
            prop_assume!(s.is_valid());
            prop_assert_eq!(blend_eval(BlendMode::SrcOver, d, s), s);
        }

        #[test]
        fn luma_commutes_over_transparent_base(c in color()) {
            let lhs = filter_eval(FilterKind::Luma, blend_eval(BlendMode::SrcOver, Color::TRANSPARENT, c));
            let rhs = blend_eval(BlendMode::SrcOver, Color::TRANSPARENT, filter_eval(FilterKind::Luma, c));
            prop_assert!(close(lhs, rhs, 1e-12));
        }
    }
}
