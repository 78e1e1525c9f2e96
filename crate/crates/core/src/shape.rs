//! Shapes as point predicates, represented by a small closed geometry term
//! language.

use std::sync::Arc;

use crate::color::Point;

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Half-open: `left <= x < right`, `top <= y < bottom`.
    Rect {
        left: f64,
        top: f64,
        right: f64,
        bottom: f64,
    },
    Circle {
        center: Point,
        radius: f64,
    },
    Intersect(Arc<Shape>, Arc<Shape>),
    Union(Arc<Shape>, Arc<Shape>),
    Full,
    Empty,
}

/// An axis-aligned box, or the whole plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bounds {
    Unbounded,
    Box(BoundsRect),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsRect {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl BoundsRect {
    pub const EMPTY: BoundsRect = BoundsRect {
        left: 0.0,
        top: 0.0,
        right: 0.0,
        bottom: 0.0,
    };

    pub fn new(left: f64, top: f64, right: f64, bottom: f64) -> Self {
        BoundsRect {
            left,
            top,
            right,
            bottom,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.left < self.right && self.top < self.bottom)
    }

    pub fn area(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (self.right - self.left) * (self.bottom - self.top)
        }
    }

    /// Closed containment; bounds are conservative so edges count as inside.
    pub fn contains(&self, pt: Point) -> bool {
        self.left <= pt.x && pt.x <= self.right && self.top <= pt.y && pt.y <= self.bottom
    }

    pub fn intersect(&self, other: &BoundsRect) -> BoundsRect {
        let r = BoundsRect::new(
            self.left.max(other.left),
            self.top.max(other.top),
            self.right.min(other.right),
            self.bottom.min(other.bottom),
        );
        if r.left > r.right || r.top > r.bottom {
            BoundsRect::EMPTY
        } else {
            r
        }
    }

    pub fn hull(&self, other: &BoundsRect) -> BoundsRect {
        BoundsRect::new(
            self.left.min(other.left),
            self.top.min(other.top),
            self.right.max(other.right),
            self.bottom.max(other.bottom),
        )
    }
}

impl Bounds {
    pub fn intersect(self, other: Bounds) -> Bounds {
        match (self, other) {
            (Bounds::Unbounded, b) | (b, Bounds::Unbounded) => b,
            (Bounds::Box(a), Bounds::Box(b)) => Bounds::Box(a.intersect(&b)),
        }
    }

    pub fn hull(self, other: Bounds) -> Bounds {
        match (self, other) {
            (Bounds::Unbounded, _) | (_, Bounds::Unbounded) => Bounds::Unbounded,
            (Bounds::Box(a), Bounds::Box(b)) => Bounds::Box(a.hull(&b)),
        }
    }

    pub fn contains(&self, pt: Point) -> bool {
        match self {
            Bounds::Unbounded => true,
            Bounds::Box(b) => b.contains(pt),
        }
    }

    /// Clamps to a viewport box.
    pub fn within(self, viewport: BoundsRect) -> BoundsRect {
        match self {
            Bounds::Unbounded => viewport,
            Bounds::Box(b) => b.intersect(&viewport),
        }
    }
}

impl Shape {
    pub fn rect(left: f64, top: f64, right: f64, bottom: f64) -> Shape {
        Shape::Rect {
            left,
            top,
            right,
            bottom,
        }
    }

    pub fn circle(cx: f64, cy: f64, radius: f64) -> Shape {
        Shape::Circle {
            center: Point::new(cx, cy),
            radius,
        }
    }

    pub fn intersect_node(lhs: Shape, rhs: Shape) -> Shape {
        Shape::Intersect(Arc::new(lhs), Arc::new(rhs))
    }

    pub fn union(lhs: Shape, rhs: Shape) -> Shape {
        Shape::Union(Arc::new(lhs), Arc::new(rhs))
    }

    pub fn contains(&self, pt: Point) -> bool {
        shape_contains(self, pt)
    }

    pub fn bounds(&self) -> Bounds {
        shape_bounds(self)
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Shape::Rect {
                left,
                top,
                right,
                bottom,
            } => {
                if ![left, top, right, bottom].iter().all(|v| v.is_finite()) {
                    return Err("non-finite rect coordinate".into());
                }
                if left > right || top > bottom {
                    return Err(format!("inverted rect [{left}, {top}, {right}, {bottom}]"));
                }
                Ok(())
            }
            Shape::Circle { center, radius } => {
                if !center.is_finite() || !radius.is_finite() || *radius < 0.0 {
                    return Err(format!("invalid circle radius {radius}"));
                }
                Ok(())
            }
            Shape::Intersect(a, b) | Shape::Union(a, b) => {
                a.validate()?;
                b.validate()
            }
            Shape::Full | Shape::Empty => Ok(()),
        }
    }

    /// Calls `f` on every leaf rect and circle.
    pub fn for_each_leaf(&self, f: &mut impl FnMut(&Shape)) {
        match self {
            Shape::Intersect(a, b) | Shape::Union(a, b) => {
                a.for_each_leaf(f);
                b.for_each_leaf(f);
            }
            Shape::Rect { .. } | Shape::Circle { .. } => f(self),
            Shape::Full | Shape::Empty => {}
        }
    }
}

pub fn shape_contains(s: &Shape, pt: Point) -> bool {
    match s {
        Shape::Rect {
            left,
            top,
            right,
            bottom,
        } => *left <= pt.x && pt.x < *right && *top <= pt.y && pt.y < *bottom,
        Shape::Circle { center, radius } => pt.distance(*center) <= *radius,
        Shape::Intersect(a, b) => shape_contains(a, pt) && shape_contains(b, pt),
        Shape::Union(a, b) => shape_contains(a, pt) || shape_contains(b, pt),
        Shape::Full => true,
        Shape::Empty => false,
    }
}

/// Intersection with unit/absorption simplification and rect folding.
pub fn shape_intersect(a: &Shape, b: &Shape) -> Shape {
    match (a, b) {
        (Shape::Empty, _) | (_, Shape::Empty) => Shape::Empty,
        (Shape::Full, s) | (s, Shape::Full) => s.clone(),
        (
            Shape::Rect {
                left: l1,
                top: t1,
                right: r1,
                bottom: b1,
            },
            Shape::Rect {
                left: l2,
                top: t2,
                right: r2,
                bottom: b2,
            },
        ) => {
            let (l, t, r, b) = (l1.max(*l2), t1.max(*t2), r1.min(*r2), b1.min(*b2));
            if l < r && t < b {
                Shape::rect(l, t, r, b)
            } else {
                Shape::Empty
            }
        }
        _ => Shape::intersect_node(a.clone(), b.clone()),
    }
}

/// Conservative axis-aligned bounds of every member point.
pub fn shape_bounds(s: &Shape) -> Bounds {
    match s {
        Shape::Rect {
            left,
            top,
            right,
            bottom,
        } => Bounds::Box(BoundsRect::new(*left, *top, *right, *bottom)),
        Shape::Circle { center, radius } => Bounds::Box(BoundsRect::new(
            center.x - radius,
            center.y - radius,
            center.x + radius,
            center.y + radius,
        )),
        Shape::Intersect(a, b) => shape_bounds(a).intersect(shape_bounds(b)),
        Shape::Union(a, b) => match (shape_bounds(a), shape_bounds(b)) {
            (Bounds::Box(x), y) if x.is_empty() => y,
            (x, Bounds::Box(y)) if y.is_empty() => x,
            (x, y) => x.hull(y),
        },
        Shape::Full => Bounds::Unbounded,
        Shape::Empty => Bounds::Box(BoundsRect::EMPTY),
    }
}

/// Bottom-up normalization: folds rect intersections, applies unit and
/// absorption laws, and turns zero-area leaves into `Empty`.
pub fn normalize_shape(s: &Shape) -> Shape {
    match s {
        Shape::Rect {
            left,
            top,
            right,
            bottom,
        } => {
            if left < right && top < bottom {
                s.clone()
            } else {
                Shape::Empty
            }
        }
        Shape::Circle { radius, .. } => {
            if *radius > 0.0 {
                s.clone()
            } else {
                Shape::Empty
            }
        }
        Shape::Intersect(a, b) => shape_intersect(&normalize_shape(a), &normalize_shape(b)),
        Shape::Union(a, b) => match (normalize_shape(a), normalize_shape(b)) {
            (Shape::Empty, x) | (x, Shape::Empty) => x,
            (Shape::Full, _) | (_, Shape::Full) => Shape::Full,
            (x, y) => Shape::union(x, y),
        },
        Shape::Full | Shape::Empty => s.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape() -> impl Strategy<Value = Shape> {
        let leaf = prop_oneof![
            (0.0..20.0f64, 0.0..20.0f64, 0.0..10.0f64, 0.0..10.0f64).prop_map(|(l, t, w, h)| Shape::rect(
                l,
                t,
                l + w,
                t + h
            )),
            (0.0..20.0f64, 0.0..20.0f64, 0.0..8.0f64).prop_map(|(x, y, r)| Shape::circle(x, y, r)),
            Just(Shape::Full),
            Just(Shape::Empty),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Shape::intersect_node(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Shape::union(a, b)),
            ]
        })
    }

    fn point() -> impl Strategy<Value = Point> {
        (-2.0..32.0f64, -2.0..32.0f64).prop_map(|(x, y)| Point::new(x, y))
    }

    #[test]
    fn half_open_rect() {
        let r = Shape::rect(0.0, 0.0, 10.0, 10.0);
        assert!(r.contains(Point::new(0.0, 0.0)));
        assert!(!r.contains(Point::new(10.0, 10.0)));
        assert!(!r.contains(Point::new(10.0, 5.0)));
    }

    #[test]
    fn boolean_nodes() {
        let i = Shape::intersect_node(Shape::rect(0.0, 0.0, 10.0, 10.0), Shape::rect(5.0, 5.0, 15.0, 15.0));
        assert!(i.contains(Point::new(7.0, 7.0)));
        assert!(!i.contains(Point::new(2.0, 2.0)));
        let u = Shape::union(Shape::Empty, Shape::Full);
        assert!(u.contains(Point::new(-1e9, 3.5)));
    }

    #[test]
    fn intersect_simplifies() {
        let s = Shape::circle(1.0, 2.0, 3.0);
        assert_eq!(shape_intersect(&Shape::Full, &s), s);
        assert_eq!(shape_intersect(&s, &Shape::Full), s);
        assert_eq!(shape_intersect(&Shape::Empty, &s), Shape::Empty);
        let a = Shape::rect(0.0, 0.0, 10.0, 10.0);
        let b = Shape::rect(5.0, 5.0, 15.0, 15.0);
        let folded = shape_intersect(&a, &b);
        assert_eq!(folded, Shape::rect(5.0, 5.0, 10.0, 10.0));
        // Pointwise agreement on a quarter-pixel grid.
        for i in 0..80 {
            for j in 0..80 {
                let pt = Point::new(i as f64 * 0.25, j as f64 * 0.25);
                assert_eq!(folded.contains(pt), a.contains(pt) && b.contains(pt));
            }
        }
        assert_eq!(
            shape_intersect(&Shape::rect(0.0, 0.0, 4.0, 4.0), &Shape::rect(6.0, 6.0, 8.0, 8.0)),
            Shape::Empty
        );
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(
            shape_bounds(&Shape::rect(1.0, 2.0, 3.0, 4.0)),
            Bounds::Box(BoundsRect::new(1.0, 2.0, 3.0, 4.0))
        );
        assert_eq!(
            shape_bounds(&Shape::circle(5.0, 5.0, 2.0)),
            Bounds::Box(BoundsRect::new(3.0, 3.0, 7.0, 7.0))
        );
        let u = Shape::union(Shape::rect(0.0, 0.0, 1.0, 1.0), Shape::rect(9.0, 9.0, 10.0, 10.0));
        assert_eq!(shape_bounds(&u), Bounds::Box(BoundsRect::new(0.0, 0.0, 10.0, 10.0)));
        assert_eq!(shape_bounds(&Shape::Full), Bounds::Unbounded);
    }

    #[test]
    fn normalize_drops_degenerate_leaves() {
        assert_eq!(normalize_shape(&Shape::rect(1.0, 1.0, 1.0, 5.0)), Shape::Empty);
        assert_eq!(normalize_shape(&Shape::circle(1.0, 1.0, 0.0)), Shape::Empty);
        let s = Shape::union(Shape::rect(0.0, 0.0, 0.0, 0.0), Shape::circle(0.0, 0.0, 1.0));
        assert_eq!(normalize_shape(&s), Shape::circle(0.0, 0.0, 1.0));
    }

    proptest! {
        #[test]
        fn intersect_is_pointwise_and(a in shape(), b in shape(), pts in prop::collection::vec(point(), 64)) {
            let i = shape_intersect(&a, &b);
            for pt in pts {
                prop_assert_eq!(i.contains(pt), a.contains(pt) && b.contains(pt));
            }
        }

        #[test]
        fn bounds_are_sound(s in shape(), pts in prop::collection::vec(point(), 64)) {
            let bounds = s.bounds();
            for pt in pts {
                if s.contains(pt) {
                    prop_assert!(bounds.contains(pt));
                }
            }
        }

        #[test]
        fn normalize_is_idempotent(s in shape()) {
            let once = normalize_shape(&s);
            prop_assert_eq!(normalize_shape(&once), once);
        }
    }
}
