//! Static cost model used to compare programs before and after rewriting.

use serde::Serialize;

use crate::command::{Command, Program};
use crate::shape::{Bounds, BoundsRect};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CostMetrics {
    pub records: usize,
    pub savelayer_count: usize,
    pub save_count: usize,
    pub draw_count: usize,
    pub clip_count: usize,
    /// Pixels touched by draws (bounds clipped to the current clip and the
    /// viewport) plus two full-viewport passes per layer: allocate/clear and
    /// composite back.
    pub est_pixel_ops: f64,
}

pub fn cost_metrics(p: &Program, width: u32, height: u32) -> CostMetrics {
    let viewport = BoundsRect::new(0.0, 0.0, width as f64, height as f64);
    let layer_cost = 2.0 * viewport.area();
    let mut m = CostMetrics::default();
    let mut clip = Bounds::Unbounded;
    let mut saved: Vec<Bounds> = Vec::new();
    for cmd in &p.records {
        match cmd {
            Command::NoOp => continue,
            Command::Draw { shape, .. } => {
                m.draw_count += 1;
                m.est_pixel_ops += shape.bounds().intersect(clip).within(viewport).area();
            }
            Command::Clip { shape } => {
                m.clip_count += 1;
                clip = clip.intersect(shape.bounds());
            }
            Command::Save => {
                m.save_count += 1;
                saved.push(clip);
            }
            Command::SaveLayer { .. } => {
                m.savelayer_count += 1;
                m.est_pixel_ops += layer_cost;
                saved.push(clip);
            }
            Command::Restore => {
                clip = saved.pop().unwrap_or(Bounds::Unbounded);
            }
        }
        m.records += 1;
    }
    m
}

/// Ratio of estimated pixel work before and after a rewrite. A rewrite can
/// remove every pixel op, so the denominator is floored at one op; two empty
/// programs compare as equal.
pub fn speedup(before: &CostMetrics, after: &CostMetrics) -> f64 {
    if before.est_pixel_ops == 0.0 && after.est_pixel_ops == 0.0 {
        1.0
    } else {
        before.est_pixel_ops / after.est_pixel_ops.max(1.0)
    }
}
