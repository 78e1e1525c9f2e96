//! Second implementation of the rewrite patterns and their side conditions.
//!
//! Nothing here is shared with the optimizer's matchers. Sites are located
//! directly from a claimed anchor index using bracket partners instead of a
//! streaming state machine, and side conditions are checked separately from
//! the structural match so a rewrite can also be forced onto a site that
//! violates them.

use crate::color::{filter_eval, gradient_all_stops_opaque, is_opaque, BlendMode, Fill, FilterKind};
use crate::command::{bracket_partners, Command, Program};
use crate::layer::Paint;
use crate::optimizer::{Edit, PassKind};

/// A structurally matched rewrite site.
#[derive(Clone, Debug, PartialEq)]
pub enum Site {
    SrcOver {
        layer: usize,
        restore: usize,
    },
    DstIn {
        layer: usize,
        clips: Vec<usize>,
        draw: usize,
        restore: usize,
        /// First record inside the enclosing layer (0 at top level).
        scope_start: usize,
        /// The enclosing layer's Restore, or the program length.
        scope_end: usize,
    },
    Luma {
        outer: usize,
        inner: usize,
        draws: Vec<usize>,
        inner_restore: usize,
        outer_restore: usize,
    },
    Gradient {
        lead: usize,
        layer: usize,
        draw: usize,
        restore: usize,
    },
}

/// The result of rewriting a program at a set of sites, before compaction.
#[derive(Clone, Debug, PartialEq)]
pub struct Rewritten {
    pub program: Program,
    pub edits: Vec<Edit>,
    pub inserted: Vec<(usize, Command)>,
}

fn draw_at(p: &Program, i: usize) -> Option<(&crate::shape::Shape, &Paint)> {
    match p.records.get(i) {
        Some(Command::Draw { shape, paint }) => Some((shape, paint)),
        _ => None,
    }
}

fn layer_at(p: &Program, i: usize) -> Option<&Paint> {
    match p.records.get(i) {
        Some(Command::SaveLayer { paint }) => Some(paint),
        _ => None,
    }
}

/// Innermost `SaveLayer` that strictly encloses `index`, if any.
fn enclosing_layer(p: &Program, partners: &[Option<usize>], index: usize) -> Option<usize> {
    (0..index)
        .rev()
        .find(|&j| matches!(p.records[j], Command::SaveLayer { .. }) && partners[j].is_some_and(|close| close > index))
}

/// Matches the record shape of `kind` at `anchor`, ignoring side conditions.
pub fn locate(kind: PassKind, p: &Program, anchor: usize) -> Result<Site, String> {
    let partners = bracket_partners(p);
    let partner = |i: usize| partners.get(i).copied().flatten();
    match kind {
        PassKind::SrcOverSaveLayer => {
            layer_at(p, anchor).ok_or(format!("record {anchor} is not a SaveLayer"))?;
            let restore = partner(anchor).ok_or("layer is never closed")?;
            Ok(Site::SrcOver { layer: anchor, restore })
        }
        PassKind::DstInToClip => {
            layer_at(p, anchor).ok_or(format!("record {anchor} is not a SaveLayer"))?;
            let restore = partner(anchor).ok_or("mask layer is never closed")?;
            let mut clips = Vec::new();
            let mut draw = None;
            for i in anchor + 1..restore {
                match (&p.records[i], draw) {
                    (Command::Clip { .. }, None) => clips.push(i),
                    (Command::Draw { .. }, None) => draw = Some(i),
                    (Command::NoOp, _) => {}
                    (other, _) => return Err(format!("mask body holds a {} at {i}", other.kind())),
                }
            }
            let draw = draw.ok_or("mask body has no draw")?;
            let (scope_start, scope_end) = match enclosing_layer(p, &partners, anchor) {
                Some(e) => (e + 1, partner(e).expect("enclosing layer is closed")),
                None => (0, p.len()),
            };
            Ok(Site::DstIn {
                layer: anchor,
                clips,
                draw,
                restore,
                scope_start,
                scope_end,
            })
        }
        PassKind::SubsumeLuma => {
            layer_at(p, anchor).ok_or(format!("record {anchor} is not a SaveLayer"))?;
            let inner = anchor + 1;
            layer_at(p, inner).ok_or(format!("record {inner} is not a SaveLayer"))?;
            let inner_restore = partner(inner).ok_or("inner layer is never closed")?;
            let outer_restore = partner(anchor).ok_or("outer layer is never closed")?;
            let draws: Vec<usize> = (inner + 1..inner_restore)
                .filter(|&i| draw_at(p, i).is_some())
                .collect();
            if draws.is_empty() {
                return Err("inner layer has no draw".into());
            }
            for &d in &draws {
                let (_, paint) = draw_at(p, d).expect("filtered to draws");
                if !matches!(paint.fill, Fill::Solid(_)) {
                    return Err(format!("draw {d} is not a solid fill"));
                }
            }
            Ok(Site::Luma {
                outer: anchor,
                inner,
                draws,
                inner_restore,
                outer_restore,
            })
        }
        PassKind::GradientMask => {
            draw_at(p, anchor).ok_or(format!("record {anchor} is not a Draw"))?;
            layer_at(p, anchor + 1).ok_or(format!("record {} is not a SaveLayer", anchor + 1))?;
            draw_at(p, anchor + 2).ok_or(format!("record {} is not a Draw", anchor + 2))?;
            if partner(anchor + 1) != Some(anchor + 3) {
                return Err("mask layer does not close right after its draw".into());
            }
            Ok(Site::Gradient {
                lead: anchor,
                layer: anchor + 1,
                draw: anchor + 2,
                restore: anchor + 3,
            })
        }
    }
}

/// Checks the conditions under which rewriting `site` preserves the image.
pub fn side_conditions(p: &Program, site: &Site) -> Result<(), String> {
    let r = &p.records;
    match site {
        Site::SrcOver { layer, restore } => {
            let paint = layer_at(p, *layer).expect("located");
            if paint.blend != BlendMode::SrcOver {
                return Err(format!("layer blend is {:?}", paint.blend));
            }
            if paint.filter != FilterKind::Id {
                return Err("layer has a color filter".into());
            }
            if !paint.fill.is_opaque() {
                return Err("layer paint is not opaque".into());
            }
            for (i, cmd) in r.iter().enumerate().take(*restore).skip(layer + 1) {
                match cmd {
                    Command::SaveLayer { .. } => return Err(format!("nested layer at {i}")),
                    Command::Draw { paint, .. } if paint.blend != BlendMode::SrcOver => {
                        return Err(format!("draw {i} blends with {:?}", paint.blend));
                    }
                    _ => {}
                }
            }
            Ok(())
        }
        Site::DstIn {
            layer,
            draw,
            restore,
            scope_start,
            scope_end,
            ..
        } => {
            let p1 = layer_at(p, *layer).expect("located");
            if p1.blend != BlendMode::DstIn {
                return Err(format!("mask layer blend is {:?}", p1.blend));
            }
            let (_, p2) = draw_at(p, *draw).expect("located");
            let Fill::Solid(c2) = p2.fill else {
                return Err("mask fill is not solid".into());
            };
            if p2.blend != BlendMode::SrcOver {
                return Err(format!("mask draw blends with {:?}", p2.blend));
            }
            let composite = filter_eval(p1.filter, filter_eval(p2.filter, c2));
            if !is_opaque(composite) {
                return Err(format!("mask color alpha {} after filters", composite.a));
            }
            if let Some(i) = (restore + 1..*scope_end).find(|&i| !r[i].is_noop()) {
                return Err(format!("record {i} follows the mask in its scope"));
            }
            let mut depth = 0usize;
            for (i, cmd) in r.iter().enumerate().take(*layer).skip(*scope_start) {
                match cmd {
                    Command::SaveLayer { .. } => return Err(format!("layer at {i} before the mask")),
                    Command::Save => depth += 1,
                    Command::Restore => depth = depth.saturating_sub(1),
                    Command::Clip { .. } if depth == 0 => {
                        return Err(format!("clip {i} would also clip the mask"));
                    }
                    Command::Draw { paint, .. } if paint.blend != BlendMode::SrcOver => {
                        return Err(format!("draw {i} blends with {:?}", paint.blend));
                    }
                    _ => {}
                }
            }
            Ok(())
        }
        Site::Luma {
            outer,
            inner,
            draws,
            inner_restore,
            outer_restore,
        } => {
            let po = layer_at(p, *outer).expect("located");
            let pi = layer_at(p, *inner).expect("located");
            if po.blend != BlendMode::DstIn {
                return Err(format!("outer layer blend is {:?}", po.blend));
            }
            if pi.filter != FilterKind::Luma || pi.blend != BlendMode::SrcOver {
                return Err("inner layer is not a SrcOver luma layer".into());
            }
            if draws.len() != 1 {
                return Err(format!("inner layer holds {} draws", draws.len()));
            }
            let d = draws[0];
            if d != inner + 1 || *inner_restore != d + 1 || *outer_restore != d + 2 {
                return Err("records are not adjacent".into());
            }
            let (_, paint) = draw_at(p, d).expect("located");
            if paint.blend != BlendMode::SrcOver || paint.filter != FilterKind::Id {
                return Err("mask draw is not a plain SrcOver draw".into());
            }
            Ok(())
        }
        Site::Gradient { lead, layer, draw, .. } => {
            let (s1, p1) = draw_at(p, *lead).expect("located");
            let pl = layer_at(p, *layer).expect("located");
            let (s2, p2) = draw_at(p, *draw).expect("located");
            if p1.blend != BlendMode::SrcOver {
                return Err(format!("leading draw blends with {:?}", p1.blend));
            }
            if pl.blend != BlendMode::DstIn || pl.filter != FilterKind::Id {
                return Err("mask layer is not an unfiltered DstIn layer".into());
            }
            if !p2.fill.is_gradient() || p2.blend != BlendMode::SrcOver || p2.filter != FilterKind::Id {
                return Err("mask draw is not a plain SrcOver gradient".into());
            }
            if s1 != s2 {
                return Err("mask shape differs from the leading draw".into());
            }
            if !gradient_all_stops_opaque(&p2.fill) {
                return Err("gradient has a translucent stop".into());
            }
            // Walk back to the enclosing layer: nothing may have painted yet.
            let mut depth = 0usize;
            for i in (0..*lead).rev() {
                match &r[i] {
                    Command::Draw { .. } => return Err(format!("draw {i} already painted the layer")),
                    Command::Restore => depth += 1,
                    Command::Save if depth > 0 => depth -= 1,
                    Command::SaveLayer { .. } if depth == 0 => break,
                    Command::SaveLayer { .. } => return Err(format!("layer {i} already painted the layer")),
                    _ => {}
                }
            }
            Ok(())
        }
    }
}

fn site_records(site: &Site) -> Vec<usize> {
    match site {
        Site::SrcOver { layer, .. } => vec![*layer],
        Site::DstIn {
            layer,
            clips,
            draw,
            restore,
            ..
        } => {
            let mut v = vec![*layer, *draw, *restore];
            v.extend(clips);
            v
        }
        Site::Luma {
            inner,
            draws,
            inner_restore,
            ..
        } => {
            let mut v = vec![*inner, *inner_restore];
            v.extend(draws);
            v
        }
        Site::Gradient {
            layer, draw, restore, ..
        } => vec![*layer, *draw, *restore],
    }
}

/// Rewrites every site, tombstoning rather than removing records.
/// Replacements use the original indices; insertions land before the
/// record at their index, in site order.
pub fn rewrite(p: &Program, sites: &[Site]) -> Result<Rewritten, String> {
    let mut touched = std::collections::BTreeSet::new();
    for s in sites {
        for i in site_records(s) {
            if !touched.insert(i) {
                return Err(format!("record {i} is claimed by two rewrites"));
            }
        }
    }
    let mut records = p.records.clone();
    let mut edits = Vec::new();
    let mut inserted = Vec::new();
    let mut set = |records: &mut Vec<Command>, index: usize, new: Command| {
        let old = std::mem::replace(&mut records[index], new.clone());
        edits.push(Edit { index, old, new });
    };
    for site in sites {
        match site {
            Site::SrcOver { layer, .. } => set(&mut records, *layer, Command::Save),
            Site::DstIn {
                layer,
                clips,
                draw,
                restore,
                scope_start,
                scope_end,
            } => {
                let Command::Draw { shape, .. } = &p.records[*draw] else {
                    return Err("mask draw moved".into());
                };
                inserted.push((*scope_start, Command::Save));
                inserted.push((*scope_start, Command::clip(shape.clone())));
                for &c in clips {
                    inserted.push((*scope_start, p.records[c].clone()));
                }
                inserted.push((*scope_end, Command::Restore));
                set(&mut records, *layer, Command::NoOp);
                for &c in clips {
                    set(&mut records, c, Command::NoOp);
                }
                set(&mut records, *draw, Command::NoOp);
                set(&mut records, *restore, Command::NoOp);
            }
            Site::Luma {
                inner,
                draws,
                inner_restore,
                ..
            } => {
                set(&mut records, *inner, Command::NoOp);
                for &d in draws {
                    let Command::Draw { shape, paint } = &p.records[d] else {
                        return Err("luma draw moved".into());
                    };
                    let Fill::Solid(c) = paint.fill else {
                        return Err("luma draw is not solid".into());
                    };
                    let fill = Fill::Solid(filter_eval(FilterKind::Luma, filter_eval(paint.filter, c)));
                    let new = Command::draw(shape.clone(), Paint::new(fill, FilterKind::Id, paint.blend));
                    set(&mut records, d, new);
                }
                set(&mut records, *inner_restore, Command::NoOp);
            }
            Site::Gradient {
                layer, draw, restore, ..
            } => {
                set(&mut records, *layer, Command::NoOp);
                set(&mut records, *draw, Command::NoOp);
                set(&mut records, *restore, Command::NoOp);
            }
        }
    }
    let program = splice(records, &inserted)?;
    Ok(Rewritten {
        program,
        edits,
        inserted,
    })
}

/// Places each inserted record before the record at its index, keeping the
/// listed order among equal indices.
fn splice(records: Vec<Command>, inserted: &[(usize, Command)]) -> Result<Program, String> {
    let len = records.len();
    let mut pending: Vec<&(usize, Command)> = inserted.iter().collect();
    pending.sort_by_key(|(i, _)| *i);
    if let Some((i, _)) = pending.last().filter(|(i, _)| *i > len) {
        return Err(format!("insertion at {i} past the end of {len} records"));
    }
    let mut out = Vec::with_capacity(len + pending.len());
    let mut next = pending.into_iter().peekable();
    for (i, cmd) in records.into_iter().enumerate() {
        while let Some((_, c)) = next.next_if(|(at, _)| *at == i) {
            out.push(c.clone());
        }
        out.push(cmd);
    }
    out.extend(next.map(|(_, c)| c.clone()));
    Ok(Program::new(out))
}

/// Applies `kind` at `anchor` with no side-condition checks.
pub fn apply_unchecked(kind: PassKind, p: &Program, anchor: usize) -> Result<Rewritten, String> {
    let site = locate(kind, p, anchor)?;
    rewrite(p, &[site])
}

/// Locates and checks every claimed site, then rewrites them all.
pub fn apply_checked(kind: PassKind, p: &Program, anchors: &[usize]) -> Result<Rewritten, String> {
    if anchors.is_empty() {
        return Err("step claims no rewrites".into());
    }
    let mut sites = Vec::with_capacity(anchors.len());
    for &a in anchors {
        let site = locate(kind, p, a).map_err(|e| format!("{kind} at {a}: {e}"))?;
        side_conditions(p, &site).map_err(|e| format!("{kind} at {a}: {e}"))?;
        sites.push(site);
    }
    rewrite(p, &sites)
}
