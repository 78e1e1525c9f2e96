use super::*;
use crate::color::{BlendMode, Color, Fill, FilterKind, GradientStop, Point};
use crate::layer::{layer_equiv_sampled, Paint, SampleSet};
use crate::shape::{BoundsRect, Shape};

fn red() -> Paint {
    Paint::solid(Color::premul(1.0, 1.0, 0.0, 0.0), BlendMode::SrcOver)
}

fn half_blue() -> Paint {
    Paint::solid(Color::premul(0.5, 0.0, 0.0, 0.5), BlendMode::SrcOver)
}

fn layer(blend: BlendMode) -> Command {
    Command::save_layer(Paint::solid(Color::BLACK, blend))
}

fn rect(l: f64, t: f64, r: f64, b: f64) -> Shape {
    Shape::rect(l, t, r, b)
}

fn opaque_gradient() -> Fill {
    Fill::LinearGradient {
        p0: Point::new(0.0, 0.0),
        p1: Point::new(64.0, 0.0),
        stops: vec![
            GradientStop::new(0.0, Color::premul(1.0, 1.0, 0.0, 0.0)),
            GradientStop::new(1.0, Color::premul(1.0, 0.0, 0.0, 1.0)),
        ]
        .into(),
    }
}

fn equivalent(a: &Program, b: &Program) -> bool {
    let (ta, tb) = (a.run().unwrap(), b.run().unwrap());
    let area = BoundsRect::new(-8.0, -8.0, 72.0, 72.0);
    layer_equiv_sampled(&ta, &tb, &SampleSet::for_terms(&ta, &tb, 7, 2048, area), 1e-9)
}

fn run_only(pass: PassKind, p: &Program) -> Optimized {
    let out = optimize(p, &OptimizeConfig::only(pass)).unwrap();
    assert!(equivalent(p, &out.program), "{pass} changed the image");
    out
}

#[test]
fn srcover_layer_becomes_save() {
    let p = Program::new(vec![
        layer(BlendMode::SrcOver),
        Command::clip(rect(0.0, 0.0, 32.0, 32.0)),
        Command::draw(rect(4.0, 4.0, 40.0, 40.0), half_blue()),
        Command::Restore,
    ]);
    let out = run_only(PassKind::SrcOverSaveLayer, &p);
    assert_eq!(out.program.records[0], Command::Save);
    assert_eq!(out.trace.firings()[&PassKind::SrcOverSaveLayer], 1);
    assert_eq!(out.trace.entries[0].fired_at, vec![0]);
}

#[test]
fn srcover_rejects_non_srcover_body_and_translucent_paint() {
    let body = |blend| {
        Program::new(vec![
            layer(BlendMode::SrcOver),
            Command::draw(rect(0.0, 0.0, 8.0, 8.0), Paint::solid(Color::WHITE, blend)),
            Command::Restore,
        ])
    };
    assert_eq!(
        run_only(PassKind::SrcOverSaveLayer, &body(BlendMode::Multiply))
            .trace
            .total_firings(),
        0
    );
    assert_eq!(
        run_only(PassKind::SrcOverSaveLayer, &body(BlendMode::SrcOver))
            .trace
            .total_firings(),
        1
    );
    let translucent = Program::new(vec![
        Command::save_layer(half_blue()),
        Command::draw(rect(0.0, 0.0, 8.0, 8.0), red()),
        Command::Restore,
    ]);
    assert_eq!(
        run_only(PassKind::SrcOverSaveLayer, &translucent).trace.total_firings(),
        0
    );
}

#[test]
fn srcover_outer_waits_for_inner() {
    let p = Program::new(vec![
        layer(BlendMode::SrcOver),
        layer(BlendMode::SrcOver),
        Command::draw(rect(0.0, 0.0, 8.0, 8.0), red()),
        Command::Restore,
        Command::Restore,
    ]);
    let once = optimize(
        &p,
        &OptimizeConfig::only(PassKind::SrcOverSaveLayer).with_max_iterations(1),
    )
    .unwrap();
    assert_eq!(once.trace.total_firings(), 1);
    assert_eq!(once.trace.entries[0].fired_at, vec![1]);
    let full = run_only(PassKind::SrcOverSaveLayer, &p);
    assert_eq!(full.trace.total_firings(), 2);
    assert_eq!(full.program.count(crate::command::CommandKind::SaveLayer), 0);
}

fn luma_pattern() -> Vec<Command> {
    vec![
        layer(BlendMode::DstIn),
        Command::save_layer(Paint::src_over().with_filter(FilterKind::Luma)),
        Command::draw(
            rect(8.0, 8.0, 24.0, 24.0),
            Paint::solid(Color::WHITE, BlendMode::SrcOver),
        ),
        Command::Restore,
        Command::Restore,
    ]
}

#[test]
fn luma_layer_is_subsumed() {
    let mut records = vec![Command::draw(rect(0.0, 0.0, 32.0, 32.0), red())];
    records.extend(luma_pattern());
    let p = Program::new(records);
    let out = run_only(PassKind::SubsumeLuma, &p);
    assert_eq!(out.trace.entries[0].fired_at, vec![1]);
    assert_eq!(out.program.len(), 4);
    let Command::Draw { paint, .. } = &out.program.records[2] else {
        panic!("expected a draw");
    };
    assert_eq!(paint.filter, FilterKind::Id);
    assert!(matches!(paint.fill, Fill::Solid(c) if c.r == 0.0 && c.a > 0.0));
}

#[test]
fn luma_needs_adjacent_records() {
    let mut records = luma_pattern();
    records.insert(1, Command::clip(Shape::Full));
    assert_eq!(
        run_only(PassKind::SubsumeLuma, &Program::new(records))
            .trace
            .total_firings(),
        0
    );
    let mut records = luma_pattern();
    records.insert(4, Command::draw(rect(0.0, 0.0, 4.0, 4.0), red()));
    assert_eq!(
        run_only(PassKind::SubsumeLuma, &Program::new(records))
            .trace
            .total_firings(),
        0
    );
    let mut records = luma_pattern();
    records[0] = layer(BlendMode::SrcOver);
    assert_eq!(
        run_only(PassKind::SubsumeLuma, &Program::new(records))
            .trace
            .total_firings(),
        0
    );
}

fn dstin_scope(mask_color: Color) -> Vec<Command> {
    vec![
        Command::draw(rect(0.0, 0.0, 48.0, 48.0), red()),
        Command::Save,
        Command::clip(rect(0.0, 0.0, 30.0, 64.0)),
        Command::draw(rect(10.0, 10.0, 60.0, 60.0), half_blue()),
        Command::Restore,
        layer(BlendMode::DstIn),
        Command::clip(Shape::circle(20.0, 20.0, 18.0)),
        Command::draw(rect(5.0, 5.0, 50.0, 40.0), Paint::solid(mask_color, BlendMode::SrcOver)),
        Command::Restore,
    ]
}

#[test]
fn dstin_mask_becomes_clip_at_root() {
    let p = Program::new(dstin_scope(Color::WHITE));
    let out = run_only(PassKind::DstInToClip, &p);
    assert_eq!(out.trace.entries[0].fired_at, vec![5]);
    let kinds: Vec<String> = out.program.records.iter().map(|c| c.kind().to_string()).collect();
    assert_eq!(
        kinds,
        ["save", "clip", "clip", "draw", "save", "clip", "draw", "restore", "restore"]
    );
}

#[test]
fn dstin_mask_inside_a_layer() {
    let mut records = vec![
        Command::draw(rect(0.0, 0.0, 64.0, 64.0), half_blue()),
        layer(BlendMode::SrcOver),
    ];
    records.extend(dstin_scope(Color::premul(1.0, 0.3, 0.3, 0.3)));
    records.push(Command::Restore);
    let out = run_only(PassKind::DstInToClip, &Program::new(records));
    assert_eq!(out.trace.total_firings(), 1);
}

#[test]
fn dstin_rejects_translucent_mask_and_scope_clip() {
    let p = Program::new(dstin_scope(Color::premul(0.5, 0.5, 0.5, 0.5)));
    assert_eq!(run_only(PassKind::DstInToClip, &p).trace.total_firings(), 0);
    let mut records = dstin_scope(Color::WHITE);
    records.insert(0, Command::clip(rect(0.0, 0.0, 40.0, 40.0)));
    assert_eq!(
        run_only(PassKind::DstInToClip, &Program::new(records))
            .trace
            .total_firings(),
        0
    );
    let mut records = dstin_scope(Color::WHITE);
    records.push(Command::draw(rect(0.0, 0.0, 4.0, 4.0), red()));
    assert_eq!(
        run_only(PassKind::DstInToClip, &Program::new(records))
            .trace
            .total_firings(),
        0
    );
}

#[test]
fn dstin_luma_filtered_mask_needs_opaque_composite() {
    let mut records = dstin_scope(Color::WHITE);
    records[5] = Command::save_layer(Paint::solid(Color::BLACK, BlendMode::DstIn).with_filter(FilterKind::Luma));
    assert_eq!(
        run_only(PassKind::DstInToClip, &Program::new(records.clone()))
            .trace
            .total_firings(),
        1
    );
    records[7] = Command::draw(
        rect(5.0, 5.0, 50.0, 40.0),
        Paint::solid(Color::BLACK, BlendMode::SrcOver),
    );
    assert_eq!(
        run_only(PassKind::DstInToClip, &Program::new(records))
            .trace
            .total_firings(),
        0
    );
}

fn gradient_pattern(s: Shape) -> Vec<Command> {
    vec![
        Command::draw(s.clone(), half_blue()),
        layer(BlendMode::DstIn),
        Command::draw(s, Paint::new(opaque_gradient(), FilterKind::Id, BlendMode::SrcOver)),
        Command::Restore,
    ]
}

#[test]
fn gradient_mask_is_dropped() {
    let mut records = vec![Command::clip(rect(0.0, 0.0, 50.0, 50.0))];
    records.extend(gradient_pattern(Shape::circle(30.0, 30.0, 25.0)));
    let out = run_only(PassKind::GradientMask, &Program::new(records));
    assert_eq!(out.trace.entries[0].fired_at, vec![1]);
    assert_eq!(out.program.len(), 2);
}

#[test]
fn gradient_mask_needs_empty_layer_and_equal_shapes() {
    let mut records = vec![Command::draw(rect(40.0, 40.0, 60.0, 60.0), red())];
    records.extend(gradient_pattern(rect(0.0, 0.0, 30.0, 30.0)));
    assert_eq!(
        run_only(PassKind::GradientMask, &Program::new(records))
            .trace
            .total_firings(),
        0
    );
    let mut records = gradient_pattern(rect(0.0, 0.0, 30.0, 30.0));
    records[2] = Command::draw(
        rect(0.0, 0.0, 31.0, 30.0),
        Paint::new(opaque_gradient(), FilterKind::Id, BlendMode::SrcOver),
    );
    assert_eq!(
        run_only(PassKind::GradientMask, &Program::new(records))
            .trace
            .total_firings(),
        0
    );
}

/// SrcOver layer around a DstIn mask around a luma layer.
fn nest() -> Program {
    let mut records = vec![
        layer(BlendMode::SrcOver),
        Command::draw(rect(0.0, 0.0, 48.0, 48.0), red()),
    ];
    records.extend(luma_pattern());
    records.push(Command::Restore);
    Program::new(records)
}

#[test]
fn nest_cascades_over_iterations() {
    let p = nest();
    let out = optimize(&p, &OptimizeConfig::default()).unwrap();
    assert!(equivalent(&p, &out.program));
    let firings = out.trace.firings();
    assert_eq!(firings.len(), 3);
    assert!(out.iterations >= 2);
    assert_eq!(out.program.count(crate::command::CommandKind::SaveLayer), 0);
    let capped = optimize(&p, &OptimizeConfig::default().with_max_iterations(1)).unwrap();
    assert!(capped.trace.total_firings() < out.trace.total_firings());
}

#[test]
fn every_scan_visits_each_record_once() {
    let out = optimize(&nest(), &OptimizeConfig::default()).unwrap();
    assert!(!out.scans.is_empty());
    for s in &out.scans {
        assert_eq!(s.visited, s.records);
    }
}

#[test]
fn replay_reproduces_snapshots() {
    let out = optimize(&nest(), &OptimizeConfig::default()).unwrap();
    for e in &out.trace.entries {
        let replayed = replay_entry(&out.trace.snapshots[e.before], e).unwrap();
        assert_eq!(replayed, out.trace.snapshots[e.after]);
    }
    assert_eq!(out.trace.output(), Some(&out.program));
}

#[test]
fn trace_json_round_trip() {
    let out = optimize(&nest(), &OptimizeConfig::default()).unwrap();
    let v = out.trace.to_json();
    let back = RewriteTrace::from_json(&v).unwrap();
    assert_eq!(back.entries.len(), out.trace.entries.len());
    assert_eq!(back.to_json(), v);
}

#[test]
fn pass_names_parse() {
    for k in PassKind::ALL {
        assert_eq!(k.name().parse::<PassKind>(), Ok(k));
    }
    assert_eq!("dstin".parse::<PassKind>(), Ok(PassKind::DstInToClip));
    assert!("fold".parse::<PassKind>().is_err());
}

#[test]
fn unbalanced_input_is_an_error() {
    let p = Program::new(vec![Command::Save]);
    assert!(optimize(&p, &OptimizeConfig::default()).is_err());
}
