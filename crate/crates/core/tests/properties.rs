//! Randomized properties that span modules. Programs are drawn by seed from
//! the corpus generators, so a failing case reports the seed to replay.

use proptest::prelude::*;

use muskia::command::{bracket_partners, initial_state, run, Command, Program};
use muskia::corpus::{generate_corpus, random_programs, CorpusMix};
use muskia::format::{load_program_str, normalize_program, save_program};
use muskia::layer::{clip_all, layer_equiv_sampled, LayerTerm, SampleSet};
use muskia::optimizer::{optimize, replay_entry, OptimizeConfig, RewriteTrace};
use muskia::raster::rasterize;
use muskia::shape::BoundsRect;
use muskia::validator::faults::{inject, Mutation};
use muskia::validator::{validate_trace, ValidationConfig, Verdict, Witness};
use muskia::{BlendMode, Color, Fill, FilterKind, GradientStop, Paint, Point, Shape};

const AREA: BoundsRect = BoundsRect {
    left: -8.0,
    top: -8.0,
    right: 264.0,
    bottom: 264.0,
};

fn random_program(seed: u64) -> Program {
    random_programs(seed, 1).pop().unwrap()
}

fn corpus_program(seed: u64) -> Program {
    generate_corpus(seed, 1, &CorpusMix::default()).pop().unwrap().program
}

fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0]
}

fn color() -> impl Strategy<Value = Color> {
    (unit(), unit(), unit(), unit()).prop_map(|(a, r, g, b)| Color::from_unpremul(a, r, g, b))
}

fn opaque_color() -> impl Strategy<Value = Color> {
    (unit(), unit(), unit()).prop_map(|(r, g, b)| Color::from_unpremul(1.0, r, g, b))
}

fn shape() -> impl Strategy<Value = Shape> {
    let leaf = prop_oneof![
        (0.0..200.0f64, 0.0..200.0f64, 1.0..120.0f64, 1.0..120.0f64).prop_map(|(l, t, w, h)| Shape::rect(
            l,
            t,
            l + w,
            t + h
        )),
        (0.0..256.0f64, 0.0..256.0f64, 1.0..100.0f64).prop_map(|(x, y, r)| Shape::circle(x, y, r)),
        Just(Shape::Full),
    ];
    leaf.prop_recursive(2, 4, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Shape::intersect_node(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Shape::union(a, b)),
        ]
    })
}

fn fill() -> impl Strategy<Value = Fill> {
    prop_oneof![
        3 => color().prop_map(Fill::Solid),
        1 => (color(), color(), 0.0..256.0f64, 0.0..256.0f64, 1.0..256.0f64).prop_map(|(c0, c1, x, y, r)| {
            Fill::RadialGradient {
                center: Point::new(x, y),
                radius: r,
                stops: vec![GradientStop::new(0.0, c0), GradientStop::new(1.0, c1)].into(),
            }
        }),
    ]
}

fn filter() -> impl Strategy<Value = FilterKind> {
    prop_oneof![Just(FilterKind::Id), Just(FilterKind::Luma)]
}

fn blend() -> impl Strategy<Value = BlendMode> {
    prop_oneof![
        Just(BlendMode::SrcOver),
        Just(BlendMode::DstIn),
        Just(BlendMode::Multiply),
        Just(BlendMode::SrcOut),
    ]
}

fn paint() -> impl Strategy<Value = Paint> {
    (fill(), filter(), blend()).prop_map(|(f, k, b)| Paint::new(f, k, b))
}

fn src_over_paint() -> impl Strategy<Value = Paint> {
    (fill(), filter()).prop_map(|(f, k)| Paint::new(f, k, BlendMode::SrcOver))
}

/// A BlendLayer-free term whose draws all use SrcOver.
fn src_over_term() -> impl Strategy<Value = LayerTerm> {
    prop::collection::vec((shape(), src_over_paint()), 0..5).prop_map(|draws| {
        draws
            .into_iter()
            .fold(LayerTerm::Empty, |t, (s, p)| LayerTerm::draw(t, s, p))
    })
}

fn any_term() -> impl Strategy<Value = LayerTerm> {
    any::<u64>().prop_map(|seed| run(&random_program(seed)).unwrap())
}

fn equiv(a: &LayerTerm, b: &LayerTerm, seed: u64, tol: f64) -> bool {
    let points = SampleSet::for_terms(a, b, seed, 512, AREA);
    layer_equiv_sampled(a, b, &points, tol)
}

/// One level of enclosing term around a hole.
#[derive(Clone, Debug)]
enum Context {
    Over { bottom: LayerTerm, paint: Paint },
    Under { top: LayerTerm, paint: Paint },
    Draw { shape: Shape, paint: Paint },
}

impl Context {
    fn plug(&self, hole: LayerTerm) -> LayerTerm {
        match self {
            Context::Over { bottom, paint } => LayerTerm::blend(bottom.clone(), hole, paint.clone()),
            Context::Under { top, paint } => LayerTerm::blend(hole, top.clone(), paint.clone()),
            Context::Draw { shape, paint } => LayerTerm::draw(hole, shape.clone(), paint.clone()),
        }
    }
}

fn context() -> impl Strategy<Value = Context> {
    prop_oneof![
        (any_term(), paint()).prop_map(|(bottom, paint)| Context::Over { bottom, paint }),
        (any_term(), paint()).prop_map(|(top, paint)| Context::Under { top, paint }),
        (shape(), paint()).prop_map(|(shape, paint)| Context::Draw { shape, paint }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// A rewritten program's term stays equivalent inside any context.
    #[test]
    fn equivalence_survives_substitution(seed in any::<u64>(), ctx in prop::collection::vec(context(), 1..4)) {
        let p = corpus_program(seed);
        let l = run(&p).unwrap();
        let l2 = run(&optimize(&p, &OptimizeConfig::default()).unwrap().program).unwrap();
        prop_assume!(equiv(&l, &l2, seed, 1e-9));
        let (a, b) = ctx.iter().fold((l, l2), |(a, b), c| (c.plug(a), c.plug(b)));
        prop_assert!(equiv(&a, &b, seed ^ 1, 1e-9));
    }

    /// An opaque SrcOver layer can give up its last draw to the parent.
    #[test]
    fn peeling_a_draw_out_of_a_layer(
        l1 in any_term(),
        l2 in any_term(),
        g in shape(),
        pd in src_over_paint(),
        c in opaque_color(),
        seed in any::<u64>(),
    ) {
        let p = Paint::solid(c, BlendMode::SrcOver);
        let lhs = LayerTerm::blend(l1.clone(), LayerTerm::draw(l2.clone(), g.clone(), pd.clone()), p.clone());
        let rhs = LayerTerm::draw(LayerTerm::blend(l1, l2, p), g, pd);
        prop_assert!(equiv(&lhs, &rhs, seed, 1e-9));
    }

    /// Masking with an opaque DstIn draw is the same as clipping every draw.
    #[test]
    fn dstin_mask_is_clip_all(l1 in src_over_term(), m in shape(), c in opaque_color(), seed in any::<u64>()) {
        let mask = LayerTerm::draw(LayerTerm::Empty, m.clone(), Paint::solid(c, BlendMode::SrcOver));
        let lhs = LayerTerm::blend(l1.clone(), mask, Paint::solid(Color::BLACK, BlendMode::DstIn));
        let rhs = clip_all(&l1, &m).unwrap();
        prop_assert!(equiv(&lhs, &rhs, seed, 1e-9));
    }

    #[test]
    fn run_is_total_and_deterministic(seed in any::<u64>()) {
        let p = random_program(seed);
        let a = run(&p).unwrap();
        prop_assert_eq!(a, run(&p).unwrap());
    }

    #[test]
    fn noops_are_invisible(seed in any::<u64>(), at in prop::collection::vec(any::<prop::sample::Index>(), 1..8)) {
        let p = random_program(seed);
        let mut records = p.records.clone();
        for i in at {
            records.insert(i.index(records.len() + 1), Command::NoOp);
        }
        prop_assert_eq!(run(&Program::new(records)).unwrap(), run(&p).unwrap());
    }

    /// Closing a plain Save leaves the layer stack exactly as it was.
    #[test]
    fn restoring_a_save_keeps_layers(seed in any::<u64>()) {
        let p = random_program(seed);
        let partners = bracket_partners(&p);
        let mut sigma = initial_state();
        let mut at_save = Vec::new();
        for (i, cmd) in p.records.iter().enumerate() {
            match cmd {
                Command::Save => at_save.push(sigma.layers.len()),
                Command::Restore => {
                    let opener = partners[i].unwrap();
                    if p.records[opener] == Command::Save {
                        let before = sigma.layers.clone();
                        sigma.step(cmd);
                        prop_assert_eq!(&sigma.layers, &before);
                        prop_assert_eq!(sigma.layers.len(), at_save.pop().unwrap());
                        continue;
                    }
                }
                _ => {}
            }
            sigma.step(cmd);
        }
    }

    #[test]
    fn rasterizing_ignores_thread_count(seed in any::<u64>()) {
        let p = corpus_program(seed);
        let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        let one = pool(1).install(|| rasterize(&p, 48, 40).unwrap());
        let four = pool(4).install(|| rasterize(&p, 48, 40).unwrap());
        prop_assert!(one.pixels().iter().zip(four.pixels()).all(|(a, b)| a.channels().map(f64::to_bits) == b.channels().map(f64::to_bits)));
    }

    #[test]
    fn save_then_load_is_identity(seed in any::<u64>()) {
        let p = normalize_program(&random_program(seed));
        let text = String::from_utf8(save_program(&p)).unwrap();
        prop_assert_eq!(load_program_str(&text).unwrap(), p);
    }

    /// Any channel outside [0, 1] is an invariant error, never a schema error.
    #[test]
    fn out_of_range_colors_are_rejected(which in 0usize..4, v in prop_oneof![-10.0..-1e-9f64, (1.0 + 1e-9)..10.0f64]) {
        let mut ch = [0.5; 4];
        ch[which] = v;
        let doc = format!(
            r#"{{"version": 1, "commands": [{{"op": "draw", "shape": {{"type": "full"}},
               "paint": {{"fill": {{"type": "solid", "color": {{"a": {}, "r": {}, "g": {}, "b": {}}}}}}}}}]}}"#,
            ch[0], ch[1], ch[2], ch[3]
        );
        let err = load_program_str(&doc).unwrap_err();
        prop_assert_eq!(err.class(), "invariant-error", "{}", err);
    }

    #[test]
    fn corpus_is_a_function_of_the_seed(seed in any::<u64>()) {
        let mix = CorpusMix::default();
        prop_assert_eq!(generate_corpus(seed, 6, &mix), generate_corpus(seed, 6, &mix));
    }

    /// Output stays balanced, every scan touches each record once, and the
    /// trace replays exactly, on unstructured input as well as corpus input.
    #[test]
    fn optimizer_invariants_on_any_program(seed in any::<u64>(), corpus in any::<bool>()) {
        let p = if corpus { corpus_program(seed) } else { random_program(seed) };
        let out = optimize(&p, &OptimizeConfig::default()).unwrap();
        prop_assert!(out.program.check_balanced().is_ok());
        for s in &out.scans {
            prop_assert_eq!(s.visited, s.records);
        }
        for e in &out.trace.entries {
            let replayed = replay_entry(&out.trace.snapshots[e.before], e).unwrap();
            prop_assert_eq!(&replayed, &out.trace.snapshots[e.after]);
        }
        let before = rasterize(&p, 64, 64).unwrap();
        let after = rasterize(&out.program, 64, 64).unwrap();
        prop_assert!(before.pixels().iter().zip(after.pixels()).all(|(a, b)| a.max_delta(b) <= 1e-6));
    }
}

/// Swaps the first solid draw color of the first pass step's result for
/// one that differs in every channel.
fn flip_first_draw(trace: &RewriteTrace) -> Option<RewriteTrace> {
    let pos = trace.entries.iter().position(|e| e.step.pass().is_some())?;
    let mut bad = trace.clone();
    bad.entries.truncate(pos + 1);
    bad.snapshots.truncate(pos + 2);
    let after = bad.snapshots.last_mut()?;
    let paint = after.records.iter_mut().find_map(|c| match c {
        Command::Draw { paint, .. } if matches!(paint.fill, Fill::Solid(_)) => Some(paint),
        _ => None,
    })?;
    let Fill::Solid(c) = paint.fill else { unreachable!() };
    let (_, r, g, b) = c.to_unpremul();
    let flipped = if r + g + b > 1.5 { Color::BLACK } else { Color::WHITE };
    paint.fill = Fill::Solid(if c.a < 0.5 { flipped } else { Color::TRANSPARENT });
    Some(bad)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// A refutation always points at a pixel or sample where the images
    /// really differ.
    #[test]
    fn refutations_carry_real_witnesses(seed in any::<u64>(), m in 0usize..=Mutation::ALL.len()) {
        let c = generate_corpus(seed, 1, &CorpusMix::default()).pop().unwrap();
        let out = optimize(&c.program, &OptimizeConfig::default()).unwrap();
        prop_assume!(!out.trace.entries.is_empty());
        let bad = match Mutation::ALL.get(m) {
            Some(&mutation) => inject(&out.trace, mutation).ok(),
            None => flip_first_draw(&out.trace),
        };
        let Some(bad) = bad else {
            return Ok(());
        };
        let config = ValidationConfig { width: 64, height: 64, samples: 128, ..ValidationConfig::default() };
        let verdict = validate_trace(&bad, &config);
        // A flipped draw may be clipped away entirely; injected faults never are.
        prop_assert!(m == Mutation::ALL.len() || !verdict.is_validated());
        if let Verdict::Refuted { step, witness } = &verdict.overall {
            let entry = &bad.entries[*step];
            let (b, a) = (&bad.snapshots[entry.before], &bad.snapshots[entry.after]);
            match witness {
                Witness::Pixel { x, y, .. } => {
                    let ib = rasterize(b, 64, 64).unwrap();
                    let ia = rasterize(a, 64, 64).unwrap();
                    prop_assert!(ib.get(*x, *y).max_delta(&ia.get(*x, *y)) > 0.0);
                }
                Witness::Sample { point, delta } => {
                    let (tb, ta) = (run(b).unwrap(), run(a).unwrap());
                    prop_assert!(*delta > config.tolerance);
                    prop_assert!(tb.denote(*point).max_delta(&ta.denote(*point)) > config.tolerance);
                }
            }
        }
    }
}
