use muskia::command::check_balanced;
use muskia::corpus::{generate_corpus, CorpusMix, Family};
use muskia::optimizer::{cost_metrics, optimize, replay_entry, OptimizeConfig, PassKind};
use muskia::{image_diff_ae, rasterize};

#[test]
fn annotated_firings_match() {
    for c in generate_corpus(21, 600, &CorpusMix::default()) {
        let out = optimize(&c.program, &OptimizeConfig::default()).unwrap();
        if let Some(expected) = &c.expected {
            assert_eq!(&out.trace.firings(), expected, "{} ({})", c.name, c.variant);
        }
        assert_eq!(check_balanced(&out.program), Ok(()), "{}", c.name);
    }
}

#[test]
fn near_misses_are_untouched_by_their_pass() {
    for kind in PassKind::ALL {
        for c in generate_corpus(22, 60, &CorpusMix::only(Family::NearMiss(kind))) {
            let out = optimize(&c.program, &OptimizeConfig::only(kind)).unwrap();
            assert!(out.trace.entries.is_empty(), "{} ({})", c.name, c.variant);
            assert_eq!(out.program, c.program);
        }
    }
}

#[test]
fn rewrites_are_pixel_exact() {
    for c in generate_corpus(23, 120, &CorpusMix::default()) {
        let out = optimize(&c.program, &OptimizeConfig::default()).unwrap();
        if out.trace.entries.is_empty() {
            continue;
        }
        let before = rasterize(&c.program, 128, 128).unwrap();
        let after = rasterize(&out.program, 128, 128).unwrap();
        let d = image_diff_ae(&before, &after, 0.01).unwrap();
        assert_eq!(d.differing_pixels, 0, "{} ({})", c.name, c.variant);
        assert!(
            d.max_channel_delta <= 1e-6,
            "{} ({}): {}",
            c.name,
            c.variant,
            d.max_channel_delta
        );
    }
}

#[test]
fn metrics_never_increase_per_step() {
    for c in generate_corpus(24, 300, &CorpusMix::default()) {
        let out = optimize(&c.program, &OptimizeConfig::default()).unwrap();
        for e in &out.trace.entries {
            let a = cost_metrics(&out.trace.snapshots[e.before], 256, 256);
            let b = cost_metrics(&out.trace.snapshots[e.after], 256, 256);
            assert!(b.est_pixel_ops <= a.est_pixel_ops, "{} step {}", c.name, e.step);
            assert!(b.savelayer_count <= a.savelayer_count);
            assert!(b.draw_count <= a.draw_count);
        }
    }
}

#[test]
fn trace_replay_is_exact_over_corpus() {
    for c in generate_corpus(25, 200, &CorpusMix::default()) {
        let out = optimize(&c.program, &OptimizeConfig::default()).unwrap();
        for e in &out.trace.entries {
            let replayed = replay_entry(&out.trace.snapshots[e.before], e).unwrap();
            assert_eq!(replayed, out.trace.snapshots[e.after], "{} step {}", c.name, e.step);
        }
    }
}
