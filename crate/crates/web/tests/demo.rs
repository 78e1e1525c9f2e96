use muskia_web::demo::{example, optimize_and_diff, render_rgba, EXAMPLES};
use serde_json::Value;

const EMPTY: &str = r#"{"version": 1, "commands": []}"#;

#[test]
fn empty_program_renders_transparent() {
    let rgba = render_rgba(EMPTY, 4, 3).unwrap();
    assert_eq!(rgba.len(), 4 * 3 * 4);
    assert!(rgba.chunks(4).all(|px| px[3] == 0));
}

#[test]
fn multiply_overlap_is_black() {
    let doc = r#"{"version": 1, "commands": [
        {"op": "draw", "shape": {"type": "rect", "ltrb": [0, 0, 3, 4]},
         "paint": {"fill": {"type": "solid", "color": {"a": 1, "r": 1, "g": 0, "b": 0}}}},
        {"op": "draw", "shape": {"type": "rect", "ltrb": [1, 0, 4, 4]},
         "paint": {"fill": {"type": "solid", "color": {"a": 1, "r": 0, "g": 0, "b": 1}}, "blend": "multiply"}}
    ]}"#;
    let rgba = render_rgba(doc, 4, 4).unwrap();
    let px = |x: usize, y: usize| &rgba[(y * 4 + x) * 4..][..4];
    assert_eq!(px(0, 0), [255, 0, 0, 255]);
    assert_eq!(px(1, 2), [0, 0, 0, 255]);
    assert_eq!(px(3, 3), [0, 0, 255, 255]);
}

#[test]
fn bad_input_is_an_error_not_a_panic() {
    let err = render_rgba(r#"{"version": 1, "commands": [{"op": "restore"}]}"#, 8, 8).unwrap_err();
    assert!(err.contains("unbalanced"), "{err}");
    assert!(render_rgba("not json", 8, 8).is_err());
    assert!(render_rgba(EMPTY, 0, 8).is_err());
    assert!(example("nonsense", 0).is_err());
}

#[test]
fn every_example_loads_and_optimizes_without_changing_pixels() {
    for name in EXAMPLES {
        let doc = example(name, 3).unwrap();
        let cmp = optimize_and_diff(&doc, 64, 64).unwrap();
        assert_eq!(cmp.differing_pixels(), 0, "{name}");
        assert_eq!(cmp.before(), cmp.after(), "{name}");
        let report: Value = serde_json::from_str(&cmp.report()).unwrap();
        let fired = report["firings"].as_object().unwrap();
        match name {
            "pinterest" => assert_eq!(fired.len(), 3, "{report}"),
            n if n.ends_with("-near-miss") => assert!(fired.is_empty(), "{name}: {report}"),
            "random" => {}
            n => assert!(!fired.is_empty(), "{n} did not fire: {report}"),
        }
        // The optimized text is itself a loadable program.
        render_rgba(&cmp.optimized(), 8, 8).unwrap();
    }
}

#[test]
fn pinterest_loses_every_layer() {
    let cmp = optimize_and_diff(&example("pinterest", 0).unwrap(), 32, 32).unwrap();
    let report: Value = serde_json::from_str(&cmp.report()).unwrap();
    assert_eq!(report["metrics_after"]["savelayer_count"], 0);
    assert!(report["speedup_proxy"].as_f64().unwrap() > 1.0);
}
