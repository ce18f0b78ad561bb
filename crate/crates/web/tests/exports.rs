use rizzo_web::{examples, run_trace, typecheck};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).expect("exports return JSON")
}

fn example(name: &str) -> (String, String) {
    let list = parse(examples());
    let e = list.as_array().unwrap().iter().find(|e| e["name"] == name).expect("bundled example");
    (e["source"].as_str().unwrap().to_owned(), e["trace"].as_str().unwrap().to_owned())
}

#[test]
fn typecheck_lists_definitions() {
    let (src, _) = example("gui");
    let r = parse(typecheck(&src));
    assert_eq!(r["ok"], true);
    let defs = r["defs"].as_array().unwrap();
    let ty = |name: &str| defs.iter().find(|d| d["name"] == name).map(|d| d["type"].clone());
    assert_eq!(ty("onClick"), Some("Sig String * Sig (1 + 1) * Chan 1 -> Later (Sig 1)".into()));
    assert_eq!(ty("main"), ty("gui"));
}

#[test]
fn typecheck_reports_the_error_kind() {
    assert_eq!(parse(typecheck("main : Int\nmain = ("))["kind"], "parse");
    assert_eq!(parse(typecheck("main : Int\nmain = 'c'"))["kind"], "type");
}

#[test]
fn run_returns_one_snapshot_per_event_plus_init() {
    let (src, trace) = example("sample");
    let r = parse(run_trace(&src, &trace, true, true, 10_000_000));
    assert_eq!(r["ok"], true, "{r}");
    let snaps = r["snapshots"].as_array().unwrap();
    assert_eq!(snaps.len(), 4);
    let last = &snaps[3]["cells"].as_array().unwrap()[2];
    assert_eq!(last["head"], "(2, 'b')");
    assert_eq!(last["flag"], "⊤");
    assert!(r["text"].as_str().unwrap().starts_with("== init ==\n"));
}

#[test]
fn run_reports_trace_errors_and_exhausted_budgets() {
    let (src, _) = example("sample");
    assert_eq!(parse(run_trace(&src, "chan k1 : Int\nk1 'x'\n", false, false, 10_000_000))["kind"], "trace");
    let r = parse(run_trace(&src, "chan k1 : Int\nk1 1\n", false, false, 10));
    assert_eq!(r["ok"], false);
    assert!(r["fault"].is_string(), "{r}");
}
