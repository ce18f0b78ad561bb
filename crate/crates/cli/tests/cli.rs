use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(name)
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn rizzo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rizzo")).args(args).output().expect("run rizzo")
}

fn run(program: &Path, trace: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", program.to_str().unwrap(), "--trace", trace.to_str().unwrap()];
    args.extend_from_slice(extra);
    rizzo(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn sample_trace_prints_every_step() {
    let o = run(&corpus("sample.rzo"), &corpus("sample.trace"), &["--hide-unreachable", "--check-all"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let headers: Vec<&str> = out.lines().filter(|l| l.starts_with("==")).collect();
    assert_eq!(headers, ["== init ==", "== step 1: κ1 <- 1 ==", "== step 2: κ2 <- 'b' ==", "== step 3: κ1 <- 2 =="]);
    let result_cells: Vec<&str> = out.lines().filter(|l| l.starts_with("l3 ")).map(|l| &l[..l.find(", delay").unwrap()]).collect();
    assert_eq!(
        result_cells,
        [
            "l3 : Int * Char -> ⊥((0, 'a')",
            "l3 : Int * Char -> ⊤((1, 'a')",
            "l3 : Int * Char -> ⊥((1, 'a')",
            "l3 : Int * Char -> ⊤((2, 'b')",
        ]
    );
}

#[test]
fn json_snapshots_are_one_object_per_line() {
    let o = run(&corpus("filter.rzo"), &corpus("filter.trace"), &["--snapshot-format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let snaps: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(snaps.len(), 3);
    assert_eq!(snaps[2]["event"], "κ1 <- 2");
    assert!(snaps[0]["result"].is_string());
    assert!(snaps[1]["result"].is_null());
}

#[test]
fn empty_trace_prints_only_the_initial_state() {
    let trace = scratch("empty.trace", "chan k1 : Int\n");
    let o = run(&corpus("sample.rzo"), &trace, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("==")).count(), 1);
}

#[test]
fn check_lists_types() {
    let o = rizzo(&["check", corpus("gui.rzo").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "onClick : Sig String * Sig (1 + 1) * Chan 1 -> Later (Sig 1)"));
}

#[test]
fn exit_codes_name_the_failing_stage() {
    let sample = corpus("sample.rzo");
    let trace = corpus("sample.trace");
    let code = |o: Output| o.status.code();

    assert_eq!(code(rizzo(&["run", "missing.rzo", "--trace", "missing.trace"])), Some(2));
    assert_eq!(code(rizzo(&["check", scratch("bad.rzo", "main : Int\nmain = (").to_str().unwrap()])), Some(3));
    assert_eq!(code(rizzo(&["check", corpus("skip.rzo").to_str().unwrap()])), Some(4));
    assert_eq!(code(run(&sample, &scratch("wrong.trace", "chan k1 : Char\nk1 'x'\n"), &[])), Some(5));
    assert_eq!(code(run(&sample, &scratch("junk.trace", "chan k1 : Int\nk1 (\n"), &[])), Some(5));
    assert_eq!(code(run(&corpus("filter.rzo"), &corpus("filter.trace"), &["--check-all", "--inject-fault", "flip-flag"])), Some(6));
    assert_eq!(code(run(&sample, &trace, &["--budget", "10"])), Some(7));
}

#[test]
fn oracle_failures_still_print_snapshots() {
    let o = run(&corpus("filter.rzo"), &corpus("filter.trace"), &["--check-all", "--inject-fault", "flip-flag"]);
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("==")).count(), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("no-leak failed at step 1"), "{err}");
    assert!(err.contains("state change in step 1:\n"), "{err}");
    assert!(err.lines().any(|l| l.starts_with("+ l2 : Int -> ⊤(0,")), "{err}");
}

#[test]
fn corpus_passes_with_small_suites() {
    let o = rizzo(&["corpus", "--traces", "3", "--max-len", "5"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.lines().all(|l| l.starts_with("ok") || l.starts_with("     ")), "{out}");
    assert!(out.contains("ok   reject skip"), "{out}");
}
