//! One line per acceptance criterion. Exits non-zero if any fails.

mod common;

use std::time::Duration;

use common::*;
use rizzo_rt::driver::with_big_stack;
use rizzo_rt::eval::DEFAULT_BUDGET;
use rizzo_rt::oracle::{Oracle, SuiteConfig};
use rizzo_rt::stdlib::{check_corpus, Expect};

/// Random traces of up to this length run with unreachable cells collected.
const LONG: usize = 30;
/// Without collection the heap can double per event, so the reference
/// semantics is exercised on shorter traces.
const SHORT: usize = 10;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, n: u32, what: &str, result: Result<String, String>) {
        match result {
            Ok(detail) => println!("PASS criterion {n:>2} {what}: {detail}"),
            Err(detail) => {
                self.failed += 1;
                println!("FAIL criterion {n:>2} {what}: {detail}");
            }
        }
    }
}

fn golden_result(g: &Golden, r: Result<(), String>) -> Result<String, String> {
    r?;
    if let Some(f) = &g.fault {
        return Err(f.to_string());
    }
    if let Some(v) = g.violations.first() {
        return Err(v.to_string());
    }
    if g.elapsed >= Duration::from_secs(1) {
        return Err(format!("took {:?}", g.elapsed));
    }
    Ok(format!("{} states match, {:?}", g.states.len(), g.elapsed))
}

fn zero(t: &[&Totals], oracle: Oracle, what: String) -> Result<String, String> {
    let n: usize = t.iter().map(|t| t.count(oracle)).sum();
    match t.iter().find_map(|t| t.first(oracle)) {
        None => Ok(what),
        Some(first) => Err(format!("{n} violations, first: {first}")),
    }
}

fn main() {
    with_big_stack(|| {
        let mut report = Report { failed: 0 };

        let (sample, r1) = sample_golden();
        report.line(1, "golden sample trace", golden_result(&sample, r1));
        let (filter, r2) = filter_golden();
        report.line(2, "golden filter trace", golden_result(&filter, r2));

        let results = check_corpus();
        let accepted = results.iter().filter(|r| r.expect == Expect::Accept && r.passed).count();
        let rejected = results.iter().filter(|r| r.expect == Expect::Reject && r.passed).count();
        let failed: Vec<String> = results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| format!("{} ({})", r.name, r.error.as_ref().map_or("accepted".into(), |e| e.to_string())))
            .collect();
        let rules: Vec<String> = results
            .iter()
            .filter(|r| r.expect == Expect::Reject)
            .filter_map(|r| r.error.as_ref().map(|e| format!("{}: {}", r.name, e.rule())))
            .collect();
        report.line(
            3,
            "corpus typechecking",
            if failed.is_empty() {
                Ok(format!("{accepted} accepted, {rejected} rejected [{}]", rules.join(", ")))
            } else {
                Err(failed.join("; "))
            },
        );

        let long = corpus_suites(SuiteConfig { collect: true, max_len: LONG, ..Default::default() });
        let short = corpus_suites(SuiteConfig { collect: false, max_len: SHORT, ..Default::default() });
        let both = [&long, &short];
        let summary = |what: &str| {
            format!(
                "{what} over {} programs: {} runs up to {LONG} events with collection, {} runs up to {SHORT} events without",
                long.programs, long.runs, short.runs
            )
        };

        report.line(4, "determinism", zero(&both, Oracle::Determinism, summary("byte-equal replays")));
        report.line(
            5,
            "causality",
            zero(&both, Oracle::Causality, format!("{} trace pairs agree after their shared prefix", long.pairs + short.pairs)),
        );
        let steps = long.steps + short.steps;
        let preservation = zero(&both, Oracle::Preservation, format!("{steps} checked steps"))
            .and_then(|s| if steps >= 1000 { Ok(s) } else { Err(format!("only {steps} steps")) });
        report.line(6, "preservation", preservation);

        let faults: Vec<String> = both
            .iter()
            .flat_map(|t| t.faults.iter().map(|(p, f)| format!("{p}: {f}")))
            .chain(sample.fault.iter().chain(filter.fault.iter()).map(|f| f.to_string()))
            .collect();
        let max_eval = long.max_eval_steps.max(short.max_eval_steps);
        report.line(
            7,
            "productivity",
            if faults.is_empty() && max_eval <= DEFAULT_BUDGET {
                Ok(format!("no faults, at most {max_eval} of {DEFAULT_BUDGET} evaluation steps per step"))
            } else {
                Err(format!("{} faults, first: {}", faults.len(), faults.first().cloned().unwrap_or_default()))
            },
        );
        report.line(8, "tick/clock agreement", zero(&both, Oracle::TickClock, summary("every update point agrees")));
        report.line(9, "no space leak", zero(&both, Oracle::NoLeak, summary("no stale reachable cell")));

        let s = golden("sample.rzo", "contrast.trace");
        let z = golden("zip.rzo", "contrast.trace");
        let want_sample = [("(0, 'a')", false), ("(0, 'a')", false), ("(1, 'b')", true), ("(1, 'b')", false)];
        let want_zip = [("(0, 'a')", false), ("(0, 'b')", true), ("(1, 'b')", true), ("(1, 'c')", true)];
        let got_s = result_heads(&s);
        let got_z = result_heads(&z);
        let same = |got: &[(String, bool)], want: &[(&str, bool)]| {
            got.len() == want.len() && got.iter().zip(want).all(|((h, f), (wh, wf))| h == wh && f == wf)
        };
        report.line(
            10,
            "sample vs zip",
            if same(&got_s, &want_sample) && same(&got_z, &want_zip) && s.violations.is_empty() && z.violations.is_empty() {
                Ok("sample moves only on the xs event, zip on all three".into())
            } else {
                Err(format!("sample {got_s:?}, zip {got_z:?}"))
            },
        );

        if report.failed > 0 {
            println!("{} criteria failed", report.failed);
            std::process::exit(1);
        }
    });
}
