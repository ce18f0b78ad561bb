//! Expected traces and suite runners shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;
use std::time::{Duration, Instant};

use rizzo_rt::driver::{load, run_events, Loaded, RunConfig};
use rizzo_rt::frontend::Program;
use rizzo_rt::oracle::{oracle_suite, Checks, Fault, Oracle, SuiteConfig, Violation};
use rizzo_rt::reactive::InputEvent;
use rizzo_rt::snapshot::{reachable, renumber_locations, visible_locations};
use rizzo_rt::stdlib::{file, manifest};
use rizzo_rt::store::MachineState;
use rizzo_rt::syntax::{alpha_eq_erased, Term, Type};

pub fn loaded(program: &str) -> Loaded {
    load(file(program).expect("bundled program")).expect("corpus program loads")
}

/// A run with every per-step check and a determinism replay, its states
/// restricted to reachable cells and renumbered `l1, l2, ...` in order.
pub struct Golden {
    pub loaded: Loaded,
    pub events: Vec<InputEvent>,
    pub states: Vec<MachineState>,
    pub violations: Vec<Violation>,
    pub fault: Option<Fault>,
    pub elapsed: Duration,
}

pub fn golden(program: &str, trace: &str) -> Golden {
    let start = Instant::now();
    let loaded = loaded(program);
    let events = loaded.events(file(trace).expect("bundled trace")).expect("trace resolves");
    let cfg = RunConfig { checks: Checks::all(), check_determinism: true, hide_unreachable: true, ..Default::default() };
    let out = run_events(&loaded, events.clone(), cfg);
    let elapsed = start.elapsed();
    let keep = visible_locations(&out.run.states);
    let states = renumber_locations(&out.run.states, &keep);
    Golden { loaded, events, states, violations: out.run.violations, fault: out.run.fault, elapsed }
}

/// A visible cell: location number, printed head, updated flag.
pub type CellWant = (u32, &'static str, bool);

pub fn visible(st: &MachineState) -> Vec<(u32, String, bool)> {
    let live = reachable(&st.heap, &st.result);
    st.heap
        .iter()
        .filter(|c| live.contains(&c.loc))
        .map(|c| (c.loc.0, c.signal.head.to_string(), c.signal.updated))
        .collect()
}

pub fn compare_cells(g: &Golden, want: &[&[CellWant]]) -> Result<(), String> {
    if g.states.len() != want.len() {
        return Err(format!("expected {} states, got {}", want.len(), g.states.len()));
    }
    for (i, (st, w)) in g.states.iter().zip(want).enumerate() {
        let got = visible(st);
        let w: Vec<(u32, String, bool)> = w.iter().map(|(l, h, f)| (*l, h.to_string(), *f)).collect();
        if got != w {
            return Err(format!("state {i}: expected {w:?}, got {got:?}"));
        }
    }
    Ok(())
}

/// The fixed point a definition compiles to, as it appears inside signals.
pub fn def_fix(program: &Program, name: &str, targs: &[Type]) -> Arc<Term> {
    let compiled = program.compile_def(name, targs).expect("definition compiles");
    let term = compiled.elaborate().expect("definition typechecks");
    match &*term {
        Term::App(_, arg) if matches!(&**arg, Term::Fix { .. }) => arg.clone(),
        _ => panic!("{name} is not a single recursive definition: {term}"),
    }
}

/// The tail `mkSig d` leaves in a cell: advance `d`, then cons the value onto
/// another `mkSig d`.
pub fn delayed_sig(mk_sig: &Arc<Term>, d: Arc<Term>) -> Arc<Term> {
    let step = Term::lam("r", Term::lam("x", Term::cons(None, Term::var("x"), Term::app(Term::var("r"), d.clone()))));
    Term::ape(Term::delay(Term::app(step, mk_sig.clone())), d)
}

fn tail_of(st: &MachineState, l: u32) -> Result<Arc<Term>, String> {
    st.heap
        .get(rizzo_rt::syntax::Loc(l))
        .map(|c| c.signal.tail.clone())
        .ok_or_else(|| format!("l{l} missing"))
}

fn expect_tail(st: &MachineState, i: usize, l: u32, want: &Term) -> Result<(), String> {
    let got = tail_of(st, l)?;
    if alpha_eq_erased(&got, want) {
        Ok(())
    } else {
        Err(format!("state {i}: tail of l{l} is {got}, expected {want}"))
    }
}

pub fn sample_golden() -> (Golden, Result<(), String>) {
    let g = golden("sample.rzo", "sample.trace");
    let want: [&[CellWant]; 4] = [
        &[(1, "0", false), (2, "'a'", false), (3, "(0, 'a')", false)],
        &[(1, "1", true), (2, "'a'", false), (3, "(1, 'a')", true)],
        &[(1, "1", false), (2, "'b'", true), (3, "(1, 'a')", false)],
        &[(1, "2", true), (2, "'b'", false), (3, "(2, 'b')", true)],
    ];
    let r = compare_cells(&g, &want).and_then(|()| {
        let p = &g.loaded.program;
        let mk_sig = def_fix(p, "mkSig", &[Type::Int]);
        let map = def_fix(p, "map", &[Type::Int, Type::prod(Type::Int, Type::Char)]);
        let sp = Term::ape(
            Term::delay(Term::app(
                Term::lam("r", Term::app(Term::var("r"), Term::lam("x", Term::pair(Term::var("x"), Term::head(Term::loc(2)))))),
                map,
            )),
            Term::tail(Term::loc(1)),
        );
        for (i, st) in g.states.iter().enumerate() {
            expect_tail(st, i, 1, &delayed_sig(&mk_sig, Term::wait(Term::chan_lit(1))))?;
            expect_tail(st, i, 2, &delayed_sig(&mk_sig, Term::wait(Term::chan_lit(2))))?;
            expect_tail(st, i, 3, &sp)?;
        }
        Ok(())
    });
    (g, r)
}

pub fn filter_golden() -> (Golden, Result<(), String>) {
    let g = golden("filter.rzo", "filter.trace");
    // l3 is the input signal, allocated by the first step.
    let want: [&[CellWant]; 3] = [
        &[(1, "in2 ()", false), (2, "0", false)],
        &[(3, "1", false), (1, "in2 ()", true), (2, "0", false)],
        &[(3, "2", true), (1, "in1 2", true), (2, "2", true)],
    ];
    let r = compare_cells(&g, &want).and_then(|()| {
        let p = &g.loaded.program;
        let mk_sig = def_fix(p, "mkSig", &[Type::Int]);
        let map = def_fix(p, "map", &[Type::Int, Type::maybe(Type::Int)]);
        let from_input = delayed_sig(&mk_sig, Term::wait(Term::chan_lit(1)));
        for (i, st) in g.states.iter().enumerate() {
            expect_tail(st, i, 2, &delayed_sig(&mk_sig, Term::watch(Term::loc(1))))?;
            if i >= 1 {
                expect_tail(st, i, 3, &from_input)?;
            }
            // l1 maps the predicate over the input: first over the delayed
            // input itself, then over the input signal's tail.
            let t = tail_of(st, 1)?;
            let ok = match (&*t, i) {
                (Term::ApE(f, d), 0) => matches!(&**f, Term::Delay(_)) && alpha_eq_erased(d, &from_input),
                (Term::ApE(f, d), _) => {
                    alpha_eq_erased(d, &Term::tail(Term::loc(3)))
                        && matches!(&**f, Term::Delay(b) if matches!(&**b, Term::App(_, m) if alpha_eq_erased(m, &map)))
                }
                _ => false,
            };
            if !ok {
                return Err(format!("state {i}: unexpected tail of l1: {t}"));
            }
        }
        Ok(())
    });
    (g, r)
}

/// Heads of the result signal after each state of a run.
pub fn result_heads(g: &Golden) -> Vec<(String, bool)> {
    g.states
        .iter()
        .map(|st| {
            let Term::Loc(l) = &*st.result else { panic!("result is not a signal") };
            let c = st.heap.get(*l).expect("result cell");
            (c.signal.head.to_string(), c.signal.updated)
        })
        .collect()
}

/// Totals over the oracle suites of every runnable corpus program.
#[derive(Default)]
pub struct Totals {
    pub programs: usize,
    pub runs: usize,
    pub pairs: usize,
    pub steps: usize,
    pub max_eval_steps: u64,
    pub violations: Vec<(String, Violation)>,
    pub faults: Vec<(String, Fault)>,
}

impl Totals {
    pub fn count(&self, oracle: Oracle) -> usize {
        self.violations.iter().filter(|(_, v)| v.oracle == oracle).count()
    }

    pub fn first(&self, oracle: Oracle) -> Option<String> {
        self.violations.iter().find(|(_, v)| v.oracle == oracle).map(|(p, v)| format!("{p}: {v}"))
    }
}

pub fn corpus_suites(cfg: SuiteConfig) -> Totals {
    let mut t = Totals::default();
    for p in manifest().programs {
        let l = load(p.source()).expect("corpus program loads");
        let given: Vec<Vec<InputEvent>> =
            p.trace_source().map(|src| l.events(src).expect("bundled trace resolves")).into_iter().collect();
        let r = oracle_suite(&l.term, &l.ty, &l.channels, &given, cfg);
        t.programs += 1;
        t.runs += r.runs;
        t.pairs += cfg.pairs;
        t.steps += r.steps;
        t.max_eval_steps = t.max_eval_steps.max(r.max_eval_steps);
        t.violations.extend(r.violations.into_iter().map(|v| (p.name.clone(), v)));
        t.faults.extend(r.faults.into_iter().map(|f| (p.name.clone(), f)));
    }
    t
}
