//! Executable checks of the runtime's guarantees, run alongside or around
//! real executions: typing is preserved, `ticked` agrees with `clock`, no
//! reachable cell is left stale, runs are deterministic and causal, and
//! every step finishes within its budget.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::reactive::{clock, ClockMember, InputEvent, Observer, ReactiveError, Runtime, UpdatePoint};
use crate::snapshot::{reachable, snapshots, SnapshotOptions};
use crate::store::{ChannelContext, Heap, MachineState};
use crate::syntax::{unfold, ChanId, Loc, Side, Term, Type};
use crate::typeck::{check_heap_now, check_store, elaborate, heaptype, typecheck, HeapContext, TypingContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Oracle {
    Preservation,
    TickClock,
    NoLeak,
    Determinism,
    Causality,
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Oracle::Preservation => "preservation",
            Oracle::TickClock => "tick-clock",
            Oracle::NoLeak => "no-leak",
            Oracle::Determinism => "determinism",
            Oracle::Causality => "causality",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub oracle: Oracle,
    /// 0 is the initial state, `i` the state after the `i`th event.
    pub step: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed at step {}: {}", self.oracle, self.step, self.message)
    }
}

/// A step that could not complete.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fault {
    pub step: usize,
    pub error: ReactiveError,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {} faulted: {}", self.step, self.error)
    }
}

/// Which per-step checks to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Checks {
    pub preservation: bool,
    pub tick_clock: bool,
    pub no_leak: bool,
}

impl Checks {
    pub fn all() -> Checks {
        Checks { preservation: true, tick_clock: true, no_leak: true }
    }
}

#[derive(Clone, Debug)]
pub struct Run {
    /// The initial state followed by one state per completed event.
    pub states: Vec<MachineState>,
    pub violations: Vec<Violation>,
    pub fault: Option<Fault>,
    /// Largest number of evaluation steps any single step used.
    pub max_eval_steps: u64,
}

impl Run {
    pub fn ok(&self) -> bool {
        self.fault.is_none() && self.violations.is_empty()
    }
}

struct StepChecker<'a> {
    checks: Checks,
    step: usize,
    decisions: BTreeMap<Loc, bool>,
    store_checked: bool,
    violations: &'a mut Vec<Violation>,
}

impl StepChecker<'_> {
    fn fail(&mut self, oracle: Oracle, message: String) {
        self.violations.push(Violation { oracle, step: self.step, message });
    }
}

impl Observer for StepChecker<'_> {
    fn before_update(&mut self, p: &UpdatePoint<'_>) {
        if self.checks.preservation && !self.store_checked {
            self.store_checked = true;
            if let Err(e) = check_store(&p.env.channels, &p.env.store) {
                self.fail(Oracle::Preservation, format!("store before the sweep: {e}"));
            }
        }
        if self.checks.tick_clock {
            match predicted_tick(p.pre, &p.env.store.now, p.event, &p.cell.signal.tail) {
                Ok(expect) if expect != p.ticked => self.fail(
                    Oracle::TickClock,
                    format!("cell {}: ticked is {} but its clock says {}", p.cell.loc, p.ticked, expect),
                ),
                Ok(_) => {}
                Err(e) => self.fail(Oracle::TickClock, format!("cell {}: no clock: {e}", p.cell.loc)),
            }
        }
        self.decisions.insert(p.cell.loc, p.ticked);
    }
}

/// A delayed computation ticks exactly when the event's channel is in its
/// clock, or a partial signal in its clock has just produced a value.
fn predicted_tick(pre: &Heap, now: &Heap, ev: &InputEvent, tail: &Term) -> Result<bool, ReactiveError> {
    let members = clock(pre, tail)?;
    Ok(members.iter().any(|m| match m {
        ClockMember::Channel(k) => *k == ev.channel,
        ClockMember::Signal(l) => now.get(*l).is_some_and(|c| {
            c.signal.updated && matches!(&*c.signal.head, Term::Inj { side: Side::Left, .. })
        }),
    }))
}

fn check_state(st: &MachineState, ty: &Type, step: usize, out: &mut Vec<Violation>) {
    if let Err(e) = check_heap_now(&st.channels, &st.heap) {
        out.push(Violation { oracle: Oracle::Preservation, step, message: format!("heap: {e}") });
    }
    if let Err(e) = typecheck(&TypingContext::new(), &heaptype(&st.heap), &st.channels, &st.result, ty) {
        out.push(Violation { oracle: Oracle::Preservation, step, message: format!("result is not a {ty}: {e}") });
    }
}

/// Cells reachable from the result must exist; those that did not tick
/// keep their contents and ⊥, those that did are ⊤, and fresh ones are ⊥.
fn check_no_leak(
    pre: Option<&Heap>,
    post: &MachineState,
    decisions: &BTreeMap<Loc, bool>,
    step: usize,
    out: &mut Vec<Violation>,
) {
    let mut fail = |message: String| out.push(Violation { oracle: Oracle::NoLeak, step, message });
    if let Some(pre) = pre {
        let missed: Vec<Loc> = pre.locations().filter(|l| !decisions.contains_key(l)).collect();
        if !missed.is_empty() {
            fail(format!("cells never brought up to date: {missed:?}"));
        }
    }
    for l in reachable(&post.heap, &post.result) {
        let Some(cell) = post.heap.get(l) else {
            fail(format!("{l} is reachable but not in the heap"));
            continue;
        };
        match pre.and_then(|h| h.get(l)) {
            Some(old) => {
                let ticked = decisions.get(&l).copied().unwrap_or(false);
                if cell.signal.updated != ticked {
                    fail(format!("{l} has flag {} but ticked is {ticked}", crate::snapshot::flag(cell.signal.updated)));
                }
                if !ticked && (cell.signal.head != old.signal.head || cell.signal.tail != old.signal.tail) {
                    fail(format!("{l} changed without ticking"));
                }
            }
            None if cell.signal.updated => fail(format!("{l} was allocated in this step but is marked updated")),
            None => {}
        }
    }
}

/// Initialise `term` and feed it `events`, checking as configured. Stops at
/// the first fault.
pub fn run_checked(
    runtime: &mut Runtime,
    term: &Arc<Term>,
    ty: &Type,
    channels: ChannelContext,
    events: &[InputEvent],
    checks: Checks,
) -> Run {
    let mut run = Run { states: Vec::new(), violations: Vec::new(), fault: None, max_eval_steps: 0 };
    let init = match runtime.init_step(term, channels) {
        Ok(st) => st,
        Err(error) => {
            run.fault = Some(Fault { step: 0, error });
            return run;
        }
    };
    run.max_eval_steps = runtime.steps_used();
    if checks.preservation {
        check_state(&init, ty, 0, &mut run.violations);
    }
    if checks.no_leak {
        check_no_leak(None, &init, &BTreeMap::new(), 0, &mut run.violations);
    }
    run.states.push(init);
    for (i, ev) in events.iter().enumerate() {
        let step = i + 1;
        let pre = run.states.last().expect("init state").clone();
        let mut checker = StepChecker {
            checks,
            step,
            decisions: BTreeMap::new(),
            store_checked: false,
            violations: &mut run.violations,
        };
        let result = runtime.reactive_step_observed(pre.clone(), ev, &mut checker);
        let decisions = std::mem::take(&mut checker.decisions);
        run.max_eval_steps = run.max_eval_steps.max(runtime.steps_used());
        let post = match result {
            Ok(st) => st,
            Err(error) => {
                run.fault = Some(Fault { step, error });
                return run;
            }
        };
        if checks.preservation {
            check_state(&post, ty, step, &mut run.violations);
            if !pre.channels.is_subsequence_of(&post.channels) {
                run.violations.push(Violation {
                    oracle: Oracle::Preservation,
                    step,
                    message: "the channel context lost entries".into(),
                });
            }
        }
        if checks.no_leak {
            check_no_leak(Some(&pre.heap), &post, &decisions, step, &mut run.violations);
        }
        run.states.push(post);
    }
    run
}

fn canonical(states: &[MachineState], events: &[InputEvent]) -> Vec<String> {
    snapshots(states, events, SnapshotOptions::default()).iter().map(|s| s.to_text()).collect()
}

/// Describe the first difference between two snapshot streams.
pub fn first_difference(a: &[String], b: &[String]) -> Option<(usize, String)> {
    let n = a.len().max(b.len());
    (0..n).find_map(|i| {
        let (x, y) = (a.get(i).map(String::as_str).unwrap_or(""), b.get(i).map(String::as_str).unwrap_or(""));
        (x != y).then(|| (i, line_diff(x, y)))
    })
}

/// Lines only in `a` prefixed `- `, then lines only in `b` prefixed `+ `.
pub fn line_diff(a: &str, b: &str) -> String {
    let (la, lb): (BTreeSet<&str>, BTreeSet<&str>) = (a.lines().collect(), b.lines().collect());
    let mut s = String::new();
    for l in a.lines().filter(|l| !lb.contains(l)) {
        s.push_str(&format!("- {l}\n"));
    }
    for l in b.lines().filter(|l| !la.contains(l)) {
        s.push_str(&format!("+ {l}\n"));
    }
    s
}

/// Replay a run from scratch and compare snapshot bytes.
pub fn check_determinism(
    runtime: &Runtime,
    term: &Arc<Term>,
    ty: &Type,
    channels: &ChannelContext,
    events: &[InputEvent],
    first: &Run,
) -> Option<Violation> {
    let second = run_checked(&mut runtime.clone(), term, ty, channels.clone(), events, Checks::default());
    let (a, b) = (canonical(&first.states, events), canonical(&second.states, events));
    if first.fault != second.fault {
        return Some(Violation {
            oracle: Oracle::Determinism,
            step: first.states.len().min(second.states.len()),
            message: format!("faults differ: {:?} vs {:?}", first.fault, second.fault),
        });
    }
    first_difference(&a, &b).map(|(step, diff)| Violation {
        oracle: Oracle::Determinism,
        step,
        message: format!("replay differs:\n{diff}"),
    })
}

// Random inputs.

/// A random closed value of `ty`, or None for types with no literal values.
pub fn random_value(ty: &Type, rng: &mut impl Rng, depth: u32) -> Option<Arc<Term>> {
    Some(match ty {
        Type::Unit => Term::unit(),
        Type::Int => Term::int(rng.gen_range(-20..=120)),
        Type::Char => Arc::new(Term::Char(rng.gen_range(b'a'..=b'z') as char)),
        Type::Str => {
            let len = rng.gen_range(0..6);
            let s: String = (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
            Arc::new(Term::Str(s.into()))
        }
        Type::Prod(a, b) => Term::pair(random_value(a, rng, depth)?, random_value(b, rng, depth)?),
        Type::Sum(a, b) => {
            let left = random_value(a, rng, depth);
            let right = random_value(b, rng, depth);
            match (left, right) {
                (Some(l), Some(r)) => {
                    if rng.gen_bool(0.5) {
                        Term::inj(Side::Left, None, l)
                    } else {
                        Term::inj(Side::Right, None, r)
                    }
                }
                (Some(l), None) => Term::inj(Side::Left, None, l),
                (None, Some(r)) => Term::inj(Side::Right, None, r),
                (None, None) => return None,
            }
        }
        Type::Mu(..) => {
            // Past the depth limit, keep trying until a non-recursive branch
            // comes up; give up after a while.
            let body = unfold(ty)?;
            let tries = if depth == 0 { 32 } else { 1 };
            let mut v = None;
            for _ in 0..tries {
                v = random_value(&body, rng, depth.saturating_sub(1));
                if v.as_ref().is_some_and(|t| depth > 0 || !mentions_into(t)) {
                    break;
                }
            }
            Term::into(None, v?)
        }
        Type::Var(_) | Type::Fun(..) | Type::Later(_) | Type::Delay(_) | Type::Sig(_) | Type::Chan(_) => return None,
    })
}

fn mentions_into(t: &Term) -> bool {
    match t {
        Term::Into { .. } => true,
        Term::Pair(a, b) => mentions_into(a) || mentions_into(b),
        Term::Inj { body, .. } => mentions_into(body),
        _ => false,
    }
}

/// Whether `ty` has closed literal values that can be sent on a channel.
pub fn has_literals(ty: &Type) -> bool {
    match ty {
        Type::Unit | Type::Int | Type::Char | Type::Str => true,
        Type::Prod(a, b) => has_literals(a) && has_literals(b),
        Type::Sum(a, b) => has_literals(a) || has_literals(b),
        Type::Mu(_, body) => has_literals(body),
        Type::Var(_) | Type::Fun(..) | Type::Later(_) | Type::Delay(_) | Type::Sig(_) | Type::Chan(_) => false,
    }
}

/// A random event on one of the channels that can carry literal values.
pub fn random_event(channels: &ChannelContext, rng: &mut impl Rng) -> Option<InputEvent> {
    let usable: Vec<&(ChanId, Type)> = channels.iter().filter(|(_, t)| has_literals(t)).collect();
    let (k, ty) = usable.choose(rng)?;
    let v = random_value(ty, rng, 3)?;
    let payload = elaborate(&TypingContext::new(), &HeapContext::new(), channels, &v, ty).ok()?;
    Some(InputEvent { channel: *k, payload })
}

/// Extend `state` with up to `len` random events, choosing each from the
/// channels known at that point. Returns the events actually generated.
pub fn random_events(
    runtime: &mut Runtime,
    mut state: MachineState,
    len: usize,
    rng: &mut impl Rng,
) -> Result<Vec<InputEvent>, ReactiveError> {
    let mut events = Vec::new();
    for _ in 0..len {
        let Some(ev) = random_event(&state.channels, rng) else { break };
        state = runtime.reactive_step(state, &ev)?;
        events.push(ev);
    }
    Ok(events)
}

/// Generate two traces sharing their first `n` events, run both from
/// scratch, and compare the states after the shared prefix.
pub fn check_causality(
    runtime: &Runtime,
    term: &Arc<Term>,
    ty: &Type,
    channels: &ChannelContext,
    prefix_len: usize,
    suffix_len: usize,
    rng: &mut impl Rng,
) -> Result<Option<Violation>, Fault> {
    let mut rt = runtime.clone();
    let init = rt.init_step(term, channels.clone()).map_err(|error| Fault { step: 0, error })?;
    let prefix = random_events(&mut rt, init.clone(), prefix_len, rng).map_err(|error| Fault { step: 0, error })?;
    let mut at_n = init;
    for ev in &prefix {
        at_n = rt.reactive_step(at_n, ev).map_err(|error| Fault { step: 0, error })?;
    }
    let mut a = prefix.clone();
    let mut b = prefix.clone();
    a.extend(random_events(&mut rt, at_n.clone(), suffix_len, rng).map_err(|error| Fault { step: 0, error })?);
    b.extend(random_events(&mut rt, at_n, suffix_len, rng).map_err(|error| Fault { step: 0, error })?);
    let n = prefix.len();
    let ra = run_checked(&mut runtime.clone(), term, ty, channels.clone(), &a, Checks::default());
    let rb = run_checked(&mut runtime.clone(), term, ty, channels.clone(), &b, Checks::default());
    for r in [&ra, &rb] {
        if let Some(f) = &r.fault {
            return Err(f.clone());
        }
    }
    if ra.states[n] == rb.states[n] {
        return Ok(None);
    }
    let (sa, sb) = (canonical(&ra.states[..=n], &a[..n]), canonical(&rb.states[..=n], &b[..n]));
    let diff = first_difference(&sa, &sb).map(|(_, d)| d).unwrap_or_default();
    Ok(Some(Violation {
        oracle: Oracle::Causality,
        step: n,
        message: format!("runs sharing {n} events disagree on state {n}:\n{diff}"),
    }))
}

/// Settings for [`oracle_suite`].
#[derive(Clone, Copy, Debug)]
pub struct SuiteConfig {
    pub budget: u64,
    /// Random traces for the per-step and determinism checks.
    pub traces: usize,
    pub max_len: usize,
    /// Random trace pairs for the causality check.
    pub pairs: usize,
    pub seed: u64,
    /// Collect unreachable cells after every step.
    pub collect: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { budget: crate::eval::DEFAULT_BUDGET, traces: 50, max_len: 30, pairs: 50, seed: 0, collect: false }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub runs: usize,
    /// Reactive steps executed by the checked runs.
    pub steps: usize,
    pub max_eval_steps: u64,
    pub violations: Vec<Violation>,
    pub faults: Vec<Fault>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty() && self.faults.is_empty()
    }

    pub fn count(&self, oracle: Oracle) -> usize {
        self.violations.iter().filter(|v| v.oracle == oracle).count()
    }

    fn absorb(&mut self, run: Run) {
        self.runs += 1;
        self.steps += run.states.len().saturating_sub(1);
        self.max_eval_steps = self.max_eval_steps.max(run.max_eval_steps);
        self.violations.extend(run.violations);
        self.faults.extend(run.fault);
    }
}

/// Run every oracle over random traces of one program, plus `given` traces.
pub fn oracle_suite(
    term: &Arc<Term>,
    ty: &Type,
    channels: &ChannelContext,
    given: &[Vec<InputEvent>],
    cfg: SuiteConfig,
) -> SuiteReport {
    let mut rng: ChaCha8Rng = rand::SeedableRng::seed_from_u64(cfg.seed);
    let mut template = Runtime::new(cfg.budget);
    template.collect = cfg.collect;
    let mut report = SuiteReport::default();
    let mut traces: Vec<Vec<InputEvent>> = given.to_vec();
    for _ in 0..cfg.traces {
        let len = rng.gen_range(0..=cfg.max_len);
        let mut rt = template.clone();
        let generated = rt
            .init_step(term, channels.clone())
            .and_then(|init| random_events(&mut rt, init, len, &mut rng));
        match generated {
            Ok(t) => traces.push(t),
            Err(error) => report.faults.push(Fault { step: 0, error }),
        }
    }
    for events in &traces {
        let run = run_checked(&mut template.clone(), term, ty, channels.clone(), events, Checks::all());
        if let Some(v) = check_determinism(&template, term, ty, channels, events, &run) {
            report.violations.push(v);
        }
        report.absorb(run);
    }
    for _ in 0..cfg.pairs {
        let n = rng.gen_range(0..=cfg.max_len / 2);
        let m = rng.gen_range(1..=cfg.max_len - n);
        match check_causality(&template, term, ty, channels, n, m, &mut rng) {
            Ok(Some(v)) => report.violations.push(v),
            Ok(None) => {}
            Err(f) => report.faults.push(f),
        }
    }
    report
}
