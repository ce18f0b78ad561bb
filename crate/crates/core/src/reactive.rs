//! The reactive machine: tick tests, clocks, advancing delayed computations,
//! and the per-event sweep that brings every stored signal up to date.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::eval::{EvalError, Evaluator, DEFAULT_BUDGET};
use crate::store::{reachable, Cell, ChannelContext, Environment, Heap, MachineState, Store, StoreError};
use crate::syntax::{is_value, ChanId, Loc, Side, Term, Value};
use crate::typeck::{typecheck, HeapContext, TypeError, TypingContext};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputEvent {
    pub channel: ChanId,
    pub payload: Value,
}

impl fmt::Display for InputEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <- {}", self.channel, self.payload)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClockMember {
    Channel(ChanId),
    Signal(Loc),
}

pub type Clock = BTreeSet<ClockMember>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReactiveError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("not a delayed computation: {0}")]
    NotLater(String),
    #[error("advance called on a computation that has not ticked: {0}")]
    NotTicked(String),
    #[error("advancing a signal tail produced {0}, not a location")]
    NotALocation(String),
    #[error("location {0} is not in the current heap")]
    Dangling(Loc),
    #[error("the earlier heap changed while advancing {0}")]
    EarlierChanged(Loc),
    #[error("update called with an empty earlier heap")]
    NothingToUpdate,
    #[error("event on undeclared channel {0}")]
    UnknownChannel(ChanId),
    #[error("payload for {channel} is not a value")]
    PayloadNotValue { channel: ChanId },
    #[error("payload for {channel} is ill-typed: {error}")]
    PayloadType { channel: ChanId, error: TypeError },
}

fn short(v: &Term) -> String {
    let mut s = v.to_string();
    if s.len() > 120 {
        s.truncate(120);
        s.push_str(" ...");
    }
    s
}

/// Whether the delayed computation `v` fires on `ev`, given the cells
/// already brought up to date in `now`.
pub fn ticked(now: &Heap, ev: &InputEvent, v: &Term) -> Result<bool, ReactiveError> {
    match v {
        Term::Never(_) => Ok(false),
        Term::ApE(_, w) => ticked(now, ev, w),
        Term::Wait(k) => match &**k {
            Term::ChanLit(k) => Ok(*k == ev.channel),
            _ => Err(ReactiveError::NotLater(short(v))),
        },
        Term::Watch(l) => {
            let cell = located(now, l, v)?;
            Ok(cell.signal.updated && matches!(&*cell.signal.head, Term::Inj { side: Side::Left, .. }))
        }
        Term::Tail(l) => Ok(located(now, l, v)?.signal.updated),
        Term::Sync(a, b) => {
            let ta = ticked(now, ev, a)?;
            let tb = ticked(now, ev, b)?;
            Ok(ta || tb)
        }
        _ => Err(ReactiveError::NotLater(short(v))),
    }
}

fn located<'h>(heap: &'h Heap, l: &Term, whole: &Term) -> Result<&'h Cell, ReactiveError> {
    match l {
        Term::Loc(l) => heap.get(*l).ok_or(ReactiveError::Dangling(*l)),
        _ => Err(ReactiveError::NotLater(short(whole))),
    }
}

/// The channels and partial signals whose activity can make `v` tick.
/// A `tail l` defers to the clock of l's stored tail, read in the part of
/// the heap to the left of l.
pub fn clock(heap: &Heap, v: &Term) -> Result<Clock, ReactiveError> {
    let mut out = Clock::new();
    clock_into(heap, heap.len(), v, &mut out)?;
    Ok(out)
}

fn clock_into(heap: &Heap, limit: usize, v: &Term, out: &mut Clock) -> Result<(), ReactiveError> {
    match v {
        Term::Never(_) => Ok(()),
        Term::ApE(_, w) => clock_into(heap, limit, w, out),
        Term::Wait(k) => match &**k {
            Term::ChanLit(k) => {
                out.insert(ClockMember::Channel(*k));
                Ok(())
            }
            _ => Err(ReactiveError::NotLater(short(v))),
        },
        Term::Watch(l) => match &**l {
            Term::Loc(l) => {
                out.insert(ClockMember::Signal(*l));
                Ok(())
            }
            _ => Err(ReactiveError::NotLater(short(v))),
        },
        Term::Tail(l) => match &**l {
            Term::Loc(l) => {
                let pos = heap.position(*l).filter(|p| *p < limit).ok_or(ReactiveError::Dangling(*l))?;
                let tail = heap.at(pos).expect("position is in range").signal.tail.clone();
                clock_into(heap, pos, &tail, out)
            }
            _ => Err(ReactiveError::NotLater(short(v))),
        },
        Term::Sync(a, b) => {
            clock_into(heap, limit, a, out)?;
            clock_into(heap, limit, b, out)
        }
        _ => Err(ReactiveError::NotLater(short(v))),
    }
}

/// Deliberate misbehaviours used to check that the oracles notice them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// Mark cells that did not tick as updated.
    FlipNonTickedFlag,
}

/// What an observer sees just before a cell is updated.
pub struct UpdatePoint<'a> {
    /// The heap as it was when the step began.
    pub pre: &'a Heap,
    pub env: &'a Environment,
    pub event: &'a InputEvent,
    pub cell: &'a Cell,
    pub ticked: bool,
}

/// Hooks called during a reactive step. Used by the oracles.
pub trait Observer {
    fn before_update(&mut self, _point: &UpdatePoint<'_>) {}
    fn after_update(&mut self, _env: &Environment) {}
}

/// An observer that does nothing.
pub struct Quiet;

impl Observer for Quiet {}

/// Drives init and reactive steps with a per-step evaluation budget.
#[derive(Clone, Debug)]
pub struct Runtime {
    pub budget: u64,
    pub mutation: Option<Mutation>,
    /// Drop cells the result can no longer reach after each step. Off by
    /// default: the reference semantics never deallocates.
    pub collect: bool,
    evaluator: Evaluator,
}

impl Default for Runtime {
    fn default() -> Self {
        Runtime::new(DEFAULT_BUDGET)
    }
}

impl Runtime {
    pub fn new(budget: u64) -> Runtime {
        Runtime { budget, mutation: None, collect: false, evaluator: Evaluator::new(budget) }
    }

    pub fn with_mutation(mut self, m: Mutation) -> Runtime {
        self.mutation = Some(m);
        self
    }

    pub fn with_collection(mut self) -> Runtime {
        self.collect = true;
        self
    }

    /// Steps used by the most recent init or reactive step.
    pub fn steps_used(&self) -> u64 {
        self.evaluator.steps()
    }

    /// Evaluate a closed program in the empty store.
    pub fn init_step(&mut self, t: &Arc<Term>, channels: ChannelContext) -> Result<MachineState, ReactiveError> {
        self.evaluator = Evaluator::new(self.budget);
        let mut env = Environment::new(channels);
        let result = self.evaluator.eval(t, &mut env)?;
        debug_assert!(env.store.earlier.is_empty());
        let mut heap = env.store.now;
        if self.collect {
            let live = reachable(&heap, &result);
            heap.retain(|c| live.contains(&c.loc));
        }
        Ok(MachineState { result, heap, channels: env.channels })
    }

    /// Turn a ticked delayed computation into the value it stands for.
    pub fn advance(&mut self, u: &Value, ev: &InputEvent, env: &mut Environment) -> Result<Value, ReactiveError> {
        match &**u {
            Term::ApE(f, v) => {
                let Term::Delay(t) = &**f else { return Err(ReactiveError::NotLater(short(u))) };
                let v2 = self.advance(v, ev, env)?;
                Ok(self.evaluator.eval(&Term::app(t.clone(), v2), env)?)
            }
            Term::Watch(l) => {
                let cell = located(&env.store.now, l, u)?;
                match &*cell.signal.head {
                    Term::Inj { side: Side::Left, body, .. } if cell.signal.updated => Ok(body.clone()),
                    _ => Err(ReactiveError::NotTicked(short(u))),
                }
            }
            Term::Wait(k) => match &**k {
                Term::ChanLit(k) if *k == ev.channel => Ok(ev.payload.clone()),
                _ => Err(ReactiveError::NotTicked(short(u))),
            },
            Term::Tail(l) => {
                if located(&env.store.now, l, u)?.signal.updated {
                    Ok(l.clone())
                } else {
                    Err(ReactiveError::NotTicked(short(u)))
                }
            }
            Term::Sync(a, b) => {
                let ta = ticked(&env.store.now, ev, a)?;
                let tb = ticked(&env.store.now, ev, b)?;
                match (ta, tb) {
                    (true, true) => {
                        let a2 = self.advance(a, ev, env)?;
                        let b2 = self.advance(b, ev, env)?;
                        Ok(Term::inj(Side::Right, None, Term::pair(a2, b2)))
                    }
                    (true, false) => {
                        let a2 = self.advance(a, ev, env)?;
                        Ok(Term::inj(Side::Left, None, Term::inj(Side::Left, None, a2)))
                    }
                    (false, true) => {
                        let b2 = self.advance(b, ev, env)?;
                        Ok(Term::inj(Side::Left, None, Term::inj(Side::Right, None, b2)))
                    }
                    (false, false) => Err(ReactiveError::NotTicked(short(u))),
                }
            }
            Term::Never(_) => Err(ReactiveError::NotTicked(short(u))),
            _ => Err(ReactiveError::NotLater(short(u))),
        }
    }

    /// Bring the leftmost earlier cell up to date and move it to `now`.
    pub fn update_one(
        &mut self,
        env: &mut Environment,
        ev: &InputEvent,
        pre: &Heap,
        observer: &mut dyn Observer,
    ) -> Result<(), ReactiveError> {
        let cell = env.store.earlier.front().cloned().ok_or(ReactiveError::NothingToUpdate)?;
        let fired = ticked(&env.store.now, ev, &cell.signal.tail)?;
        observer.before_update(&UpdatePoint { pre, env, event: ev, cell: &cell, ticked: fired });
        if !fired {
            let mut cell = env.store.take_earliest().expect("front exists");
            cell.signal.updated = self.mutation == Some(Mutation::FlipNonTickedFlag);
            env.store.now.push(cell)?;
        } else {
            let earlier_len = env.store.earlier.len();
            let l2 = self.advance(&cell.signal.tail, ev, env)?;
            if env.store.earlier.len() != earlier_len || env.store.earlier.front() != Some(&cell) {
                return Err(ReactiveError::EarlierChanged(cell.loc));
            }
            let Term::Loc(l2) = &*l2 else { return Err(ReactiveError::NotALocation(short(&l2))) };
            let fresh = env.store.lookup_now(*l2)?.signal.clone();
            let mut cell = env.store.take_earliest().expect("front exists");
            cell.signal.head = fresh.head;
            cell.signal.tail = fresh.tail;
            cell.signal.updated = true;
            env.store.now.push(cell)?;
        }
        observer.after_update(env);
        Ok(())
    }

    /// Process one input event: everything becomes earlier, then each cell
    /// is updated in order. The result value never changes.
    pub fn reactive_step(&mut self, st: MachineState, ev: &InputEvent) -> Result<MachineState, ReactiveError> {
        self.reactive_step_observed(st, ev, &mut Quiet)
    }

    pub fn reactive_step_observed(
        &mut self,
        st: MachineState,
        ev: &InputEvent,
        observer: &mut dyn Observer,
    ) -> Result<MachineState, ReactiveError> {
        check_event(&st.channels, ev)?;
        self.evaluator = Evaluator::new(self.budget);
        let pre = st.heap.clone();
        let mut env = Environment { store: Store::all_earlier(st.heap), channels: st.channels };
        while !env.store.earlier.is_empty() {
            self.update_one(&mut env, ev, &pre, observer)?;
        }
        let mut heap = env.store.now;
        if self.collect {
            let live = reachable(&heap, &st.result);
            heap.retain(|c| live.contains(&c.loc));
        }
        Ok(MachineState { result: st.result, heap, channels: env.channels })
    }
}

/// An event must name a known channel and carry a closed value of its type.
pub fn check_event(channels: &ChannelContext, ev: &InputEvent) -> Result<(), ReactiveError> {
    let ty = channels.get(ev.channel).ok_or(ReactiveError::UnknownChannel(ev.channel))?;
    if !is_value(&ev.payload) {
        return Err(ReactiveError::PayloadNotValue { channel: ev.channel });
    }
    typecheck(&TypingContext::new(), &HeapContext::new(), channels, &ev.payload, ty)
        .map_err(|error| ReactiveError::PayloadType { channel: ev.channel, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::StoredSignal;
    use crate::syntax::Type;

    fn cell(l: u32, head: Value, tail: Value, updated: bool) -> Cell {
        Cell { loc: Loc(l), ty: Type::maybe(Type::Int), signal: StoredSignal { head, tail, updated } }
    }

    fn ev(k: u32, n: i64) -> InputEvent {
        InputEvent { channel: ChanId(k), payload: Term::int(n) }
    }

    fn nothing() -> Value {
        Term::inj(Side::Right, None, Term::unit())
    }

    #[test]
    fn tick_tests() {
        let heap = Heap::from_cells([
            cell(1, nothing(), Term::never(None), true),
            cell(2, Term::inj(Side::Left, None, Term::int(3)), Term::never(None), true),
            cell(3, nothing(), Term::never(None), false),
        ])
        .unwrap();
        let e = ev(1, 0);
        assert!(!ticked(&heap, &e, &Term::never(None)).unwrap());
        assert!(ticked(&heap, &e, &Term::wait(Term::chan_lit(1))).unwrap());
        assert!(!ticked(&heap, &ev(2, 0), &Term::wait(Term::chan_lit(1))).unwrap());
        // updated, but to Nothing
        assert!(!ticked(&heap, &e, &Term::watch(Term::loc(1))).unwrap());
        assert!(ticked(&heap, &e, &Term::watch(Term::loc(2))).unwrap());
        assert!(ticked(&heap, &e, &Term::tail(Term::loc(1))).unwrap());
        assert!(!ticked(&heap, &e, &Term::tail(Term::loc(3))).unwrap());
        let s = Term::sync(Term::tail(Term::loc(3)), Term::ape(Term::delay(Term::unit()), Term::wait(Term::chan_lit(1))));
        assert!(ticked(&heap, &e, &s).unwrap());
        assert_eq!(ticked(&heap, &e, &Term::tail(Term::loc(9))), Err(ReactiveError::Dangling(Loc(9))));
    }

    #[test]
    fn clocks() {
        let heap = Heap::from_cells([
            cell(1, Term::int(0), Term::ape(Term::delay(Term::unit()), Term::wait(Term::chan_lit(1))), false),
            cell(2, Term::int(0), Term::tail(Term::loc(1)), false),
        ])
        .unwrap();
        assert!(clock(&heap, &Term::never(None)).unwrap().is_empty());
        let s = Term::sync(Term::wait(Term::chan_lit(1)), Term::watch(Term::loc(1)));
        let expected: Clock = [ClockMember::Channel(ChanId(1)), ClockMember::Signal(Loc(1))].into();
        assert_eq!(clock(&heap, &s).unwrap(), expected);
        // tail chains resolve through the heap prefix
        let k1: Clock = [ClockMember::Channel(ChanId(1))].into();
        assert_eq!(clock(&heap, &Term::tail(Term::loc(2))).unwrap(), k1);
        // a cell's tail may not see itself
        let bad = Heap::from_cells([cell(1, Term::int(0), Term::tail(Term::loc(1)), false)]).unwrap();
        assert_eq!(clock(&bad, &Term::tail(Term::loc(1))), Err(ReactiveError::Dangling(Loc(1))));
    }

    #[test]
    fn advance_wait_and_tail() {
        let mut rt = Runtime::default();
        let mut env = Environment::default();
        env.store.now.push(cell(1, Term::int(0), Term::never(None), true)).unwrap();
        let e = ev(1, 1);
        assert_eq!(rt.advance(&Term::wait(Term::chan_lit(1)), &e, &mut env).unwrap(), Term::int(1));
        assert_eq!(rt.advance(&Term::tail(Term::loc(1)), &e, &mut env).unwrap(), Term::loc(1));
        let both = Term::sync(Term::wait(Term::chan_lit(1)), Term::tail(Term::loc(1)));
        let out = rt.advance(&both, &e, &mut env).unwrap();
        assert_eq!(out, Term::inj(Side::Right, None, Term::pair(Term::int(1), Term::loc(1))));
        assert!(matches!(rt.advance(&Term::never(None), &e, &mut env), Err(ReactiveError::NotTicked(_))));
    }

    #[test]
    fn step_over_dead_signals_only_resets_flags() {
        let heap = Heap::from_cells([
            cell(1, Term::int(0), Term::never(None), true),
            cell(2, Term::int(1), Term::never(None), false),
        ])
        .unwrap();
        let mut channels = ChannelContext::new();
        channels.insert(ChanId(1), Type::Int);
        let st = MachineState { result: Term::loc(2), heap: heap.clone(), channels };
        let out = Runtime::default().reactive_step(st, &ev(1, 5)).unwrap();
        let flags: Vec<bool> = out.heap.iter().map(|c| c.signal.updated).collect();
        assert_eq!(flags, vec![false, false]);
        let heads: Vec<_> = out.heap.iter().map(|c| c.signal.head.clone()).collect();
        assert_eq!(heads, vec![Term::int(0), Term::int(1)]);
        assert_eq!(out.result, Term::loc(2));
    }

    #[test]
    fn events_are_validated() {
        let mut channels = ChannelContext::new();
        channels.insert(ChanId(1), Type::Int);
        let st = MachineState { result: Term::unit(), heap: Heap::new(), channels };
        let mut rt = Runtime::default();
        assert_eq!(rt.reactive_step(st.clone(), &ev(2, 0)), Err(ReactiveError::UnknownChannel(ChanId(2))));
        let bad = InputEvent { channel: ChanId(1), payload: Term::unit() };
        assert!(matches!(rt.reactive_step(st.clone(), &bad), Err(ReactiveError::PayloadType { .. })));
        let open = InputEvent { channel: ChanId(1), payload: Term::binop(crate::syntax::BinOp::Add, Term::int(1), Term::int(1)) };
        assert!(matches!(rt.reactive_step(st, &open), Err(ReactiveError::PayloadNotValue { .. })));
    }

    fn mk_sig() -> Value {
        let body = Term::lam(
            "d",
            Term::ape(
                Term::apa(
                    Term::delay(Term::lam(
                        "r'",
                        Term::lam(
                            "x",
                            Term::cons(Some(Type::Int), Term::var("x"), Term::app(Term::var("r'"), Term::var("d"))),
                        ),
                    )),
                    Term::var("r"),
                ),
                Term::var("d"),
            ),
        );
        Term::fix("r", Some(Type::fun(Type::later(Type::Int), Type::later(Type::sig(Type::Int)))), body)
    }

    #[test]
    fn single_cell_follows_its_channel() {
        let t = Term::cons(Some(Type::Int), Term::int(0), Term::app(mk_sig(), Term::wait(Term::chan_lit(1))));
        let mut channels = ChannelContext::new();
        channels.insert(ChanId(1), Type::Int);
        let mut rt = Runtime::default();
        let st = rt.init_step(&t, channels).unwrap();
        assert_eq!(st.result, Term::loc(1));
        assert_eq!(st.heap.len(), 1);
        let st = rt.reactive_step(st, &ev(1, 7)).unwrap();
        let l1 = st.heap.get(Loc(1)).unwrap();
        assert_eq!(l1.signal.head, Term::int(7));
        assert!(l1.signal.updated);
        // the advance allocated l2 and l1 took over its contents
        let l2 = st.heap.get(Loc(2)).unwrap();
        assert_eq!(l2.signal.tail, l1.signal.tail);
        assert_eq!(st.heap.locations().collect::<Vec<_>>(), vec![Loc(2), Loc(1)]);
        // other channels leave it alone
        let mut channels = st.channels.clone();
        channels.insert(ChanId(2), Type::Int);
        let st = MachineState { channels, ..st };
        let st = rt.reactive_step(st, &ev(2, 9)).unwrap();
        assert_eq!(st.heap.get(Loc(1)).unwrap().signal.head, Term::int(7));
        assert!(!st.heap.get(Loc(1)).unwrap().signal.updated);
    }

    #[test]
    fn flag_mutation_marks_untouched_cells() {
        let heap = Heap::from_cells([cell(1, Term::int(0), Term::never(None), false)]).unwrap();
        let mut channels = ChannelContext::new();
        channels.insert(ChanId(1), Type::Int);
        let st = MachineState { result: Term::loc(1), heap, channels };
        let mut rt = Runtime::default().with_mutation(Mutation::FlipNonTickedFlag);
        let out = rt.reactive_step(st, &ev(1, 0)).unwrap();
        assert!(out.heap.get(Loc(1)).unwrap().signal.updated);
    }
}
