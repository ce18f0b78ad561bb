//! Big-step call-by-value evaluation over a store and channel context.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::store::{alloc_channel, alloc_location, Cell, Environment, StoreError, StoredSignal};
use crate::syntax::{
    all_names, fresh_name, name, substitute_closed, substitute_type, BinOp, Name, Side, Term, Type, Value,
};

/// Default number of evaluation steps allowed per evaluation.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("stuck at {rule}: {detail}")]
    Stuck { rule: &'static str, detail: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("evaluation exceeded its budget of {0} steps")]
    Budget(u64),
    #[error("{0} is missing the type annotation the evaluator needs")]
    MissingAnnotation(&'static str),
}

fn stuck(rule: &'static str, v: &Term) -> EvalError {
    let mut detail = v.to_string();
    if detail.len() > 120 {
        detail.truncate(120);
        detail.push_str(" ...");
    }
    EvalError::Stuck { rule, detail }
}

/// An evaluator with a step budget. Steps are counted across calls until
/// [`Evaluator::reset`].
#[derive(Clone, Debug)]
pub struct Evaluator {
    budget: u64,
    steps: u64,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator::new(DEFAULT_BUDGET)
    }
}

/// Evaluate `t` in `env` with the default budget.
pub fn eval(t: &Arc<Term>, mut env: Environment) -> Result<(Value, Environment), EvalError> {
    let v = Evaluator::default().eval(t, &mut env)?;
    Ok((v, env))
}

impl Evaluator {
    pub fn new(budget: u64) -> Evaluator {
        Evaluator { budget, steps: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn reset(&mut self) {
        self.steps = 0;
    }

    fn tick(&mut self) -> Result<(), EvalError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(EvalError::Budget(self.budget))
        } else {
            Ok(())
        }
    }

    pub fn eval(&mut self, t: &Arc<Term>, env: &mut Environment) -> Result<Value, EvalError> {
        let mut t = t.clone();
        loop {
            self.tick()?;
            let next = match &*t {
                Term::Var(_)
                | Term::Unit
                | Term::Int(_)
                | Term::Char(_)
                | Term::Str(_)
                | Term::Lam { .. }
                | Term::Loc(_)
                | Term::ChanLit(_)
                | Term::Delay(_)
                | Term::Never(_) => return Ok(t),
                Term::Pair(a, b) => {
                    let va = self.eval(a, env)?;
                    let vb = self.eval(b, env)?;
                    return Ok(rebuild2(&t, a, b, va, vb, Term::Pair));
                }
                Term::Inj { side, ann, body } => {
                    let v = self.eval(body, env)?;
                    return Ok(rebuild1(&t, body, v, |v| Term::Inj { side: *side, ann: ann.clone(), body: v }));
                }
                Term::Into { ann, body } => {
                    let v = self.eval(body, env)?;
                    return Ok(rebuild1(&t, body, v, |v| Term::Into { ann: ann.clone(), body: v }));
                }
                Term::Wait(k) => {
                    let v = self.eval(k, env)?;
                    if !matches!(*v, Term::ChanLit(_)) {
                        return Err(stuck("wait", &v));
                    }
                    return Ok(rebuild1(&t, k, v, Term::Wait));
                }
                Term::Watch(s) => {
                    let v = self.eval(s, env)?;
                    if !matches!(*v, Term::Loc(_)) {
                        return Err(stuck("watch", &v));
                    }
                    return Ok(rebuild1(&t, s, v, Term::Watch));
                }
                Term::Tail(s) => {
                    let v = self.eval(s, env)?;
                    if !matches!(*v, Term::Loc(_)) {
                        return Err(stuck("tail", &v));
                    }
                    return Ok(rebuild1(&t, s, v, Term::Tail));
                }
                Term::Sync(a, b) => {
                    let va = self.eval(a, env)?;
                    let vb = self.eval(b, env)?;
                    return Ok(rebuild2(&t, a, b, va, vb, Term::Sync));
                }
                Term::ApE(a, b) => {
                    let va = self.eval(a, env)?;
                    let vb = self.eval(b, env)?;
                    return Ok(rebuild2(&t, a, b, va, vb, Term::ApE));
                }
                Term::ApA(a, b) => {
                    let va = self.eval(a, env)?;
                    let Term::Delay(f) = &*va else { return Err(stuck("<*>", &va)) };
                    let vb = self.eval(b, env)?;
                    let Term::Delay(x) = &*vb else { return Err(stuck("<*>", &vb)) };
                    return Ok(Term::delay(Term::app(f.clone(), x.clone())));
                }
                Term::Proj(side, p) => {
                    let v = self.eval(p, env)?;
                    let Term::Pair(a, b) = &*v else { return Err(stuck("proj", &v)) };
                    return Ok(if *side == Side::Left { a.clone() } else { b.clone() });
                }
                Term::App(f, a) => {
                    let vf = self.eval(f, env)?;
                    let Term::Lam { param, body, .. } = &*vf else { return Err(stuck("app", &vf)) };
                    let va = self.eval(a, env)?;
                    substitute_closed(body, param, &va)
                }
                Term::Case { scrutinee, left, right } => {
                    let v = self.eval(scrutinee, env)?;
                    let Term::Inj { side, body, .. } = &*v else { return Err(stuck("case", &v)) };
                    let (x, branch) = if *side == Side::Left { left } else { right };
                    substitute_closed(branch, x, body)
                }
                Term::Rec { var, result, step, target } => {
                    let v = self.eval(target, env)?;
                    let Term::Into { ann, body } = &*v else { return Err(stuck("rec", &v)) };
                    let Some(mu @ Type::Mu(alpha, shape)) = ann else {
                        return Err(EvalError::MissingAnnotation("cons"));
                    };
                    let Some(result) = result else { return Err(EvalError::MissingAnnotation("rec")) };
                    let mut avoid = BTreeSet::new();
                    all_names(step, &mut avoid);
                    avoid.insert(var.clone());
                    let y = fresh_name("y", &avoid);
                    let again = Arc::new(Term::Rec {
                        var: var.clone(),
                        result: Some(result.clone()),
                        step: step.clone(),
                        target: Arc::new(Term::Var(y.clone())),
                    });
                    let f = Arc::new(Term::Lam {
                        param: y.clone(),
                        ann: Some(mu.clone()),
                        body: Term::pair(Arc::new(Term::Var(y)), again),
                        label: None,
                    });
                    let shapes = Shapes { alpha, from: mu, to: &Type::prod(mu.clone(), result.clone()) };
                    let mapped = shapes.fmap(shape, &f, body.clone(), 0);
                    let w = self.eval(&mapped, env)?;
                    substitute_closed(step, var, &w)
                }
                Term::Fix { var, body, .. } => substitute_closed(body, var, &Term::delay(t.clone())),
                Term::Head(s) => {
                    let v = self.eval(s, env)?;
                    let Term::Loc(l) = &*v else { return Err(stuck("head", &v)) };
                    return Ok(env.store.lookup_now(*l)?.signal.head.clone());
                }
                Term::Chan(ann) => {
                    let Some(ty) = ann else { return Err(EvalError::MissingAnnotation("chan")) };
                    let k = alloc_channel(&env.channels);
                    env.channels.insert(k, ty.clone());
                    return Ok(Arc::new(Term::ChanLit(k)));
                }
                Term::Cons { elem, head, tail } => {
                    let Some(ty) = elem else { return Err(EvalError::MissingAnnotation("cons")) };
                    let vh = self.eval(head, env)?;
                    let vt = self.eval(tail, env)?;
                    let loc = alloc_location(&env.store);
                    let signal = StoredSignal { head: vh, tail: vt, updated: false };
                    env.store.insert_now_rightmost(Cell { loc, ty: ty.clone(), signal })?;
                    return Ok(Arc::new(Term::Loc(loc)));
                }
                Term::BinOp(op, a, b) => {
                    let va = self.eval(a, env)?;
                    let vb = self.eval(b, env)?;
                    let (Term::Int(x), Term::Int(y)) = (&*va, &*vb) else {
                        return Err(stuck("prim", &Term::BinOp(*op, va.clone(), vb.clone())));
                    };
                    return Ok(apply_binop(*op, *x, *y));
                }
                Term::IsEven(a) => {
                    let v = self.eval(a, env)?;
                    let Term::Int(n) = &*v else { return Err(stuck("prim", &v)) };
                    return Ok(Term::bool_lit(n % 2 == 0));
                }
            };
            t = next;
        }
    }
}

fn rebuild1(t: &Arc<Term>, old: &Arc<Term>, new: Value, mk: impl FnOnce(Value) -> Term) -> Value {
    if Arc::ptr_eq(old, &new) {
        t.clone()
    } else {
        Arc::new(mk(new))
    }
}

fn rebuild2(
    t: &Arc<Term>,
    a: &Arc<Term>,
    b: &Arc<Term>,
    va: Value,
    vb: Value,
    mk: impl FnOnce(Value, Value) -> Term,
) -> Value {
    if Arc::ptr_eq(a, &va) && Arc::ptr_eq(b, &vb) {
        t.clone()
    } else {
        Arc::new(mk(va, vb))
    }
}

fn apply_binop(op: BinOp, x: i64, y: i64) -> Value {
    match op {
        BinOp::Add => Term::int(x.wrapping_add(y)),
        BinOp::Sub => Term::int(x.wrapping_sub(y)),
        BinOp::Mul => Term::int(x.wrapping_mul(y)),
        BinOp::Lt => Term::bool_lit(x < y),
        BinOp::Le => Term::bool_lit(x <= y),
        BinOp::Gt => Term::bool_lit(x > y),
        BinOp::Ge => Term::bool_lit(x >= y),
        BinOp::Eq => Term::bool_lit(x == y),
    }
}

/// The functorial action of a one-variable type on terms, used by `rec`.
/// `from` and `to` are what the variable stands for before and after mapping.
struct Shapes<'a> {
    alpha: &'a Name,
    from: &'a Type,
    to: &'a Type,
}

impl Shapes<'_> {
    fn at(&self, shape: &Type, by: &Type) -> Type {
        substitute_type(shape, self.alpha, by)
    }

    /// Builds the term `fmap_shape f x`.
    fn fmap(&self, shape: &Type, f: &Arc<Term>, x: Arc<Term>, depth: usize) -> Arc<Term> {
        match shape {
            Type::Var(a) if a == self.alpha => Term::app(f.clone(), x),
            Type::Prod(l, r) => Term::pair(
                self.fmap(l, f, Term::proj(Side::Left, x.clone()), depth),
                self.fmap(r, f, Term::proj(Side::Right, x), depth),
            ),
            Type::Sum(l, r) => {
                let y = name(&format!("y{depth}"));
                let ann = Some(self.at(shape, self.to));
                let var = || Arc::new(Term::Var(y.clone()));
                let left = Term::inj(Side::Left, ann.clone(), self.fmap(l, f, var(), depth + 1));
                let right = Term::inj(Side::Right, ann, self.fmap(r, f, var(), depth + 1));
                Arc::new(Term::Case { scrutinee: x, left: (y.clone(), left), right: (y, right) })
            }
            Type::Sig(elem) => {
                let z = name(&format!("z{depth}"));
                let from = self.at(elem, self.from);
                let to = self.at(elem, self.to);
                let inner = Arc::new(Term::Lam {
                    param: z.clone(),
                    ann: Some(from.clone()),
                    body: self.fmap(elem, f, Arc::new(Term::Var(z)), depth + 1),
                    label: None,
                });
                Term::app(Term::app(map_term(&from, &to), inner), x)
            }
            _ => x,
        }
    }
}

/// The signal `map` at element types `a` and `b`, as the desugared library
/// definition:
/// `fix r. \f s -> let x = head s in let xs = tail s in f x :: (delay (\r' -> r' f) <*> r <**> xs)`.
pub fn map_term(a: &Type, b: &Type) -> Arc<Term> {
    let fun = Type::fun(a.clone(), b.clone());
    let map_ty = Type::fun(fun.clone(), Type::fun(Type::sig(a.clone()), Type::sig(b.clone())));
    let v = Term::var;
    let step = Term::apa(
        Term::delay(Term::lam_ann("r'", map_ty.clone(), Term::app(v("r'"), v("f")))),
        v("r"),
    );
    let body = Term::cons(Some(b.clone()), Term::app(v("f"), v("x")), Term::ape(step, v("xs")));
    let with_tail = Term::let_in("xs", Some(Type::later(Type::sig(a.clone()))), Term::tail(v("s")), body);
    let with_head = Term::let_in("x", Some(a.clone()), Term::head(v("s")), with_tail);
    let lam = Term::lam_ann("f", fun, Term::lam_ann("s", Type::sig(a.clone()), with_head));
    Arc::new(Term::Fix { var: name("r"), ann: Some(map_ty), body: lam, label: Some(name("map")) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{ChannelContext, Heap};
    use crate::syntax::{is_value, ChanId, Loc};
    use crate::typeck::{typecheck, HeapContext, TypingContext};

    fn run(t: &Arc<Term>) -> (Value, Environment) {
        eval(t, Environment::default()).unwrap()
    }

    #[test]
    fn projection_of_pair() {
        let t = Term::proj(Side::Left, Term::pair(Term::unit(), Term::inj(Side::Left, None, Term::unit())));
        let (v, env) = run(&t);
        assert_eq!(v, Term::unit());
        assert_eq!(env, Environment::default());
    }

    #[test]
    fn values_evaluate_to_themselves() {
        let vals = [
            Term::delay(Term::head(Term::loc(9))),
            Term::ape(Term::delay(Term::unit()), Term::wait(Term::chan_lit(1))),
            Term::pair(Term::int(1), Term::tail(Term::loc(3))),
            Term::never(None),
            Term::sync(Term::never(None), Term::watch(Term::loc(2))),
        ];
        for v in vals {
            assert!(is_value(&v));
            let (out, env) = run(&v);
            assert!(Arc::ptr_eq(&out, &v));
            assert_eq!(env, Environment::default());
        }
    }

    fn mk_sig() -> Arc<Term> {
        let body = Term::lam(
            "d",
            Term::ape(
                Term::apa(
                    Term::delay(Term::lam(
                        "r'",
                        Term::lam("x", Term::cons(Some(Type::Int), Term::var("x"), Term::app(Term::var("r'"), Term::var("d")))),
                    )),
                    Term::var("r"),
                ),
                Term::var("d"),
            ),
        );
        Term::fix("r", Some(Type::fun(Type::later(Type::Int), Type::later(Type::sig(Type::Int)))), body)
    }

    #[test]
    fn mk_sig_builds_a_delayed_signal() {
        let fix = mk_sig();
        let (v, env) = run(&Term::app(fix.clone(), Term::wait(Term::chan_lit(1))));
        // delay ((\r' -> \x -> x :: r' (wait κ1)) mkSig) <**> wait κ1
        let expected = Term::ape(
            Term::delay(Term::app(
                Term::lam(
                    "r'",
                    Term::lam(
                        "x",
                        Term::cons(
                            Some(Type::Int),
                            Term::var("x"),
                            Term::app(Term::var("r'"), Term::wait(Term::chan_lit(1))),
                        ),
                    ),
                ),
                fix,
            )),
            Term::wait(Term::chan_lit(1)),
        );
        assert_eq!(v, expected);
        assert!(env.store.now.is_empty());
    }

    #[test]
    fn apa_threads_the_environment_through_both_operands() {
        // the second operand allocates; the allocation must survive
        let alloc = Term::app(
            Term::lam("u", Term::delay(Term::unit())),
            Term::cons(Some(Type::Int), Term::int(1), Term::never(None)),
        );
        let t = Term::apa(Term::delay(Term::lam("x", Term::var("x"))), alloc);
        let (v, env) = run(&t);
        assert!(matches!(&*v, Term::Delay(_)));
        assert_eq!(env.store.now.len(), 1);
    }

    #[test]
    fn cons_allocates_unflagged_cells_left_to_right() {
        let inner = Term::cons(Some(Type::Int), Term::int(1), Term::never(None));
        let t = Term::pair(inner.clone(), Term::cons(Some(Type::Int), Term::int(2), Term::tail(inner)));
        let (v, env) = run(&t);
        assert_eq!(v, Term::pair(Term::loc(1), Term::loc(3)));
        let cells: Vec<_> = env.store.now.iter().map(|c| (c.loc, c.signal.updated)).collect();
        assert_eq!(cells, vec![(Loc(1), false), (Loc(2), false), (Loc(3), false)]);
        assert_eq!(env.store.now.get(Loc(3)).unwrap().signal.tail, Term::tail(Term::loc(2)));
    }

    #[test]
    fn head_reads_now_and_faults_on_earlier() {
        let mut env = Environment::default();
        let cell = Cell {
            loc: Loc(1),
            ty: Type::Int,
            signal: StoredSignal { head: Term::int(7), tail: Term::never(None), updated: true },
        };
        env.store.earlier.push(cell.clone()).unwrap();
        let err = Evaluator::default().eval(&Term::head(Term::loc(1)), &mut env).unwrap_err();
        assert_eq!(err, EvalError::Store(StoreError::Stale(Loc(1))));
        env.store = crate::store::Store { now: Heap::from_cells([cell]).unwrap(), earlier: Heap::new() };
        assert_eq!(Evaluator::default().eval(&Term::head(Term::loc(1)), &mut env).unwrap(), Term::int(7));
    }

    #[test]
    fn chan_extends_the_channel_context() {
        let mut env = Environment::new(ChannelContext::new());
        env.channels.insert(ChanId(1), Type::Int);
        let v = Evaluator::default().eval(&Arc::new(Term::Chan(Some(Type::Unit))), &mut env).unwrap();
        assert_eq!(v, Term::chan_lit(2));
        assert_eq!(env.channels.get(ChanId(2)), Some(&Type::Unit));
    }

    fn list_ty() -> Type {
        Type::mu("a", Type::sum(Type::Unit, Type::prod(Type::Int, Type::var("a"))))
    }

    fn list(items: &[i64]) -> Arc<Term> {
        let mu = Some(list_ty());
        let mut acc = Term::into(mu.clone(), Term::inj(Side::Left, None, Term::unit()));
        for n in items.iter().rev() {
            acc = Term::into(mu.clone(), Term::inj(Side::Right, None, Term::pair(Term::int(*n), acc)));
        }
        acc
    }

    #[test]
    fn fmap_on_a_sum_of_products() {
        // F = 1 + Int * a, f = \y -> (y, 0), x = in2 (5, tail)
        let shape = Type::sum(Type::Unit, Type::prod(Type::Int, Type::var("a")));
        let mu = list_ty();
        let to = Type::prod(mu.clone(), Type::Int);
        let alpha = name("a");
        let shapes = Shapes { alpha: &alpha, from: &mu, to: &to };
        let f = Term::lam("y", Term::pair(Term::var("y"), Term::int(0)));
        let rest = list(&[]);
        let x = Term::inj(Side::Right, None, Term::pair(Term::int(5), rest.clone()));
        let term = shapes.fmap(&shape, &f, x, 0);
        let (v, _) = run(&term);
        let expected = Term::inj(
            Side::Right,
            Some(substitute_type(&shape, "a", &to)),
            Term::pair(Term::int(5), Term::pair(rest, Term::int(0))),
        );
        assert_eq!(v, expected);
        // identity and variable clauses
        assert_eq!(shapes.fmap(&Type::Unit, &f, Term::unit(), 0), Term::unit());
        assert_eq!(shapes.fmap(&Type::var("a"), &f, Term::unit(), 0), Term::app(f.clone(), Term::unit()));
    }

    #[test]
    fn rec_computes_length() {
        let step = Term::case(
            Term::var("r"),
            "u",
            Term::int(0),
            "c",
            Term::binop(BinOp::Add, Term::int(1), Term::proj(Side::Right, Term::proj(Side::Right, Term::var("c")))),
        );
        let len = Term::lam("l", Term::rec("r", Some(Type::Int), step, Term::var("l")));
        let (v, _) = run(&Term::app(len, list(&[4, 5, 6])));
        assert_eq!(v, Term::int(3));
    }

    #[test]
    fn map_term_typechecks() {
        let m = map_term(&Type::Int, &Type::Char);
        let ty = Type::fun(Type::fun(Type::Int, Type::Char), Type::fun(Type::sig(Type::Int), Type::sig(Type::Char)));
        typecheck(&TypingContext::new(), &HeapContext::new(), &ChannelContext::new(), &m, &ty).unwrap();
    }

    #[test]
    fn rec_through_a_signal_maps_it() {
        // mu a. Int + Sig a: a leaf or a signal of subtrees
        let tree = Type::mu("a", Type::sum(Type::Int, Type::sig(Type::var("a"))));
        let leaf = Term::into(Some(tree.clone()), Term::inj(Side::Left, None, Term::int(5)));
        let node = Term::into(Some(tree.clone()), Term::inj(Side::Right, None, Term::loc(1)));
        let mut env = Environment::default();
        let signal = StoredSignal { head: leaf, tail: Term::never(None), updated: false };
        env.store.now.push(Cell { loc: Loc(1), ty: tree.clone(), signal }).unwrap();
        let step = Term::case(
            Term::var("r"),
            "n",
            Term::var("n"),
            "s",
            Term::proj(Side::Right, Term::head(Term::var("s"))),
        );
        let t = Term::rec("r", Some(Type::Int), step, node);
        let v = Evaluator::default().eval(&t, &mut env).unwrap();
        assert_eq!(v, Term::int(5));
        // mapping the signal allocated one cell holding the folded head
        let mapped = env.store.now.get(Loc(2)).unwrap();
        assert_eq!(mapped.ty, Type::prod(tree, Type::Int));
        assert!(matches!(&*mapped.signal.head, Term::Pair(_, n) if **n == Term::Int(5)));
    }

    #[test]
    fn budget_stops_runaway_evaluation() {
        let omega = Term::lam("x", Term::app(Term::var("x"), Term::var("x")));
        let t = Term::app(omega.clone(), omega);
        let err = Evaluator::new(1000).eval(&t, &mut Environment::default()).unwrap_err();
        assert_eq!(err, EvalError::Budget(1000));
    }
}
