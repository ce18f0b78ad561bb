//! Core calculus: types, terms, values, type formation and substitution.

mod print;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use print::{fmt_type, TermPrinter};

/// Identifiers are shared strings so terms clone cheaply.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// A heap location `l<n>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loc(pub u32);

/// A channel `κ<n>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChanId(pub u32);

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

impl fmt::Display for ChanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "κ{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Var(Name),
    Unit,
    Int,
    Char,
    Str,
    Prod(Box<Type>, Box<Type>),
    Sum(Box<Type>, Box<Type>),
    Fun(Box<Type>, Box<Type>),
    /// Existential later: available when the attached clock ticks.
    Later(Box<Type>),
    /// Universal later: available at the next tick of any clock.
    Delay(Box<Type>),
    Sig(Box<Type>),
    Chan(Box<Type>),
    Mu(Name, Box<Type>),
}

impl Type {
    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Box::new(a), Box::new(b))
    }
    pub fn sum(a: Type, b: Type) -> Type {
        Type::Sum(Box::new(a), Box::new(b))
    }
    pub fn fun(a: Type, b: Type) -> Type {
        Type::Fun(Box::new(a), Box::new(b))
    }
    pub fn later(a: Type) -> Type {
        Type::Later(Box::new(a))
    }
    pub fn delay(a: Type) -> Type {
        Type::Delay(Box::new(a))
    }
    pub fn sig(a: Type) -> Type {
        Type::Sig(Box::new(a))
    }
    pub fn chan(a: Type) -> Type {
        Type::Chan(Box::new(a))
    }
    pub fn mu(var: &str, body: Type) -> Type {
        Type::Mu(name(var), Box::new(body))
    }
    pub fn var(v: &str) -> Type {
        Type::Var(name(v))
    }
    pub fn bool() -> Type {
        Type::sum(Type::Unit, Type::Unit)
    }
    pub fn maybe(a: Type) -> Type {
        Type::sum(a, Type::Unit)
    }
    /// `(A + B) + (A * B)`, the result type of `sync`.
    pub fn sync(a: Type, b: Type) -> Type {
        Type::sum(Type::sum(a.clone(), b.clone()), Type::prod(a, b))
    }

    pub fn is_closed(&self) -> bool {
        check_type_formation(None, self)
    }

    /// Equality up to renaming of `Mu` binders.
    pub fn alpha_eq(&self, other: &Type) -> bool {
        alpha_eq(self, other, &mut Vec::new())
    }
}

fn alpha_eq<'a>(a: &'a Type, b: &'a Type, env: &mut Vec<(&'a str, &'a str)>) -> bool {
    use Type::*;
    match (a, b) {
        (Var(x), Var(y)) => {
            for (l, r) in env.iter().rev() {
                if *l == &**x || *r == &**y {
                    return *l == &**x && *r == &**y;
                }
            }
            x == y
        }
        (Unit, Unit) | (Int, Int) | (Char, Char) | (Str, Str) => true,
        (Prod(a1, a2), Prod(b1, b2)) | (Sum(a1, a2), Sum(b1, b2)) | (Fun(a1, a2), Fun(b1, b2)) => {
            alpha_eq(a1, b1, env) && alpha_eq(a2, b2, env)
        }
        (Later(x), Later(y)) | (Delay(x), Delay(y)) | (Sig(x), Sig(y)) | (Chan(x), Chan(y)) => {
            alpha_eq(x, y, env)
        }
        (Mu(x, a), Mu(y, b)) => {
            env.push((x, y));
            let r = alpha_eq(a, b, env);
            env.pop();
            r
        }
        _ => false,
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_type(self))
    }
}

/// Type formation: `phi` is the (at most one) type variable in scope.
///
/// Function, delay, and channel types need closed operands; `Mu` checks its
/// body under exactly its own variable.
pub fn check_type_formation(phi: Option<&str>, ty: &Type) -> bool {
    match ty {
        Type::Var(a) => phi == Some(&**a),
        Type::Unit | Type::Int | Type::Char | Type::Str => true,
        Type::Prod(a, b) | Type::Sum(a, b) => {
            check_type_formation(phi, a) && check_type_formation(phi, b)
        }
        Type::Sig(a) => check_type_formation(phi, a),
        Type::Fun(a, b) => check_type_formation(None, a) && check_type_formation(None, b),
        Type::Later(a) | Type::Delay(a) | Type::Chan(a) => check_type_formation(None, a),
        Type::Mu(a, body) => check_type_formation(Some(a), body),
    }
}

/// Replace the free occurrences of `var` in `ty` by the closed type `by`.
pub fn substitute_type(ty: &Type, var: &str, by: &Type) -> Type {
    match ty {
        Type::Var(a) if &**a == var => by.clone(),
        Type::Var(_) | Type::Unit | Type::Int | Type::Char | Type::Str => ty.clone(),
        Type::Prod(a, b) => Type::prod(substitute_type(a, var, by), substitute_type(b, var, by)),
        Type::Sum(a, b) => Type::sum(substitute_type(a, var, by), substitute_type(b, var, by)),
        Type::Fun(a, b) => Type::fun(substitute_type(a, var, by), substitute_type(b, var, by)),
        Type::Later(a) => Type::later(substitute_type(a, var, by)),
        Type::Delay(a) => Type::delay(substitute_type(a, var, by)),
        Type::Sig(a) => Type::sig(substitute_type(a, var, by)),
        Type::Chan(a) => Type::chan(substitute_type(a, var, by)),
        Type::Mu(a, _) if &**a == var => ty.clone(),
        Type::Mu(a, body) => Type::Mu(a.clone(), Box::new(substitute_type(body, var, by))),
    }
}

/// Unfold `mu a. A` to `A[mu a. A / a]`.
pub fn unfold(mu: &Type) -> Option<Type> {
    match mu {
        Type::Mu(a, body) => Some(substitute_type(body, a, mu)),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> u8 {
        match self {
            Side::Left => 1,
            Side::Right => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
        }
    }

    pub fn is_comparison(self) -> bool {
        !matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul)
    }
}

/// Core terms. Optional type annotations are filled in by elaboration; the
/// evaluator needs them only on `Cons` and `Chan`.
///
/// `label` fields are cosmetic: they let the printer show a named definition
/// by its name instead of its body.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Name),
    Unit,
    Int(i64),
    Char(char),
    Str(Name),
    Lam {
        param: Name,
        ann: Option<Type>,
        body: Arc<Term>,
        label: Option<Name>,
    },
    App(Arc<Term>, Arc<Term>),
    Pair(Arc<Term>, Arc<Term>),
    Proj(Side, Arc<Term>),
    Inj {
        side: Side,
        ann: Option<Type>,
        body: Arc<Term>,
    },
    Case {
        scrutinee: Arc<Term>,
        left: (Name, Arc<Term>),
        right: (Name, Arc<Term>),
    },
    /// Primitive recursion `rec x. step target`; `result` is the fold's type.
    Rec {
        var: Name,
        result: Option<Type>,
        step: Arc<Term>,
        target: Arc<Term>,
    },
    Delay(Arc<Term>),
    /// Applicative application under the universal later.
    ApA(Arc<Term>, Arc<Term>),
    /// Application of a universally delayed function to an existentially delayed argument.
    ApE(Arc<Term>, Arc<Term>),
    /// `never`, annotated with the element type `A` of `Later A`.
    Never(Option<Type>),
    Chan(Option<Type>),
    Wait(Arc<Term>),
    Watch(Arc<Term>),
    Sync(Arc<Term>, Arc<Term>),
    Cons {
        elem: Option<Type>,
        head: Arc<Term>,
        tail: Arc<Term>,
    },
    Head(Arc<Term>),
    Tail(Arc<Term>),
    Fix {
        var: Name,
        ann: Option<Type>,
        body: Arc<Term>,
        label: Option<Name>,
    },
    /// Introduction for recursive types, annotated with the `Mu` type.
    Into {
        ann: Option<Type>,
        body: Arc<Term>,
    },
    Loc(Loc),
    ChanLit(ChanId),
    BinOp(BinOp, Arc<Term>, Arc<Term>),
    IsEven(Arc<Term>),
}

/// Values are terms satisfying [`is_value`].
pub type Value = Arc<Term>;

impl Term {
    pub fn var(x: &str) -> Arc<Term> {
        Arc::new(Term::Var(name(x)))
    }
    pub fn unit() -> Arc<Term> {
        Arc::new(Term::Unit)
    }
    pub fn int(n: i64) -> Arc<Term> {
        Arc::new(Term::Int(n))
    }
    pub fn lam(x: &str, body: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Lam { param: name(x), ann: None, body, label: None })
    }
    pub fn lam_ann(x: &str, ann: Type, body: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Lam { param: name(x), ann: Some(ann), body, label: None })
    }
    pub fn app(f: Arc<Term>, a: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::App(f, a))
    }
    pub fn pair(a: Arc<Term>, b: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Pair(a, b))
    }
    pub fn proj(side: Side, t: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Proj(side, t))
    }
    pub fn inj(side: Side, ann: Option<Type>, body: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Inj { side, ann, body })
    }
    pub fn case(s: Arc<Term>, x: &str, l: Arc<Term>, y: &str, r: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Case { scrutinee: s, left: (name(x), l), right: (name(y), r) })
    }
    pub fn delay(t: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Delay(t))
    }
    pub fn apa(s: Arc<Term>, t: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::ApA(s, t))
    }
    pub fn ape(s: Arc<Term>, t: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::ApE(s, t))
    }
    pub fn never(ann: Option<Type>) -> Arc<Term> {
        Arc::new(Term::Never(ann))
    }
    pub fn wait(t: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Wait(t))
    }
    pub fn watch(t: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Watch(t))
    }
    pub fn sync(s: Arc<Term>, t: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Sync(s, t))
    }
    pub fn cons(elem: Option<Type>, head: Arc<Term>, tail: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Cons { elem, head, tail })
    }
    pub fn head(t: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Head(t))
    }
    pub fn tail(t: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Tail(t))
    }
    pub fn fix(x: &str, ann: Option<Type>, body: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Fix { var: name(x), ann, body, label: None })
    }
    pub fn into(ann: Option<Type>, body: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Into { ann, body })
    }
    pub fn rec(x: &str, result: Option<Type>, step: Arc<Term>, target: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::Rec { var: name(x), result, step, target })
    }
    pub fn loc(l: u32) -> Arc<Term> {
        Arc::new(Term::Loc(Loc(l)))
    }
    pub fn chan_lit(k: u32) -> Arc<Term> {
        Arc::new(Term::ChanLit(ChanId(k)))
    }
    pub fn binop(op: BinOp, a: Arc<Term>, b: Arc<Term>) -> Arc<Term> {
        Arc::new(Term::BinOp(op, a, b))
    }
    /// `let x = e in b`, i.e. `(\x -> b) e`.
    pub fn let_in(x: &str, ann: Option<Type>, e: Arc<Term>, b: Arc<Term>) -> Arc<Term> {
        let f = Arc::new(Term::Lam { param: name(x), ann, body: b, label: None });
        Term::app(f, e)
    }
    pub fn bool_lit(b: bool) -> Arc<Term> {
        let side = if b { Side::Left } else { Side::Right };
        Term::inj(side, Some(Type::bool()), Term::unit())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&TermPrinter::default().term(self))
    }
}

/// The value predicate. `s :: t` is excluded: it always allocates.
pub fn is_value(t: &Term) -> bool {
    match t {
        Term::Var(_)
        | Term::Unit
        | Term::Int(_)
        | Term::Char(_)
        | Term::Str(_)
        | Term::Lam { .. }
        | Term::Loc(_)
        | Term::ChanLit(_)
        | Term::Delay(_)
        | Term::Never(_) => true,
        Term::Pair(a, b) | Term::ApE(a, b) | Term::Sync(a, b) => is_value(a) && is_value(b),
        Term::Inj { body, .. } | Term::Into { body, .. } => is_value(body),
        Term::Wait(v) | Term::Watch(v) | Term::Tail(v) => is_value(v),
        _ => false,
    }
}

/// Free term variables.
pub fn free_vars(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_free(t, &mut Vec::new(), &mut out);
    out
}

fn collect_free(t: &Term, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    let under = |x: &Name, body: &Term, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>| {
        bound.push(x.clone());
        collect_free(body, bound, out);
        bound.pop();
    };
    match t {
        Term::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        Term::Lam { param, body, .. } => under(param, body, bound, out),
        Term::Fix { var, body, .. } => under(var, body, bound, out),
        Term::Case { scrutinee, left, right } => {
            collect_free(scrutinee, bound, out);
            under(&left.0, &left.1, bound, out);
            under(&right.0, &right.1, bound, out);
        }
        Term::Rec { var, step, target, .. } => {
            under(var, step, bound, out);
            collect_free(target, bound, out);
        }
        _ => {
            for c in children(t) {
                collect_free(c, bound, out);
            }
        }
    }
}

/// Immediate subterms of binder-free constructors (empty for binders).
fn children(t: &Term) -> Vec<&Arc<Term>> {
    match t {
        Term::App(a, b)
        | Term::Pair(a, b)
        | Term::ApA(a, b)
        | Term::ApE(a, b)
        | Term::Sync(a, b)
        | Term::BinOp(_, a, b) => vec![a, b],
        Term::Cons { head, tail, .. } => vec![head, tail],
        Term::Proj(_, a)
        | Term::Delay(a)
        | Term::Wait(a)
        | Term::Watch(a)
        | Term::Head(a)
        | Term::Tail(a)
        | Term::IsEven(a) => vec![a],
        Term::Inj { body, .. } | Term::Into { body, .. } => vec![body],
        _ => vec![],
    }
}

pub fn occurs_free(t: &Term, x: &str) -> bool {
    match t {
        Term::Var(y) => &**y == x,
        Term::Lam { param, body, .. } | Term::Fix { var: param, body, .. } => {
            &**param != x && occurs_free(body, x)
        }
        Term::Case { scrutinee, left, right } => {
            occurs_free(scrutinee, x)
                || (&*left.0 != x && occurs_free(&left.1, x))
                || (&*right.0 != x && occurs_free(&right.1, x))
        }
        Term::Rec { var, step, target, .. } => {
            (&**var != x && occurs_free(step, x)) || occurs_free(target, x)
        }
        _ => children(t).into_iter().any(|c| occurs_free(c, x)),
    }
}

/// All variable names appearing anywhere in `t`, bound or free.
pub fn all_names(t: &Term, out: &mut BTreeSet<Name>) {
    match t {
        Term::Var(x) => {
            out.insert(x.clone());
        }
        Term::Lam { param, body, .. } | Term::Fix { var: param, body, .. } => {
            out.insert(param.clone());
            all_names(body, out);
        }
        Term::Case { scrutinee, left, right } => {
            all_names(scrutinee, out);
            out.insert(left.0.clone());
            out.insert(right.0.clone());
            all_names(&left.1, out);
            all_names(&right.1, out);
        }
        Term::Rec { var, step, target, .. } => {
            out.insert(var.clone());
            all_names(step, out);
            all_names(target, out);
        }
        _ => {
            for c in children(t) {
                all_names(c, out);
            }
        }
    }
}

/// A variant of `base` (adding primes) not contained in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let mut candidate = base.to_string();
    while avoid.contains(candidate.as_str()) {
        candidate.push('\'');
    }
    name(&candidate)
}

/// Capture-avoiding substitution `t[v/x]`.
pub fn substitute_term(t: &Arc<Term>, x: &str, v: &Arc<Term>) -> Arc<Term> {
    let fv = free_vars(v);
    let ctx = SubstCtx { x, v, fv: if fv.is_empty() { None } else { Some(&fv) } };
    ctx.go(t).unwrap_or_else(|| t.clone())
}

/// Substitution of a closed value; no binder can capture, so no renaming.
pub(crate) fn substitute_closed(t: &Arc<Term>, x: &str, v: &Arc<Term>) -> Arc<Term> {
    let ctx = SubstCtx { x, v, fv: None };
    ctx.go(t).unwrap_or_else(|| t.clone())
}

struct SubstCtx<'a> {
    x: &'a str,
    v: &'a Arc<Term>,
    fv: Option<&'a BTreeSet<Name>>,
}

impl SubstCtx<'_> {
    /// `None` means unchanged, so untouched subtrees keep their sharing.
    fn go(&self, t: &Arc<Term>) -> Option<Arc<Term>> {
        let r = |c: &Arc<Term>| self.go(c);
        let keep = |c: &Arc<Term>, n: Option<Arc<Term>>| n.unwrap_or_else(|| c.clone());
        macro_rules! two {
            ($a:expr, $b:expr, $mk:expr) => {{
                let (na, nb) = (r($a), r($b));
                if na.is_none() && nb.is_none() {
                    None
                } else {
                    Some(Arc::new($mk(keep($a, na), keep($b, nb))))
                }
            }};
        }
        macro_rules! one {
            ($a:expr, $mk:expr) => {{
                r($a).map(|n| Arc::new($mk(n)))
            }};
        }
        match &**t {
            Term::Var(y) => (&**y == self.x).then(|| self.v.clone()),
            Term::Unit
            | Term::Int(_)
            | Term::Char(_)
            | Term::Str(_)
            | Term::Never(_)
            | Term::Chan(_)
            | Term::Loc(_)
            | Term::ChanLit(_) => None,
            Term::Lam { param, ann, body, label } => {
                let (p, b) = self.binder(param, body)?;
                Some(Arc::new(Term::Lam { param: p, ann: ann.clone(), body: b, label: label.clone() }))
            }
            Term::Fix { var, ann, body, label } => {
                let (p, b) = self.binder(var, body)?;
                Some(Arc::new(Term::Fix { var: p, ann: ann.clone(), body: b, label: label.clone() }))
            }
            Term::Case { scrutinee, left, right } => {
                let ns = r(scrutinee);
                let nl = self.binder(&left.0, &left.1);
                let nr = self.binder(&right.0, &right.1);
                if ns.is_none() && nl.is_none() && nr.is_none() {
                    return None;
                }
                Some(Arc::new(Term::Case {
                    scrutinee: keep(scrutinee, ns),
                    left: nl.unwrap_or_else(|| left.clone()),
                    right: nr.unwrap_or_else(|| right.clone()),
                }))
            }
            Term::Rec { var, result, step, target } => {
                let ns = self.binder(var, step);
                let nt = r(target);
                if ns.is_none() && nt.is_none() {
                    return None;
                }
                let (var, step) = ns.unwrap_or_else(|| (var.clone(), step.clone()));
                Some(Arc::new(Term::Rec { var, result: result.clone(), step, target: keep(target, nt) }))
            }
            Term::App(a, b) => two!(a, b, Term::App),
            Term::Pair(a, b) => two!(a, b, Term::Pair),
            Term::ApA(a, b) => two!(a, b, Term::ApA),
            Term::ApE(a, b) => two!(a, b, Term::ApE),
            Term::Sync(a, b) => two!(a, b, Term::Sync),
            Term::BinOp(op, a, b) => two!(a, b, |x, y| Term::BinOp(*op, x, y)),
            Term::Cons { elem, head, tail } => {
                two!(head, tail, |h, t| Term::Cons { elem: elem.clone(), head: h, tail: t })
            }
            Term::Proj(s, a) => one!(a, |n| Term::Proj(*s, n)),
            Term::Delay(a) => one!(a, Term::Delay),
            Term::Wait(a) => one!(a, Term::Wait),
            Term::Watch(a) => one!(a, Term::Watch),
            Term::Head(a) => one!(a, Term::Head),
            Term::Tail(a) => one!(a, Term::Tail),
            Term::IsEven(a) => one!(a, Term::IsEven),
            Term::Inj { side, ann, body } => {
                one!(body, |n| Term::Inj { side: *side, ann: ann.clone(), body: n })
            }
            Term::Into { ann, body } => one!(body, |n| Term::Into { ann: ann.clone(), body: n }),
        }
    }

    fn binder(&self, param: &Name, body: &Arc<Term>) -> Option<(Name, Arc<Term>)> {
        if &**param == self.x || !occurs_free(body, self.x) {
            return None;
        }
        match self.fv {
            Some(fv) if fv.contains(param) => {
                let mut avoid = fv.clone();
                all_names(body, &mut avoid);
                avoid.insert(name(self.x));
                let fresh = fresh_name(param, &avoid);
                let renamed = substitute_closed(body, param, &Arc::new(Term::Var(fresh.clone())));
                Some((fresh, self.go(&renamed).unwrap_or(renamed)))
            }
            _ => self.go(body).map(|b| (param.clone(), b)),
        }
    }
}

/// Rebuild `t` with `f` applied to each immediate subterm, binder bodies
/// included. Unchanged children keep `t` itself shared.
pub(crate) fn map_children(t: &Arc<Term>, f: &mut dyn FnMut(&Arc<Term>) -> Arc<Term>) -> Arc<Term> {
    let mut changed = false;
    let mut g = |c: &Arc<Term>| {
        let n = f(c);
        changed |= !Arc::ptr_eq(&n, c);
        n
    };
    let out = match &**t {
        Term::Var(_)
        | Term::Unit
        | Term::Int(_)
        | Term::Char(_)
        | Term::Str(_)
        | Term::Never(_)
        | Term::Chan(_)
        | Term::Loc(_)
        | Term::ChanLit(_) => return t.clone(),
        Term::Lam { param, ann, body, label } => {
            Term::Lam { param: param.clone(), ann: ann.clone(), body: g(body), label: label.clone() }
        }
        Term::Fix { var, ann, body, label } => {
            Term::Fix { var: var.clone(), ann: ann.clone(), body: g(body), label: label.clone() }
        }
        Term::Case { scrutinee, left, right } => Term::Case {
            scrutinee: g(scrutinee),
            left: (left.0.clone(), g(&left.1)),
            right: (right.0.clone(), g(&right.1)),
        },
        Term::Rec { var, result, step, target } => {
            Term::Rec { var: var.clone(), result: result.clone(), step: g(step), target: g(target) }
        }
        Term::App(a, b) => Term::App(g(a), g(b)),
        Term::Pair(a, b) => Term::Pair(g(a), g(b)),
        Term::ApA(a, b) => Term::ApA(g(a), g(b)),
        Term::ApE(a, b) => Term::ApE(g(a), g(b)),
        Term::Sync(a, b) => Term::Sync(g(a), g(b)),
        Term::BinOp(op, a, b) => Term::BinOp(*op, g(a), g(b)),
        Term::Cons { elem, head, tail } => Term::Cons { elem: elem.clone(), head: g(head), tail: g(tail) },
        Term::Proj(s, a) => Term::Proj(*s, g(a)),
        Term::Delay(a) => Term::Delay(g(a)),
        Term::Wait(a) => Term::Wait(g(a)),
        Term::Watch(a) => Term::Watch(g(a)),
        Term::Head(a) => Term::Head(g(a)),
        Term::Tail(a) => Term::Tail(g(a)),
        Term::IsEven(a) => Term::IsEven(g(a)),
        Term::Inj { side, ann, body } => Term::Inj { side: *side, ann: ann.clone(), body: g(body) },
        Term::Into { ann, body } => Term::Into { ann: ann.clone(), body: g(body) },
    };
    if changed {
        Arc::new(out)
    } else {
        t.clone()
    }
}

/// Equality up to renaming of bound variables, ignoring type annotations
/// and display labels.
pub fn alpha_eq_erased(a: &Term, b: &Term) -> bool {
    erased_eq(a, b, &mut Vec::new())
}

fn erased_eq<'a>(a: &'a Term, b: &'a Term, env: &mut Vec<(&'a str, &'a str)>) -> bool {
    fn under<'a>(
        env: &mut Vec<(&'a str, &'a str)>,
        x: &'a str,
        y: &'a str,
        a: &'a Term,
        b: &'a Term,
    ) -> bool {
        env.push((x, y));
        let r = erased_eq(a, b, env);
        env.pop();
        r
    }
    use Term::*;
    match (a, b) {
        (Var(x), Var(y)) => match env.iter().rev().find(|(p, q)| p == &&**x || q == &&**y) {
            Some((p, q)) => *p == &**x && *q == &**y,
            None => x == y,
        },
        (Lam { param: x, body: s, .. }, Lam { param: y, body: t, .. })
        | (Fix { var: x, body: s, .. }, Fix { var: y, body: t, .. }) => under(env, x, y, s, t),
        (Rec { var: x, step: s, target: s2, .. }, Rec { var: y, step: t, target: t2, .. }) => {
            under(env, x, y, s, t) && erased_eq(s2, t2, env)
        }
        (Case { scrutinee: s, left: l1, right: r1 }, Case { scrutinee: t, left: l2, right: r2 }) => {
            erased_eq(s, t, env) && under(env, &l1.0, &l2.0, &l1.1, &l2.1) && under(env, &r1.0, &r2.0, &r1.1, &r2.1)
        }
        (App(s1, s2), App(t1, t2))
        | (Pair(s1, s2), Pair(t1, t2))
        | (ApA(s1, s2), ApA(t1, t2))
        | (ApE(s1, s2), ApE(t1, t2))
        | (Sync(s1, s2), Sync(t1, t2))
        | (Cons { head: s1, tail: s2, .. }, Cons { head: t1, tail: t2, .. }) => {
            erased_eq(s1, t1, env) && erased_eq(s2, t2, env)
        }
        (BinOp(o1, s1, s2), BinOp(o2, t1, t2)) => o1 == o2 && erased_eq(s1, t1, env) && erased_eq(s2, t2, env),
        (Proj(i, s), Proj(j, t)) | (Inj { side: i, body: s, .. }, Inj { side: j, body: t, .. }) => {
            i == j && erased_eq(s, t, env)
        }
        (Delay(s), Delay(t))
        | (Wait(s), Wait(t))
        | (Watch(s), Watch(t))
        | (Head(s), Head(t))
        | (Tail(s), Tail(t))
        | (IsEven(s), IsEven(t))
        | (Into { body: s, .. }, Into { body: t, .. }) => erased_eq(s, t, env),
        (Never(_), Never(_)) | (Chan(_), Chan(_)) | (Unit, Unit) => true,
        (Int(m), Int(n)) => m == n,
        (Char(c), Char(d)) => c == d,
        (Str(s), Str(t)) => s == t,
        (Loc(l), Loc(m)) => l == m,
        (ChanLit(k), ChanLit(j)) => k == j,
        _ => false,
    }
}

/// Locations mentioned anywhere inside a term.
pub fn locations(t: &Term, out: &mut BTreeSet<Loc>) {
    match t {
        Term::Loc(l) => {
            out.insert(*l);
        }
        Term::Lam { body, .. } | Term::Fix { body, .. } => locations(body, out),
        Term::Case { scrutinee, left, right } => {
            locations(scrutinee, out);
            locations(&left.1, out);
            locations(&right.1, out);
        }
        Term::Rec { step, target, .. } => {
            locations(step, out);
            locations(target, out);
        }
        _ => {
            for c in children(t) {
                locations(c, out);
            }
        }
    }
}
