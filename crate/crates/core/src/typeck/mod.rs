//! Bidirectional type checking with heap and channel contexts.
//!
//! The checker elaborates as it goes: missing annotations on `never`, `chan`,
//! injections, `cons`, `fix`, `rec` and lambda binders are filled in from the
//! expected type, and present ones are verified.

mod heap;

use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::Serialize;

use crate::store::ChannelContext;
use crate::syntax::{check_type_formation, substitute_type, unfold, BinOp, Loc, Name, Side, Term, Type};

pub use heap::{check_heap_earlier, check_heap_now, check_store, heaptype, HeapComponent, HeapError};

/// Ordered variable typings; lookup takes the rightmost binding.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypingContext {
    bindings: Vec<(Name, Type)>,
}

impl TypingContext {
    pub fn new() -> TypingContext {
        TypingContext::default()
    }

    pub fn lookup(&self, x: &str) -> Option<&Type> {
        self.bindings.iter().rev().find(|(y, _)| &**y == x).map(|(_, t)| t)
    }

    pub fn push(&mut self, x: Name, ty: Type) {
        self.bindings.push((x, ty));
    }

    pub fn pop(&mut self) {
        self.bindings.pop();
    }

    fn under<R>(&mut self, x: &Name, ty: Type, f: impl FnOnce(&mut Self) -> R) -> R {
        self.push(x.clone(), ty);
        let r = f(self);
        self.pop();
        r
    }
}

/// Ordered location typings `l :_A`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HeapContext {
    entries: IndexMap<Loc, Type>,
}

impl HeapContext {
    pub fn new() -> HeapContext {
        HeapContext::default()
    }

    pub fn get(&self, l: Loc) -> Option<&Type> {
        self.entries.get(&l)
    }

    pub fn insert(&mut self, l: Loc, ty: Type) -> bool {
        if self.entries.contains_key(&l) {
            return false;
        }
        self.entries.insert(l, ty);
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Loc, &Type)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Whether `self` can be obtained from `other` by removing entries.
    pub fn is_subsequence_of(&self, other: &HeapContext) -> bool {
        let mut it = other.entries.iter();
        self.entries.iter().all(|e| it.any(|o| o == e))
    }
}

impl FromIterator<(Loc, Type)> for HeapContext {
    fn from_iter<I: IntoIterator<Item = (Loc, Type)>>(iter: I) -> Self {
        HeapContext { entries: iter.into_iter().collect() }
    }
}

/// A typing failure naming the rule that rejected the term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TypeError {
    pub rule: &'static str,
    pub message: String,
    pub subterm: String,
    pub expected: Option<String>,
    pub actual: Option<String>,
}

impl TypeError {
    fn new(rule: &'static str, t: &Term, message: impl Into<String>) -> TypeError {
        TypeError { rule, message: message.into(), subterm: truncate(t.to_string()), expected: None, actual: None }
    }

    fn expected(mut self, ty: &Type) -> TypeError {
        self.expected = Some(ty.to_string());
        self
    }

    fn actual(mut self, ty: &Type) -> TypeError {
        self.actual = Some(ty.to_string());
        self
    }

    fn needs_annotation(&self) -> bool {
        self.rule == "annotation"
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("diagnostic serializes")
    }
}

fn truncate(s: String) -> String {
    const MAX: usize = 160;
    if s.chars().count() <= MAX {
        s
    } else {
        let mut t: String = s.chars().take(MAX).collect();
        t.push_str(" ...");
        t
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.rule, self.message)?;
        if let Some(e) = &self.expected {
            write!(f, "\n  expected: {e}")?;
        }
        if let Some(a) = &self.actual {
            write!(f, "\n  actual:   {a}")?;
        }
        write!(f, "\n  in: {}", self.subterm)
    }
}

impl std::error::Error for TypeError {}

type Checked = Result<Arc<Term>, TypeError>;
type Synthed = Result<(Arc<Term>, Type), TypeError>;

/// Accept or reject `t : ty` under `gamma`, `heap` and `channels`.
pub fn typecheck(
    gamma: &TypingContext,
    heap: &HeapContext,
    channels: &ChannelContext,
    t: &Arc<Term>,
    ty: &Type,
) -> Result<(), TypeError> {
    elaborate(gamma, heap, channels, t, ty).map(|_| ())
}

/// Like [`typecheck`], returning `t` with every annotation filled in.
pub fn elaborate(
    gamma: &TypingContext,
    heap: &HeapContext,
    channels: &ChannelContext,
    t: &Arc<Term>,
    ty: &Type,
) -> Result<Arc<Term>, TypeError> {
    if !check_type_formation(None, ty) {
        return Err(TypeError::new("formation", t, "the expected type is not a closed, well-formed type").expected(ty));
    }
    let checker = Checker { heap, channels };
    checker.check(&mut gamma.clone(), t, ty)
}

/// Synthesize a type for `t`, if it carries enough annotations.
pub fn synthesize(
    gamma: &TypingContext,
    heap: &HeapContext,
    channels: &ChannelContext,
    t: &Arc<Term>,
) -> Result<(Arc<Term>, Type), TypeError> {
    let checker = Checker { heap, channels };
    checker.synth(&mut gamma.clone(), t)
}

struct Checker<'a> {
    heap: &'a HeapContext,
    channels: &'a ChannelContext,
}

fn same(a: &Arc<Term>, b: &Arc<Term>) -> bool {
    Arc::ptr_eq(a, b)
}

fn mismatch(rule: &'static str, t: &Term, what: &str, expected: &Type, actual: &Type) -> TypeError {
    TypeError::new(rule, t, what.to_string()).expected(expected).actual(actual)
}

impl Checker<'_> {
    fn annotation(&self, rule: &'static str, t: &Term, ann: &Option<Type>, expected: &Type) -> Result<(), TypeError> {
        match ann {
            Some(a) if !check_type_formation(None, a) => {
                Err(TypeError::new("formation", t, "annotation is not a closed, well-formed type").actual(a))
            }
            Some(a) if !a.alpha_eq(expected) => {
                Err(mismatch(rule, t, "annotation disagrees with the expected type", expected, a))
            }
            _ => Ok(()),
        }
    }

    fn closed_annotation(&self, t: &Term, ann: &Option<Type>) -> Result<Type, TypeError> {
        match ann {
            Some(a) if check_type_formation(None, a) => Ok(a.clone()),
            Some(a) => Err(TypeError::new("formation", t, "annotation is not a closed, well-formed type").actual(a)),
            None => Err(TypeError::new("annotation", t, "cannot synthesize a type here; add an annotation")),
        }
    }

    fn check(&self, g: &mut TypingContext, t: &Arc<Term>, ty: &Type) -> Checked {
        match (&**t, ty) {
            (Term::Lam { param, ann, body, label }, Type::Fun(a, b)) => {
                self.annotation("lam", t, ann, a)?;
                let nb = g.under(param, (**a).clone(), |g| self.check(g, body, b))?;
                if ann.is_some() && same(&nb, body) {
                    return Ok(t.clone());
                }
                Ok(Arc::new(Term::Lam { param: param.clone(), ann: Some((**a).clone()), body: nb, label: label.clone() }))
            }
            (Term::Lam { .. }, _) => {
                Err(TypeError::new("lam", t, "a lambda must be checked against a function type").expected(ty))
            }
            (Term::Pair(a, b), Type::Prod(ta, tb)) => {
                let na = self.check(g, a, ta)?;
                let nb = self.check(g, b, tb)?;
                Ok(if same(&na, a) && same(&nb, b) { t.clone() } else { Term::pair(na, nb) })
            }
            (Term::Pair(..), _) => Err(TypeError::new("pair", t, "a pair must have a product type").expected(ty)),
            (Term::Inj { side, ann, body }, Type::Sum(a, b)) => {
                self.annotation("inj", t, ann, ty)?;
                let part = if *side == Side::Left { a } else { b };
                let nb = self.check(g, body, part)?;
                if ann.is_some() && same(&nb, body) {
                    return Ok(t.clone());
                }
                Ok(Term::inj(*side, Some(ty.clone()), nb))
            }
            (Term::Inj { .. }, _) => Err(TypeError::new("inj", t, "an injection must have a sum type").expected(ty)),
            (Term::Case { scrutinee, left, right }, _) => {
                let (ns, st) = self.synth(g, scrutinee)?;
                let Type::Sum(a, b) = &st else {
                    return Err(TypeError::new("case", t, "the scrutinee of case must have a sum type").actual(&st));
                };
                let nl = g.under(&left.0, (**a).clone(), |g| self.check(g, &left.1, ty))?;
                let nr = g.under(&right.0, (**b).clone(), |g| self.check(g, &right.1, ty))?;
                if same(&ns, scrutinee) && same(&nl, &left.1) && same(&nr, &right.1) {
                    return Ok(t.clone());
                }
                Ok(Arc::new(Term::Case { scrutinee: ns, left: (left.0.clone(), nl), right: (right.0.clone(), nr) }))
            }
            (Term::Rec { var, result, step, target }, _) => {
                self.annotation("rec", t, result, ty)?;
                self.check_rec(g, t, var, step, target, ty)
            }
            (Term::Delay(body), Type::Delay(a)) => {
                let nb = self.check(g, body, a)?;
                Ok(if same(&nb, body) { t.clone() } else { Term::delay(nb) })
            }
            (Term::Delay(_), _) => {
                Err(TypeError::new("delay", t, "delay produces a value of type Delay A").expected(ty))
            }
            (Term::ApA(s, u), Type::Delay(b)) => self.check_apa(g, t, s, u, b),
            (Term::ApE(s, u), Type::Later(b)) => self.check_ape(g, t, s, u, b),
            (Term::Never(ann), Type::Later(a)) => {
                self.annotation("never", t, ann, a)?;
                Ok(if ann.is_some() { t.clone() } else { Term::never(Some((**a).clone())) })
            }
            (Term::Never(_), _) => Err(TypeError::new("never", t, "never has type Later A").expected(ty)),
            (Term::Chan(ann), Type::Chan(a)) => {
                self.annotation("chan", t, ann, a)?;
                Ok(if ann.is_some() { t.clone() } else { Arc::new(Term::Chan(Some((**a).clone()))) })
            }
            (Term::Chan(_), _) => Err(TypeError::new("chan", t, "chan has type Chan A").expected(ty)),
            (Term::Wait(k), Type::Later(a)) => {
                let nk = self.check(g, k, &Type::chan((**a).clone()))?;
                Ok(if same(&nk, k) { t.clone() } else { Term::wait(nk) })
            }
            (Term::Watch(s), Type::Later(a)) => {
                let nk = self.check(g, s, &Type::sig(Type::maybe((**a).clone())))?;
                Ok(if same(&nk, s) { t.clone() } else { Term::watch(nk) })
            }
            (Term::Cons { elem, head, tail }, Type::Sig(a)) => {
                self.annotation("cons", t, elem, a)?;
                let nh = self.check(g, head, a)?;
                let nt = self.check(g, tail, &Type::later(ty.clone()))?;
                if elem.is_some() && same(&nh, head) && same(&nt, tail) {
                    return Ok(t.clone());
                }
                Ok(Term::cons(Some((**a).clone()), nh, nt))
            }
            (Term::Cons { .. }, _) => {
                Err(TypeError::new("cons", t, "a signal built with :: has type Sig A").expected(ty))
            }
            (Term::Head(s), _) => {
                let ns = self.check(g, s, &Type::sig(ty.clone()))?;
                Ok(if same(&ns, s) { t.clone() } else { Term::head(ns) })
            }
            (Term::Tail(s), Type::Later(inner)) if matches!(**inner, Type::Sig(_)) => {
                let ns = self.check(g, s, inner)?;
                Ok(if same(&ns, s) { t.clone() } else { Term::tail(ns) })
            }
            (Term::Tail(_), _) => {
                Err(TypeError::new("tail", t, "tail produces a value of type Later (Sig A)").expected(ty))
            }
            (Term::Fix { var, ann, body, label }, _) => {
                self.annotation("fix", t, ann, ty)?;
                let nb = g.under(var, Type::delay(ty.clone()), |g| self.check(g, body, ty))?;
                if ann.is_some() && same(&nb, body) {
                    return Ok(t.clone());
                }
                Ok(Arc::new(Term::Fix { var: var.clone(), ann: Some(ty.clone()), body: nb, label: label.clone() }))
            }
            (Term::Into { ann, body }, Type::Mu(..)) => {
                self.annotation("into", t, ann, ty)?;
                let unfolded = unfold(ty).expect("mu type");
                let nb = self.check(g, body, &unfolded)?;
                if ann.is_some() && same(&nb, body) {
                    return Ok(t.clone());
                }
                Ok(Term::into(Some(ty.clone()), nb))
            }
            (Term::Into { .. }, _) => {
                Err(TypeError::new("into", t, "cons introduces a recursive type mu a. A").expected(ty))
            }
            (Term::App(f, a), _) => self.check_app(g, t, f, a, ty),
            _ => {
                let (nt, actual) = self.synth(g, t)?;
                if actual.alpha_eq(ty) {
                    Ok(nt)
                } else {
                    Err(mismatch(rule_of(t), t, "type mismatch", ty, &actual))
                }
            }
        }
    }

    fn check_rec(
        &self,
        g: &mut TypingContext,
        t: &Arc<Term>,
        var: &Name,
        step: &Arc<Term>,
        target: &Arc<Term>,
        result: &Type,
    ) -> Checked {
        let (nt, tt) = self.synth(g, target)?;
        let Type::Mu(alpha, body) = &tt else {
            return Err(TypeError::new("rec", t, "rec folds over a value of recursive type mu a. A").actual(&tt));
        };
        let pair = Type::prod(tt.clone(), result.clone());
        let var_ty = substitute_type(body, alpha, &pair);
        let ns = g.under(var, var_ty, |g| self.check(g, step, result))?;
        if same(&ns, step) && same(&nt, target) {
            if let Term::Rec { result: Some(_), .. } = &**t {
                return Ok(t.clone());
            }
        }
        Ok(Term::rec(var, Some(result.clone()), ns, nt))
    }

    fn check_app(&self, g: &mut TypingContext, t: &Arc<Term>, f: &Arc<Term>, a: &Arc<Term>, ty: &Type) -> Checked {
        if let Term::Lam { param, ann, body, label } = &**f {
            let (na, arg_ty) = match ann {
                Some(at) => {
                    let at = self.closed_annotation(f, &Some(at.clone()))?;
                    (self.check(g, a, &at)?, at)
                }
                None => self.synth(g, a)?,
            };
            let nb = g.under(param, arg_ty.clone(), |g| self.check(g, body, ty))?;
            let nf = if ann.is_some() && same(&nb, body) {
                f.clone()
            } else {
                Arc::new(Term::Lam { param: param.clone(), ann: Some(arg_ty), body: nb, label: label.clone() })
            };
            return Ok(if same(&nf, f) && same(&na, a) { t.clone() } else { Term::app(nf, na) });
        }
        match self.synth(g, f) {
            Ok((nf, fty)) => {
                let Type::Fun(dom, cod) = &fty else {
                    return Err(TypeError::new("app", t, "only functions can be applied").actual(&fty));
                };
                let na = self.check(g, a, dom)?;
                if !cod.alpha_eq(ty) {
                    return Err(mismatch("app", t, "function result has the wrong type", ty, cod));
                }
                Ok(if same(&nf, f) && same(&na, a) { t.clone() } else { Term::app(nf, na) })
            }
            Err(e) if e.needs_annotation() => {
                let (na, aty) = self.synth(g, a)?;
                let nf = self.check(g, f, &Type::fun(aty, ty.clone()))?;
                Ok(if same(&nf, f) && same(&na, a) { t.clone() } else { Term::app(nf, na) })
            }
            Err(e) => Err(e),
        }
    }

    /// `s <*> u : Delay B` needs `s : Delay (A -> B)` and `u : Delay A`.
    /// Check the operand of `<*>`, blaming `<*>` itself when the operand is
    /// only available under the existential modality.
    fn check_apa_operand(&self, g: &mut TypingContext, t: &Arc<Term>, u: &Arc<Term>, dom: Type) -> Checked {
        let want = Type::delay(dom);
        self.check(g, u, &want).map_err(|e| match self.synth(g, u) {
            Ok((_, uty @ Type::Later(_))) => {
                TypeError::new("<*>", t, "<*> cannot take an operand of type Later A; use <**>").expected(&want).actual(&uty)
            }
            _ => e,
        })
    }

    fn check_apa(&self, g: &mut TypingContext, t: &Arc<Term>, s: &Arc<Term>, u: &Arc<Term>, b: &Type) -> Checked {
        match self.synth(g, s) {
            Ok((ns, sty)) => {
                let (dom, cod) = delayed_function("<*>", t, &sty)?;
                if !cod.alpha_eq(b) {
                    return Err(mismatch("<*>", t, "delayed function result has the wrong type", b, &cod));
                }
                let nu = self.check_apa_operand(g, t, u, dom)?;
                Ok(if same(&ns, s) && same(&nu, u) { t.clone() } else { Term::apa(ns, nu) })
            }
            Err(e) if e.needs_annotation() => {
                let (nu, uty) = self.synth(g, u)?;
                let Type::Delay(a) = &uty else {
                    return Err(TypeError::new("<*>", t, "<*> expects its second operand to have type Delay A")
                        .actual(&uty));
                };
                let ns = self.check(g, s, &Type::delay(Type::fun((**a).clone(), b.clone())))?;
                Ok(if same(&ns, s) && same(&nu, u) { t.clone() } else { Term::apa(ns, nu) })
            }
            Err(e) => Err(e),
        }
    }

    /// `s <**> u : Later B` needs `s : Delay (A -> B)` and `u : Later A`.
    fn check_ape(&self, g: &mut TypingContext, t: &Arc<Term>, s: &Arc<Term>, u: &Arc<Term>, b: &Type) -> Checked {
        match self.synth(g, s) {
            Ok((ns, sty)) => {
                let (dom, cod) = delayed_function("<**>", t, &sty)?;
                if !cod.alpha_eq(b) {
                    return Err(mismatch("<**>", t, "delayed function result has the wrong type", b, &cod));
                }
                let nu = self.check(g, u, &Type::later(dom))?;
                Ok(if same(&ns, s) && same(&nu, u) { t.clone() } else { Term::ape(ns, nu) })
            }
            Err(e) if e.needs_annotation() => {
                let (nu, uty) = self.synth(g, u)?;
                let Type::Later(a) = &uty else {
                    return Err(TypeError::new("<**>", t, "<**> expects its second operand to have type Later A")
                        .actual(&uty));
                };
                let ns = self.check(g, s, &Type::delay(Type::fun((**a).clone(), b.clone())))?;
                Ok(if same(&ns, s) && same(&nu, u) { t.clone() } else { Term::ape(ns, nu) })
            }
            Err(e) => Err(e),
        }
    }

    fn synth(&self, g: &mut TypingContext, t: &Arc<Term>) -> Synthed {
        match &**t {
            Term::Var(x) => match g.lookup(x) {
                Some(ty) => Ok((t.clone(), ty.clone())),
                None => Err(TypeError::new("var", t, format!("variable {x} is not in scope"))),
            },
            Term::Unit => Ok((t.clone(), Type::Unit)),
            Term::Int(_) => Ok((t.clone(), Type::Int)),
            Term::Char(_) => Ok((t.clone(), Type::Char)),
            Term::Str(_) => Ok((t.clone(), Type::Str)),
            Term::Loc(l) => match self.heap.get(*l) {
                Some(a) => Ok((t.clone(), Type::sig(a.clone()))),
                None => Err(TypeError::new("loc", t, format!("location {l} is not in the heap context"))),
            },
            Term::ChanLit(k) => match self.channels.get(*k) {
                Some(a) => Ok((t.clone(), Type::chan(a.clone()))),
                None => Err(TypeError::new("chan-lit", t, format!("channel {k} is not in the channel context"))),
            },
            Term::Lam { param, ann, body, label } => {
                let a = self.closed_annotation(t, ann)?;
                let (nb, b) = g.under(param, a.clone(), |g| self.synth(g, body))?;
                let nt = if same(&nb, body) {
                    t.clone()
                } else {
                    Arc::new(Term::Lam { param: param.clone(), ann: ann.clone(), body: nb, label: label.clone() })
                };
                Ok((nt, Type::fun(a, b)))
            }
            Term::App(f, a) => {
                if let Term::Lam { param, ann: None, body, label } = &**f {
                    let (na, aty) = self.synth(g, a)?;
                    let (nb, bty) = g.under(param, aty.clone(), |g| self.synth(g, body))?;
                    let nf = Arc::new(Term::Lam { param: param.clone(), ann: Some(aty), body: nb, label: label.clone() });
                    return Ok((Term::app(nf, na), bty));
                }
                let (nf, fty) = self.synth(g, f)?;
                let Type::Fun(dom, cod) = &fty else {
                    return Err(TypeError::new("app", t, "only functions can be applied").actual(&fty));
                };
                let na = self.check(g, a, dom)?;
                let nt = if same(&nf, f) && same(&na, a) { t.clone() } else { Term::app(nf, na) };
                Ok((nt, (**cod).clone()))
            }
            Term::Pair(a, b) => {
                let (na, ta) = self.synth(g, a)?;
                let (nb, tb) = self.synth(g, b)?;
                let nt = if same(&na, a) && same(&nb, b) { t.clone() } else { Term::pair(na, nb) };
                Ok((nt, Type::prod(ta, tb)))
            }
            Term::Proj(side, p) => {
                let (np, pty) = self.synth(g, p)?;
                let Type::Prod(a, b) = &pty else {
                    return Err(TypeError::new("proj", t, "projection expects a product").actual(&pty));
                };
                let part = if *side == Side::Left { a } else { b };
                let nt = if same(&np, p) { t.clone() } else { Term::proj(*side, np) };
                Ok((nt, (**part).clone()))
            }
            Term::Inj { ann, .. } | Term::Into { ann, .. } | Term::Fix { ann, .. } => {
                let a = self.closed_annotation(t, ann)?;
                Ok((self.check(g, t, &a)?, a))
            }
            Term::Rec { result, .. } => {
                let a = self.closed_annotation(t, result)?;
                Ok((self.check(g, t, &a)?, a))
            }
            Term::Never(ann) => {
                let a = self.closed_annotation(t, ann)?;
                Ok((t.clone(), Type::later(a)))
            }
            Term::Chan(ann) => {
                let a = self.closed_annotation(t, ann)?;
                Ok((t.clone(), Type::chan(a)))
            }
            Term::Case { scrutinee, left, right } => {
                let (ns, st) = self.synth(g, scrutinee)?;
                let Type::Sum(a, b) = &st else {
                    return Err(TypeError::new("case", t, "the scrutinee of case must have a sum type").actual(&st));
                };
                let (nl, ty) = g.under(&left.0, (**a).clone(), |g| self.synth(g, &left.1))?;
                let nr = g.under(&right.0, (**b).clone(), |g| self.check(g, &right.1, &ty))?;
                let nt = Arc::new(Term::Case { scrutinee: ns, left: (left.0.clone(), nl), right: (right.0.clone(), nr) });
                Ok((nt, ty))
            }
            Term::Delay(body) => {
                let (nb, a) = self.synth(g, body)?;
                Ok((if same(&nb, body) { t.clone() } else { Term::delay(nb) }, Type::delay(a)))
            }
            Term::ApA(s, u) => {
                let (ns, sty) = self.synth(g, s)?;
                let (dom, cod) = delayed_function("<*>", t, &sty)?;
                let nu = self.check_apa_operand(g, t, u, dom)?;
                let nt = if same(&ns, s) && same(&nu, u) { t.clone() } else { Term::apa(ns, nu) };
                Ok((nt, Type::delay(cod)))
            }
            Term::ApE(s, u) => {
                let (ns, sty) = self.synth(g, s)?;
                let (dom, cod) = delayed_function("<**>", t, &sty)?;
                let nu = self.check(g, u, &Type::later(dom))?;
                let nt = if same(&ns, s) && same(&nu, u) { t.clone() } else { Term::ape(ns, nu) };
                Ok((nt, Type::later(cod)))
            }
            Term::Wait(k) => {
                let (nk, kt) = self.synth(g, k)?;
                let Type::Chan(a) = &kt else {
                    return Err(TypeError::new("wait", t, "wait expects a channel of type Chan A").actual(&kt));
                };
                Ok((if same(&nk, k) { t.clone() } else { Term::wait(nk) }, Type::later((**a).clone())))
            }
            Term::Watch(s) => {
                let (ns, st) = self.synth(g, s)?;
                let inner = match &st {
                    Type::Sig(m) => match &**m {
                        Type::Sum(a, u) if **u == Type::Unit => Some((**a).clone()),
                        _ => None,
                    },
                    _ => None,
                };
                let Some(a) = inner else {
                    return Err(TypeError::new("watch", t, "watch expects a partial signal of type Sig (A + 1)")
                        .actual(&st));
                };
                Ok((if same(&ns, s) { t.clone() } else { Term::watch(ns) }, Type::later(a)))
            }
            Term::Sync(a, b) => {
                let (na, ta) = self.synth(g, a)?;
                let (nb, tb) = self.synth(g, b)?;
                let (Type::Later(x), Type::Later(y)) = (&ta, &tb) else {
                    let bad = if matches!(ta, Type::Later(_)) { &tb } else { &ta };
                    return Err(TypeError::new("sync", t, "sync expects two operands of type Later A").actual(bad));
                };
                let nt = if same(&na, a) && same(&nb, b) { t.clone() } else { Term::sync(na, nb) };
                Ok((nt, Type::later(Type::sync((**x).clone(), (**y).clone()))))
            }
            Term::Cons { elem, head, .. } => {
                let a = match elem {
                    Some(_) => self.closed_annotation(t, elem)?,
                    None => self.synth(g, head)?.1,
                };
                let ty = Type::sig(a);
                Ok((self.check(g, t, &ty)?, ty))
            }
            Term::Head(s) => {
                let (ns, st) = self.synth(g, s)?;
                let Type::Sig(a) = &st else {
                    return Err(TypeError::new("head", t, "head expects a signal of type Sig A").actual(&st));
                };
                Ok((if same(&ns, s) { t.clone() } else { Term::head(ns) }, (**a).clone()))
            }
            Term::Tail(s) => {
                let (ns, st) = self.synth(g, s)?;
                if !matches!(st, Type::Sig(_)) {
                    return Err(TypeError::new("tail", t, "tail expects a signal of type Sig A").actual(&st));
                }
                Ok((if same(&ns, s) { t.clone() } else { Term::tail(ns) }, Type::later(st)))
            }
            Term::BinOp(op, a, b) => {
                let na = self.check(g, a, &Type::Int)?;
                let nb = self.check(g, b, &Type::Int)?;
                let ty = if op.is_comparison() { Type::bool() } else { Type::Int };
                Ok((if same(&na, a) && same(&nb, b) { t.clone() } else { Term::binop(*op, na, nb) }, ty))
            }
            Term::IsEven(a) => {
                let na = self.check(g, a, &Type::Int)?;
                Ok((if same(&na, a) { t.clone() } else { Arc::new(Term::IsEven(na)) }, Type::bool()))
            }
        }
    }
}

fn delayed_function(rule: &'static str, t: &Term, ty: &Type) -> Result<(Type, Type), TypeError> {
    if let Type::Delay(f) = ty {
        if let Type::Fun(a, b) = &**f {
            return Ok(((**a).clone(), (**b).clone()));
        }
    }
    let msg = format!("{rule} expects its first operand to have type Delay (A -> B)");
    Err(TypeError::new(rule, t, msg).actual(ty))
}

fn rule_of(t: &Term) -> &'static str {
    match t {
        Term::Var(_) => "var",
        Term::Unit | Term::Int(_) | Term::Char(_) | Term::Str(_) => "literal",
        Term::Lam { .. } => "lam",
        Term::App(..) => "app",
        Term::Pair(..) => "pair",
        Term::Proj(..) => "proj",
        Term::Inj { .. } => "inj",
        Term::Case { .. } => "case",
        Term::Rec { .. } => "rec",
        Term::Delay(_) => "delay",
        Term::ApA(..) => "<*>",
        Term::ApE(..) => "<**>",
        Term::Never(_) => "never",
        Term::Chan(_) => "chan",
        Term::Wait(_) => "wait",
        Term::Watch(_) => "watch",
        Term::Sync(..) => "sync",
        Term::Cons { .. } => "cons",
        Term::Head(_) => "head",
        Term::Tail(_) => "tail",
        Term::Fix { .. } => "fix",
        Term::Into { .. } => "into",
        Term::Loc(_) => "loc",
        Term::ChanLit(_) => "chan-lit",
        Term::BinOp(..) | Term::IsEven(_) => "prim",
    }
}

impl BinOp {
    pub fn result_type(self) -> Type {
        if self.is_comparison() {
            Type::bool()
        } else {
            Type::Int
        }
    }
}

#[cfg(test)]
mod tests;
