use super::*;
use crate::store::{Cell, Heap, StoredSignal};
use crate::syntax::{ChanId, Term};

fn empty() -> (TypingContext, HeapContext, ChannelContext) {
    (TypingContext::new(), HeapContext::new(), ChannelContext::new())
}

fn check(t: &Arc<Term>, ty: &Type) -> Result<(), TypeError> {
    let (g, h, d) = empty();
    typecheck(&g, &h, &d, t, ty)
}

#[test]
fn head_of_signal() {
    let t = Term::lam("s", Term::head(Term::var("s")));
    assert!(check(&t, &Type::fun(Type::sig(Type::Int), Type::Int)).is_ok());
}

#[test]
fn tail_is_not_a_signal() {
    let t = Term::lam("s", Term::tail(Term::var("s")));
    let err = check(&t, &Type::fun(Type::sig(Type::Int), Type::sig(Type::Int))).unwrap_err();
    assert_eq!(err.rule, "tail");
    assert!(check(&t, &Type::fun(Type::sig(Type::Int), Type::later(Type::sig(Type::Int)))).is_ok());
}

#[test]
fn sync_of_two_laters() {
    let t = Term::lam("a", Term::lam("b", Term::sync(Term::var("a"), Term::var("b"))));
    let ty = Type::fun(
        Type::later(Type::Int),
        Type::fun(Type::later(Type::Char), Type::later(Type::sync(Type::Int, Type::Char))),
    );
    assert!(check(&t, &ty).is_ok());
    let wrong = Type::fun(
        Type::later(Type::Int),
        Type::fun(Type::later(Type::Char), Type::later(Type::sync(Type::Char, Type::Int))),
    );
    assert!(check(&t, &wrong).is_err());
}

#[test]
fn apa_rejects_existential_left_operand() {
    let t = Term::lam("d", Term::lam("x", Term::apa(Term::var("d"), Term::var("x"))));
    let ty = Type::fun(
        Type::later(Type::fun(Type::Int, Type::Int)),
        Type::fun(Type::delay(Type::Int), Type::delay(Type::Int)),
    );
    let err = check(&t, &ty).unwrap_err();
    assert_eq!(err.rule, "<*>");
    assert!(err.message.contains("Delay (A -> B)"));
}

#[test]
fn ape_applies_delayed_function_to_later_value() {
    let t = Term::lam("k", Term::ape(Term::delay(Term::lam("x", Term::var("x"))), Term::wait(Term::var("k"))));
    let ty = Type::fun(Type::chan(Type::Int), Type::later(Type::Int));
    let out = elaborate(&TypingContext::new(), &HeapContext::new(), &ChannelContext::new(), &t, &ty).unwrap();
    // the lambda under delay gets its binder annotation from the argument's type
    let s = format!("{out:?}");
    assert!(s.contains("ann: Some(Int)"), "{s}");
}

#[test]
fn annotations_are_filled_by_elaboration() {
    let t = Term::cons(None, Term::int(0), Term::never(None));
    let (g, h, d) = empty();
    let out = elaborate(&g, &h, &d, &t, &Type::sig(Type::Int)).unwrap();
    assert_eq!(*out, Term::Cons { elem: Some(Type::Int), head: Term::int(0), tail: Term::never(Some(Type::sig(Type::Int))) });
    // and a wrong annotation is rejected
    let bad = Term::cons(Some(Type::Char), Term::int(0), Term::never(None));
    assert_eq!(check(&bad, &Type::sig(Type::Int)).unwrap_err().rule, "cons");
}

#[test]
fn locations_and_channels_come_from_contexts() {
    let mut h = HeapContext::new();
    h.insert(Loc(1), Type::Int);
    let mut d = ChannelContext::new();
    d.insert(ChanId(1), Type::Char);
    let g = TypingContext::new();
    assert!(typecheck(&g, &h, &d, &Term::loc(1), &Type::sig(Type::Int)).is_ok());
    assert!(typecheck(&g, &h, &d, &Term::loc(2), &Type::sig(Type::Int)).is_err());
    assert!(typecheck(&g, &h, &d, &Term::wait(Term::chan_lit(1)), &Type::later(Type::Char)).is_ok());
    assert_eq!(typecheck(&g, &h, &d, &Term::chan_lit(2), &Type::chan(Type::Char)).unwrap_err().rule, "chan-lit");
}

#[test]
fn fix_binds_a_delayed_self_reference() {
    // fix r. \d -> delay (\r' -> \x -> x :: r' d) <*> r <**> d
    let body = Term::lam(
        "d",
        Term::ape(
            Term::apa(
                Term::delay(Term::lam(
                    "r'",
                    Term::lam("x", Term::cons(None, Term::var("x"), Term::app(Term::var("r'"), Term::var("d")))),
                )),
                Term::var("r"),
            ),
            Term::var("d"),
        ),
    );
    let ty = Type::fun(Type::later(Type::Int), Type::later(Type::sig(Type::Int)));
    assert!(check(&Term::fix("r", None, body.clone()), &ty).is_ok());
    // without the delay the self reference has the wrong type
    let bad = Term::lam("d", Term::app(Term::var("r"), Term::var("d")));
    assert!(check(&Term::fix("r", None, bad), &ty).is_err());
}

#[test]
fn rec_binds_pairs_of_children_and_results() {
    // length over mu a. 1 + Int * a
    let list = Type::mu("a", Type::sum(Type::Unit, Type::prod(Type::Int, Type::var("a"))));
    let step = Term::case(
        Term::var("r"),
        "u",
        Term::int(0),
        "c",
        Term::binop(BinOp::Add, Term::int(1), Term::proj(Side::Right, Term::proj(Side::Right, Term::var("c")))),
    );
    let t = Term::lam("l", Term::rec("r", None, step, Term::var("l")));
    assert!(check(&t, &Type::fun(list.clone(), Type::Int)).is_ok());
    // rec needs an expected type: it does not synthesize without one
    let (g, h, d) = empty();
    let mut g2 = g.clone();
    g2.push(crate::syntax::name("l"), list);
    let bare = Term::rec("r", None, Term::int(0), Term::var("l"));
    assert_eq!(synthesize(&g2, &h, &d, &bare).unwrap_err().rule, "annotation");
}

#[test]
fn into_checks_the_unfolding() {
    let nat = Type::mu("a", Type::sum(Type::Unit, Type::var("a")));
    let zero = Term::into(None, Term::inj(Side::Left, None, Term::unit()));
    let one = Term::into(None, Term::inj(Side::Right, None, zero.clone()));
    assert!(check(&one, &nat).is_ok());
    assert!(check(&Term::into(None, Term::unit()), &nat).is_err());
}

#[test]
fn rightmost_binding_wins() {
    let mut g = TypingContext::new();
    g.push(crate::syntax::name("x"), Type::Int);
    g.push(crate::syntax::name("x"), Type::Char);
    assert_eq!(g.lookup("x"), Some(&Type::Char));
}

fn cell(l: u32, head: Arc<Term>, tail: Arc<Term>) -> Cell {
    Cell { loc: Loc(l), ty: Type::Int, signal: StoredSignal { head, tail, updated: false } }
}

#[test]
fn heap_examples() {
    let d = ChannelContext::new();
    assert!(check_heap_now(&d, &Heap::new()).is_ok());
    let ok = Heap::from_cells([cell(1, Term::int(0), Term::never(None))]).unwrap();
    assert!(check_heap_now(&d, &ok).is_ok());
    let own = Heap::from_cells([cell(1, Term::int(0), Term::tail(Term::loc(1)))]).unwrap();
    let err = check_heap_now(&d, &own).unwrap_err();
    assert_eq!(err.loc, Loc(1));
    assert_eq!(err.component, HeapComponent::Tail);
    // referring to the left is fine
    let left = Heap::from_cells([
        cell(1, Term::int(0), Term::never(None)),
        cell(2, Term::head(Term::loc(1)), Term::tail(Term::loc(1))),
    ])
    .unwrap();
    assert!(check_heap_now(&d, &left).is_ok());
    let h = heaptype(&left);
    assert_eq!(h.iter().map(|(l, _)| *l).collect::<Vec<_>>(), vec![Loc(1), Loc(2)]);
}

#[test]
fn heaptype_preserves_order() {
    let heap = Heap::from_cells([
        cell(3, Term::int(0), Term::never(None)),
        cell(1, Term::int(1), Term::never(None)),
        cell(2, Term::int(2), Term::never(None)),
    ])
    .unwrap();
    let h = heaptype(&heap);
    assert_eq!(h.iter().map(|(l, _)| l.0).collect::<Vec<_>>(), vec![3, 1, 2]);
    assert!(heaptype(&Heap::new()).is_empty());
}

#[test]
fn earlier_cells_see_the_now_heap_and_their_left() {
    let d = ChannelContext::new();
    let mut h = HeapContext::new();
    h.insert(Loc(1), Type::Int);
    let earlier = Heap::from_cells([
        cell(2, Term::head(Term::loc(1)), Term::tail(Term::loc(1))),
        cell(3, Term::head(Term::loc(2)), Term::never(None)),
    ])
    .unwrap();
    assert!(check_heap_earlier(&h, &d, &earlier).is_ok());
    assert!(check_heap_earlier(&HeapContext::new(), &d, &earlier).is_err());
    assert!(check_heap_earlier(&h, &d, &Heap::new()).is_ok());
}
