use super::{Side, Term, Type};

pub fn fmt_type(ty: &Type) -> String {
    let mut out = String::new();
    write_type(ty, 0, &mut out);
    out
}

fn write_type(ty: &Type, prec: u8, out: &mut String) {
    let open = |p: u8, out: &mut String| {
        if prec > p {
            out.push('(');
        }
    };
    let close = |p: u8, out: &mut String| {
        if prec > p {
            out.push(')');
        }
    };
    match ty {
        Type::Var(a) => out.push_str(a),
        Type::Unit => out.push('1'),
        Type::Int => out.push_str("Int"),
        Type::Char => out.push_str("Char"),
        Type::Str => out.push_str("String"),
        Type::Fun(a, b) => {
            open(0, out);
            write_type(a, 1, out);
            out.push_str(" -> ");
            write_type(b, 0, out);
            close(0, out);
        }
        Type::Sum(a, b) => {
            open(1, out);
            write_type(a, 2, out);
            out.push_str(" + ");
            write_type(b, 1, out);
            close(1, out);
        }
        Type::Prod(a, b) => {
            open(2, out);
            write_type(a, 3, out);
            out.push_str(" * ");
            write_type(b, 2, out);
            close(2, out);
        }
        Type::Later(a) | Type::Delay(a) | Type::Sig(a) | Type::Chan(a) => {
            let head = match ty {
                Type::Later(_) => "Later",
                Type::Delay(_) => "Delay",
                Type::Sig(_) => "Sig",
                _ => "Chan",
            };
            open(3, out);
            out.push_str(head);
            out.push(' ');
            write_type(a, 4, out);
            close(3, out);
        }
        Type::Mu(a, body) => {
            open(0, out);
            out.push_str("mu ");
            out.push_str(a);
            out.push_str(". ");
            write_type(body, 0, out);
            close(0, out);
        }
    }
}

/// Renders core terms in an ASCII syntax close to the surface language.
#[derive(Clone, Debug)]
pub struct TermPrinter {
    /// Print labelled definitions by name.
    pub fold_labels: bool,
}

impl Default for TermPrinter {
    fn default() -> Self {
        TermPrinter { fold_labels: true }
    }
}

const OPEN: u8 = 0;
const CONS: u8 = 1;
const CMP: u8 = 2;
const LATER: u8 = 3;
const ADD: u8 = 4;
const MUL: u8 = 5;
const APP: u8 = 6;
const ATOM: u8 = 7;

impl TermPrinter {
    pub fn term(&self, t: &Term) -> String {
        let mut out = String::new();
        self.write(t, OPEN, &mut out);
        out
    }

    fn write(&self, t: &Term, prec: u8, out: &mut String) {
        let level = self.level(t);
        let paren = prec > level;
        if paren {
            out.push('(');
        }
        self.write_bare(t, out);
        if paren {
            out.push(')');
        }
    }

    fn level(&self, t: &Term) -> u8 {
        match t {
            Term::Lam { label: Some(_), .. } | Term::Fix { label: Some(_), .. } if self.fold_labels => ATOM,
            Term::Lam { .. } | Term::Fix { .. } | Term::Case { .. } => OPEN,
            Term::Cons { .. } => CONS,
            Term::BinOp(op, ..) if op.is_comparison() => CMP,
            Term::BinOp(super::BinOp::Mul, ..) => MUL,
            Term::BinOp(..) => ADD,
            Term::ApA(..) | Term::ApE(..) => LATER,
            Term::App(..)
            | Term::Proj(..)
            | Term::Inj { .. }
            | Term::Delay(_)
            | Term::Wait(_)
            | Term::Watch(_)
            | Term::Sync(..)
            | Term::Head(_)
            | Term::Tail(_)
            | Term::Into { .. }
            | Term::IsEven(_) => APP,
            Term::Int(n) if *n < 0 => APP,
            _ => ATOM,
        }
    }

    fn prefix(&self, kw: &str, args: &[&Term], out: &mut String) {
        out.push_str(kw);
        for a in args {
            out.push(' ');
            self.write(a, ATOM, out);
        }
    }

    fn write_bare(&self, t: &Term, out: &mut String) {
        match t {
            Term::Var(x) => out.push_str(x),
            Term::Unit => out.push_str("()"),
            Term::Int(n) => out.push_str(&n.to_string()),
            Term::Char(c) => out.push_str(&format!("{c:?}")),
            Term::Str(s) => out.push_str(&format!("{:?}", &**s)),
            Term::Loc(l) => out.push_str(&l.to_string()),
            Term::ChanLit(k) => out.push_str(&k.to_string()),
            Term::Lam { label: Some(l), .. } | Term::Fix { label: Some(l), .. } if self.fold_labels => {
                out.push_str(l)
            }
            Term::Lam { param, body, .. } => {
                out.push('\\');
                out.push_str(param);
                out.push_str(" -> ");
                self.write(body, OPEN, out);
            }
            Term::Fix { var, body, .. } => {
                out.push_str("fix ");
                out.push_str(var);
                out.push_str(" -> ");
                self.write(body, OPEN, out);
            }
            Term::Case { scrutinee, left, right } => {
                out.push_str("case ");
                self.write(scrutinee, OPEN, out);
                out.push_str(" of { in1 ");
                out.push_str(&left.0);
                out.push_str(" -> ");
                self.write(&left.1, OPEN, out);
                out.push_str("; in2 ");
                out.push_str(&right.0);
                out.push_str(" -> ");
                self.write(&right.1, OPEN, out);
                out.push_str(" }");
            }
            Term::Rec { var, step, target, .. } => {
                out.push_str("rec(");
                out.push_str(var);
                out.push_str(" -> ");
                self.write(step, OPEN, out);
                out.push_str(", ");
                self.write(target, OPEN, out);
                out.push(')');
            }
            Term::App(f, a) => {
                self.write(f, APP, out);
                out.push(' ');
                self.write(a, ATOM, out);
            }
            Term::Pair(a, b) => {
                out.push('(');
                self.write(a, OPEN, out);
                out.push_str(", ");
                self.write(b, OPEN, out);
                out.push(')');
            }
            Term::Proj(side, a) => {
                let kw = if *side == Side::Left { "fst" } else { "snd" };
                self.prefix(kw, &[a], out)
            }
            Term::Inj { side, body, .. } => {
                let kw = if *side == Side::Left { "in1" } else { "in2" };
                self.prefix(kw, &[body], out)
            }
            Term::Delay(a) => self.prefix("delay", &[a], out),
            Term::Wait(a) => self.prefix("wait", &[a], out),
            Term::Watch(a) => self.prefix("watch", &[a], out),
            Term::Head(a) => self.prefix("head", &[a], out),
            Term::Tail(a) => self.prefix("tail", &[a], out),
            Term::IsEven(a) => self.prefix("isEven", &[a], out),
            Term::Into { body, .. } => self.prefix("cons", &[body], out),
            Term::Sync(a, b) => self.prefix("sync", &[a, b], out),
            Term::ApA(a, b) | Term::ApE(a, b) => {
                self.write(a, LATER, out);
                out.push_str(if matches!(t, Term::ApA(..)) { " <*> " } else { " <**> " });
                self.write(b, LATER + 1, out);
            }
            Term::Cons { head, tail, .. } => {
                self.write(head, CONS + 1, out);
                out.push_str(" :: ");
                self.write(tail, CONS, out);
            }
            Term::BinOp(op, a, b) => {
                let level = self.level(t);
                let (l, r) = if op.is_comparison() { (level + 1, level + 1) } else { (level, level + 1) };
                self.write(a, l, out);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                self.write(b, r, out);
            }
            Term::Never(_) => out.push_str("never"),
            Term::Chan(Some(ty)) => {
                out.push_str("chan[");
                out.push_str(&fmt_type(ty));
                out.push(']');
            }
            Term::Chan(None) => out.push_str("chan"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{BinOp, Type};

    #[test]
    fn types_print_with_minimal_parentheses() {
        let s = Type::sync(Type::Int, Type::Char);
        assert_eq!(fmt_type(&s), "(Int + Char) + Int * Char");
        let f = Type::fun(Type::fun(Type::Int, Type::Int), Type::sig(Type::later(Type::Int)));
        assert_eq!(fmt_type(&f), "(Int -> Int) -> Sig (Later Int)");
        assert_eq!(fmt_type(&Type::mu("a", Type::sum(Type::Unit, Type::var("a")))), "mu a. 1 + a");
    }

    #[test]
    fn terms_print_with_operator_precedence() {
        let t = Term::ape(
            Term::apa(Term::delay(Term::lam("r'", Term::app(Term::var("r'"), Term::var("f")))), Term::var("r")),
            Term::var("xs"),
        );
        assert_eq!(t.to_string(), "delay (\\r' -> r' f) <*> r <**> xs");
        let c = Term::cons(None, Term::int(1), Term::cons(None, Term::int(2), Term::never(None)));
        assert_eq!(c.to_string(), "1 :: 2 :: never");
        let a = Term::binop(BinOp::Add, Term::int(1), Term::binop(BinOp::Add, Term::int(2), Term::int(3)));
        assert_eq!(a.to_string(), "1 + (2 + 3)");
        assert_eq!(Term::head(Term::loc(2)).to_string(), "head l2");
    }
}
