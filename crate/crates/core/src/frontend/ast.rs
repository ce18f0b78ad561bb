//! Surface syntax and its pretty-printer. The printer's output re-parses to
//! an equal tree (positions are ignored by equality).

use std::fmt::{self, Write};

use super::Span;

/// A source position that compares equal to every other position, so that
/// trees parsed from differently formatted sources can be compared.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pos(pub Span);

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SType {
    /// A named type applied to arguments: `Int`, `Sig A`, `List (Maybe A)`.
    Con(String, Vec<SType>),
    /// A lowercase variable bound by `mu`.
    Var(String),
    Unit,
    Fun(Box<SType>, Box<SType>),
    Sum(Box<SType>, Box<SType>),
    Prod(Box<SType>, Box<SType>),
    Mu(String, Box<SType>),
}

impl SType {
    pub fn con(name: &str) -> SType {
        SType::Con(name.into(), vec![])
    }

    /// Whether `name` occurs as a type constructor anywhere in the type.
    pub fn mentions(&self, name: &str) -> bool {
        match self {
            SType::Con(n, args) => n == name || args.iter().any(|a| a.mentions(name)),
            SType::Var(_) | SType::Unit => false,
            SType::Fun(a, b) | SType::Sum(a, b) | SType::Prod(a, b) => a.mentions(name) || b.mentions(name),
            SType::Mu(_, b) => b.mentions(name),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    /// `::`
    Cons,
    /// `|>`
    Later,
    /// `<*>`
    ApA,
    /// `<**>`
    ApE,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::Eq => "==",
            Op::Cons => "::",
            Op::Later => "|>",
            Op::ApA => "<*>",
            Op::ApE => "<**>",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Op> {
        Some(match s {
            "+" => Op::Add,
            "-" => Op::Sub,
            "*" => Op::Mul,
            "<" => Op::Lt,
            "<=" => Op::Le,
            ">" => Op::Gt,
            ">=" => Op::Ge,
            "==" => Op::Eq,
            "::" => Op::Cons,
            "|>" => Op::Later,
            "<*>" => Op::ApA,
            "<**>" => Op::ApE,
            _ => return None,
        })
    }

    /// Binding strength; higher binds tighter.
    pub fn level(self) -> u8 {
        match self {
            Op::Cons => 1,
            Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::Eq => 2,
            Op::Later | Op::ApA | Op::ApE => 3,
            Op::Add | Op::Sub => 4,
            Op::Mul => 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Pat {
    Var(String, Pos),
    Wild,
    Unit,
    /// Two or more components, nested to the right.
    Tuple(Vec<Pat>),
    /// A constructor applied to argument patterns.
    Con(String, Vec<Pat>, Pos),
    /// `x :: xs` on signals.
    Cons(Box<Pat>, Box<Pat>),
}

impl Pat {
    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Pat::Var(x, _) => out.push(x.clone()),
            Pat::Wild | Pat::Unit => {}
            Pat::Tuple(ps) | Pat::Con(_, ps, _) => ps.iter().for_each(|p| p.vars(out)),
            Pat::Cons(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var { name: String, targs: Vec<SType>, pos: Pos },
    Con(String, Pos),
    Int(i64),
    Char(char),
    Str(String),
    Unit,
    Tuple(Vec<Expr>),
    Lam(Vec<Pat>, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    Op(Op, Box<Expr>, Box<Expr>, Pos),
    Let { pat: Pat, ann: Option<SType>, value: Box<Expr>, body: Box<Expr> },
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Case(Box<Expr>, Vec<(Pat, Expr)>),
    Ann(Box<Expr>, SType),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var { name: name.into(), targs: vec![], pos: Pos::default() }
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Box::new(f), Box::new(a))
    }

    /// Split an application into its head and arguments.
    pub fn spine(&self) -> (&Expr, Vec<&Expr>) {
        let mut args = Vec::new();
        let mut e = self;
        while let Expr::App(f, a) = e {
            args.push(&**a);
            e = f;
        }
        args.reverse();
        (e, args)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Signature {
    pub name: String,
    /// Explicit `forall` parameters, if written.
    pub params: Option<Vec<String>>,
    pub ty: SType,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    pub name: String,
    pub pats: Vec<Pat>,
    pub body: Expr,
    pub wheres: Vec<Decl>,
    pub pos: Pos,
}

/// Declarations allowed in `where` blocks.
#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Sig(Signature),
    Eq(Equation),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataDecl {
    pub name: String,
    pub params: Vec<String>,
    pub ctors: Vec<(String, Vec<SType>)>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Data(DataDecl),
    Input { name: String, ty: SType, pos: Pos },
    Decl(Decl),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SurfaceProgram {
    pub items: Vec<Item>,
}

// Printing. Everything is printed on one line per item with explicit braces,
// which the parser accepts as an alternative to layout.

fn write_type(ty: &SType, prec: u8, out: &mut String) {
    let paren = |p: u8| prec > p;
    match ty {
        SType::Con(n, args) if args.is_empty() => out.push_str(n),
        SType::Con(n, args) => {
            if paren(3) {
                out.push('(');
            }
            out.push_str(n);
            for a in args {
                out.push(' ');
                write_type(a, 4, out);
            }
            if paren(3) {
                out.push(')');
            }
        }
        SType::Var(a) => out.push_str(a),
        SType::Unit => out.push('1'),
        SType::Fun(a, b) | SType::Sum(a, b) | SType::Prod(a, b) => {
            let (p, sym) = match ty {
                SType::Fun(..) => (0, " -> "),
                SType::Sum(..) => (1, " + "),
                _ => (2, " * "),
            };
            if paren(p) {
                out.push('(');
            }
            write_type(a, p + 1, out);
            out.push_str(sym);
            write_type(b, p, out);
            if paren(p) {
                out.push(')');
            }
        }
        SType::Mu(a, b) => {
            if paren(0) {
                out.push('(');
            }
            let _ = write!(out, "mu {a}. ");
            write_type(b, 0, out);
            if paren(0) {
                out.push(')');
            }
        }
    }
}

impl fmt::Display for SType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_type(self, 0, &mut s);
        f.write_str(&s)
    }
}

fn write_pat(p: &Pat, atom: bool, out: &mut String) {
    match p {
        Pat::Var(x, _) => out.push_str(x),
        Pat::Wild => out.push('_'),
        Pat::Unit => out.push_str("()"),
        Pat::Tuple(ps) => {
            out.push('(');
            for (i, q) in ps.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_pat(q, false, out);
            }
            out.push(')');
        }
        Pat::Con(c, args, _) if args.is_empty() => out.push_str(c),
        Pat::Con(c, args, _) => {
            if atom {
                out.push('(');
            }
            out.push_str(c);
            for a in args {
                out.push(' ');
                write_pat(a, true, out);
            }
            if atom {
                out.push(')');
            }
        }
        Pat::Cons(a, b) => {
            if atom {
                out.push('(');
            }
            write_pat(a, true, out);
            out.push_str(" :: ");
            write_pat(b, false, out);
            if atom {
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Pat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_pat(self, false, &mut s);
        f.write_str(&s)
    }
}

const OPEN: u8 = 0;
const APP: u8 = 6;
const ATOM: u8 = 7;

fn expr_level(e: &Expr) -> u8 {
    match e {
        Expr::Lam(..) | Expr::Let { .. } | Expr::If(..) | Expr::Case(..) => OPEN,
        Expr::Op(op, ..) => op.level(),
        Expr::App(..) => APP,
        Expr::Int(n) if *n < 0 => APP,
        _ => ATOM,
    }
}

fn write_expr(e: &Expr, prec: u8, out: &mut String) {
    let paren = prec > expr_level(e);
    if paren {
        out.push('(');
    }
    match e {
        Expr::Var { name, targs, .. } => {
            out.push_str(name);
            if !targs.is_empty() {
                out.push('[');
                for (i, t) in targs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_type(t, 0, out);
                }
                out.push(']');
            }
        }
        Expr::Con(c, _) => out.push_str(c),
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Char(c) => out.push_str(&quote(&c.to_string(), '\'')),
        Expr::Str(s) => out.push_str(&quote(s, '"')),
        Expr::Unit => out.push_str("()"),
        Expr::Tuple(es) => {
            out.push('(');
            for (i, x) in es.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(x, OPEN, out);
            }
            out.push(')');
        }
        Expr::Lam(ps, body) => {
            out.push('\\');
            for p in ps {
                write_pat(p, true, out);
                out.push(' ');
            }
            out.push_str("-> ");
            write_expr(body, OPEN, out);
        }
        Expr::App(f, a) => {
            write_expr(f, APP, out);
            out.push(' ');
            write_expr(a, ATOM, out);
        }
        Expr::Op(op, a, b, _) => {
            let l = op.level();
            // :: is right associative, comparisons do not associate, the rest are left associative
            let (lp, rp) = match op {
                Op::Cons => (l + 1, l),
                Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::Eq => (l + 1, l + 1),
                _ => (l, l + 1),
            };
            write_expr(a, lp, out);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(b, rp, out);
        }
        Expr::Let { pat, ann, value, body } => {
            out.push_str("let ");
            write_pat(pat, true, out);
            if let Some(t) = ann {
                out.push_str(" : ");
                write_type(t, 0, out);
            }
            out.push_str(" = ");
            write_expr(value, OPEN, out);
            out.push_str(" in ");
            write_expr(body, OPEN, out);
        }
        Expr::If(c, a, b) => {
            out.push_str("if ");
            write_expr(c, OPEN, out);
            out.push_str(" then ");
            write_expr(a, OPEN, out);
            out.push_str(" else ");
            write_expr(b, OPEN, out);
        }
        Expr::Case(s, alts) => {
            out.push_str("case ");
            write_expr(s, OPEN, out);
            out.push_str(" of { ");
            for (i, (p, x)) in alts.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_pat(p, false, out);
                out.push_str(" -> ");
                write_expr(x, OPEN, out);
            }
            out.push_str(" }");
        }
        Expr::Ann(x, t) => {
            out.push('(');
            write_expr(x, OPEN, out);
            out.push_str(" : ");
            write_type(t, 0, out);
            out.push(')');
        }
    }
    if paren {
        out.push(')');
    }
}

fn quote(s: &str, q: char) -> String {
    let mut out = String::new();
    out.push(q);
    for c in s.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\\' => out.push_str("\\\\"),
            '\0' => out.push_str("\\0"),
            c if c == q => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(q);
    out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(self, OPEN, &mut s);
        f.write_str(&s)
    }
}

fn write_decl(d: &Decl, out: &mut String) {
    match d {
        Decl::Sig(s) => {
            let _ = write!(out, "{} : ", s.name);
            if let Some(ps) = &s.params {
                out.push_str("forall");
                for p in ps {
                    out.push(' ');
                    out.push_str(p);
                }
                out.push_str(". ");
            }
            write_type(&s.ty, 0, out);
        }
        Decl::Eq(eq) => {
            out.push_str(&eq.name);
            for p in &eq.pats {
                out.push(' ');
                write_pat(p, true, out);
            }
            out.push_str(" = ");
            write_expr(&eq.body, OPEN, out);
            if !eq.wheres.is_empty() {
                out.push_str(" where { ");
                for (i, w) in eq.wheres.iter().enumerate() {
                    if i > 0 {
                        out.push_str("; ");
                    }
                    write_decl(w, out);
                }
                out.push_str(" }");
            }
        }
    }
}

impl fmt::Display for SurfaceProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for item in &self.items {
            match item {
                Item::Data(d) => {
                    let _ = write!(out, "data {}", d.name);
                    for p in &d.params {
                        out.push(' ');
                        out.push_str(p);
                    }
                    out.push_str(" =");
                    for (i, (c, fields)) in d.ctors.iter().enumerate() {
                        if i > 0 {
                            out.push_str(" |");
                        }
                        out.push(' ');
                        out.push_str(c);
                        for t in fields {
                            out.push(' ');
                            write_type(t, 4, &mut out);
                        }
                    }
                }
                Item::Input { name, ty, .. } => {
                    let _ = write!(out, "input {name} : ");
                    write_type(ty, 0, &mut out);
                }
                Item::Decl(d) => write_decl(d, &mut out),
            }
            out.push('\n');
        }
        f.write_str(&out)
    }
}
