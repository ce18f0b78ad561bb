//! Layout-sensitive recursive descent parser.
//!
//! Top-level items start in column 1. `where` and `case .. of` open a block
//! whose items line up with the first token after the keyword; a token on a
//! new line at or left of that column ends the current item. Braces with `;`
//! separators may be used instead of layout, and parentheses suspend it.

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{FrontendError, Span};

pub fn parse(src: &str) -> Result<SurfaceProgram, FrontendError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, layout: vec![1], item_start: 0 };
    let mut items = Vec::new();
    while p.raw().tok != Tok::Eof {
        p.item_start = p.pos;
        let start = p.raw().clone();
        if !start.line_start || start.span.col != 1 {
            return Err(FrontendError::syntax(start.span, "top-level items must start in column 1"));
        }
        items.push(p.item()?);
        p.end_of_item()?;
    }
    if items.is_empty() {
        return Err(FrontendError::syntax(Span { line: 1, col: 1 }, "empty program"));
    }
    Ok(SurfaceProgram { items })
}

/// Parse a single expression, as used for trace payloads.
pub fn parse_expr(src: &str) -> Result<Expr, FrontendError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, layout: vec![0], item_start: 0 };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_type(src: &str) -> Result<SType, FrontendError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, layout: vec![0], item_start: 0 };
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    layout: Vec<u32>,
    item_start: usize,
}

const EOF: Tok = Tok::Eof;

impl Parser {
    fn raw(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn at_boundary(&self) -> bool {
        let t = self.raw();
        let col = *self.layout.last().expect("layout stack is never empty");
        t.tok == Tok::Eof || (t.line_start && t.span.col <= col && self.pos != self.item_start)
    }

    fn peek(&self) -> &Tok {
        if self.at_boundary() {
            &EOF
        } else {
            &self.raw().tok
        }
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let t = &self.toks[(self.pos + k).min(self.toks.len() - 1)];
        let col = *self.layout.last().unwrap();
        if t.tok == Tok::Eof || (t.line_start && t.span.col <= col) {
            &EOF
        } else {
            &t.tok
        }
    }

    fn span(&self) -> Span {
        self.raw().span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, what: &str) -> Result<T, FrontendError> {
        let found = if self.at_boundary() && self.raw().tok != Tok::Eof {
            format!("a new line at column {}", self.raw().span.col)
        } else {
            self.raw().tok.describe()
        };
        Err(FrontendError::syntax(self.span(), format!("expected {what}, found {found}")))
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), FrontendError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), FrontendError> {
        if self.is_kw(s) {
            self.bump();
            Ok(())
        } else {
            self.error(&format!("`{s}`"))
        }
    }

    fn expect_eof(&self) -> Result<(), FrontendError> {
        if self.raw().tok == Tok::Eof {
            Ok(())
        } else {
            self.error("end of input")
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error("a name"),
        }
    }

    fn con(&mut self) -> Result<String, FrontendError> {
        match self.peek().clone() {
            Tok::Con(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error("a capitalised name"),
        }
    }

    /// After an item, the next token must start a new line at the block column
    /// or close the block.
    fn end_of_item(&self) -> Result<(), FrontendError> {
        let t = self.raw();
        if t.tok == Tok::Eof || (t.line_start && t.span.col <= *self.layout.last().unwrap()) {
            Ok(())
        } else {
            self.error("the end of the definition")
        }
    }

    fn item(&mut self) -> Result<Item, FrontendError> {
        let pos = Pos(self.span());
        if self.is_kw("data") {
            self.bump();
            let name = self.con()?;
            let mut params = Vec::new();
            while let Tok::Con(p) = self.peek().clone() {
                self.bump();
                params.push(p);
            }
            self.expect_sym("=")?;
            let mut ctors = Vec::new();
            loop {
                let c = self.con()?;
                let mut fields = Vec::new();
                while self.starts_type_atom() {
                    fields.push(self.ty_atom()?);
                }
                ctors.push((c, fields));
                if !self.eat_sym("|") {
                    break;
                }
            }
            return Ok(Item::Data(DataDecl { name, params, ctors, pos }));
        }
        if self.is_kw("input") {
            self.bump();
            let name = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            return Ok(Item::Input { name, ty, pos });
        }
        Ok(Item::Decl(self.decl()?))
    }

    fn decl(&mut self) -> Result<Decl, FrontendError> {
        let pos = Pos(self.span());
        let name = self.ident()?;
        if self.eat_sym(":") {
            let params = if self.is_kw("forall") {
                self.bump();
                let mut ps = Vec::new();
                while let Tok::Con(p) = self.peek().clone() {
                    self.bump();
                    ps.push(p);
                }
                self.expect_sym(".")?;
                Some(ps)
            } else {
                None
            };
            let ty = self.ty()?;
            return Ok(Decl::Sig(Signature { name, params, ty, pos }));
        }
        let mut pats = Vec::new();
        while !self.is_sym("=") {
            if !self.starts_apat() {
                return self.error("a parameter pattern or `=`");
            }
            pats.push(self.apat()?);
        }
        self.bump();
        let body = self.expr()?;
        let wheres = if self.is_kw("where") {
            self.bump();
            self.block(|p| p.decl())?
        } else {
            vec![]
        };
        Ok(Decl::Eq(Equation { name, pats, body, wheres, pos }))
    }

    /// A layout or brace-delimited block of items.
    fn block<T>(&mut self, mut item: impl FnMut(&mut Parser) -> Result<T, FrontendError>) -> Result<Vec<T>, FrontendError> {
        let mut out = Vec::new();
        if self.eat_sym("{") {
            self.layout.push(0);
            loop {
                out.push(item(self)?);
                if !self.eat_sym(";") {
                    break;
                }
            }
            self.layout.pop();
            self.expect_sym("}")?;
            return Ok(out);
        }
        if self.peek() == &Tok::Eof {
            return self.error("a block");
        }
        let col = self.span().col;
        self.layout.push(col);
        loop {
            self.item_start = self.pos;
            out.push(item(self)?);
            let t = self.raw();
            if t.tok != Tok::Eof && t.line_start && t.span.col == col {
                continue;
            }
            if t.tok != Tok::Eof && !(t.line_start && t.span.col < col) {
                self.layout.pop();
                let r = self.error("the end of the block item");
                return r;
            }
            break;
        }
        self.layout.pop();
        Ok(out)
    }

    // Types

    fn starts_type_atom(&self) -> bool {
        matches!(self.peek(), Tok::Con(_) | Tok::Ident(_) | Tok::Int(1)) || self.is_sym("(")
    }

    pub fn ty(&mut self) -> Result<SType, FrontendError> {
        if self.is_kw("mu") {
            self.bump();
            let a = self.ident()?;
            self.expect_sym(".")?;
            let body = self.ty()?;
            return Ok(SType::Mu(a, Box::new(body)));
        }
        let a = self.ty_sum()?;
        if self.eat_sym("->") {
            let b = self.ty()?;
            return Ok(SType::Fun(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn ty_sum(&mut self) -> Result<SType, FrontendError> {
        let a = self.ty_prod()?;
        if self.eat_sym("+") {
            let b = self.ty_sum()?;
            return Ok(SType::Sum(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn ty_prod(&mut self) -> Result<SType, FrontendError> {
        let a = self.ty_app()?;
        if self.eat_sym("*") {
            let b = self.ty_prod()?;
            return Ok(SType::Prod(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn ty_app(&mut self) -> Result<SType, FrontendError> {
        if let Tok::Con(c) = self.peek().clone() {
            self.bump();
            let mut args = Vec::new();
            while self.starts_type_atom() {
                args.push(self.ty_atom()?);
            }
            return Ok(SType::Con(c, args));
        }
        self.ty_atom()
    }

    fn ty_atom(&mut self) -> Result<SType, FrontendError> {
        match self.peek().clone() {
            Tok::Con(c) => {
                self.bump();
                Ok(if c == "Unit" { SType::Unit } else { SType::Con(c, vec![]) })
            }
            Tok::Ident(a) => {
                self.bump();
                Ok(SType::Var(a))
            }
            Tok::Int(1) => {
                self.bump();
                Ok(SType::Unit)
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat_sym(")") {
                    return Ok(SType::Unit);
                }
                let t = self.ty()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            _ => self.error("a type"),
        }
    }

    // Patterns

    fn starts_apat(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::Con(_)) || self.is_sym("_") || self.is_sym("(")
    }

    fn pat(&mut self) -> Result<Pat, FrontendError> {
        let head = match self.peek().clone() {
            Tok::Con(c) => {
                let pos = Pos(self.span());
                self.bump();
                let mut args = Vec::new();
                while self.starts_apat() {
                    args.push(self.apat()?);
                }
                Pat::Con(c, args, pos)
            }
            Tok::Ident(x) if x == "in1" || x == "in2" => {
                let pos = Pos(self.span());
                self.bump();
                let arg = self.apat()?;
                Pat::Con(x, vec![arg], pos)
            }
            _ => self.apat()?,
        };
        if self.eat_sym("::") {
            let tail = self.pat()?;
            return Ok(Pat::Cons(Box::new(head), Box::new(tail)));
        }
        Ok(head)
    }

    fn apat(&mut self) -> Result<Pat, FrontendError> {
        let pos = Pos(self.span());
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.bump();
                Ok(Pat::Var(x, pos))
            }
            Tok::Con(c) => {
                self.bump();
                Ok(Pat::Con(c, vec![], pos))
            }
            Tok::Sym("_") => {
                self.bump();
                Ok(Pat::Wild)
            }
            Tok::Sym("(") => {
                self.bump();
                self.layout.push(0);
                if self.eat_sym(")") {
                    self.layout.pop();
                    return Ok(Pat::Unit);
                }
                let first = self.pat()?;
                let mut ps = vec![first];
                while self.eat_sym(",") {
                    ps.push(self.pat()?);
                }
                self.layout.pop();
                self.expect_sym(")")?;
                Ok(if ps.len() == 1 { ps.pop().unwrap() } else { Pat::Tuple(ps) })
            }
            _ => self.error("a pattern"),
        }
    }

    // Expressions

    pub fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.op_expr(1)
    }

    fn starts_open(&self) -> bool {
        self.is_sym("\\") || self.is_kw("let") || self.is_kw("if") || self.is_kw("case")
    }

    fn open(&mut self) -> Result<Expr, FrontendError> {
        if self.eat_sym("\\") {
            let mut ps = Vec::new();
            while !self.is_sym("->") {
                if !self.starts_apat() {
                    return self.error("a parameter or `->`");
                }
                ps.push(self.apat()?);
            }
            if ps.is_empty() {
                return self.error("a parameter");
            }
            self.bump();
            let body = self.expr()?;
            return Ok(Expr::Lam(ps, Box::new(body)));
        }
        if self.is_kw("let") {
            self.bump();
            let pat = self.apat()?;
            let ann = if self.eat_sym(":") { Some(self.ty()?) } else { None };
            self.expect_sym("=")?;
            let value = self.expr()?;
            self.expect_kw("in")?;
            let body = self.expr()?;
            return Ok(Expr::Let { pat, ann, value: Box::new(value), body: Box::new(body) });
        }
        if self.is_kw("if") {
            self.bump();
            let c = self.expr()?;
            self.expect_kw("then")?;
            let a = self.expr()?;
            self.expect_kw("else")?;
            let b = self.expr()?;
            return Ok(Expr::If(Box::new(c), Box::new(a), Box::new(b)));
        }
        self.expect_kw("case")?;
        let s = self.expr()?;
        self.expect_kw("of")?;
        let alts = self.block(|p| {
            let pat = p.pat()?;
            p.expect_sym("->")?;
            let e = p.expr()?;
            Ok((pat, e))
        })?;
        Ok(Expr::Case(Box::new(s), alts))
    }

    fn peek_op(&self) -> Option<Op> {
        match self.peek() {
            Tok::Sym(s) => Op::from_symbol(s),
            _ => None,
        }
    }

    fn op_expr(&mut self, min: u8) -> Result<Expr, FrontendError> {
        if self.starts_open() {
            return self.open();
        }
        let mut lhs = self.app()?;
        while let Some(op) = self.peek_op() {
            let level = op.level();
            if level < min {
                break;
            }
            let pos = Pos(self.span());
            self.bump();
            let rhs = match op {
                Op::Cons => self.op_expr(level)?,
                _ => self.op_expr(level + 1)?,
            };
            let cmp = level == 2;
            lhs = Expr::Op(op, Box::new(lhs), Box::new(rhs), pos);
            if cmp && self.peek_op().map(|o| o.level()) == Some(2) {
                return self.error("parentheses around chained comparisons");
            }
        }
        Ok(lhs)
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::Con(_) | Tok::Int(_) | Tok::Char(_) | Tok::Str(_)) || self.is_sym("(")
    }

    fn app(&mut self) -> Result<Expr, FrontendError> {
        if self.is_sym("-") && matches!(self.peek_at(1), Tok::Int(_)) {
            self.bump();
            let Tok::Int(n) = self.bump() else { unreachable!() };
            return Ok(Expr::Int(-n));
        }
        let mut e = self.atom()?;
        loop {
            if self.starts_atom() {
                let a = self.atom()?;
                e = Expr::app(e, a);
            } else if self.starts_open() {
                // a trailing lambda, let, if or case is the last argument
                let a = self.open()?;
                e = Expr::app(e, a);
                break;
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, FrontendError> {
        let pos = Pos(self.span());
        match self.peek().clone() {
            Tok::Ident(name) => {
                let t = self.raw().clone();
                self.bump();
                let mut targs = Vec::new();
                let next = self.raw();
                let adjacent = next.span.line == t.span.line && next.span.col == t.span.col + name.chars().count() as u32;
                if adjacent && self.is_sym("[") {
                    self.bump();
                    self.layout.push(0);
                    if !self.is_sym("]") {
                        loop {
                            targs.push(self.ty()?);
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    self.layout.pop();
                    self.expect_sym("]")?;
                }
                Ok(Expr::Var { name, targs, pos })
            }
            Tok::Con(c) => {
                self.bump();
                Ok(Expr::Con(c, pos))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Char(c) => {
                self.bump();
                Ok(Expr::Char(c))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::Sym("(") => {
                self.bump();
                self.layout.push(0);
                if self.eat_sym(")") {
                    self.layout.pop();
                    return Ok(Expr::Unit);
                }
                let first = self.expr()?;
                let out = if self.eat_sym(":") {
                    let t = self.ty()?;
                    Expr::Ann(Box::new(first), t)
                } else if self.is_sym(",") {
                    let mut es = vec![first];
                    while self.eat_sym(",") {
                        es.push(self.expr()?);
                    }
                    Expr::Tuple(es)
                } else {
                    first
                };
                self.layout.pop();
                self.expect_sym(")")?;
                Ok(out)
            }
            _ => self.error("an expression"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_eq(src: &str) -> Equation {
        let p = parse(src).unwrap();
        match p.items.into_iter().next().unwrap() {
            Item::Decl(Decl::Eq(e)) => e,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_program_is_an_error() {
        let e = parse("").unwrap_err();
        assert!(e.message.contains("empty program"));
        assert!(parse("-- only a comment\n").is_err());
    }

    #[test]
    fn const_with_signature() {
        let p = parse("const : A -> Sig A\nconst x = x :: never\n").unwrap();
        assert_eq!(p.items.len(), 2);
        let Item::Decl(Decl::Eq(eq)) = &p.items[1] else { panic!() };
        assert!(matches!(&eq.body, Expr::Op(Op::Cons, _, _, _)));
    }

    #[test]
    fn map_with_cons_pattern_and_later() {
        let eq = one_eq("map f (x :: xs) = f x :: (map f |> xs)");
        assert_eq!(eq.pats.len(), 2);
        assert!(matches!(&eq.pats[1], Pat::Cons(..)));
        let Expr::Op(Op::Cons, _, rhs, _) = &eq.body else { panic!() };
        assert!(matches!(&**rhs, Expr::Op(Op::Later, _, _, _)));
    }

    #[test]
    fn where_blocks_use_layout() {
        let src = "\
zip as bs = (head as, head bs) :: (cont |> sync (tail as) (tail bs))
  where cont (Fst as') = zip as' bs
        cont (Snd bs') = zip as bs'
        cont (Both as' bs') =
          zip as' bs'
other = 1
";
        let p = parse(src).unwrap();
        assert_eq!(p.items.len(), 2);
        let Item::Decl(Decl::Eq(eq)) = &p.items[0] else { panic!() };
        assert_eq!(eq.wheres.len(), 3);
    }

    #[test]
    fn case_blocks_and_braces_agree() {
        let a = one_eq("f s = case s of\n  Just x -> x\n  Nothing -> 0\n");
        let b = one_eq("f s = case s of { Just x -> x; Nothing -> 0 }");
        assert_eq!(a, b);
    }

    #[test]
    fn precedence() {
        let e = parse_expr("a + b * c :: f x |> y").unwrap();
        assert_eq!(e.to_string(), "a + b * c :: f x |> y");
        let Expr::Op(Op::Cons, l, r, _) = &e else { panic!() };
        assert!(matches!(&**l, Expr::Op(Op::Add, ..)));
        assert!(matches!(&**r, Expr::Op(Op::Later, ..)));
        let e = parse_expr("d <*> r <**> x").unwrap();
        let Expr::Op(Op::ApE, l, _, _) = &e else { panic!() };
        assert!(matches!(&**l, Expr::Op(Op::ApA, ..)));
        assert!(parse_expr("a < b < c").is_err());
    }

    #[test]
    fn type_arguments_need_adjacency() {
        let e = parse_expr("map[Int, Maybe Int] f").unwrap();
        let (head, args) = e.spine();
        assert!(matches!(head, Expr::Var { targs, .. } if targs.len() == 2));
        assert_eq!(args.len(), 1);
    }

    #[test]
    fn types() {
        let t = parse_type("(A -> B) -> Sig A -> Sig (A * B)").unwrap();
        assert_eq!(t.to_string(), "(A -> B) -> Sig A -> Sig (A * B)");
        let m = parse_type("mu a. 1 + Int * a").unwrap();
        assert!(matches!(m, SType::Mu(..)));
        assert_eq!(parse_type("Later (Sig Int)").unwrap().to_string(), "Later (Sig Int)");
    }

    #[test]
    fn syntax_errors_report_positions() {
        let e = parse("f x = (x\n").unwrap_err();
        assert!(e.span.is_some());
        let e = parse("  f = 1").unwrap_err();
        assert!(e.message.contains("column 1"));
    }

    #[test]
    fn data_declarations() {
        let p = parse("data Widget = Btn Button | Dyn (Sig Widget)\n  | Empty\n").unwrap();
        let Item::Data(d) = &p.items[0] else { panic!() };
        assert_eq!(d.ctors.len(), 3);
        assert_eq!(d.ctors[1].1, vec![SType::Con("Sig".into(), vec![SType::con("Widget")])]);
    }
}
