//! Desugaring of surface expressions, pattern matches and recursive
//! definitions into core terms.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::ast::*;
use super::program::{instance_key, DefInfo, ProgramInfo};
use super::types::{CtorInfo, BUILTIN_CTORS};
use super::{ErrorKind, FrontendError, Span};
use crate::syntax::{
    map_children, name, occurs_free, substitute_term, BinOp, Name, Side, Term, Type,
};

type Res<T> = Result<T, FrontendError>;

fn error(kind: ErrorKind, span: Span, msg: impl Into<String>) -> FrontendError {
    FrontendError::at(kind, span, msg)
}

/// Generates binder names that occur nowhere in the program source, so they
/// can never capture a user variable.
#[derive(Clone, Debug)]
pub(crate) struct Fresh {
    used: BTreeSet<String>,
}

impl Fresh {
    pub fn new(used: BTreeSet<String>) -> Fresh {
        Fresh { used }
    }

    pub fn fresh(&mut self, base: &str) -> Name {
        let mut candidate = base.to_string();
        let mut i = 1;
        while self.used.contains(&candidate) {
            candidate = format!("{base}{i}");
            i += 1;
        }
        self.used.insert(candidate.clone());
        name(&candidate)
    }
}

/// A request for an instance of a definition, made by a use site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Request {
    pub key: String,
    pub def: String,
    pub targs: Vec<Type>,
}

/// Pattern after constructor expansion.
#[derive(Clone, Debug)]
enum PPat {
    Any(Option<String>),
    Pair(Box<PPat>, Box<PPat>),
    /// `head :: tail` on a signal.
    Sig(Box<PPat>, Box<PPat>),
    Inj(Side, Box<PPat>),
    /// A value of recursive type, matched after unrolling one level.
    Roll(Box<PPat>),
    /// A recursive position inside an unrolled value, which holds a pair of
    /// the original child and the fold's result for it. The name binds the
    /// result, when structural recursion needs it.
    RecField(Box<PPat>, Option<String>),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kind {
    Product,
    Signal,
    Sum,
    Roll,
}

impl PPat {
    fn kind(&self) -> Option<Kind> {
        match self {
            PPat::Any(_) => None,
            PPat::Pair(..) | PPat::RecField(..) => Some(Kind::Product),
            PPat::Sig(..) => Some(Kind::Signal),
            PPat::Inj(..) => Some(Kind::Sum),
            PPat::Roll(_) => Some(Kind::Roll),
        }
    }

    fn is_wild(&self) -> bool {
        matches!(self, PPat::Any(None))
    }
}

#[derive(Clone)]
struct Row<'e> {
    pats: Vec<PPat>,
    binds: Vec<(String, Name)>,
    body: &'e Expr,
    wheres: &'e [Decl],
    /// Structural recursion: field variable to the variable holding the
    /// recursive result for it.
    rec_fields: BTreeMap<String, String>,
}

/// Structural recursion in progress for the definition `name`.
#[derive(Clone)]
struct Structural {
    name: String,
    /// Columns of all parameters but the last.
    param_cols: Vec<Name>,
}

/// Active while desugaring one clause body of a structurally recursive definition.
#[derive(Clone)]
struct RecRow {
    name: String,
    /// Names that denote each of the other parameters.
    params: Vec<BTreeSet<String>>,
    fields: BTreeMap<String, String>,
    depth: usize,
}

pub(crate) struct Desugarer<'a> {
    info: &'a ProgramInfo,
    fresh: &'a mut Fresh,
    tvars: BTreeMap<String, Type>,
    /// The definition being compiled and its type arguments.
    this: Option<(String, Vec<Type>)>,
    pub requests: Vec<Request>,
    locals: Vec<String>,
    structural: Option<Structural>,
    rec_row: Option<RecRow>,
    span: Span,
}

impl<'a> Desugarer<'a> {
    pub fn new(
        info: &'a ProgramInfo,
        fresh: &'a mut Fresh,
        tvars: BTreeMap<String, Type>,
        this: Option<(String, Vec<Type>)>,
    ) -> Desugarer<'a> {
        Desugarer {
            info,
            fresh,
            tvars,
            this,
            requests: vec![],
            locals: vec![],
            structural: None,
            rec_row: None,
            span: Span::default(),
        }
    }

    fn is_local(&self, x: &str) -> bool {
        self.locals.iter().any(|l| l == x)
    }

    fn resolve_type(&self, ty: &SType, span: Span) -> Res<Type> {
        self.info.types.resolve_closed(ty, &self.tvars, span)
    }

    // Definitions

    /// Compile a top-level definition at the resolved type `ty`.
    pub fn definition(&mut self, def: &DefInfo, ty: &Type) -> Res<Arc<Term>> {
        let f = def.name.as_str();
        self.span = def.pos;
        let arity = def.eqs[0].pats.len();
        if let Some(eq) = def.eqs.iter().find(|e| e.pats.len() != arity) {
            return Err(error(ErrorKind::Pattern, eq.pos.0, format!("equations for `{f}` have different numbers of arguments")));
        }
        if arity == 0 && def.eqs.len() > 1 {
            return Err(error(ErrorKind::Scope, def.eqs[1].pos.0, format!("`{f}` is defined more than once")));
        }
        let mentions_self = def.eqs.iter().any(|eq| equation_mentions(eq, f));
        if mentions_self && arity > 0 && self.structural_target(def)? {
            return self.structural_definition(def);
        }
        if mentions_self {
            for eq in &def.eqs {
                check_guarded(eq, f)?;
            }
        }
        let clauses: Vec<Clause> = def.eqs.iter().map(|e| (&e.pats[..], &e.body, &e.wheres[..])).collect();
        let (cols, body) = self.clauses(&clauses, def.pos)?;
        let mut term = lams(&cols, body);
        if occurs_free(&term, f) {
            let r = self.fresh.fresh("r");
            let rp = self.fresh.fresh("r'");
            term = guard(&term, f, &r, &rp, ty);
            if occurs_free(&term, f) {
                return Err(error(ErrorKind::Recursion, def.pos, format!("recursive call to `{f}` is not guarded by delay")));
            }
            return Ok(Arc::new(Term::Fix { var: r, ann: Some(ty.clone()), body: term, label: Some(name(f)) }));
        }
        Ok(label(term, f))
    }

    /// Whether the last parameter is matched against constructors of a
    /// recursive data type, making this a structural recursion.
    fn structural_target(&self, def: &DefInfo) -> Res<bool> {
        let mut data = None;
        for eq in &def.eqs {
            if let Some(Pat::Con(c, _, _)) = eq.pats.last() {
                if let Some(info) = self.info.types.ctors.get(c) {
                    if self.info.types.datas[&info.data].recursive {
                        data = Some(info.data.clone());
                    }
                }
            }
        }
        Ok(data.is_some())
    }

    fn structural_definition(&mut self, def: &DefInfo) -> Res<Arc<Term>> {
        let f = def.name.clone();
        let n = def.eqs[0].pats.len();
        let mut param_cols = Vec::new();
        for j in 0..n - 1 {
            param_cols.push(self.column_name(def.eqs.iter().map(|e| &e.pats[j]), def.eqs.len()));
        }
        let target = self.fresh.fresh("d");
        let w = self.fresh.fresh("r");
        let mut rows = Vec::new();
        for eq in &def.eqs {
            check_linear(&eq.pats, eq.pos.0)?;
            let mut pats = Vec::new();
            for p in &eq.pats[..n - 1] {
                if !matches!(p, Pat::Var(..) | Pat::Wild) {
                    return Err(error(
                        ErrorKind::Recursion,
                        eq.pos.0,
                        format!("structurally recursive `{f}` may only match on its last argument"),
                    ));
                }
                pats.push(self.pat(p)?);
            }
            let mut rec_fields = BTreeMap::new();
            let mut binds = Vec::new();
            let last = match &eq.pats[n - 1] {
                Pat::Var(x, _) => {
                    binds.push((x.clone(), target.clone()));
                    PPat::Any(None)
                }
                Pat::Wild => PPat::Any(None),
                Pat::Con(c, args, pos) => self.ctor_pat(c, args, pos.0, Some(&mut rec_fields))?,
                other => {
                    return Err(error(
                        ErrorKind::Pattern,
                        eq.pos.0,
                        format!("`{other}` does not match a value of a data type"),
                    ))
                }
            };
            pats.push(last);
            rows.push(Row { pats, binds, body: &eq.body, wheres: &eq.wheres, rec_fields });
        }
        let saved = self.structural.replace(Structural { name: f.clone(), param_cols: param_cols.clone() });
        let mut cols = param_cols.clone();
        cols.push(w.clone());
        let step = self.compile(cols, rows);
        self.structural = saved;
        let step = step?;
        let mut all = param_cols;
        all.push(target.clone());
        let body = Term::rec(&w, None, step, Arc::new(Term::Var(target)));
        Ok(label(lams(&all, body), &f))
    }

    /// Name for a parameter column: the user's variable if there is a single
    /// clause binding one, otherwise a fresh name.
    fn column_name<'p>(&mut self, mut pats: impl Iterator<Item = &'p Pat>, clauses: usize) -> Name {
        let first = pats.next();
        match first {
            Some(Pat::Var(x, _)) if clauses == 1 => name(x),
            Some(p) => self.fresh.fresh(match p {
                Pat::Cons(..) => "s",
                Pat::Tuple(_) => "p",
                Pat::Con(..) => "v",
                _ => "x",
            }),
            None => self.fresh.fresh("x"),
        }
    }

    /// Compile a list of clauses sharing a parameter list into parameter
    /// columns and the body matching on them.
    fn clauses(&mut self, clauses: &[Clause<'_>], span: Span) -> Res<(Vec<Name>, Arc<Term>)> {
        let n = clauses[0].0.len();
        let mut cols: Vec<Name> = Vec::new();
        for j in 0..n {
            let mut c = self.column_name(clauses.iter().map(|c| &c.0[j]), clauses.len());
            if cols.contains(&c) {
                c = self.fresh.fresh("x");
            }
            cols.push(c);
        }
        let mut rows = Vec::new();
        for (pats, body, wheres) in clauses {
            check_linear(pats, span)?;
            let pats = pats.iter().map(|p| self.pat(p)).collect::<Res<Vec<_>>>()?;
            rows.push(Row { pats, binds: vec![], body, wheres, rec_fields: BTreeMap::new() });
        }
        let saved = self.span;
        self.span = span;
        let body = self.compile(cols.clone(), rows);
        self.span = saved;
        Ok((cols, body?))
    }

    // Patterns

    fn pat(&mut self, p: &Pat) -> Res<PPat> {
        Ok(match p {
            Pat::Var(x, _) => PPat::Any(Some(x.clone())),
            Pat::Wild | Pat::Unit => PPat::Any(None),
            Pat::Tuple(ps) => {
                let mut it = ps.iter().rev();
                let mut acc = self.pat(it.next().expect("tuple pattern"))?;
                for q in it {
                    acc = PPat::Pair(Box::new(self.pat(q)?), Box::new(acc));
                }
                acc
            }
            Pat::Cons(h, t) => PPat::Sig(Box::new(self.pat(h)?), Box::new(self.pat(t)?)),
            Pat::Con(c, args, pos) => self.ctor_pat(c, args, pos.0, None)?,
        })
    }

    fn ctor_pat(
        &mut self,
        c: &str,
        args: &[Pat],
        span: Span,
        structural: Option<&mut BTreeMap<String, String>>,
    ) -> Res<PPat> {
        let arity_err = |want: usize| {
            error(ErrorKind::Pattern, span, format!("constructor `{c}` takes {want} argument(s) in a pattern, got {}", args.len()))
        };
        let sub = |me: &mut Self, i: usize| me.pat(&args[i]);
        let inj = |s: Side, p: PPat| PPat::Inj(s, Box::new(p));
        let builtin = match c {
            "Just" | "in1" | "in2" | "Left" | "Fst" | "Right" | "Snd" => {
                if args.len() != 1 {
                    return Err(arity_err(1));
                }
                let p = sub(self, 0)?;
                Some(match c {
                    "Just" | "in1" => inj(Side::Left, p),
                    "in2" => inj(Side::Right, p),
                    "Left" | "Fst" => inj(Side::Left, inj(Side::Left, p)),
                    _ => inj(Side::Left, inj(Side::Right, p)),
                })
            }
            "Nothing" | "True" | "False" => {
                if !args.is_empty() {
                    return Err(arity_err(0));
                }
                Some(inj(if c == "True" { Side::Left } else { Side::Right }, PPat::Any(None)))
            }
            "Both" => {
                if args.len() != 2 {
                    return Err(arity_err(2));
                }
                let (a, b) = (sub(self, 0)?, sub(self, 1)?);
                Some(inj(Side::Right, PPat::Pair(Box::new(a), Box::new(b))))
            }
            _ => None,
        };
        if let Some(p) = builtin {
            return Ok(p);
        }
        let Some(info) = self.info.types.ctors.get(c).cloned() else {
            return Err(error(ErrorKind::Scope, span, format!("unknown constructor `{c}`")));
        };
        if args.len() != info.fields.len() {
            return Err(arity_err(info.fields.len()));
        }
        let data = &self.info.types.datas[&info.data];
        let recursive = data.recursive;
        let own = SType::Con(info.data.clone(), data.decl.params.iter().map(|p| SType::con(p)).collect());
        let mut structural = structural;
        let mut fields = Vec::new();
        for (arg, fty) in args.iter().zip(&info.fields) {
            let p = self.pat(arg)?;
            if recursive && *fty == own {
                let result = match (&mut structural, arg) {
                    (Some(map), Pat::Var(x, _)) => {
                        let r = self.fresh.fresh(&format!("{x}_rec"));
                        map.insert(x.clone(), r.to_string());
                        Some(r.to_string())
                    }
                    _ => None,
                };
                fields.push(PPat::RecField(Box::new(p), result));
            } else if recursive && fty.mentions(&info.data) && !p.is_wild() {
                return Err(error(
                    ErrorKind::Pattern,
                    span,
                    format!("a field of type `{fty}` of recursive data can only be matched by `_`"),
                ));
            } else {
                fields.push(p);
            }
        }
        let payload = match fields.pop() {
            None => PPat::Any(None),
            Some(mut acc) => {
                while let Some(p) = fields.pop() {
                    acc = PPat::Pair(Box::new(p), Box::new(acc));
                }
                acc
            }
        };
        let injected = inj_path(&info, payload, |s, p| PPat::Inj(s, Box::new(p)));
        Ok(if recursive && structural.is_none() { PPat::Roll(Box::new(injected)) } else { injected })
    }

    // Match compilation

    fn non_exhaustive(&self) -> FrontendError {
        error(ErrorKind::Pattern, self.span, "non-exhaustive patterns")
    }

    fn compile(&mut self, cols: Vec<Name>, mut rows: Vec<Row<'_>>) -> Res<Arc<Term>> {
        let Some(first) = rows.first() else { return Err(self.non_exhaustive()) };
        let Some(i) = first.pats.iter().position(|p| !matches!(p, PPat::Any(_))) else {
            let mut row = rows.swap_remove(0);
            for (p, c) in row.pats.iter().zip(&cols) {
                if let PPat::Any(Some(x)) = p {
                    row.binds.push((x.clone(), c.clone()));
                }
            }
            return self.leaf(row);
        };
        let kind = first.pats[i].kind().expect("refutable pattern");
        let col = cols[i].clone();
        for row in rows.iter_mut() {
            match &row.pats[i] {
                PPat::Any(Some(x)) => {
                    row.binds.push((x.clone(), col.clone()));
                    row.pats[i] = PPat::Any(None);
                }
                PPat::Any(None) => {}
                p if p.kind() != Some(kind) => {
                    return Err(error(ErrorKind::Pattern, self.span, "patterns of different shapes in the same position"));
                }
                _ => {}
            }
        }
        match kind {
            Kind::Product | Kind::Signal => self.split_product(cols, rows, i, kind),
            Kind::Sum => self.split_sum(cols, rows, i),
            Kind::Roll => self.split_roll(cols, rows, i),
        }
    }

    fn leaf(&mut self, row: Row<'_>) -> Res<Arc<Term>> {
        let depth = self.locals.len();
        self.locals.extend(row.binds.iter().map(|(x, _)| x.clone()));
        let saved = self.rec_row.clone();
        if let Some(st) = &self.structural {
            let params = st
                .param_cols
                .iter()
                .map(|c| {
                    let mut names: BTreeSet<String> =
                        row.binds.iter().filter(|(_, col)| col == c).map(|(x, _)| x.clone()).collect();
                    names.insert(c.to_string());
                    names
                })
                .collect();
            let depth = self.locals.len();
            self.rec_row = Some(RecRow { name: st.name.clone(), params, fields: row.rec_fields.clone(), depth });
        }
        // Helper functions inside the body start their own matches.
        let saved_structural = self.structural.take();
        let body = self.body(row.body, row.wheres);
        self.locals.truncate(depth);
        self.structural = saved_structural;
        self.rec_row = saved;
        let mut body = body?;
        for (x, c) in row.binds.iter().rev() {
            if **c != **x && occurs_free(&body, x) {
                body = Term::let_in(x, None, Arc::new(Term::Var(c.clone())), body);
            }
        }
        Ok(body)
    }

    fn sub_name(&mut self, pats: &[&PPat], base: &str) -> Option<Name> {
        if pats.iter().all(|p| p.is_wild()) {
            return None;
        }
        if let [PPat::Any(Some(x))] = pats {
            return Some(name(x));
        }
        Some(self.fresh.fresh(base))
    }

    fn split_product(&mut self, cols: Vec<Name>, rows: Vec<Row<'_>>, i: usize, kind: Kind) -> Res<Arc<Term>> {
        let mut parts = Vec::new();
        for row in &rows {
            parts.push(match &row.pats[i] {
                PPat::Pair(a, b) | PPat::Sig(a, b) => ((**a).clone(), (**b).clone()),
                PPat::RecField(p, r) => ((**p).clone(), PPat::Any(r.clone())),
                _ => (PPat::Any(None), PPat::Any(None)),
            });
        }
        let (base_a, base_b) = if kind == Kind::Signal { ("h", "t") } else { ("a", "b") };
        let a = self.sub_name(&parts.iter().map(|p| &p.0).collect::<Vec<_>>(), base_a);
        let b = self.sub_name(&parts.iter().map(|p| &p.1).collect::<Vec<_>>(), base_b);
        let col = cols[i].clone();
        let mut new_cols = cols[..i].to_vec();
        new_cols.extend(a.iter().cloned());
        new_cols.extend(b.iter().cloned());
        new_cols.extend(cols[i + 1..].iter().cloned());
        let rows = rows
            .into_iter()
            .zip(parts)
            .map(|(mut row, (pa, pb))| {
                let mut pats = row.pats[..i].to_vec();
                if a.is_some() {
                    pats.push(pa);
                }
                if b.is_some() {
                    pats.push(pb);
                }
                pats.extend(row.pats[i + 1..].iter().cloned());
                row.pats = pats;
                row
            })
            .collect();
        let mut body = self.compile(new_cols, rows)?;
        let v = || Arc::new(Term::Var(col.clone()));
        // Projections are pure, so unused components need no binding.
        if let Some(b) = b.as_ref().filter(|b| occurs_free(&body, b)) {
            let e = if kind == Kind::Signal { Term::tail(v()) } else { Term::proj(Side::Right, v()) };
            body = Term::let_in(b, None, e, body);
        }
        if let Some(a) = a.as_ref().filter(|a| occurs_free(&body, a)) {
            let e = if kind == Kind::Signal { Term::head(v()) } else { Term::proj(Side::Left, v()) };
            body = Term::let_in(a, None, e, body);
        }
        Ok(body)
    }

    fn split_sum(&mut self, cols: Vec<Name>, rows: Vec<Row<'_>>, i: usize) -> Res<Arc<Term>> {
        let mut branches = Vec::new();
        for side in [Side::Left, Side::Right] {
            let mut sub_rows = Vec::new();
            let mut sub_pats = Vec::new();
            for row in &rows {
                match &row.pats[i] {
                    PPat::Inj(s, p) if *s == side => sub_pats.push((**p).clone()),
                    PPat::Inj(..) => continue,
                    _ => sub_pats.push(PPat::Any(None)),
                }
                sub_rows.push(row.clone());
            }
            let binder = self.sub_name(&sub_pats.iter().collect::<Vec<_>>(), "v");
            let mut new_cols = cols[..i].to_vec();
            new_cols.extend(binder.iter().cloned());
            new_cols.extend(cols[i + 1..].iter().cloned());
            for (row, p) in sub_rows.iter_mut().zip(sub_pats) {
                let mut pats = row.pats[..i].to_vec();
                if binder.is_some() {
                    pats.push(p);
                }
                pats.extend(row.pats[i + 1..].iter().cloned());
                row.pats = pats;
            }
            let body = self.compile(new_cols, sub_rows)?;
            branches.push((binder.unwrap_or_else(|| name("_")), body));
        }
        let right = branches.pop().unwrap();
        let left = branches.pop().unwrap();
        Ok(Arc::new(Term::Case { scrutinee: Arc::new(Term::Var(cols[i].clone())), left, right }))
    }

    /// Values of recursive type are unrolled with a fold whose result is a
    /// thunk: the fold visits the children, and only this level's match runs.
    fn split_roll(&mut self, cols: Vec<Name>, rows: Vec<Row<'_>>, i: usize) -> Res<Arc<Term>> {
        let w = self.fresh.fresh("r");
        let col = cols[i].clone();
        let mut new_cols = cols.clone();
        new_cols[i] = w.clone();
        let rows = rows
            .into_iter()
            .map(|mut row| {
                if let PPat::Roll(p) = &row.pats[i] {
                    row.pats[i] = (**p).clone();
                }
                row
            })
            .collect();
        let inner = self.compile(new_cols, rows)?;
        let step = Term::lam_ann("_", Type::Unit, inner);
        Ok(Term::app(Term::rec(&w, None, step, Arc::new(Term::Var(col))), Term::unit()))
    }

    // Bodies and where-blocks

    fn body(&mut self, e: &Expr, wheres: &[Decl]) -> Res<Arc<Term>> {
        if wheres.is_empty() {
            return self.expr(e);
        }
        let groups = group_where(wheres)?;
        let names: Vec<String> = groups.iter().map(|g| g.name.clone()).collect();
        let depth = self.locals.len();
        self.locals.extend(names.iter().cloned());
        let result = self.where_block(e, &groups);
        self.locals.truncate(depth);
        result
    }

    fn where_block(&mut self, e: &Expr, groups: &[WhereDef<'_>]) -> Res<Arc<Term>> {
        let this = self.this.as_ref().map(|t| t.0.clone());
        let names: BTreeSet<String> = groups.iter().map(|g| g.name.clone()).collect();
        // which where-definitions refer, directly or through each other, to the enclosing recursive definition
        let mut calls_self: BTreeSet<String> = BTreeSet::new();
        loop {
            let before = calls_self.len();
            for g in groups {
                let hit = g.eqs.iter().any(|eq| {
                    this.as_deref().is_some_and(|f| equation_mentions(eq, f))
                        || calls_self.iter().any(|w| equation_mentions(eq, w))
                });
                if hit {
                    calls_self.insert(g.name.clone());
                }
            }
            if calls_self.len() == before {
                break;
            }
        }
        let mut terms: Vec<(String, Option<Type>, Arc<Term>, bool)> = Vec::new();
        for g in groups {
            if g.eqs.iter().any(|eq| equation_mentions(eq, &g.name)) {
                return Err(error(ErrorKind::Recursion, g.span, format!("where-definition `{}` is recursive, which is not supported", g.name)));
            }
            let ann = match g.sig {
                Some(s) => Some(self.resolve_type(&s.ty, s.pos.0)?),
                None => None,
            };
            let clauses: Vec<Clause> = g.eqs.iter().map(|e| (&e.pats[..], &e.body, &e.wheres[..])).collect();
            let term = if g.eqs[0].pats.is_empty() {
                if g.eqs.len() > 1 {
                    return Err(error(ErrorKind::Scope, g.span, format!("`{}` is defined more than once", g.name)));
                }
                self.body(&g.eqs[0].body, &g.eqs[0].wheres)?
            } else {
                let (cols, body) = self.clauses(&clauses, g.span)?;
                label(lams(&cols, body), &g.name)
            };
            let inline = calls_self.contains(&g.name) || (ann.is_none() && !g.eqs[0].pats.is_empty());
            terms.push((g.name.clone(), ann, term, inline));
        }
        let mut body = self.expr(e)?;
        // Inline in dependency order: each inlined term first absorbs the inlined terms it mentions.
        let mut resolved: BTreeMap<String, Arc<Term>> = BTreeMap::new();
        let inlined: Vec<String> = terms.iter().filter(|t| t.3).map(|t| t.0.clone()).collect();
        for w in &inlined {
            self.resolve_inline(w, &terms, &mut resolved, &mut vec![])?;
        }
        for w in &inlined {
            body = substitute_term(&body, w, &resolved[w]);
        }
        let mut kept: Vec<(String, Option<Type>, Arc<Term>)> = Vec::new();
        for (w, ann, t, inline) in &terms {
            if *inline {
                continue;
            }
            let mut t = t.clone();
            for v in &inlined {
                t = substitute_term(&t, v, &resolved[v]);
            }
            kept.push((w.clone(), ann.clone(), t));
        }
        // Let-bind the rest, each after the definitions it uses.
        let order = let_order(&kept, &names, self.span)?;
        for &k in order.iter().rev() {
            let (w, ann, t) = &kept[k];
            if occurs_free(&body, w) || order.iter().any(|&j| j != k && occurs_free(&kept[j].2, w)) {
                body = Term::let_in(w, ann.clone(), t.clone(), body);
            }
        }
        Ok(body)
    }

    fn resolve_inline(
        &self,
        w: &str,
        terms: &[(String, Option<Type>, Arc<Term>, bool)],
        resolved: &mut BTreeMap<String, Arc<Term>>,
        stack: &mut Vec<String>,
    ) -> Res<Arc<Term>> {
        if let Some(t) = resolved.get(w) {
            return Ok(t.clone());
        }
        if stack.iter().any(|s| s == w) {
            return Err(error(ErrorKind::Recursion, self.span, format!("where-definitions around `{w}` are mutually recursive")));
        }
        stack.push(w.to_string());
        let mut t = terms.iter().find(|x| x.0 == w).expect("where-definition").2.clone();
        for (v, _, _, inline) in terms {
            if *inline && v != w && occurs_free(&t, v) {
                let vt = self.resolve_inline(v, terms, resolved, stack)?;
                t = substitute_term(&t, v, &vt);
            }
        }
        stack.pop();
        resolved.insert(w.to_string(), t.clone());
        Ok(t)
    }

    // Expressions

    pub fn expr(&mut self, e: &Expr) -> Res<Arc<Term>> {
        Ok(match e {
            Expr::Var { .. } | Expr::Con(..) | Expr::App(..) => {
                let (head, args) = e.spine();
                self.application(head, &args)?
            }
            Expr::Int(n) => Term::int(*n),
            Expr::Char(c) => Arc::new(Term::Char(*c)),
            Expr::Str(s) => Arc::new(Term::Str(name(s))),
            Expr::Unit => Term::unit(),
            Expr::Tuple(es) => {
                let mut it = es.iter().rev();
                let mut acc = self.expr(it.next().expect("tuple"))?;
                for x in it {
                    acc = Term::pair(self.expr(x)?, acc);
                }
                acc
            }
            Expr::Lam(pats, body) => {
                let (cols, b) = self.clauses(&[(&pats[..], body, &[])], self.span)?;
                lams(&cols, b)
            }
            Expr::Op(op, a, b, _) => {
                let (ta, tb) = (self.expr(a)?, self.expr(b)?);
                let bin = |o: BinOp| Term::binop(o, ta.clone(), tb.clone());
                match op {
                    Op::Add => bin(BinOp::Add),
                    Op::Sub => bin(BinOp::Sub),
                    Op::Mul => bin(BinOp::Mul),
                    Op::Lt => bin(BinOp::Lt),
                    Op::Le => bin(BinOp::Le),
                    Op::Gt => bin(BinOp::Gt),
                    Op::Ge => bin(BinOp::Ge),
                    Op::Eq => bin(BinOp::Eq),
                    Op::Cons => Term::cons(None, ta, tb),
                    Op::Later => Term::ape(Term::delay(ta), tb),
                    Op::ApA => Term::apa(ta, tb),
                    Op::ApE => Term::ape(ta, tb),
                }
            }
            Expr::Let { pat, ann, value, body } => {
                let ann = match ann {
                    Some(t) => Some(self.resolve_type(t, self.span)?),
                    None => None,
                };
                let v = self.expr(value)?;
                if let Pat::Var(x, _) = pat {
                    self.locals.push(x.clone());
                    let b = self.expr(body);
                    self.locals.pop();
                    return Ok(Term::let_in(x, ann, v, b?));
                }
                let col = self.fresh.fresh("p");
                let (_, b) = self.match_on(&col, &[(pat.clone(), (**body).clone())])?;
                Term::let_in(&col, ann, v, b)
            }
            Expr::If(c, a, b) => {
                let (tc, ta, tb) = (self.expr(c)?, self.expr(a)?, self.expr(b)?);
                Term::case(tc, "_", ta, "_", tb)
            }
            Expr::Case(s, alts) => {
                let ts = self.expr(s)?;
                match &*ts {
                    Term::Var(x) => self.match_on(x, alts)?.1,
                    _ => {
                        let col = self.fresh.fresh("v");
                        let (_, b) = self.match_on(&col, alts)?;
                        Term::let_in(&col, None, ts, b)
                    }
                }
            }
            Expr::Ann(x, t) => {
                let ty = self.resolve_type(t, self.span)?;
                let v = self.fresh.fresh("x");
                Term::app(Term::lam_ann(&v, ty, Arc::new(Term::Var(v.clone()))), self.expr(x)?)
            }
        })
    }

    fn match_on(&mut self, col: &Name, alts: &[(Pat, Expr)]) -> Res<(Name, Arc<Term>)> {
        let mut rows = Vec::new();
        for (p, body) in alts {
            check_linear(std::slice::from_ref(p), self.span)?;
            rows.push(Row { pats: vec![self.pat(p)?], binds: vec![], body, wheres: &[], rec_fields: BTreeMap::new() });
        }
        let t = self.compile(vec![col.clone()], rows)?;
        Ok((col.clone(), t))
    }

    fn application(&mut self, head: &Expr, args: &[&Expr]) -> Res<Arc<Term>> {
        let mut targs_ok = true;
        let mut t = match head {
            Expr::Con(c, pos) => return self.constructor(c, pos.0, args),
            Expr::Var { name: x, targs, pos } => {
                if let Some(t) = self.structural_call(x, args, pos.0)? {
                    return Ok(t);
                }
                if !self.is_local(x) && !self.info.defs.contains_key(x) && self.info.input(x).is_none() {
                    if let Some(arity) = builtin_arity(x) {
                        return self.builtin(x, targs, pos.0, arity, args);
                    }
                }
                targs_ok = false;
                self.variable(x, targs, pos.0)?
            }
            other => self.expr(other)?,
        };
        let _ = targs_ok;
        for a in args {
            t = Term::app(t, self.expr(a)?);
        }
        Ok(t)
    }

    /// In a structurally recursive definition, `f x1 .. xs` on a field `xs`
    /// of the last argument reads the fold's result for that field.
    fn structural_call(&mut self, x: &str, args: &[&Expr], span: Span) -> Res<Option<Arc<Term>>> {
        let Some(rr) = &self.rec_row else { return Ok(None) };
        if rr.name != x || self.locals[rr.depth..].iter().any(|l| l == x) || self.locals[..rr.depth].iter().any(|l| l == x) {
            return Ok(None);
        }
        let bad = || {
            error(
                ErrorKind::Recursion,
                span,
                format!("recursive call to `{x}` must pass its other arguments unchanged and recurse on a field of its last argument"),
            )
        };
        let n = rr.params.len() + 1;
        if args.len() != n {
            return Err(bad());
        }
        let shadowed = |v: &str| self.locals[rr.depth..].iter().any(|l| l == v);
        for (a, names) in args.iter().zip(&rr.params) {
            match a {
                Expr::Var { name: v, targs, .. } if targs.is_empty() && names.contains(v) && !shadowed(v) => {}
                _ => return Err(bad()),
            }
        }
        match args[n - 1] {
            Expr::Var { name: v, targs, .. } if targs.is_empty() && !shadowed(v) => match rr.fields.get(v) {
                Some(r) => Ok(Some(Term::var(r))),
                None => Err(bad()),
            },
            _ => Err(bad()),
        }
    }

    fn variable(&mut self, x: &str, targs: &[SType], span: Span) -> Res<Arc<Term>> {
        if self.is_local(x) {
            if !targs.is_empty() {
                return Err(error(ErrorKind::Scope, span, format!("local variable `{x}` takes no type arguments")));
            }
            return Ok(Term::var(x));
        }
        if let Some(rr) = &self.rec_row {
            if rr.name == x {
                return Err(error(
                    ErrorKind::Recursion,
                    span,
                    format!("recursive call to `{x}` must pass its other arguments unchanged and recurse on a field of its last argument"),
                ));
            }
        }
        if let Some(def) = self.info.defs.get(x) {
            let resolved = targs.iter().map(|t| self.resolve_type(t, span)).collect::<Res<Vec<_>>>()?;
            if let Some((this, this_args)) = &self.this {
                if this == x {
                    if resolved.is_empty() || &resolved == this_args {
                        return Ok(Term::var(x));
                    }
                    return Err(error(
                        ErrorKind::Recursion,
                        span,
                        format!("`{x}` calls itself at different type arguments, which is not supported"),
                    ));
                }
            }
            if resolved.len() != def.tparams.len() {
                let msg = if def.tparams.is_empty() {
                    format!("`{x}` is not polymorphic and takes no type arguments")
                } else {
                    format!(
                        "polymorphic `{x}` needs {} type argument(s) for {}, as in `{x}[...]`",
                        def.tparams.len(),
                        def.tparams.join(", ")
                    )
                };
                return Err(error(ErrorKind::Scope, span, msg));
            }
            let key = instance_key(x, &resolved);
            self.requests.push(Request { key: key.clone(), def: x.to_string(), targs: resolved });
            return Ok(Term::var(&key));
        }
        if let Some(k) = self.info.input(x) {
            if !targs.is_empty() {
                return Err(error(ErrorKind::Scope, span, format!("input `{x}` takes no type arguments")));
            }
            return Ok(Arc::new(Term::ChanLit(k)));
        }
        if let Some(arity) = builtin_arity(x) {
            return self.builtin(x, targs, span, arity, &[]);
        }
        Err(error(ErrorKind::Scope, span, format!("unknown name `{x}`")))
    }

    fn eta(&mut self, arity: usize, args: &[&Expr], build: impl FnOnce(Vec<Arc<Term>>) -> Arc<Term>) -> Res<Arc<Term>> {
        let mut ts = Vec::new();
        for a in args.iter().take(arity) {
            ts.push(self.expr(a)?);
        }
        let mut params = Vec::new();
        while ts.len() < arity {
            let x = self.fresh.fresh("x");
            ts.push(Arc::new(Term::Var(x.clone())));
            params.push(x);
        }
        let mut t = lams(&params, build(ts));
        for a in args.iter().skip(arity) {
            t = Term::app(t, self.expr(a)?);
        }
        Ok(t)
    }

    fn builtin(&mut self, x: &str, targs: &[SType], span: Span, arity: usize, args: &[&Expr]) -> Res<Arc<Term>> {
        let ann = match (x, targs) {
            (_, []) => None,
            ("never" | "chan", [t]) => Some(self.resolve_type(t, span)?),
            _ => return Err(error(ErrorKind::Scope, span, format!("`{x}` does not take these type arguments"))),
        };
        let x = x.to_string();
        self.eta(arity, args, move |ts| {
            let one = || ts[0].clone();
            match x.as_str() {
                "never" => Term::never(ann),
                "chan" => Arc::new(Term::Chan(ann)),
                "head" => Term::head(one()),
                "tail" => Term::tail(one()),
                "wait" => Term::wait(one()),
                "watch" => Term::watch(one()),
                "delay" => Term::delay(one()),
                "sync" => Term::sync(one(), ts[1].clone()),
                "fst" => Term::proj(Side::Left, one()),
                "snd" => Term::proj(Side::Right, one()),
                "isEven" => Arc::new(Term::IsEven(one())),
                "in1" => Term::inj(Side::Left, None, one()),
                "in2" => Term::inj(Side::Right, None, one()),
                other => unreachable!("builtin {other}"),
            }
        })
    }

    fn constructor(&mut self, c: &str, span: Span, args: &[&Expr]) -> Res<Arc<Term>> {
        let inj = |s: Side, t: Arc<Term>| Term::inj(s, None, t);
        match c {
            "Just" => return self.eta(1, args, |ts| inj(Side::Left, ts[0].clone())),
            "Nothing" => return self.eta(0, args, |_| inj(Side::Right, Term::unit())),
            "True" => return self.eta(0, args, |_| inj(Side::Left, Term::unit())),
            "False" => return self.eta(0, args, |_| inj(Side::Right, Term::unit())),
            "Left" | "Fst" => return self.eta(1, args, |ts| inj(Side::Left, inj(Side::Left, ts[0].clone()))),
            "Right" | "Snd" => return self.eta(1, args, |ts| inj(Side::Left, inj(Side::Right, ts[0].clone()))),
            "Both" => return self.eta(2, args, |ts| inj(Side::Right, Term::pair(ts[0].clone(), ts[1].clone()))),
            _ => {}
        }
        debug_assert!(!BUILTIN_CTORS.contains(&c));
        let Some(info) = self.info.types.ctors.get(c).cloned() else {
            return Err(error(ErrorKind::Scope, span, format!("unknown constructor `{c}`")));
        };
        let data = &self.info.types.datas[&info.data];
        let ann = if data.recursive && data.decl.params.is_empty() {
            Some(self.info.types.data_type(&info.data, &[], span)?)
        } else {
            None
        };
        let recursive = data.recursive;
        self.eta(info.fields.len(), args, move |mut ts| {
            let payload = match ts.pop() {
                None => Term::unit(),
                Some(mut acc) => {
                    while let Some(t) = ts.pop() {
                        acc = Term::pair(t, acc);
                    }
                    acc
                }
            };
            let t = inj_path(&info, payload, |s, t| Term::inj(s, None, t));
            if recursive {
                Term::into(ann, t)
            } else {
                t
            }
        })
    }
}

type Clause<'e> = (&'e [Pat], &'e Expr, &'e [Decl]);

fn builtin_arity(x: &str) -> Option<usize> {
    Some(match x {
        "never" | "chan" => 0,
        "head" | "tail" | "wait" | "watch" | "delay" | "fst" | "snd" | "isEven" | "in1" | "in2" => 1,
        "sync" => 2,
        _ => return None,
    })
}

/// Constructor `index` of `count` is `in2^index (in1 p)`, the last one `in2^index p`.
fn inj_path<T>(info: &CtorInfo, payload: T, inj: impl Fn(Side, T) -> T) -> T {
    let mut t = payload;
    if info.count > 1 && info.index < info.count - 1 {
        t = inj(Side::Left, t);
    }
    for _ in 0..info.index {
        t = inj(Side::Right, t);
    }
    t
}

fn lams(params: &[Name], body: Arc<Term>) -> Arc<Term> {
    params
        .iter()
        .rev()
        .fold(body, |b, p| Arc::new(Term::Lam { param: p.clone(), ann: None, body: b, label: None }))
}

fn label(t: Arc<Term>, f: &str) -> Arc<Term> {
    match &*t {
        Term::Lam { param, ann, body, .. } => Arc::new(Term::Lam {
            param: param.clone(),
            ann: ann.clone(),
            body: body.clone(),
            label: Some(name(f)),
        }),
        _ => t,
    }
}

/// Rewrite every maximal `delay t` mentioning `f` to
/// `delay (\r' -> t[r'/f]) <*> r`, where `r : Delay ty` is the fixed point.
fn guard(t: &Arc<Term>, f: &str, r: &Name, rp: &Name, ty: &Type) -> Arc<Term> {
    match &**t {
        Term::Delay(body) if occurs_free(body, f) => {
            let renamed = substitute_term(body, f, &Arc::new(Term::Var(rp.clone())));
            let lam = Arc::new(Term::Lam { param: rp.clone(), ann: Some(ty.clone()), body: renamed, label: None });
            Term::apa(Term::delay(lam), Arc::new(Term::Var(r.clone())))
        }
        Term::Lam { param, .. } | Term::Fix { var: param, .. } if &**param == f => t.clone(),
        Term::Case { scrutinee, left, right } => {
            let side = |b: &(Name, Arc<Term>)| {
                if &*b.0 == f {
                    b.clone()
                } else {
                    (b.0.clone(), guard(&b.1, f, r, rp, ty))
                }
            };
            Arc::new(Term::Case { scrutinee: guard(scrutinee, f, r, rp, ty), left: side(left), right: side(right) })
        }
        Term::Rec { var, result, step, target } => Arc::new(Term::Rec {
            var: var.clone(),
            result: result.clone(),
            step: if &**var == f { step.clone() } else { guard(step, f, r, rp, ty) },
            target: guard(target, f, r, rp, ty),
        }),
        _ => map_children(t, &mut |c| guard(c, f, r, rp, ty)),
    }
}

fn check_linear(pats: &[Pat], span: Span) -> Res<()> {
    let mut vars = Vec::new();
    for p in pats {
        p.vars(&mut vars);
    }
    let mut seen = BTreeSet::new();
    for v in vars {
        if !seen.insert(v.clone()) {
            return Err(error(ErrorKind::Pattern, span, format!("variable `{v}` is bound twice in one pattern")));
        }
    }
    Ok(())
}

struct WhereDef<'e> {
    name: String,
    sig: Option<&'e Signature>,
    eqs: Vec<&'e Equation>,
    span: Span,
}

fn group_where(decls: &[Decl]) -> Res<Vec<WhereDef<'_>>> {
    let mut groups: Vec<WhereDef> = Vec::new();
    let mut sigs: BTreeMap<&str, &Signature> = BTreeMap::new();
    for d in decls {
        match d {
            Decl::Sig(s) => {
                if s.params.is_some() {
                    return Err(error(ErrorKind::Scope, s.pos.0, "where-signatures share the enclosing type parameters; drop the forall"));
                }
                if sigs.insert(&s.name, s).is_some() {
                    return Err(error(ErrorKind::Scope, s.pos.0, format!("duplicate signature for `{}`", s.name)));
                }
            }
            Decl::Eq(eq) => match groups.last_mut() {
                Some(g) if g.name == eq.name => g.eqs.push(eq),
                _ => {
                    if groups.iter().any(|g| g.name == eq.name) {
                        return Err(error(ErrorKind::Scope, eq.pos.0, format!("equations for `{}` must be adjacent", eq.name)));
                    }
                    groups.push(WhereDef { name: eq.name.clone(), sig: None, eqs: vec![eq], span: eq.pos.0 });
                }
            },
        }
    }
    for (n, s) in &sigs {
        match groups.iter_mut().find(|g| g.name == *n) {
            Some(g) => g.sig = Some(s),
            None => return Err(error(ErrorKind::Scope, s.pos.0, format!("signature for `{n}` lacks a definition"))),
        }
    }
    Ok(groups)
}

/// Source order, except that a definition comes after those it uses.
fn let_order(kept: &[(String, Option<Type>, Arc<Term>)], _names: &BTreeSet<String>, span: Span) -> Res<Vec<usize>> {
    let mut order = Vec::new();
    let mut state = vec![0u8; kept.len()];
    fn visit(
        k: usize,
        kept: &[(String, Option<Type>, Arc<Term>)],
        state: &mut [u8],
        order: &mut Vec<usize>,
        span: Span,
    ) -> Res<()> {
        match state[k] {
            2 => return Ok(()),
            1 => {
                return Err(error(ErrorKind::Recursion, span, format!("where-definition `{}` depends on itself", kept[k].0)))
            }
            _ => {}
        }
        state[k] = 1;
        for j in 0..kept.len() {
            if j != k && occurs_free(&kept[k].2, &kept[j].0) {
                visit(j, kept, state, order, span)?;
            }
        }
        state[k] = 2;
        order.push(k);
        Ok(())
    }
    for k in 0..kept.len() {
        visit(k, kept, &mut state, &mut order, span)?;
    }
    Ok(order)
}

// Surface-level scans for recursion.

fn equation_mentions(eq: &Equation, f: &str) -> bool {
    let mut bound = Vec::new();
    for p in &eq.pats {
        p.vars(&mut bound);
    }
    if bound.iter().any(|b| b == f) {
        return false;
    }
    let shadowed_by_where = eq.wheres.iter().any(|d| matches!(d, Decl::Eq(e) if e.name == f));
    if shadowed_by_where {
        return false;
    }
    expr_mentions(&eq.body, f) || eq.wheres.iter().any(|d| matches!(d, Decl::Eq(e) if equation_mentions(e, f)))
}

fn expr_mentions(e: &Expr, f: &str) -> bool {
    let binds = |p: &Pat| {
        let mut v = Vec::new();
        p.vars(&mut v);
        v.iter().any(|x| x == f)
    };
    match e {
        Expr::Var { name, .. } => name == f,
        Expr::Con(..) | Expr::Int(_) | Expr::Char(_) | Expr::Str(_) | Expr::Unit => false,
        Expr::Tuple(es) => es.iter().any(|x| expr_mentions(x, f)),
        Expr::Lam(ps, b) => !ps.iter().any(binds) && expr_mentions(b, f),
        Expr::App(a, b) | Expr::Op(_, a, b, _) => expr_mentions(a, f) || expr_mentions(b, f),
        Expr::Let { pat, value, body, .. } => expr_mentions(value, f) || (!binds(pat) && expr_mentions(body, f)),
        Expr::If(a, b, c) => expr_mentions(a, f) || expr_mentions(b, f) || expr_mentions(c, f),
        Expr::Case(s, alts) => expr_mentions(s, f) || alts.iter().any(|(p, b)| !binds(p) && expr_mentions(b, f)),
        Expr::Ann(x, _) => expr_mentions(x, f),
    }
}

/// Every use of `f`, or of a where-definition that calls it, must sit under
/// `delay` or on the left of `|>`.
fn check_guarded(eq: &Equation, f: &str) -> Res<()> {
    let mut recursive: Vec<(String, bool)> = vec![(f.to_string(), false)];
    loop {
        let before = recursive.len();
        for d in &eq.wheres {
            if let Decl::Eq(w) = d {
                if !recursive.iter().any(|(n, _)| n == &w.name)
                    && recursive.iter().any(|(n, _)| equation_mentions(w, n))
                {
                    recursive.push((w.name.clone(), true));
                }
            }
        }
        if recursive.len() == before {
            break;
        }
    }
    let mut bound = Vec::new();
    for p in &eq.pats {
        p.vars(&mut bound);
    }
    walk_guarded(&eq.body, false, f, &recursive, &mut bound)
}

fn walk_guarded(e: &Expr, guarded: bool, f: &str, rec: &[(String, bool)], bound: &mut Vec<String>) -> Res<()> {
    let under = |p: &Pat, bound: &mut Vec<String>| {
        let n = bound.len();
        p.vars(bound);
        n
    };
    match e {
        Expr::Var { name, pos, .. } => {
            if !guarded && !bound.contains(name) {
                if let Some((_, via)) = rec.iter().find(|(n, _)| n == name) {
                    let msg = if *via {
                        format!("unguarded use of `{name}`, which calls `{f}` recursively; put it under delay or on the left of |>")
                    } else {
                        format!("unguarded recursive call to `{f}`; recursive calls must appear under delay or on the left of |>")
                    };
                    return Err(error(ErrorKind::Recursion, pos.0, msg));
                }
            }
            Ok(())
        }
        Expr::Con(..) | Expr::Int(_) | Expr::Char(_) | Expr::Str(_) | Expr::Unit => Ok(()),
        Expr::Tuple(es) => es.iter().try_for_each(|x| walk_guarded(x, guarded, f, rec, bound)),
        Expr::App(..) => {
            let (head, args) = e.spine();
            let is_delay = matches!(head, Expr::Var { name, .. } if name == "delay" && !bound.contains(name));
            walk_guarded(head, guarded, f, rec, bound)?;
            for (i, a) in args.iter().enumerate() {
                walk_guarded(a, guarded || (is_delay && i == 0), f, rec, bound)?;
            }
            Ok(())
        }
        Expr::Op(op, a, b, _) => {
            walk_guarded(a, guarded || *op == Op::Later, f, rec, bound)?;
            walk_guarded(b, guarded, f, rec, bound)
        }
        Expr::Lam(ps, b) => {
            let n = bound.len();
            for p in ps {
                p.vars(bound);
            }
            let r = walk_guarded(b, guarded, f, rec, bound);
            bound.truncate(n);
            r
        }
        Expr::Let { pat, value, body, .. } => {
            walk_guarded(value, guarded, f, rec, bound)?;
            let n = under(pat, bound);
            let r = walk_guarded(body, guarded, f, rec, bound);
            bound.truncate(n);
            r
        }
        Expr::If(a, b, c) => {
            walk_guarded(a, guarded, f, rec, bound)?;
            walk_guarded(b, guarded, f, rec, bound)?;
            walk_guarded(c, guarded, f, rec, bound)
        }
        Expr::Case(s, alts) => {
            walk_guarded(s, guarded, f, rec, bound)?;
            for (p, b) in alts {
                let n = under(p, bound);
                let r = walk_guarded(b, guarded, f, rec, bound);
                bound.truncate(n);
                r?;
            }
            Ok(())
        }
        Expr::Ann(x, _) => walk_guarded(x, guarded, f, rec, bound),
    }
}
