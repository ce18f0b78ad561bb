use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::ast::{Decl, Equation, Expr, Item, SType, SurfaceProgram};
use super::desugar::{Desugarer, Fresh, Request};
use super::lexer::{lex, Tok};
use super::parser::parse;
use super::types::TypeEnv;
use super::{ErrorKind, FrontendError, Span};
use crate::store::ChannelContext;
use crate::syntax::{ChanId, Term, Type};
use crate::typeck::{elaborate, HeapContext, TypeError, TypingContext};

/// The library of signal functions every program may use. Programs can
/// redefine any of its definitions or data types.
pub const PRELUDE: &str = include_str!("../../corpus/frp.rzo");

#[derive(Clone, Debug)]
pub(crate) struct DefInfo {
    pub name: String,
    pub tparams: Vec<String>,
    pub sig: SType,
    pub eqs: Vec<Equation>,
    pub pos: Span,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct ProgramInfo {
    pub types: TypeEnv,
    pub defs: BTreeMap<String, DefInfo>,
    pub inputs: Vec<(String, Type)>,
}

impl ProgramInfo {
    pub fn input(&self, x: &str) -> Option<ChanId> {
        self.inputs.iter().position(|(n, _)| n == x).map(|i| ChanId(i as u32 + 1))
    }
}

/// Variable naming one instance of a definition.
pub(crate) fn instance_key(name: &str, targs: &[Type]) -> String {
    if targs.is_empty() {
        return name.to_string();
    }
    let args: Vec<String> = targs.iter().map(|t| t.to_string()).collect();
    format!("{name}[{}]", args.join(", "))
}

/// A definition compiled to a closed core term, not yet elaborated.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub term: Arc<Term>,
    pub ty: Type,
    pub channels: ChannelContext,
}

impl Compiled {
    /// Typecheck the term, filling in the annotations the checker can infer.
    pub fn elaborate(&self) -> Result<Arc<Term>, TypeError> {
        elaborate(&TypingContext::new(), &HeapContext::new(), &self.channels, &self.term, &self.ty)
    }
}

/// A parsed and scope-checked surface program.
#[derive(Clone, Debug)]
pub struct Program {
    info: ProgramInfo,
    identifiers: BTreeSet<String>,
}

impl Program {
    /// Parse `src` on top of the standard prelude.
    pub fn from_source(src: &str) -> Result<Program, FrontendError> {
        Program::from_source_with(src, true)
    }

    pub fn from_source_with(src: &str, prelude: bool) -> Result<Program, FrontendError> {
        let user = parse(src)?;
        let mut identifiers = identifiers(src)?;
        let base = if prelude {
            identifiers.extend(identifiers_of_prelude());
            Some(parse(PRELUDE).expect("prelude parses"))
        } else {
            None
        };
        let info = build(base, user)?;
        Ok(Program { info, identifiers })
    }

    /// Declared inputs with their channel identifiers, in declaration order.
    pub fn inputs(&self) -> Vec<(String, ChanId, Type)> {
        self.info
            .inputs
            .iter()
            .enumerate()
            .map(|(i, (n, t))| (n.clone(), ChanId(i as u32 + 1), t.clone()))
            .collect()
    }

    pub fn channels(&self) -> ChannelContext {
        let mut c = ChannelContext::new();
        for (_, k, t) in self.inputs() {
            c.insert(k, t);
        }
        c
    }

    pub fn has_def(&self, name: &str) -> bool {
        self.info.defs.contains_key(name)
    }

    /// Type parameters of a definition.
    pub fn type_params(&self, name: &str) -> Option<&[String]> {
        self.info.defs.get(name).map(|d| &d.tparams[..])
    }

    pub fn def_names(&self) -> impl Iterator<Item = &str> {
        self.info.defs.keys().map(|k| k.as_str())
    }

    pub fn resolve_type(&self, ty: &SType) -> Result<Type, FrontendError> {
        self.info.types.resolve_closed(ty, &BTreeMap::new(), Span::default())
    }

    /// The type of the instance of `name` at `targs`.
    pub fn def_type(&self, name: &str, targs: &[Type]) -> Result<Type, FrontendError> {
        let def = self.def(name, targs)?;
        self.info.types.resolve_closed(&def.sig, &tvars(def, targs), def.pos)
    }

    fn def(&self, name: &str, targs: &[Type]) -> Result<&DefInfo, FrontendError> {
        let Some(def) = self.info.defs.get(name) else {
            return Err(FrontendError::new(ErrorKind::Scope, None, format!("no definition named `{name}`")));
        };
        if def.tparams.len() != targs.len() {
            return Err(FrontendError::new(
                ErrorKind::Scope,
                Some(def.pos),
                format!("`{name}` takes {} type argument(s), got {}", def.tparams.len(), targs.len()),
            ));
        }
        Ok(def)
    }

    pub fn compile_main(&self) -> Result<Compiled, FrontendError> {
        if !self.has_def("main") {
            return Err(FrontendError::new(ErrorKind::Scope, None, "the program has no `main` definition"));
        }
        self.compile_def("main", &[])
    }

    /// Compile the instance of `name` at `targs`, with every definition it
    /// uses bound by annotated lets around it.
    pub fn compile_def(&self, name: &str, targs: &[Type]) -> Result<Compiled, FrontendError> {
        self.def(name, targs)?;
        let mut fresh = Fresh::new(self.identifiers.clone());
        let root = instance_key(name, targs);
        let mut todo = vec![Request { key: root.clone(), def: name.to_string(), targs: targs.to_vec() }];
        // key -> (type, term, keys it uses)
        let mut done: BTreeMap<String, (Type, Arc<Term>, Vec<String>)> = BTreeMap::new();
        while let Some(req) = todo.pop() {
            if done.contains_key(&req.key) {
                continue;
            }
            let def = self.def(&req.def, &req.targs)?;
            let tv = tvars(def, &req.targs);
            let ty = self.info.types.resolve_closed(&def.sig, &tv, def.pos)?;
            let mut d = Desugarer::new(&self.info, &mut fresh, tv, Some((req.def.clone(), req.targs.clone())));
            let term = d.definition(def, &ty)?;
            let requests = std::mem::take(&mut d.requests);
            let deps: Vec<String> = requests.iter().map(|r| r.key.clone()).collect();
            todo.extend(requests);
            done.insert(req.key, (ty, term, deps));
        }
        let order = topological(&root, &done)?;
        let ty = done[&root].0.clone();
        let mut term = Term::var(&root);
        for key in order.iter().rev() {
            let (kty, kterm, _) = &done[key];
            term = Term::let_in(key, Some(kty.clone()), kterm.clone(), term);
        }
        Ok(Compiled { term, ty, channels: self.channels() })
    }

    /// Compile a closed expression, such as an event payload, that uses no
    /// definitions.
    pub fn compile_expr(&self, e: &Expr) -> Result<Arc<Term>, FrontendError> {
        let mut fresh = Fresh::new(self.identifiers.clone());
        let mut d = Desugarer::new(&self.info, &mut fresh, BTreeMap::new(), None);
        let t = d.expr(e)?;
        if let Some(r) = d.requests.first() {
            return Err(FrontendError::new(
                ErrorKind::Scope,
                None,
                format!("`{}` is a definition; values here must be literals", r.def),
            ));
        }
        Ok(t)
    }
}

fn tvars(def: &DefInfo, targs: &[Type]) -> BTreeMap<String, Type> {
    def.tparams.iter().cloned().zip(targs.iter().cloned()).collect()
}

/// Definitions in dependency order, those a definition uses before it.
fn topological(root: &str, done: &BTreeMap<String, (Type, Arc<Term>, Vec<String>)>) -> Result<Vec<String>, FrontendError> {
    fn visit(
        k: &str,
        done: &BTreeMap<String, (Type, Arc<Term>, Vec<String>)>,
        state: &mut BTreeMap<String, bool>,
        order: &mut Vec<String>,
        path: &mut Vec<String>,
    ) -> Result<(), FrontendError> {
        match state.get(k) {
            Some(true) => return Ok(()),
            Some(false) => {
                let start = path.iter().position(|p| p == k).unwrap_or(0);
                let mut cycle = path[start..].to_vec();
                cycle.push(k.to_string());
                return Err(FrontendError::new(
                    ErrorKind::Recursion,
                    None,
                    format!("mutually recursive definitions are not supported: {}", cycle.join(" -> ")),
                ));
            }
            None => {}
        }
        state.insert(k.to_string(), false);
        path.push(k.to_string());
        for d in &done[k].2 {
            if d != k {
                visit(d, done, state, order, path)?;
            }
        }
        path.pop();
        state.insert(k.to_string(), true);
        order.push(k.to_string());
        Ok(())
    }
    let mut order = Vec::new();
    visit(root, done, &mut BTreeMap::new(), &mut order, &mut vec![])?;
    Ok(order)
}

fn identifiers(src: &str) -> Result<BTreeSet<String>, FrontendError> {
    Ok(lex(src)?
        .into_iter()
        .filter_map(|t| match t.tok {
            Tok::Ident(s) | Tok::Con(s) => Some(s),
            _ => None,
        })
        .collect())
}

fn identifiers_of_prelude() -> BTreeSet<String> {
    identifiers(PRELUDE).expect("prelude lexes")
}

struct Group {
    name: String,
    sig: Option<super::ast::Signature>,
    eqs: Vec<Equation>,
    pos: Span,
}

fn groups(items: &[Item]) -> Result<Vec<Group>, FrontendError> {
    let mut groups: Vec<Group> = Vec::new();
    let mut last_eq: Option<String> = None;
    for item in items {
        let Item::Decl(d) = item else {
            last_eq = None;
            continue;
        };
        match d {
            Decl::Sig(s) => {
                last_eq = None;
                match groups.iter_mut().find(|g| g.name == s.name) {
                    Some(g) if g.sig.is_some() => {
                        return Err(FrontendError::at(ErrorKind::Scope, s.pos.0, format!("duplicate signature for `{}`", s.name)))
                    }
                    Some(g) => g.sig = Some(s.clone()),
                    None => groups.push(Group { name: s.name.clone(), sig: Some(s.clone()), eqs: vec![], pos: s.pos.0 }),
                }
            }
            Decl::Eq(eq) => {
                let g = match groups.iter_mut().find(|g| g.name == eq.name) {
                    Some(g) => g,
                    None => {
                        groups.push(Group { name: eq.name.clone(), sig: None, eqs: vec![], pos: eq.pos.0 });
                        groups.last_mut().unwrap()
                    }
                };
                if !g.eqs.is_empty() && last_eq.as_deref() != Some(&eq.name) {
                    return Err(FrontendError::at(
                        ErrorKind::Scope,
                        eq.pos.0,
                        format!("equations for `{}` must be adjacent", eq.name),
                    ));
                }
                g.eqs.push(eq.clone());
                last_eq = Some(eq.name.clone());
            }
        }
    }
    for g in &groups {
        if g.sig.is_none() {
            return Err(FrontendError::at(ErrorKind::Scope, g.pos, format!("`{}` needs a type signature", g.name)));
        }
        if g.eqs.is_empty() {
            return Err(FrontendError::at(ErrorKind::Scope, g.pos, format!("signature for `{}` lacks a definition", g.name)));
        }
    }
    Ok(groups)
}

fn build(base: Option<SurfaceProgram>, user: SurfaceProgram) -> Result<ProgramInfo, FrontendError> {
    let mut info = ProgramInfo::default();
    let user_groups = groups(&user.items)?;
    let user_datas: BTreeSet<&str> = user
        .items
        .iter()
        .filter_map(|i| match i {
            Item::Data(d) => Some(d.name.as_str()),
            _ => None,
        })
        .collect();
    let mut all_groups = Vec::new();
    if let Some(base) = &base {
        for item in &base.items {
            if let Item::Data(d) = item {
                if !user_datas.contains(d.name.as_str()) {
                    info.types.add_data(d.clone())?;
                }
            }
        }
        for g in groups(&base.items)? {
            if !user_groups.iter().any(|u| u.name == g.name) {
                all_groups.push(g);
            }
        }
    }
    for item in &user.items {
        match item {
            Item::Data(d) => info.types.add_data(d.clone())?,
            Item::Input { name, ty, pos } => {
                if info.inputs.iter().any(|(n, _)| n == name) {
                    return Err(FrontendError::at(ErrorKind::Scope, pos.0, format!("input `{name}` is declared twice")));
                }
                let t = info.types.resolve_closed(ty, &BTreeMap::new(), pos.0)?;
                info.inputs.push((name.clone(), t));
            }
            Item::Decl(_) => {}
        }
    }
    all_groups.extend(user_groups);
    for g in all_groups {
        let sig = g.sig.expect("checked by groups");
        if info.input(&g.name).is_some() {
            return Err(FrontendError::at(ErrorKind::Scope, sig.pos.0, format!("`{}` is both an input and a definition", g.name)));
        }
        let tparams = match &sig.params {
            Some(ps) => {
                for p in ps {
                    if info.types.is_type_name(p) {
                        return Err(FrontendError::at(ErrorKind::Type, sig.pos.0, format!("type parameter `{p}` names an existing type")));
                    }
                }
                ps.clone()
            }
            None => {
                let mut ps = Vec::new();
                info.types.implicit_params(&sig.ty, &mut ps);
                ps
            }
        };
        // Resolve once with placeholder arguments to report bad types early.
        let probe: BTreeMap<String, Type> = tparams.iter().map(|p| (p.clone(), Type::Unit)).collect();
        info.types.resolve_closed(&sig.ty, &probe, sig.pos.0)?;
        info.defs.insert(g.name.clone(), DefInfo { name: g.name, tparams, sig: sig.ty, eqs: g.eqs, pos: sig.pos.0 });
    }
    Ok(info)
}
