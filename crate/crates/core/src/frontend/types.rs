//! Surface types, data declarations and constructors.

use std::collections::BTreeMap;

use super::ast::{DataDecl, SType};
use super::{ErrorKind, FrontendError, Span};
use crate::syntax::{check_type_formation, Type};

/// Type names with a fixed meaning; everything else is a data type or a
/// type variable.
pub const BUILTIN_TYPES: &[&str] = &["Int", "Char", "String", "Unit", "Bool", "Maybe", "Sig", "Chan", "Later", "Delay", "Sync"];

#[derive(Clone, Debug)]
pub struct DataInfo {
    pub decl: DataDecl,
    pub recursive: bool,
}

/// Where a constructor lives and how it is built.
#[derive(Clone, Debug)]
pub struct CtorInfo {
    pub data: String,
    pub index: usize,
    pub count: usize,
    pub fields: Vec<SType>,
}

#[derive(Clone, Debug, Default)]
pub struct TypeEnv {
    pub datas: BTreeMap<String, DataInfo>,
    pub ctors: BTreeMap<String, CtorInfo>,
}

pub const BUILTIN_CTORS: &[&str] = &["Just", "Nothing", "True", "False", "Left", "Right", "Fst", "Snd", "Both"];

fn err(span: Span, msg: impl Into<String>) -> FrontendError {
    FrontendError::at(ErrorKind::Type, span, msg)
}

impl TypeEnv {
    pub fn add_data(&mut self, decl: DataDecl) -> Result<(), FrontendError> {
        let span = decl.pos.0;
        if BUILTIN_TYPES.contains(&decl.name.as_str()) {
            return Err(err(span, format!("`{}` is a builtin type and cannot be redeclared", decl.name)));
        }
        for (c, fields) in &decl.ctors {
            if BUILTIN_CTORS.contains(&c.as_str()) {
                return Err(err(span, format!("`{c}` is a builtin constructor")));
            }
            if let Some(other) = self.ctors.get(c) {
                if other.data != decl.name {
                    return Err(err(span, format!("constructor `{c}` is already declared by `{}`", other.data)));
                }
            }
            self.ctors.insert(
                c.clone(),
                CtorInfo {
                    data: decl.name.clone(),
                    index: self.ctor_index(&decl, c),
                    count: decl.ctors.len(),
                    fields: fields.clone(),
                },
            );
        }
        let recursive = decl.ctors.iter().any(|(_, fs)| fs.iter().any(|f| f.mentions(&decl.name)));
        self.datas.insert(decl.name.clone(), DataInfo { decl, recursive });
        Ok(())
    }

    fn ctor_index(&self, decl: &DataDecl, c: &str) -> usize {
        decl.ctors.iter().position(|(n, _)| n == c).expect("constructor of its own declaration")
    }

    pub fn is_type_name(&self, n: &str) -> bool {
        BUILTIN_TYPES.contains(&n) || self.datas.contains_key(n)
    }

    /// Names in `ty` that are neither builtin nor declared types, in order of
    /// first occurrence. These are the implicit type parameters of a signature.
    pub fn implicit_params(&self, ty: &SType, out: &mut Vec<String>) {
        match ty {
            SType::Con(n, args) => {
                if args.is_empty() && !self.is_type_name(n) && !out.contains(n) {
                    out.push(n.clone());
                }
                args.iter().for_each(|a| self.implicit_params(a, out));
            }
            SType::Var(_) | SType::Unit => {}
            SType::Fun(a, b) | SType::Sum(a, b) | SType::Prod(a, b) => {
                self.implicit_params(a, out);
                self.implicit_params(b, out);
            }
            SType::Mu(_, b) => self.implicit_params(b, out),
        }
    }

    /// Translate a surface type, replacing type parameters by `tvars`.
    pub fn resolve(&self, ty: &SType, tvars: &BTreeMap<String, Type>, span: Span) -> Result<Type, FrontendError> {
        let t = Resolver { env: self, span, expanding: vec![] }.go(ty, tvars)?;
        Ok(t)
    }

    /// Like [`TypeEnv::resolve`], and the result must be closed and well formed.
    pub fn resolve_closed(&self, ty: &SType, tvars: &BTreeMap<String, Type>, span: Span) -> Result<Type, FrontendError> {
        let t = self.resolve(ty, tvars, span)?;
        if !check_type_formation(None, &t) {
            return Err(err(span, format!("`{ty}` is not a well-formed closed type: {t}")));
        }
        Ok(t)
    }

    /// The resolved field types of a constructor, instantiated at `args`.
    pub fn data_type(&self, data: &str, args: &[Type], span: Span) -> Result<Type, FrontendError> {
        let info = &self.datas[data];
        let sargs: Vec<SType> = (0..args.len()).map(|i| SType::con(&format!("%{i}"))).collect();
        let tvars: BTreeMap<String, Type> =
            sargs.iter().zip(args).map(|(s, t)| (s.to_string(), t.clone())).collect();
        self.resolve(&SType::Con(info.decl.name.clone(), sargs), &tvars, span)
    }
}

struct Resolver<'a> {
    env: &'a TypeEnv,
    span: Span,
    /// Data types currently being unfolded, with their `mu` variable.
    expanding: Vec<(String, Vec<SType>, String)>,
}

impl Resolver<'_> {
    fn go(&mut self, ty: &SType, tvars: &BTreeMap<String, Type>) -> Result<Type, FrontendError> {
        Ok(match ty {
            SType::Var(a) => Type::var(a),
            SType::Unit => Type::Unit,
            SType::Fun(a, b) => Type::fun(self.go(a, tvars)?, self.go(b, tvars)?),
            SType::Sum(a, b) => Type::sum(self.go(a, tvars)?, self.go(b, tvars)?),
            SType::Prod(a, b) => Type::prod(self.go(a, tvars)?, self.go(b, tvars)?),
            SType::Mu(a, b) => Type::mu(a, self.go(b, tvars)?),
            SType::Con(n, args) => self.con(n, args, tvars)?,
        })
    }

    fn arity(&self, n: &str, args: &[SType], want: usize) -> Result<(), FrontendError> {
        if args.len() != want {
            return Err(err(self.span, format!("`{n}` expects {want} type argument(s), got {}", args.len())));
        }
        Ok(())
    }

    fn con(&mut self, n: &str, args: &[SType], tvars: &BTreeMap<String, Type>) -> Result<Type, FrontendError> {
        let one = |r: &mut Self, f: fn(Type) -> Type| -> Result<Type, FrontendError> {
            r.arity(n, args, 1)?;
            Ok(f(r.go(&args[0], tvars)?))
        };
        match n {
            "Int" | "Char" | "String" | "Unit" | "Bool" => {
                self.arity(n, args, 0)?;
                return Ok(match n {
                    "Int" => Type::Int,
                    "Char" => Type::Char,
                    "String" => Type::Str,
                    "Unit" => Type::Unit,
                    _ => Type::bool(),
                });
            }
            "Maybe" => return one(self, Type::maybe),
            "Sig" => return one(self, Type::sig),
            "Chan" => return one(self, Type::chan),
            "Later" => return one(self, Type::later),
            "Delay" => return one(self, Type::delay),
            "Sync" => {
                self.arity(n, args, 2)?;
                return Ok(Type::sync(self.go(&args[0], tvars)?, self.go(&args[1], tvars)?));
            }
            _ => {}
        }
        if let Some(t) = tvars.get(n) {
            self.arity(n, args, 0)?;
            return Ok(t.clone());
        }
        let Some(info) = self.env.datas.get(n) else {
            return Err(err(self.span, format!("unknown type `{n}`")));
        };
        self.arity(n, args, info.decl.params.len())?;
        if let Some(pos) = self.expanding.iter().position(|(d, _, _)| d == n) {
            if pos + 1 != self.expanding.len() {
                let inner = &self.expanding.last().unwrap().0;
                return Err(err(
                    self.span,
                    format!("data types `{n}` and `{inner}` are mutually recursive, which is not supported"),
                ));
            }
            let (_, params, var) = &self.expanding[pos];
            if params != args {
                return Err(err(self.span, format!("`{n}` must be used with its own parameters in its declaration")));
            }
            return Ok(Type::var(var));
        }
        // Arguments are resolved in the caller's scope, fields in the declaration's.
        let mut inner_vars = BTreeMap::new();
        for (p, a) in info.decl.params.iter().zip(args) {
            inner_vars.insert(p.clone(), self.go(a, tvars)?);
        }
        let var = n.to_lowercase();
        let own: Vec<SType> = info.decl.params.iter().map(|p| SType::con(p)).collect();
        self.expanding.push((n.to_string(), own, var.clone()));
        let mut payloads = Vec::new();
        for (_, fields) in &info.decl.ctors {
            let mut tys = Vec::new();
            for f in fields {
                tys.push(self.go(f, &inner_vars)?);
            }
            payloads.push(product(tys));
        }
        self.expanding.pop();
        let body = sum(payloads);
        if info.recursive {
            let mu = Type::mu(&var, body);
            if !check_type_formation(None, &mu) {
                return Err(err(
                    info.decl.pos.0,
                    format!("data type `{n}` may only recur under products, sums and Sig"),
                ));
            }
            Ok(mu)
        } else {
            Ok(body)
        }
    }
}

/// `A1 * (A2 * ...)`, or `1` when empty.
pub fn product(mut tys: Vec<Type>) -> Type {
    let Some(mut acc) = tys.pop() else { return Type::Unit };
    while let Some(t) = tys.pop() {
        acc = Type::prod(t, acc);
    }
    acc
}

/// `A1 + (A2 + ...)`; data declarations have at least one constructor.
pub fn sum(mut tys: Vec<Type>) -> Type {
    let mut acc = tys.pop().expect("non-empty sum");
    while let Some(t) = tys.pop() {
        acc = Type::sum(t, acc);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ast::Item;
    use crate::frontend::parse;

    fn env(src: &str) -> TypeEnv {
        let mut e = TypeEnv::default();
        for item in parse(src).unwrap().items {
            if let Item::Data(d) = item {
                e.add_data(d).unwrap();
            }
        }
        e
    }

    fn resolve(e: &TypeEnv, src: &str) -> Result<Type, FrontendError> {
        let st = crate::frontend::parse_type(src).unwrap();
        e.resolve_closed(&st, &BTreeMap::new(), Span::default())
    }

    #[test]
    fn recursive_data_becomes_mu() {
        let e = env("data Nat = Z | S Nat\ndata List A = Nil | Cons A (List A)\n");
        assert_eq!(resolve(&e, "Nat").unwrap().to_string(), "mu nat. 1 + nat");
        assert_eq!(resolve(&e, "List Int").unwrap().to_string(), "mu list. 1 + Int * list");
    }

    #[test]
    fn gui_widget_type() {
        let e = env(
            "data Colour = Black | Red\n\
             data Button = Button (Sig String) (Sig Colour) (Chan Unit)\n\
             data Widget = Btn Button | Dyn (Sig Widget) | Above Widget Widget | Empty\n",
        );
        assert_eq!(
            resolve(&e, "Widget").unwrap().to_string(),
            "mu widget. Sig String * Sig (1 + 1) * Chan 1 + Sig widget + widget * widget + 1"
        );
    }

    #[test]
    fn recursion_under_functions_is_rejected() {
        let e = env("data Bad = Bad (Bad -> Int)\n");
        assert!(resolve(&e, "Bad").unwrap_err().message.contains("may only recur"));
        let e = env("data T A = Leaf | Node (T (Maybe A))\n");
        assert!(resolve(&e, "T Int").is_err());
    }

    #[test]
    fn mutual_recursion_is_rejected() {
        let e = env("data A1 = A1 B1 | A0\ndata B1 = B1 A1\n");
        assert!(resolve(&e, "A1").unwrap_err().message.contains("mutually recursive"));
    }

    #[test]
    fn implicit_parameters_in_order() {
        let e = env("data Colour = Black | Red\n");
        let st = crate::frontend::parse_type("(B -> A -> B) -> B -> Sig A -> Colour").unwrap();
        let mut ps = vec![];
        e.implicit_params(&st, &mut ps);
        assert_eq!(ps, vec!["B", "A"]);
    }
}
