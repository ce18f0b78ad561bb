//! The bundled corpus: the signal library, the GUI programs, small demos and
//! programs the checker must reject. `corpus/manifest.json` lists what each
//! file is expected to do.

use serde::Deserialize;

use crate::frontend::{parse_type, FrontendError, Program};
use crate::syntax::Type;
use crate::typeck::TypeError;

/// Every corpus file by name.
pub const FILES: &[(&str, &str)] = &[
    ("frp.rzo", include_str!("../corpus/frp.rzo")),
    ("sample.rzo", include_str!("../corpus/sample.rzo")),
    ("zip.rzo", include_str!("../corpus/zip.rzo")),
    ("filter.rzo", include_str!("../corpus/filter.rzo")),
    ("gui.rzo", include_str!("../corpus/gui.rzo")),
    ("gui_remove.rzo", include_str!("../corpus/gui_remove.rzo")),
    ("counter.rzo", include_str!("../corpus/counter.rzo")),
    ("switcher.rzo", include_str!("../corpus/switcher.rzo")),
    ("merge.rzo", include_str!("../corpus/merge.rzo")),
    ("jumper.rzo", include_str!("../corpus/jumper.rzo")),
    ("skip.rzo", include_str!("../corpus/skip.rzo")),
    ("apa_exists.rzo", include_str!("../corpus/apa_exists.rzo")),
    ("sample.trace", include_str!("../corpus/sample.trace")),
    ("filter.trace", include_str!("../corpus/filter.trace")),
    ("contrast.trace", include_str!("../corpus/contrast.trace")),
    ("gui.trace", include_str!("../corpus/gui.trace")),
];

const MANIFEST: &str = include_str!("../corpus/manifest.json");

pub fn file(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Accept,
    Reject,
}

/// A definition checked at its declared type.
#[derive(Clone, Debug, Deserialize)]
pub struct Entry {
    pub name: String,
    pub file: String,
    pub def: String,
    #[serde(default)]
    pub targs: Vec<String>,
    pub expect: Expect,
    /// For rejections, the typing rule the diagnostic must name.
    pub rule: Option<String>,
}

/// A program with `main` that the runtime can drive.
#[derive(Clone, Debug, Deserialize)]
pub struct RunnableProgram {
    pub name: String,
    pub file: String,
    pub trace: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Manifest {
    pub programs: Vec<RunnableProgram>,
    pub entries: Vec<Entry>,
}

pub fn manifest() -> Manifest {
    serde_json::from_str(MANIFEST).expect("bundled manifest is valid")
}

impl RunnableProgram {
    pub fn source(&self) -> &'static str {
        file(&self.file).expect("manifest names a bundled file")
    }

    pub fn trace_source(&self) -> Option<&'static str> {
        self.trace.as_deref().map(|t| file(t).expect("manifest names a bundled file"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("{}: {}", .0.kind.as_str(), .0.message)]
    Frontend(FrontendError),
    #[error("{rule}: {message}", rule = .0.rule, message = .0.message)]
    Type(TypeError),
}

impl CheckError {
    /// The rule or error kind a diagnostic is filed under.
    pub fn rule(&self) -> &str {
        match self {
            CheckError::Frontend(e) => e.kind.as_str(),
            CheckError::Type(e) => e.rule,
        }
    }
}

/// Outcome of checking one entry.
#[derive(Clone, Debug)]
pub struct EntryResult {
    pub name: String,
    pub ty: Option<Type>,
    pub expect: Expect,
    pub error: Option<CheckError>,
    pub passed: bool,
}

impl Entry {
    pub fn source(&self) -> &'static str {
        file(&self.file).expect("manifest names a bundled file")
    }

    /// Compile the definition at its type arguments and typecheck it.
    pub fn check(&self) -> EntryResult {
        let (ty, outcome) = match self.compile() {
            Ok((ty, r)) => (Some(ty), r),
            Err(e) => (None, Err(e)),
        };
        let passed = match (&outcome, self.expect) {
            (Ok(()), Expect::Accept) => true,
            (Err(e), Expect::Reject) => self.rule.as_deref().is_none_or(|r| r == e.rule()),
            _ => false,
        };
        EntryResult { name: self.name.clone(), ty, expect: self.expect, error: outcome.err(), passed }
    }

    fn compile(&self) -> Result<(Type, Result<(), CheckError>), CheckError> {
        let program = Program::from_source(self.source()).map_err(CheckError::Frontend)?;
        let mut targs = Vec::new();
        for t in &self.targs {
            let st = parse_type(t).map_err(CheckError::Frontend)?;
            targs.push(program.resolve_type(&st).map_err(CheckError::Frontend)?);
        }
        let ty = program.def_type(&self.def, &targs).map_err(CheckError::Frontend)?;
        let checked = program
            .compile_def(&self.def, &targs)
            .map_err(CheckError::Frontend)
            .and_then(|c| c.elaborate().map(|_| ()).map_err(CheckError::Type));
        Ok((ty, checked))
    }
}

/// Check every manifest entry.
pub fn check_corpus() -> Vec<EntryResult> {
    manifest().entries.iter().map(Entry::check).collect()
}
