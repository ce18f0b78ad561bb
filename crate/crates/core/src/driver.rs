//! Loading programs and traces and running them with the configured checks.
//! The CLI and the browser demo are thin layers over this module.

use std::sync::Arc;

use crate::frontend::ast::{Decl, Item};
use crate::frontend::{parse, ErrorKind, FrontendError, Program};
use crate::oracle::{check_determinism, line_diff, run_checked, Checks, Fault, Run, Violation};
use crate::reactive::{InputEvent, Mutation, Runtime};
use crate::snapshot::{snapshots, Snapshot, SnapshotOptions};
use crate::store::ChannelContext;
use crate::syntax::{Term, Type};
use crate::trace::{parse_trace, resolve_trace, TraceError};
use crate::typeck::TypeError;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DriverError {
    #[error("parse error at {}: {}", .0.span.map_or("?".to_string(), |s| s.to_string()), .0.message)]
    Parse(FrontendError),
    /// Scope, pattern and recursion errors from the frontend.
    #[error("{} error{}: {}", .0.kind.as_str(), .0.span.map_or(String::new(), |s| format!(" at {s}")), .0.message)]
    Static(FrontendError),
    #[error("type error [{}]: {} in `{}`", .0.rule, .0.message, .0.subterm)]
    Type(TypeError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

impl From<FrontendError> for DriverError {
    fn from(e: FrontendError) -> Self {
        if e.kind == ErrorKind::Syntax {
            DriverError::Parse(e)
        } else {
            DriverError::Static(e)
        }
    }
}

/// A program compiled and typechecked at the type of its `main`.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub program: Program,
    pub term: Arc<Term>,
    pub ty: Type,
    pub channels: ChannelContext,
}

pub fn load(src: &str) -> Result<Loaded, DriverError> {
    let program = Program::from_source(src)?;
    let compiled = program.compile_main()?;
    let term = compiled.elaborate().map_err(DriverError::Type)?;
    Ok(Loaded { term, ty: compiled.ty, channels: compiled.channels, program })
}

impl Loaded {
    pub fn events(&self, trace_src: &str) -> Result<Vec<InputEvent>, DriverError> {
        Ok(resolve_trace(&self.program, &parse_trace(trace_src)?)?)
    }
}

/// Typecheck every definition that needs no type arguments. Returns each
/// definition's name and type.
pub fn check_program(src: &str) -> Result<Vec<(String, Type)>, DriverError> {
    let program = Program::from_source(src)?;
    let mut names: Vec<String> = Vec::new();
    for item in parse(src)?.items {
        if let Item::Decl(Decl::Sig(sig)) = item {
            names.push(sig.name);
        }
    }
    let mut out = Vec::new();
    for name in &names {
        if program.type_params(name).is_some_and(|p| !p.is_empty()) {
            continue;
        }
        let compiled = program.compile_def(name, &[])?;
        compiled.elaborate().map_err(DriverError::Type)?;
        out.push((name.clone(), compiled.ty));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub budget: u64,
    pub checks: Checks,
    pub check_determinism: bool,
    pub hide_unreachable: bool,
    pub mutation: Option<Mutation>,
    pub collect: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            budget: crate::eval::DEFAULT_BUDGET,
            checks: Checks::default(),
            check_determinism: false,
            hide_unreachable: false,
            mutation: None,
            collect: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub run: Run,
    pub events: Vec<InputEvent>,
    pub snapshots: Vec<Snapshot>,
}

impl RunOutput {
    pub fn violations(&self) -> &[Violation] {
        &self.run.violations
    }

    pub fn fault(&self) -> Option<&Fault> {
        self.run.fault.as_ref()
    }

    pub fn ok(&self) -> bool {
        self.run.ok()
    }

    /// How the printed cells changed in `step`, as a line diff against the
    /// cells before it. Step 0 is diffed against an empty state.
    pub fn state_diff(&self, step: usize) -> String {
        let body = |i: Option<usize>| -> String {
            i.and_then(|i| self.snapshots.get(i))
                .map(|s| s.to_text().lines().filter(|l| !["==", "result:", "channels:"].iter().any(|p| l.starts_with(p))).map(|l| format!("{l}\n")).collect())
                .unwrap_or_default()
        };
        line_diff(&body(step.checked_sub(1)), &body(Some(step)))
    }
}

pub fn run_events(loaded: &Loaded, events: Vec<InputEvent>, cfg: RunConfig) -> RunOutput {
    let mut runtime = Runtime::new(cfg.budget);
    runtime.mutation = cfg.mutation;
    runtime.collect = cfg.collect;
    let mut run = run_checked(&mut runtime, &loaded.term, &loaded.ty, loaded.channels.clone(), &events, cfg.checks);
    if cfg.check_determinism {
        if let Some(v) = check_determinism(&runtime, &loaded.term, &loaded.ty, &loaded.channels, &events, &run) {
            run.violations.push(v);
        }
    }
    let done = run.states.len().saturating_sub(1);
    let snapshots =
        snapshots(&run.states, &events[..done], SnapshotOptions { hide_unreachable: cfg.hide_unreachable });
    RunOutput { run, events, snapshots }
}

/// Load a program and a trace and run it.
pub fn run(src: &str, trace_src: &str, cfg: RunConfig) -> Result<RunOutput, DriverError> {
    let loaded = load(src)?;
    let events = loaded.events(trace_src)?;
    Ok(run_events(&loaded, events, cfg))
}

/// Run `f` on a thread with a large stack; evaluation recurses on the
/// structure of terms.
pub fn with_big_stack<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(256 << 20)
            .spawn_scoped(s, f)
            .expect("spawn evaluation thread")
            .join()
            .unwrap_or_else(|p| std::panic::resume_unwind(p))
    })
}
