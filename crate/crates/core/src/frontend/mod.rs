//! Surface language: lexer, layout parser, desugaring to core terms, and
//! monomorphisation of polymorphic definitions.
//!
//! Polymorphic definitions are instantiated with explicit type arguments at
//! use sites, `map[Int, Bool] isEven xs`. A program's definitions become a
//! chain of annotated lets around the instance being compiled, so the result
//! is a single closed core term.

pub mod ast;
mod desugar;
pub mod lexer;
pub mod parser;
mod program;
mod types;

use std::fmt;

pub use parser::{parse, parse_expr, parse_type};
pub use program::{Compiled, Program};

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    /// Unknown names, missing signatures, bad type arguments.
    Scope,
    /// Non-exhaustive or ill-shaped patterns.
    Pattern,
    /// Unguarded or unsupported recursion.
    Recursion,
    /// Ill-formed surface types and data declarations.
    Type,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Syntax => "syntax",
            ErrorKind::Scope => "scope",
            ErrorKind::Pattern => "pattern",
            ErrorKind::Recursion => "recursion",
            ErrorKind::Type => "type",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrontendError {
    pub kind: ErrorKind,
    pub message: String,
    pub span: Option<Span>,
}

impl FrontendError {
    pub fn new(kind: ErrorKind, span: Option<Span>, message: impl Into<String>) -> FrontendError {
        FrontendError { kind, message: message.into(), span }
    }

    pub fn syntax(span: Span, message: impl Into<String>) -> FrontendError {
        FrontendError::new(ErrorKind::Syntax, Some(span), message)
    }

    pub(crate) fn at(kind: ErrorKind, span: Span, message: impl Into<String>) -> FrontendError {
        let span = if span == Span::default() { None } else { Some(span) };
        FrontendError::new(kind, span, message)
    }
}

impl fmt::Display for FrontendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{s}: {} error: {}", self.kind.as_str(), self.message),
            None => write!(f, "{} error: {}", self.kind.as_str(), self.message),
        }
    }
}

impl std::error::Error for FrontendError {}
