//! The ODE program language: lexer, parser, canonical printer and the
//! elaboration of declarations into simulator objects.

mod ast;
mod elaborate;
mod lexer;
mod parser;
mod printer;

pub use ast::*;
pub use elaborate::{decimal, elaborate, make_signal, value_f64, value_names, value_nums, Env, Gadget, SystemDef, WitnessDef, CHECKS, TRANSFORMS};
pub use lexer::{lex, Tok, Token};
pub use parser::parse;
pub use printer::print_program;

use std::fmt;

/// Source location. Spans never take part in equality, so two parses of
/// differently formatted text compare equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    Name,
    Arity,
    Invariant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DslError {
    pub kind: ErrorKind,
    pub span: Span,
    pub message: String,
}

impl DslError {
    pub fn new(kind: ErrorKind, span: Span, message: impl Into<String>) -> Self {
        DslError { kind, span, message: message.into() }
    }

    pub fn syntax(span: Span, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Syntax, span, message)
    }
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ErrorKind::Syntax => "syntax error",
            ErrorKind::Name => "unknown name",
            ErrorKind::Arity => "arity error",
            ErrorKind::Invariant => "invalid parameters",
        };
        write!(f, "{}:{}: {kind}: {}", self.span.line, self.span.col, self.message)
    }
}

impl std::error::Error for DslError {}

/// Parses and elaborates, so that names and arities are checked.
pub fn parse_program(src: &str) -> Result<Program, DslError> {
    let prog = parse(src)?;
    elaborate(&prog)?;
    Ok(prog)
}
