//! The imperative source language: syntax, parsing and printing.

pub mod ast;
mod desugar;
pub mod lexer;
mod parser;
pub mod pretty;
pub mod surface;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use pretty::{alpha_equivalent, canonical, pretty, pretty_expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Unbound,
    DuplicateBinder,
}

impl ParseErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            ParseErrorKind::Syntax => "E0001",
            ParseErrorKind::Unbound => "E0002",
            ParseErrorKind::DuplicateBinder => "E0003",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(pos: Pos, message: String) -> Self {
        ParseError {
            pos,
            message,
            kind: ParseErrorKind::Syntax,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

/// Parses and desugars a whole program.
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let surface = parser::Parser::new(text)?.program()?;
    desugar::lower(surface)
}

/// Parses a single type annotation such as `ref<α, 0.5 lend β: 0.5>`.
pub fn parse_type(text: &str) -> Result<crate::OwnType, ParseError> {
    let mut p = parser::Parser::new(text)?;
    p.ty()
}
