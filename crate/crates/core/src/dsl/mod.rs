//! The `.tptg` modeling language: parser, printer, compiler and generators
//! for the case-study models.

pub mod ast;
mod compile;
mod error;
mod gen;
mod lexer;
mod parser;
mod printer;

pub use compile::{compile, Compiled, Property};
pub use error::ParseError;
pub use gen::{gen_nonrepudiation, gen_taskgraph, rational_expr, Variant};
pub use parser::parse;

/// Source of the shipped communication-protocol example.
pub const FIG1: &str = include_str!("../../models/fig1.tptg");

/// Parses and compiles model text.
pub fn load(text: &str) -> crate::Result<Compiled> {
    compile(&parse(text)?)
}
