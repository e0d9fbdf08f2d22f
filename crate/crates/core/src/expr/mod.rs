//! Expression language for metric components: parsing, printing, symbolic
//! assembly and exact order-2 jet evaluation.

mod ast;
mod jet;
mod parse;

pub use ast::{BinOp, Expr, Func, Node};
pub use jet::{DomainKind, EvalError, Jet2};
pub use parse::{parse_expression, ParseError};
