//! Formula AST, text syntax, and offline robustness monitoring.

pub mod ast;
pub mod eval;
pub mod parse;
pub mod window;

pub use ast::{Comparison, Formula, Interval, IntervalEnd, Mask, Predicate};
pub use eval::{monitor, robustness, EvalError, Verdict};
pub use parse::{parse, ParseError};
