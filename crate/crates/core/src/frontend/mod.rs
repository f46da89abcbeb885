//! Concrete S-expression syntax: reading, printing, and normalization.

pub mod normalize;
pub mod parse;
pub mod print;
pub mod sexp;

pub use normalize::normalize;
pub use parse::{parse_exp_text, parse_program, parse_stmt_text, parse_vc_file};
pub use print::{print_exp, print_program, print_stmt, print_vc_record};
pub use sexp::{ParseError, SExp};
