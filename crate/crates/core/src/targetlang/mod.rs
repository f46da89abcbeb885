//! The ML-style core language targeted by the compiler: syntax, a
//! fuel-based interpreter, and printers.

pub mod eval;
pub mod pretty;
pub mod syntax;

pub use eval::{t_evaluate, t_evaluate_decs, Cell, TEnv, TErr, TInterp, TRes, TStore, TVal};
pub use pretty::{pretty_decs, sexp_decs};
pub use syntax::{TDec, TDef, TExp, TName, TPrimOp};
