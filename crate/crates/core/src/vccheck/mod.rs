//! Discharging verification conditions: bounded evaluation, a
//! counterexample search over sampled states, and SMT-LIB output for the
//! heap-free fragment.

pub mod eval;
pub mod falsify;
pub mod smt;

pub use eval::{eval_vc, Budget, VcEval, VcHook, Witness, INT_POOL};
pub use falsify::{falsify, literal_pool, peel_params, Counterexample, FalsifyReport};
pub use smt::{smt_check, smt_check_script, smt_emit, SmtError, SmtVerdict};
