//! Interpreter, compiler, and verification condition generator for a small
//! imperative subset of Dafny.
//!
//! The pipeline: [`frontend`] parses S-expression programs, [`semantics`]
//! runs them with a fuel budget, [`compiler`] translates them to the
//! ML-style core language in [`targetlang`], [`simrel`] compares both sides
//! by differential testing, and [`vcg`] + [`vccheck`] generate and discharge
//! verification conditions.

pub mod ast;
pub mod compiler;
pub mod frontend;
pub mod passes;
pub mod semantics;
pub mod simrel;
pub mod targetlang;
pub mod util;
pub mod vccheck;
pub mod vcg;
