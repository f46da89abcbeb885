//! SMT-LIB v2 output for heap-free conditions and an external solver driver.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use num_bigint::Sign;
use thiserror::Error;

use crate::ast::{BinOp, DType, Exp, Name, UnOp};

use super::falsify::peel_params;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SmtError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cannot run solver `{0}`: {1}")]
    Spawn(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SmtVerdict {
    Valid,
    /// Solver answered `sat`; carries the model text.
    Invalid(String),
    /// `unknown`, a timeout, or unrecognized output.
    Unknown(String),
    Unsupported(String),
}

fn sym(x: &str) -> String {
    format!("|{x}|")
}

fn old_sym(x: &str) -> String {
    format!("|{x}@old|")
}

fn sort(t: &DType) -> Option<&'static str> {
    match t {
        DType::Int => Some("Int"),
        DType::Bool => Some("Bool"),
        _ => None,
    }
}

fn unsupported<T>(what: impl Into<String>) -> Result<T, SmtError> {
    Err(SmtError::Unsupported(what.into()))
}

fn is_numeral(e: &Exp) -> bool {
    match e {
        Exp::IntLit(_) => true,
        Exp::UnOp(UnOp::Neg, a) => is_numeral(a),
        _ => false,
    }
}

const CUR: usize = 0;
const OLD: usize = 1;
const PREV: usize = 2;

/// Mirrors the evaluator's locals slots. Each binder gets its own SMT
/// symbol so shadowing and `Prev` snapshots resolve without capture.
struct Emitter {
    /// Visible names per slot, innermost last, with their SMT symbols.
    envs: [Vec<(Name, String)>; 3],
    view: usize,
    fresh: usize,
    nonlinear: bool,
}

impl Emitter {
    fn var(&self, x: &str) -> Result<String, SmtError> {
        match self.envs[self.view].iter().rev().find(|(y, _)| y == x) {
            Some((_, s)) => Ok(s.clone()),
            None => unsupported(format!("free variable {x}")),
        }
    }

    fn bind<T>(&mut self, names: &[Name], f: impl FnOnce(&mut Self, &[String]) -> T) -> T {
        let syms: Vec<String> = names
            .iter()
            .map(|x| {
                self.fresh += 1;
                format!("|{x}!{}|", self.fresh)
            })
            .collect();
        let env = &mut self.envs[self.view];
        let n = env.len();
        env.extend(names.iter().cloned().zip(syms.iter().cloned()));
        let out = f(self, &syms);
        self.envs[self.view].truncate(n);
        out
    }

    fn in_view<T>(&mut self, view: usize, f: impl FnOnce(&mut Self) -> T) -> T {
        let saved = std::mem::replace(&mut self.view, view);
        let out = f(self);
        self.view = saved;
        out
    }

    /// Returns the term for `e` and its definedness condition.
    fn exp(&mut self, e: &Exp) -> Result<(String, String), SmtError> {
        let t = "true".to_string();
        Ok(match e {
            Exp::IntLit(i) => {
                let s = match i.sign() {
                    Sign::Minus => format!("(- {})", i.magnitude()),
                    _ => i.to_string(),
                };
                (s, t)
            }
            Exp::BoolLit(b) => (b.to_string(), t),
            Exp::StrLit(_) => return unsupported("string literal"),
            Exp::Var(x) => (self.var(x)?, t),
            Exp::UnOp(op, a) => {
                let (a, d) = self.exp(a)?;
                let f = match op {
                    UnOp::Not => "not",
                    UnOp::Neg => "-",
                };
                (format!("({f} {a})"), d)
            }
            Exp::BinOp(op, l, r) => {
                let (a, da) = self.exp(l)?;
                let (b, db) = self.exp(r)?;
                match op {
                    BinOp::And => (format!("(and {a} {b})"), format!("(and {da} (=> {a} {db}))")),
                    BinOp::Or => (format!("(or {a} {b})"), format!("(and {da} (or {a} {db}))")),
                    BinOp::Imp => (format!("(=> {a} {b})"), format!("(and {da} (=> {a} {db}))")),
                    BinOp::Neq => (format!("(not (= {a} {b}))"), format!("(and {da} {db})")),
                    BinOp::Div | BinOp::Mod => {
                        if !is_numeral(r) {
                            self.nonlinear = true;
                        }
                        let f = if *op == BinOp::Div { "div" } else { "mod" };
                        (format!("({f} {a} {b})"), format!("(and {da} {db} (not (= {b} 0)))"))
                    }
                    BinOp::Mul => {
                        if !is_numeral(l) && !is_numeral(r) {
                            self.nonlinear = true;
                        }
                        (format!("(* {a} {b})"), format!("(and {da} {db})"))
                    }
                    _ => {
                        let f = match op {
                            BinOp::Add => "+",
                            BinOp::Sub => "-",
                            BinOp::Lt => "<",
                            BinOp::Le => "<=",
                            BinOp::Gt => ">",
                            BinOp::Ge => ">=",
                            BinOp::Eq => "=",
                            _ => unreachable!(),
                        };
                        (format!("({f} {a} {b})"), format!("(and {da} {db})"))
                    }
                }
            }
            Exp::Ite(c, x, y) => {
                let (c, dc) = self.exp(c)?;
                let (x, dx) = self.exp(x)?;
                let (y, dy) = self.exp(y)?;
                (format!("(ite {c} {x} {y})"), format!("(and {dc} (ite {c} {dx} {dy}))"))
            }
            Exp::Forall(x, ty, body) => {
                let Some(s) = sort(ty) else {
                    return unsupported(format!("quantifier over {ty}"));
                };
                let (b, d, q) = self.bind(std::slice::from_ref(x), |em, syms| {
                    em.exp(body).map(|(b, d)| (b, d, format!("(({} {s}))", syms[0])))
                })?;
                (format!("(forall {q} {b})"), format!("(forall {q} {d})"))
            }
            Exp::Let(binds, body) if binds.is_empty() => self.exp(body)?,
            Exp::Let(binds, body) => {
                let names: Vec<Name> = binds.iter().map(|(x, _)| x.clone()).collect();
                let distinct: BTreeSet<&Name> = names.iter().collect();
                if distinct.len() != names.len() {
                    return unsupported("let with repeated names");
                }
                let mut vals = Vec::new();
                let mut defs = Vec::new();
                for (_, v) in binds {
                    let (v, d) = self.exp(v)?;
                    vals.push(v);
                    defs.push(d);
                }
                let (b, d, syms) = self.bind(&names, |em, syms| em.exp(body).map(|(b, d)| (b, d, syms.to_vec())))?;
                let bs: Vec<String> = syms.iter().zip(&vals).map(|(x, v)| format!("({x} {v})")).collect();
                let bs = bs.join(" ");
                (
                    format!("(let ({bs}) {b})"),
                    format!("(and {} (let ({bs}) {d}))", defs.join(" ")),
                )
            }
            Exp::Old(a) => self.in_view(OLD, |em| em.exp(a))?,
            Exp::Prev(a) => self.in_view(PREV, |em| em.exp(a))?,
            Exp::OldHeap(a) | Exp::PrevHeap(a) => self.exp(a)?,
            Exp::SetPrev(a) => {
                let snap = self.envs[self.view].clone();
                let saved = std::mem::replace(&mut self.envs[PREV], snap);
                let r = self.exp(a);
                self.envs[PREV] = saved;
                r?
            }
            Exp::ArrLen(_) | Exp::ArrSel(..) => return unsupported("array access"),
            Exp::FunCall(f, _) => return unsupported(format!("call to {f}")),
            Exp::ForallHeap(..) => return unsupported("ForallHeap"),
        })
    }
}

/// Emits a script that is `unsat` iff `vc` evaluates to true in every
/// state over `ls`. Variables of `ls` become constants (a leading `Forall`
/// closure over them is dropped); `Old` of an entry variable becomes its `@old` constant, which
/// is asserted equal to the entry value.
pub fn smt_emit(vc: &Exp, ls: &[(Name, DType)]) -> Result<String, SmtError> {
    let body = peel_params(vc, ls);
    let params = ls;
    let mut cur = Vec::new();
    let mut old = Vec::new();
    for (x, t) in params {
        if sort(t).is_some() {
            cur.push((x.clone(), sym(x)));
            old.push((x.clone(), old_sym(x)));
        }
    }
    let mut em = Emitter {
        envs: [cur, old, Vec::new()],
        view: CUR,
        fresh: 0,
        nonlinear: false,
    };
    let (term, def) = em.exp(body)?;
    let logic = if em.nonlinear { "NIA" } else { "LIA" };
    let mut out = format!("(set-logic {logic})\n");
    for (x, t) in params {
        if let Some(s) = sort(t) {
            out.push_str(&format!("(declare-const {} {s})\n", sym(x)));
            out.push_str(&format!("(declare-const {} {s})\n", old_sym(x)));
            out.push_str(&format!("(assert (= {} {}))\n", old_sym(x), sym(x)));
        }
    }
    out.push_str(&format!("(assert (not (and {def} {term})))\n"));
    out.push_str("(check-sat)\n(get-model)\n");
    Ok(out)
}

/// Runs `solver_cmd` (whitespace-separated program and arguments) on a
/// script, killing it after `timeout`.
pub fn smt_check_script(script: &str, solver_cmd: &str, timeout: Duration) -> Result<SmtVerdict, SmtError> {
    let mut parts = solver_cmd.split_whitespace();
    let Some(prog) = parts.next() else {
        return Err(SmtError::Spawn(solver_cmd.into(), "empty command".into()));
    };
    let spawn_err = |e: std::io::Error| SmtError::Spawn(solver_cmd.into(), e.to_string());
    let mut file = tempfile::Builder::new()
        .prefix("vc-")
        .suffix(".smt2")
        .tempfile()
        .map_err(spawn_err)?;
    file.write_all(script.as_bytes()).map_err(spawn_err)?;
    file.flush().map_err(spawn_err)?;
    let mut child = Command::new(prog)
        .args(parts)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(spawn_err)?;
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    let timed_out = loop {
        match child.try_wait().map_err(spawn_err)? {
            Some(_) => break false,
            None if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                break true;
            }
            None => std::thread::sleep(Duration::from_millis(5)),
        }
    };
    let out = reader.join().unwrap_or_default();
    if timed_out {
        return Ok(SmtVerdict::Unknown(format!("timeout after {timeout:?}")));
    }
    let mut lines = out.lines().map(str::trim).filter(|l| !l.is_empty());
    Ok(match lines.next() {
        Some("unsat") => SmtVerdict::Valid,
        Some("sat") => SmtVerdict::Invalid(lines.collect::<Vec<_>>().join("\n")),
        Some(other) => SmtVerdict::Unknown(other.to_string()),
        None => SmtVerdict::Unknown("no output".into()),
    })
}

/// Checks each condition separately. Conditions outside the supported
/// fragment yield [`SmtVerdict::Unsupported`]; a solver that cannot be
/// started is an error.
pub fn smt_check(
    vcs: &[Exp],
    ls: &[(Name, DType)],
    solver_cmd: &str,
    timeout: Duration,
) -> Result<Vec<SmtVerdict>, SmtError> {
    let mut out = Vec::new();
    for vc in vcs {
        match smt_emit(vc, ls) {
            Ok(script) => out.push(smt_check_script(&script, solver_cmd, timeout)?),
            Err(SmtError::Unsupported(why)) => out.push(SmtVerdict::Unsupported(why)),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
