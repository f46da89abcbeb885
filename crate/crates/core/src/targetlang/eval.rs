//! Fuel-based interpreter for the core language.
//!
//! Evaluation is call-by-value and right-to-left for applications, tuples
//! and primitive operands. Each application costs one clock tick. Calls in
//! tail position reuse the interpreter loop instead of recursing, so a
//! compiled `while` runs in constant host stack.

use std::fmt;
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::syntax::*;
use crate::semantics::{euclid_div, euclid_mod, MAX_ALLOC_LEN};

#[derive(Clone)]
pub enum TVal<'a> {
    Int(BigInt),
    Bool(bool),
    Str(String),
    Unit,
    Loc(usize),
    Tuple(Vec<TVal<'a>>),
    Closure(TEnv<'a>, &'a str, &'a TExp),
    RecClosure(TEnv<'a>, &'a [TDef], usize),
    Exn(&'a str),
}

impl TVal<'_> {
    pub fn int(i: impl Into<BigInt>) -> Self {
        TVal::Int(i.into())
    }
}

impl fmt::Debug for TVal<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TVal::Int(i) => write!(f, "{i}"),
            TVal::Bool(b) => write!(f, "{b}"),
            TVal::Str(s) => write!(f, "{s:?}"),
            TVal::Unit => write!(f, "()"),
            TVal::Loc(l) => write!(f, "<loc {l}>"),
            TVal::Tuple(vs) => {
                write!(f, "(")?;
                for (k, v) in vs.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v:?}")?;
                }
                write!(f, ")")
            }
            TVal::Closure(_, x, _) => write!(f, "<fn {x}>"),
            TVal::RecClosure(_, defs, i) => write!(f, "<fun {}>", defs[*i].fname),
            TVal::Exn(n) => write!(f, "<exn {n}>"),
        }
    }
}

impl fmt::Display for TVal<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl PartialEq for TVal<'_> {
    /// Structural equality on data; functions are never equal.
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (TVal::Int(a), TVal::Int(b)) => a == b,
            (TVal::Bool(a), TVal::Bool(b)) => a == b,
            (TVal::Str(a), TVal::Str(b)) => a == b,
            (TVal::Unit, TVal::Unit) => true,
            (TVal::Loc(a), TVal::Loc(b)) => a == b,
            (TVal::Tuple(a), TVal::Tuple(b)) => a == b,
            (TVal::Exn(a), TVal::Exn(b)) => a == b,
            _ => false,
        }
    }
}

/// Persistent environment as a shared linked list.
#[derive(Clone, Default)]
pub struct TEnv<'a>(Option<Rc<EnvNode<'a>>>);

struct EnvNode<'a> {
    name: &'a str,
    val: TVal<'a>,
    next: TEnv<'a>,
}

impl<'a> TEnv<'a> {
    pub fn empty() -> Self {
        TEnv(None)
    }

    pub fn bind(&self, name: &'a str, val: TVal<'a>) -> Self {
        TEnv(Some(Rc::new(EnvNode {
            name,
            val,
            next: self.clone(),
        })))
    }

    pub fn lookup(&self, name: &str) -> Option<&TVal<'a>> {
        let mut cur = &self.0;
        while let Some(node) = cur {
            if node.name == name {
                return Some(&node.val);
            }
            cur = &node.next.0;
        }
        None
    }

    fn bind_rec(&self, defs: &'a [TDef]) -> Self {
        let mut env = self.clone();
        for (i, d) in defs.iter().enumerate() {
            env = env.bind(&d.fname, TVal::RecClosure(self.clone(), defs, i));
        }
        env
    }
}

impl Drop for EnvNode<'_> {
    // unlink iteratively so long chains do not overflow the stack
    fn drop(&mut self) {
        let mut next = self.next.0.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut node) => next = node.next.0.take(),
                Err(_) => break,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell<'a> {
    Ref(TVal<'a>),
    Arr(Vec<TVal<'a>>),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TStore<'a> {
    pub cells: Vec<Cell<'a>>,
    pub clock: u64,
}

impl<'a> TStore<'a> {
    pub fn with_clock(clock: u64) -> Self {
        TStore {
            cells: Vec::new(),
            clock,
        }
    }

    pub fn alloc(&mut self, c: Cell<'a>) -> usize {
        self.cells.push(c);
        self.cells.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TRes<'a> {
    RVal(TVal<'a>),
    RRaise(String),
    RTimeout,
    RCrash,
    /// The host stack limit of the evaluator was reached.
    RDepth,
}

/// Abnormal outcomes inside the evaluator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TErr {
    Raise(String),
    Timeout,
    Crash,
    Depth,
}

impl<'a> From<Result<TVal<'a>, TErr>> for TRes<'a> {
    fn from(r: Result<TVal<'a>, TErr>) -> Self {
        match r {
            Ok(v) => TRes::RVal(v),
            Err(TErr::Raise(n)) => TRes::RRaise(n),
            Err(TErr::Timeout) => TRes::RTimeout,
            Err(TErr::Crash) => TRes::RCrash,
            Err(TErr::Depth) => TRes::RDepth,
        }
    }
}

type R<'a> = Result<TVal<'a>, TErr>;

fn as_int(v: TVal<'_>) -> Result<BigInt, TErr> {
    match v {
        TVal::Int(i) => Ok(i),
        _ => Err(TErr::Crash),
    }
}

fn as_loc(v: TVal<'_>) -> Result<usize, TErr> {
    match v {
        TVal::Loc(l) => Ok(l),
        _ => Err(TErr::Crash),
    }
}

fn prim<'a>(op: TPrimOp, a: TVal<'a>, b: TVal<'a>) -> R<'a> {
    use TVal::*;
    if op == TPrimOp::Eq {
        let ok = matches!(
            (&a, &b),
            (Int(_), Int(_))
                | (Bool(_), Bool(_))
                | (Str(_), Str(_))
                | (Unit, Unit)
                | (Loc(_), Loc(_))
                | (Tuple(_), Tuple(_))
        );
        if !ok || !comparable(&a) {
            return Err(TErr::Crash);
        }
        return Ok(Bool(a == b));
    }
    let (x, y) = (as_int(a)?, as_int(b)?);
    Ok(match op {
        TPrimOp::Add => Int(x + y),
        TPrimOp::Sub => Int(x - y),
        TPrimOp::Mul => Int(x * y),
        TPrimOp::Div => Int(euclid_div(&x, &y).ok_or(TErr::Crash)?),
        TPrimOp::Mod => Int(euclid_mod(&x, &y).ok_or(TErr::Crash)?),
        TPrimOp::Lt => Bool(x < y),
        TPrimOp::Le => Bool(x <= y),
        TPrimOp::Gt => Bool(x > y),
        TPrimOp::Ge => Bool(x >= y),
        TPrimOp::Eq => unreachable!(),
    })
}

fn comparable(v: &TVal<'_>) -> bool {
    match v {
        TVal::Closure(..) | TVal::RecClosure(..) | TVal::Exn(_) => false,
        TVal::Tuple(vs) => vs.iter().all(comparable),
        _ => true,
    }
}

/// Host stack the evaluator may use before giving up with
/// [`TErr::Depth`]. Deeply recursive programs need a thread with a
/// larger stack than this (see [`crate::util::pool`]).
pub const STACK_LIMIT: usize = 512 * 1024 * 1024;

pub struct TInterp<'a, 's> {
    pub store: &'s mut TStore<'a>,
    base: usize,
    pub stack_limit: usize,
}

#[inline(never)]
fn stack_pos() -> usize {
    let marker = 0u8;
    std::hint::black_box(&marker) as *const u8 as usize
}

impl<'a, 's> TInterp<'a, 's> {
    pub fn new(store: &'s mut TStore<'a>) -> Self {
        TInterp {
            store,
            base: stack_pos(),
            stack_limit: STACK_LIMIT,
        }
    }
}

impl<'a> TInterp<'a, '_> {
    fn tick(&mut self) -> Result<(), TErr> {
        if self.store.clock == 0 {
            return Err(TErr::Timeout);
        }
        self.store.clock -= 1;
        Ok(())
    }

    /// Applies a function value to an argument, paying one tick.
    pub fn apply(&mut self, f: TVal<'a>, arg: TVal<'a>) -> R<'a> {
        let (env, body) = self.enter(f, arg)?;
        self.eval(&env, body)
    }

    fn enter(&mut self, f: TVal<'a>, arg: TVal<'a>) -> Result<(TEnv<'a>, &'a TExp), TErr> {
        self.tick()?;
        match f {
            TVal::Closure(env, x, body) => Ok((env.bind(x, arg), body)),
            TVal::RecClosure(env, defs, i) => {
                let d = &defs[i];
                Ok((env.bind_rec(defs).bind(&d.param, arg), &d.body))
            }
            _ => Err(TErr::Crash),
        }
    }

    pub fn eval(&mut self, env: &TEnv<'a>, e: &'a TExp) -> R<'a> {
        if self.base.saturating_sub(stack_pos()) > self.stack_limit {
            return Err(TErr::Depth);
        }
        let mut env = env.clone();
        let mut e = e;
        loop {
            match e {
                TExp::Int(i) => return Ok(TVal::Int(i.clone())),
                TExp::Bool(b) => return Ok(TVal::Bool(*b)),
                TExp::Str(s) => return Ok(TVal::Str(s.clone())),
                TExp::Unit => return Ok(TVal::Unit),
                TExp::Var(x) => return env.lookup(x).cloned().ok_or(TErr::Crash),
                TExp::Fun(x, body) => return Ok(TVal::Closure(env, x, body)),
                TExp::App(f, a) => {
                    let av = self.eval(&env, a)?;
                    let fv = self.eval(&env, f)?;
                    let (env2, body) = self.enter(fv, av)?;
                    env = env2;
                    e = body;
                }
                TExp::Letrec(defs, scope) => {
                    env = env.bind_rec(defs);
                    e = scope;
                }
                TExp::Let(x, rhs, body) => {
                    let v = self.eval(&env, rhs)?;
                    env = env.bind(x, v);
                    e = body;
                }
                TExp::If(c, t, f) => match self.eval(&env, c)? {
                    TVal::Bool(true) => e = t,
                    TVal::Bool(false) => e = f,
                    _ => return Err(TErr::Crash),
                },
                TExp::Seq(a, b) => {
                    self.eval(&env, a)?;
                    e = b;
                }
                TExp::Ref(x) => {
                    let v = self.eval(&env, x)?;
                    return Ok(TVal::Loc(self.store.alloc(Cell::Ref(v))));
                }
                TExp::Deref(x) => {
                    let l = as_loc(self.eval(&env, x)?)?;
                    return match self.store.cells.get(l) {
                        Some(Cell::Ref(v)) => Ok(v.clone()),
                        _ => Err(TErr::Crash),
                    };
                }
                TExp::Assign(l, r) => {
                    let v = self.eval(&env, r)?;
                    let l = as_loc(self.eval(&env, l)?)?;
                    return match self.store.cells.get_mut(l) {
                        Some(Cell::Ref(slot)) => {
                            *slot = v;
                            Ok(TVal::Unit)
                        }
                        _ => Err(TErr::Crash),
                    };
                }
                TExp::ArrAlloc(n, init) => {
                    let v = self.eval(&env, init)?;
                    let n = as_int(self.eval(&env, n)?)?;
                    let n = n.to_usize().filter(|n| *n <= MAX_ALLOC_LEN).ok_or(TErr::Crash)?;
                    return Ok(TVal::Loc(self.store.alloc(Cell::Arr(vec![v; n]))));
                }
                TExp::ArrSub(a, i) => {
                    let i = as_int(self.eval(&env, i)?)?;
                    let l = as_loc(self.eval(&env, a)?)?;
                    return match self.store.cells.get(l) {
                        Some(Cell::Arr(vs)) => i.to_usize().and_then(|k| vs.get(k)).cloned().ok_or(TErr::Crash),
                        _ => Err(TErr::Crash),
                    };
                }
                TExp::ArrUpd(a, i, x) => {
                    let v = self.eval(&env, x)?;
                    let i = as_int(self.eval(&env, i)?)?;
                    let l = as_loc(self.eval(&env, a)?)?;
                    return match self.store.cells.get_mut(l) {
                        Some(Cell::Arr(vs)) => {
                            let slot = i.to_usize().and_then(|k| vs.get_mut(k)).ok_or(TErr::Crash)?;
                            *slot = v;
                            Ok(TVal::Unit)
                        }
                        _ => Err(TErr::Crash),
                    };
                }
                TExp::Tuple(es) => {
                    let mut vs = Vec::with_capacity(es.len());
                    for x in es.iter().rev() {
                        vs.push(self.eval(&env, x)?);
                    }
                    vs.reverse();
                    return Ok(TVal::Tuple(vs));
                }
                TExp::Proj(i, x) => {
                    return match self.eval(&env, x)? {
                        TVal::Tuple(mut vs) if *i < vs.len() => Ok(vs.swap_remove(*i)),
                        _ => Err(TErr::Crash),
                    }
                }
                TExp::Raise(n) => {
                    return match env.lookup(n) {
                        Some(TVal::Exn(_)) => Err(TErr::Raise(n.clone())),
                        _ => Err(TErr::Crash),
                    }
                }
                TExp::Handle(body, n, h) => match self.eval(&env, body) {
                    Err(TErr::Raise(m)) if m == *n => e = h,
                    other => return other,
                },
                TExp::Prim(op, a, b) => {
                    let bv = self.eval(&env, b)?;
                    let av = self.eval(&env, a)?;
                    return prim(*op, av, bv);
                }
                TExp::Neg(x) => return Ok(TVal::Int(-as_int(self.eval(&env, x)?)?)),
                TExp::Not(x) => {
                    return match self.eval(&env, x)? {
                        TVal::Bool(b) => Ok(TVal::Bool(!b)),
                        _ => Err(TErr::Crash),
                    }
                }
            }
        }
    }
}

pub fn t_evaluate<'a>(store: &mut TStore<'a>, env: &TEnv<'a>, e: &'a TExp) -> TRes<'a> {
    TInterp::new(store).eval(env, e).into()
}

/// Processes top-level declarations in order, stopping at the first
/// abnormal result.
pub fn t_evaluate_decs<'a>(store: &mut TStore<'a>, env: &TEnv<'a>, decs: &'a [TDec]) -> (TEnv<'a>, TRes<'a>) {
    let mut env = env.clone();
    let mut it = TInterp::new(store);
    for d in decs {
        match d {
            TDec::Exn(n) => env = env.bind(n, TVal::Exn(n)),
            TDec::Letrec(defs) => env = env.bind_rec(defs),
            TDec::Val(x, e) => match it.eval(&env, e) {
                Ok(v) => env = env.bind(x, v),
                Err(err) => return (env, Err(err).into()),
            },
        }
    }
    (env, TRes::RVal(TVal::Unit))
}
