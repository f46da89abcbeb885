//! Fuel-based big-step interpreter over the six-part state.
//!
//! Expressions are evaluated through a [`View`] that says which snapshot
//! (current, old, or prev) supplies the locals and which supplies the heap.
//! `Old`, `Prev` and friends only change the view, so nested `Old` is
//! idempotent and no state is copied except by `SetPrev`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::ast::*;

/// Allocations longer than this fail instead of exhausting host memory.
pub const MAX_ALLOC_LEN: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Str(String),
    Arr { len: usize, loc: usize, ty: DType },
}

impl Value {
    pub fn int(i: impl Into<BigInt>) -> Value {
        Value::Int(i.into())
    }

    /// Runtime type; arrays report their element type.
    pub fn dtype(&self) -> DType {
        match self {
            Value::Int(_) => DType::Int,
            Value::Bool(_) => DType::Bool,
            Value::Str(_) => DType::Str,
            Value::Arr { ty, .. } => DType::arr(ty.clone()),
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Arr { len, loc, ty } => write!(f, "array<{ty}>@{loc}[len {len}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HArr {
    pub elems: Vec<Value>,
    pub ty: DType,
}

pub type Heap = Vec<HArr>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrResult {
    Rfail,
    Rtimeout,
}

pub type ExpResult<T> = Result<T, ErrResult>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stop {
    Sret,
    Serr(ErrResult),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StmtResult {
    Rcont,
    Rstop(Stop),
}

impl StmtResult {
    pub const FAIL: StmtResult = StmtResult::Rstop(Stop::Serr(ErrResult::Rfail));
    pub const TIMEOUT: StmtResult = StmtResult::Rstop(Stop::Serr(ErrResult::Rtimeout));
}

impl fmt::Display for StmtResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StmtResult::Rcont => write!(f, "Rcont"),
            StmtResult::Rstop(Stop::Sret) => write!(f, "Rstop Sret"),
            StmtResult::Rstop(Stop::Serr(ErrResult::Rfail)) => write!(f, "Rstop (Serr Rfail)"),
            StmtResult::Rstop(Stop::Serr(ErrResult::Rtimeout)) => {
                write!(f, "Rstop (Serr Rtimeout)")
            }
        }
    }
}

/// Association list of locals. Lookup finds the most recently prepended
/// binding; internally the most recent entry is stored last.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Locals {
    rev: Vec<(Name, Option<Value>)>,
}

impl Locals {
    /// Builds from a list in association order (first entry wins).
    pub fn from_list(list: Vec<(Name, Option<Value>)>) -> Locals {
        let mut rev = list;
        rev.reverse();
        Locals { rev }
    }

    pub fn lookup(&self, x: &str) -> Option<&Option<Value>> {
        self.rev.iter().rev().find(|(y, _)| y == x).map(|(_, v)| v)
    }

    pub fn prepend(&mut self, x: Name, v: Option<Value>) {
        self.rev.push((x, v));
    }

    /// Removes the `n` most recently prepended entries.
    pub fn drop_front(&mut self, n: usize) {
        let keep = self.rev.len().saturating_sub(n);
        self.rev.truncate(keep);
    }

    /// Overwrites the first match; false when `x` is not declared.
    pub fn set(&mut self, x: &str, v: Value) -> bool {
        match self.rev.iter_mut().rev().find(|(y, _)| y == x) {
            Some(slot) => {
                slot.1 = Some(v);
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.rev.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rev.is_empty()
    }

    /// Entries in association order.
    pub fn iter(&self) -> impl Iterator<Item = &(Name, Option<Value>)> {
        self.rev.iter().rev()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct State {
    pub clock: u64,
    pub locals: Locals,
    pub heap: Heap,
    pub locals_old: Locals,
    pub heap_old: Heap,
    pub locals_prev: Locals,
    pub heap_prev: Heap,
}

impl State {
    pub fn with_clock(clock: u64) -> State {
        State {
            clock,
            ..State::default()
        }
    }

    pub fn locals_at(&self, s: Slot) -> &Locals {
        match s {
            Slot::Cur => &self.locals,
            Slot::Old => &self.locals_old,
            Slot::Prev => &self.locals_prev,
        }
    }

    pub fn locals_at_mut(&mut self, s: Slot) -> &mut Locals {
        match s {
            Slot::Cur => &mut self.locals,
            Slot::Old => &mut self.locals_old,
            Slot::Prev => &mut self.locals_prev,
        }
    }

    pub fn heap_at(&self, s: Slot) -> &Heap {
        match s {
            Slot::Cur => &self.heap,
            Slot::Old => &self.heap_old,
            Slot::Prev => &self.heap_prev,
        }
    }

    pub fn heap_at_mut(&mut self, s: Slot) -> &mut Heap {
        match s {
            Slot::Cur => &mut self.heap,
            Slot::Old => &mut self.heap_old,
            Slot::Prev => &mut self.heap_prev,
        }
    }

    /// Contents of an array value, if its location is live.
    pub fn array_contents(&self, v: &Value) -> Option<&[Value]> {
        match v {
            Value::Arr { len: 0, .. } => Some(&[]),
            Value::Arr { loc, .. } => self.heap.get(*loc).map(|h| h.elems.as_slice()),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Cur,
    Old,
    Prev,
}

/// Which snapshot supplies locals and heap for the expression at hand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct View {
    pub locals: Slot,
    pub heap: Slot,
}

impl View {
    pub const CUR: View = View {
        locals: Slot::Cur,
        heap: Slot::Cur,
    };
}

/// Evaluation outcome inside the evaluator: a source-level error, or the
/// enumeration budget of an extended quantifier handler ran out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Halt {
    Err(ErrResult),
    Budget,
}

impl From<ErrResult> for Halt {
    fn from(e: ErrResult) -> Halt {
        Halt::Err(e)
    }
}

pub type EvalResult = Result<Value, Halt>;

const FAIL: Halt = Halt::Err(ErrResult::Rfail);

/// Position of a subexpression relative to the enclosing truth value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Pos,
    Neg,
    Neutral,
}

impl Polarity {
    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Pos => Polarity::Neg,
            Polarity::Neg => Polarity::Pos,
            Polarity::Neutral => Polarity::Neutral,
        }
    }
}

/// Gives meaning to `Forall` and `ForallHeap`. The executable interpreter
/// uses [`Exec`], which fails on both.
pub trait QuantHook: Sized {
    fn forall(ev: &mut Evaluator<'_, Self>, st: &mut State, view: View, x: &str, ty: &DType, body: &Exp) -> EvalResult {
        let _ = (ev, st, view, x, ty, body);
        Err(FAIL)
    }

    fn forall_heap(ev: &mut Evaluator<'_, Self>, st: &mut State, view: View, havoc: &[Name], body: &Exp) -> EvalResult {
        let _ = (ev, st, view, havoc, body);
        Err(FAIL)
    }
}

pub struct Exec;

impl QuantHook for Exec {}

pub fn do_uop(op: UnOp, v: &Value) -> Option<Value> {
    match (op, v) {
        (UnOp::Not, Value::Bool(b)) => Some(Value::Bool(!b)),
        (UnOp::Neg, Value::Int(i)) => Some(Value::Int(-i)),
        _ => None,
    }
}

/// Euclidean division: the remainder lies in `[0, |b|)`.
pub fn euclid_div(a: &BigInt, b: &BigInt) -> Option<BigInt> {
    if b.is_zero() {
        return None;
    }
    let (q, r) = a.div_mod_floor(b);
    // floor semantics give a remainder with the sign of b; shift for b < 0
    if r.is_negative() || (b.is_negative() && !r.is_zero()) {
        Some(q + 1)
    } else {
        Some(q)
    }
}

pub fn euclid_mod(a: &BigInt, b: &BigInt) -> Option<BigInt> {
    let q = euclid_div(a, b)?;
    Some(a - b * q)
}

pub fn do_binop(op: BinOp, v1: &Value, v2: &Value) -> Option<Value> {
    use Value::*;
    match (op, v1, v2) {
        (BinOp::Add, Int(a), Int(b)) => Some(Int(a + b)),
        (BinOp::Sub, Int(a), Int(b)) => Some(Int(a - b)),
        (BinOp::Mul, Int(a), Int(b)) => Some(Int(a * b)),
        (BinOp::Div, Int(a), Int(b)) => euclid_div(a, b).map(Int),
        (BinOp::Mod, Int(a), Int(b)) => euclid_mod(a, b).map(Int),
        (BinOp::Lt, Int(a), Int(b)) => Some(Bool(a < b)),
        (BinOp::Le, Int(a), Int(b)) => Some(Bool(a <= b)),
        (BinOp::Gt, Int(a), Int(b)) => Some(Bool(a > b)),
        (BinOp::Ge, Int(a), Int(b)) => Some(Bool(a >= b)),
        (BinOp::Eq | BinOp::Neq, _, _) => {
            let eq = match (v1, v2) {
                (Int(a), Int(b)) => a == b,
                (Bool(a), Bool(b)) => a == b,
                (Str(a), Str(b)) => a == b,
                (Arr { len: l1, loc: a, .. }, Arr { len: l2, loc: b, .. }) => a == b && l1 == l2,
                _ => return None,
            };
            Some(Bool(if op == BinOp::Eq { eq } else { !eq }))
        }
        _ => None,
    }
}

pub fn default_value(t: &DType) -> Value {
    match t {
        DType::Int => Value::int(0),
        DType::Bool => Value::Bool(false),
        DType::Str => Value::Str(String::new()),
        DType::Arr(e) => Value::Arr {
            len: 0,
            loc: 0,
            ty: (**e).clone(),
        },
    }
}

/// Expression evaluator, parameterized by the quantifier handler.
pub struct Evaluator<'p, H> {
    pub prog: &'p Program,
    pub hook: H,
    pub pol: Polarity,
}

impl<'p, H: QuantHook> Evaluator<'p, H> {
    pub fn new(prog: &'p Program, hook: H) -> Self {
        Evaluator {
            prog,
            hook,
            pol: Polarity::Pos,
        }
    }

    fn with_pol<T>(&mut self, pol: Polarity, f: impl FnOnce(&mut Self) -> T) -> T {
        let saved = self.pol;
        self.pol = pol;
        let out = f(self);
        self.pol = saved;
        out
    }

    pub fn eval_bool(&mut self, st: &mut State, view: View, e: &Exp) -> Result<bool, Halt> {
        self.eval(st, view, e)?.as_bool().ok_or(FAIL)
    }

    fn eval_int(&mut self, st: &mut State, view: View, e: &Exp) -> Result<BigInt, Halt> {
        match self.eval(st, view, e)? {
            Value::Int(i) => Ok(i),
            _ => Err(FAIL),
        }
    }

    /// Runs `f` with `binds` prepended to the view's locals, then removes them.
    pub fn with_binds<T>(
        &mut self,
        st: &mut State,
        view: View,
        binds: Vec<(Name, Option<Value>)>,
        f: impl FnOnce(&mut Self, &mut State) -> T,
    ) -> T {
        let n = binds.len();
        for (x, v) in binds {
            st.locals_at_mut(view.locals).prepend(x, v);
        }
        let out = f(self, st);
        st.locals_at_mut(view.locals).drop_front(n);
        out
    }

    pub fn eval(&mut self, st: &mut State, view: View, e: &Exp) -> EvalResult {
        let neutral = Polarity::Neutral;
        match e {
            Exp::IntLit(i) => Ok(Value::Int(i.clone())),
            Exp::BoolLit(b) => Ok(Value::Bool(*b)),
            Exp::StrLit(s) => Ok(Value::Str(s.clone())),
            Exp::Var(x) => match st.locals_at(view.locals).lookup(x) {
                Some(Some(v)) => Ok(v.clone()),
                _ => Err(FAIL),
            },
            Exp::UnOp(op, a) => {
                let pol = if *op == UnOp::Not { self.pol.flip() } else { neutral };
                let v = self.with_pol(pol, |ev| ev.eval(st, view, a))?;
                do_uop(*op, &v).ok_or(FAIL)
            }
            Exp::BinOp(op @ (BinOp::And | BinOp::Or | BinOp::Imp), a, b) => {
                let lpol = if *op == BinOp::Imp { self.pol.flip() } else { self.pol };
                let l = match self.with_pol(lpol, |ev| ev.eval_bool(st, view, a)) {
                    // An undecided left operand can still be absorbed by the
                    // right one (false for And, true for Or/Imp).
                    Err(Halt::Budget) => {
                        return match self.eval_bool(st, view, b) {
                            Ok(r) if (*op == BinOp::And) != r => Ok(Value::Bool(r)),
                            _ => Err(Halt::Budget),
                        };
                    }
                    l => l?,
                };
                let short = match op {
                    BinOp::And => !l,
                    BinOp::Or => l,
                    _ => !l,
                };
                if short {
                    return Ok(Value::Bool(*op != BinOp::And));
                }
                Ok(Value::Bool(self.eval_bool(st, view, b)?))
            }
            Exp::BinOp(op, a, b) => {
                let (l, r) = self.with_pol(neutral, |ev| {
                    let l = ev.eval(st, view, a)?;
                    let r = ev.eval(st, view, b)?;
                    Ok::<_, Halt>((l, r))
                })?;
                do_binop(*op, &l, &r).ok_or(FAIL)
            }
            Exp::Ite(c, t, f) => {
                let c = self.with_pol(neutral, |ev| ev.eval_bool(st, view, c))?;
                self.eval(st, view, if c { t } else { f })
            }
            Exp::ArrLen(a) => match self.with_pol(neutral, |ev| ev.eval(st, view, a))? {
                Value::Arr { len, .. } => Ok(Value::int(len)),
                _ => Err(FAIL),
            },
            Exp::ArrSel(a, i) => {
                let (arr, idx) = self.with_pol(neutral, |ev| {
                    let arr = ev.eval(st, view, a)?;
                    let idx = ev.eval_int(st, view, i)?;
                    Ok::<_, Halt>((arr, idx))
                })?;
                let Value::Arr { len, loc, .. } = arr else {
                    return Err(FAIL);
                };
                let k = idx.to_usize().filter(|k| *k < len).ok_or(FAIL)?;
                st.heap_at(view.heap)
                    .get(loc)
                    .and_then(|h| h.elems.get(k))
                    .cloned()
                    .ok_or(FAIL)
            }
            Exp::FunCall(f, args) => {
                let vals = self.with_pol(neutral, |ev| {
                    args.iter().map(|a| ev.eval(st, view, a)).collect::<Result<Vec<_>, _>>()
                })?;
                let func = self.prog.function(f).ok_or(FAIL)?;
                if func.ins.len() != vals.len() {
                    return Err(FAIL);
                }
                if st.clock == 0 {
                    return Err(Halt::Err(ErrResult::Rtimeout));
                }
                st.clock -= 1;
                let params = Locals::from_list(
                    func.ins
                        .iter()
                        .zip(vals)
                        .map(|((x, _), v)| (x.clone(), Some(v)))
                        .collect(),
                );
                let saved = std::mem::replace(st.locals_at_mut(view.locals), params);
                let out = self.with_pol(neutral, |ev| ev.eval(st, view, &func.body));
                *st.locals_at_mut(view.locals) = saved;
                out
            }
            Exp::Let(binds, body) => {
                for (k, (x, _)) in binds.iter().enumerate() {
                    if binds[..k].iter().any(|(y, _)| y == x) {
                        return Err(FAIL);
                    }
                }
                let vals = self.with_pol(neutral, |ev| {
                    binds
                        .iter()
                        .map(|(x, be)| Ok((x.clone(), Some(ev.eval(st, view, be)?))))
                        .collect::<Result<Vec<_>, Halt>>()
                })?;
                self.with_binds(st, view, vals, |ev, st| ev.eval(st, view, body))
            }
            Exp::Old(a) => self.eval(
                st,
                View {
                    locals: Slot::Old,
                    heap: Slot::Old,
                },
                a,
            ),
            Exp::OldHeap(a) => self.eval(
                st,
                View {
                    heap: Slot::Old,
                    ..view
                },
                a,
            ),
            Exp::Prev(a) => self.eval(
                st,
                View {
                    locals: Slot::Prev,
                    heap: Slot::Prev,
                },
                a,
            ),
            Exp::PrevHeap(a) => self.eval(
                st,
                View {
                    heap: Slot::Prev,
                    ..view
                },
                a,
            ),
            Exp::SetPrev(a) => {
                let new_locals = st.locals_at(view.locals).clone();
                let new_heap = st.heap_at(view.heap).clone();
                let old_locals = std::mem::replace(&mut st.locals_prev, new_locals);
                let old_heap = std::mem::replace(&mut st.heap_prev, new_heap);
                let out = self.eval(st, view, a);
                st.locals_prev = old_locals;
                st.heap_prev = old_heap;
                out
            }
            Exp::Forall(x, ty, body) => H::forall(self, st, view, x, ty, body),
            Exp::ForallHeap(havoc, body) => H::forall_heap(self, st, view, havoc, body),
        }
    }
}

/// Evaluates `e` in `st`. The returned state differs from `st` at most in
/// its clock.
pub fn evaluate_exp(mut st: State, prog: &Program, e: &Exp) -> (State, ExpResult<Value>) {
    let mut ev = Evaluator::new(prog, Exec);
    let r = ev.eval(&mut st, View::CUR, e);
    let r = r.map_err(|h| match h {
        Halt::Err(e) => e,
        Halt::Budget => ErrResult::Rfail,
    });
    (st, r)
}

/// Statement interpreter. Tracks call depth so the caller can observe the
/// locals of `Main` at the point where it returns.
pub struct Interp<'p> {
    ev: Evaluator<'p, Exec>,
    depth: usize,
    /// Locals of the outermost method frame when it executed `Return`.
    pub main_locals: Option<Locals>,
}

impl<'p> Interp<'p> {
    pub fn new(prog: &'p Program) -> Self {
        Interp {
            ev: Evaluator::new(prog, Exec),
            depth: 0,
            main_locals: None,
        }
    }

    fn exp(&mut self, st: &mut State, e: &Exp) -> Result<Value, ErrResult> {
        self.ev.eval(st, View::CUR, e).map_err(|h| match h {
            Halt::Err(e) => e,
            Halt::Budget => ErrResult::Rfail,
        })
    }

    pub fn stmt(&mut self, st: &mut State, s: &Stmt) -> StmtResult {
        match self.stmt_inner(st, s) {
            Ok(r) => r,
            Err(e) => StmtResult::Rstop(Stop::Serr(e)),
        }
    }

    fn stmt_inner(&mut self, st: &mut State, s: &Stmt) -> Result<StmtResult, ErrResult> {
        use ErrResult::*;
        match s {
            Stmt::Skip => Ok(StmtResult::Rcont),
            Stmt::Return => {
                if self.depth == 1 {
                    self.main_locals = Some(st.locals.clone());
                }
                Ok(StmtResult::Rstop(Stop::Sret))
            }
            Stmt::Assert(e) => match self.exp(st, e)? {
                Value::Bool(true) => Ok(StmtResult::Rcont),
                _ => Err(Rfail),
            },
            Stmt::Then(a, b) => match self.stmt(st, a) {
                StmtResult::Rcont => Ok(self.stmt(st, b)),
                stop => Ok(stop),
            },
            Stmt::If(g, t, f) => match self.exp(st, g)? {
                Value::Bool(c) => Ok(self.stmt(st, if c { t } else { f })),
                _ => Err(Rfail),
            },
            Stmt::Dec(binds, scope) => {
                let mut vals = Vec::with_capacity(binds.len());
                for b in binds {
                    let v = match &b.init {
                        Some(e) => Some(self.exp(st, e)?),
                        None => None,
                    };
                    vals.push((b.name.clone(), v));
                }
                let n = vals.len();
                for (x, v) in vals {
                    st.locals.prepend(x, v);
                }
                let r = self.stmt(st, scope);
                st.locals.drop_front(n);
                Ok(r)
            }
            Stmt::Assign(pairs) => {
                let mut vals = Vec::with_capacity(pairs.len());
                for (_, rhs) in pairs {
                    vals.push(self.rhs(st, rhs)?);
                }
                for ((lhs, _), v) in pairs.iter().zip(vals) {
                    match lhs {
                        Lhs::Var(x) => {
                            if !st.locals.set(x, v) {
                                return Err(Rfail);
                            }
                        }
                        Lhs::ArrSel(a, i) => {
                            let Value::Arr { len, loc, ty } = self.exp(st, a)? else {
                                return Err(Rfail);
                            };
                            let Value::Int(idx) = self.exp(st, i)? else {
                                return Err(Rfail);
                            };
                            let k = idx.to_usize().filter(|k| *k < len).ok_or(Rfail)?;
                            if v.dtype() != ty {
                                return Err(Rfail);
                            }
                            let cell = st.heap.get_mut(loc).and_then(|h| h.elems.get_mut(k)).ok_or(Rfail)?;
                            *cell = v;
                        }
                    }
                }
                Ok(StmtResult::Rcont)
            }
            Stmt::While(w) => loop {
                if st.clock == 0 {
                    return Err(Rtimeout);
                }
                st.clock -= 1;
                match self.exp(st, &w.guard)? {
                    Value::Bool(false) => return Ok(StmtResult::Rcont),
                    Value::Bool(true) => match self.stmt(st, &w.body) {
                        StmtResult::Rcont => continue,
                        stop => return Ok(stop),
                    },
                    _ => return Err(Rfail),
                }
            },
            Stmt::MetCall(lhss, f, args) => self.call(st, lhss, f, args),
        }
    }

    fn rhs(&mut self, st: &mut State, rhs: &Rhs) -> Result<Value, ErrResult> {
        match rhs {
            Rhs::Exp(e) => self.exp(st, e),
            Rhs::ArrAlloc(ty, len) => {
                let Value::Int(n) = self.exp(st, len)? else {
                    return Err(ErrResult::Rfail);
                };
                let n = n.to_usize().filter(|n| *n <= MAX_ALLOC_LEN).ok_or(ErrResult::Rfail)?;
                let loc = st.heap.len();
                st.heap.push(HArr {
                    elems: vec![default_value(ty); n],
                    ty: ty.clone(),
                });
                Ok(Value::Arr {
                    len: n,
                    loc,
                    ty: ty.clone(),
                })
            }
        }
    }

    fn call(&mut self, st: &mut State, lhss: &[Name], f: &str, args: &[Exp]) -> Result<StmtResult, ErrResult> {
        use ErrResult::*;
        let m = self.ev.prog.method(f).ok_or(Rfail)?;
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.exp(st, a)?);
        }
        if vals.len() != m.ins.len() || lhss.len() != m.outs.len() {
            return Err(Rfail);
        }
        let names: Vec<&Name> = m.ins.iter().chain(m.outs.iter()).map(|(x, _)| x).collect();
        for (k, x) in names.iter().enumerate() {
            if names[..k].contains(x) {
                return Err(Rfail);
            }
        }
        let mut frame: Vec<(Name, Option<Value>)> =
            m.ins.iter().zip(vals).map(|((x, _), v)| (x.clone(), Some(v))).collect();
        frame.extend(m.outs.iter().map(|(x, _)| (x.clone(), None)));
        let frame = Locals::from_list(frame);

        let caller_locals = std::mem::replace(&mut st.locals, frame.clone());
        let caller_old = std::mem::replace(&mut st.locals_old, frame);
        let caller_heap_old = std::mem::replace(&mut st.heap_old, st.heap.clone());
        let restore = |st: &mut State, l, o, h| {
            st.locals = l;
            st.locals_old = o;
            st.heap_old = h;
        };
        if st.clock == 0 {
            restore(st, caller_locals, caller_old, caller_heap_old);
            return Err(Rtimeout);
        }
        st.clock -= 1;

        self.depth += 1;
        let r = self.stmt(st, &m.body);
        self.depth -= 1;
        let outs: Result<Vec<Value>, ErrResult> = match r {
            StmtResult::Rstop(Stop::Sret) => m
                .outs
                .iter()
                .map(|(x, _)| st.locals.lookup(x).cloned().flatten().ok_or(Rfail))
                .collect(),
            StmtResult::Rcont => Err(Rfail),
            StmtResult::Rstop(Stop::Serr(e)) => Err(e),
        };
        restore(st, caller_locals, caller_old, caller_heap_old);
        for (x, v) in lhss.iter().zip(outs?) {
            if !st.locals.set(x, v) {
                return Err(Rfail);
            }
        }
        Ok(StmtResult::Rcont)
    }
}

pub fn evaluate_stmt(mut st: State, prog: &Program, s: &Stmt) -> (State, StmtResult) {
    let mut it = Interp::new(prog);
    let r = it.stmt(&mut st, s);
    (st, r)
}

/// Result of running a whole program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub state: State,
    pub result: StmtResult,
    /// Locals of `Main` when it returned (absent if it never returned).
    pub main_locals: Option<Locals>,
}

pub fn run_program(fuel: u64, p: &Program) -> RunOutcome {
    let mut st = State::with_clock(fuel);
    if !p.has_distinct_names() {
        return RunOutcome {
            state: st,
            result: StmtResult::FAIL,
            main_locals: None,
        };
    }
    let mut it = Interp::new(p);
    let result = it.stmt(&mut st, &Stmt::MetCall(vec![], "Main".into(), vec![]));
    RunOutcome {
        state: st,
        result,
        main_locals: it.main_locals,
    }
}

pub fn evaluate_program(fuel: u64, p: &Program) -> (State, StmtResult) {
    let o = run_program(fuel, p);
    (o.state, o.result)
}
