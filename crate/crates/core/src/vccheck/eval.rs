//! Bounded evaluation of verification conditions.
//!
//! `Forall` chains are enumerated over candidate values. Integer binders are
//! bounded by comparisons found in the antecedent of the innermost
//! implication, so guarded quantifiers such as `forall i :: 0 <= i < n ==> P`
//! are decided exactly. Unguarded integer binders fall back to the budget
//! range, which makes the result only bounded. `ForallHeap` is evaluated over
//! a finite set of heap variants.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ast::{BinOp, DType, Exp, Name, Program, UnOp};
use crate::semantics::{
    default_value, EvalResult, Evaluator, HArr, Halt, Heap, Polarity, QuantHook, State, Value, View,
};

/// Element pool for integer array contents and heap havoc.
pub const INT_POOL: [i64; 5] = [-2, -1, 0, 1, 2];

/// Largest guard-derived integer range enumerated exhaustively.
pub const EXACT_RANGE_MAX: u64 = 10_000;

/// Values tried for an integer binder whose range is not fully known.
pub const INEXACT_INT_SAMPLES: usize = 24;

const FAIL: Halt = Halt::Err(crate::semantics::ErrResult::Rfail);

/// Enumeration limits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub int_lo: i64,
    pub int_hi: i64,
    pub arr_len_max: usize,
    pub heap_variants_max: usize,
    pub states_max: usize,
    /// Quantifier-free leaves evaluated per condition before enumeration
    /// stops early.
    pub leaves_max: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            int_lo: -200,
            int_hi: 200,
            arr_len_max: 4,
            heap_variants_max: 8,
            states_max: 500,
            leaves_max: 4000,
            seed: 0,
        }
    }
}

impl Budget {
    pub fn validate(&self) -> Result<(), String> {
        if self.int_lo > self.int_hi {
            return Err(format!("empty int range {}..{}", self.int_lo, self.int_hi));
        }
        if self.arr_len_max == 0 || self.heap_variants_max == 0 || self.states_max == 0 || self.leaves_max == 0 {
            return Err("budget maxima must be at least 1".into());
        }
        Ok(())
    }

    fn span(&self) -> BigInt {
        BigInt::from(self.int_hi) - BigInt::from(self.int_lo) + 1
    }
}

/// One quantifier instantiation on the path to a false result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub quantifier: String,
    pub value: String,
}

/// Quantifier handler for [`Evaluator`].
pub struct VcHook {
    budget: Budget,
    rng: ChaCha8Rng,
    trail: Vec<Witness>,
    bounded: bool,
    leaves: usize,
}

impl VcHook {
    pub fn new(budget: &Budget) -> VcHook {
        VcHook {
            budget: budget.clone(),
            rng: ChaCha8Rng::seed_from_u64(budget.seed),
            trail: Vec::new(),
            bounded: false,
            leaves: 0,
        }
    }
}

/// Result of [`eval_vc`]. `bounded` is set when some universal in positive
/// position was truncated and still counted as true.
#[derive(Clone, Debug)]
pub struct VcEval {
    pub result: EvalResult,
    pub bounded: bool,
    pub trail: Vec<Witness>,
}

/// Evaluates `e` in `st`. Apart from the clock, `st` is left as it was.
pub fn eval_vc(st: &mut State, prog: &Program, e: &Exp, b: &Budget) -> VcEval {
    let mut ev = Evaluator::new(prog, VcHook::new(b));
    let result = ev.eval(st, View::CUR, e);
    VcEval {
        result,
        bounded: ev.hook.bounded,
        trail: std::mem::take(&mut ev.hook.trail),
    }
}

type Ctx<'e> = Vec<&'e [(Name, Exp)]>;

/// A conjunct of an antecedent together with the `Let` layers around it.
#[derive(Clone)]
struct Guard<'e> {
    ctx: Ctx<'e>,
    e: &'e Exp,
}

fn collect_guards<'e>(a: &'e Exp, ctx: &mut Ctx<'e>, out: &mut Vec<Guard<'e>>) {
    match a {
        Exp::BinOp(BinOp::And, l, r) => {
            collect_guards(l, ctx, out);
            collect_guards(r, ctx, out);
        }
        Exp::Let(binds, body) => {
            ctx.push(binds);
            collect_guards(body, ctx, out);
            ctx.pop();
        }
        _ => out.push(Guard { ctx: ctx.clone(), e: a }),
    }
}

/// Peels a chain of nested `Forall`s with distinct binder names.
fn peel_chain<'e>(x: &str, ty: &DType, body: &'e Exp) -> (Vec<(Name, DType)>, &'e Exp) {
    let mut binders = vec![(x.to_string(), ty.clone())];
    let mut inner = body;
    while let Exp::Forall(y, t, b) = inner {
        if binders.iter().any(|(z, _)| z == y) {
            break;
        }
        binders.push((y.clone(), t.clone()));
        inner = b;
    }
    (binders, inner)
}

fn guards_of(inner: &Exp) -> Vec<Guard<'_>> {
    let mut out = Vec::new();
    if let Exp::BinOp(BinOp::Imp, a, _) = inner {
        collect_guards(a, &mut Vec::new(), &mut out);
    }
    out
}

/// True if `e` reads one of `names` from the active view's locals.
/// Bodies of `Old` and `Prev` read another frame and are skipped; a
/// `SetPrev` body is checked in full since its `Prev` sees the active frame.
fn mentions_any(e: &Exp, names: &BTreeSet<Name>) -> bool {
    fn go(e: &Exp, names: &BTreeSet<Name>, bound: &mut Vec<Name>) -> bool {
        match e {
            Exp::Var(x) => names.contains(x) && !bound.contains(x),
            Exp::Old(_) | Exp::Prev(_) => false,
            Exp::SetPrev(body) => body.free_vars().iter().any(|x| names.contains(x) && !bound.contains(x)),
            Exp::Forall(x, _, body) => {
                bound.push(x.clone());
                let r = go(body, names, bound);
                bound.pop();
                r
            }
            Exp::Let(binds, body) => {
                if binds.iter().any(|(_, v)| go(v, names, bound)) {
                    return true;
                }
                let n = bound.len();
                bound.extend(binds.iter().map(|(x, _)| x.clone()));
                let r = go(body, names, bound);
                bound.truncate(n);
                r
            }
            Exp::ForallHeap(havoc, body) => {
                havoc.iter().any(|x| names.contains(x) && !bound.contains(x)) || go(body, names, bound)
            }
            _ => e.children().into_iter().any(|c| go(c, names, bound)),
        }
    }
    !names.is_empty() && go(e, names, &mut Vec::new())
}

/// True if `e` denotes the variable `x` of the enclosing scope, looking
/// through `Let` layers that merely rename.
fn denotes(ctx: &[&[(Name, Exp)]], e: &Exp, x: &str) -> bool {
    let Exp::Var(y) = e else {
        return false;
    };
    let mut y: &str = y;
    for layer in ctx.iter().rev() {
        if let Some((_, v)) = layer.iter().find(|(n, _)| n == y) {
            match v {
                Exp::Var(z) => y = z,
                _ => return false,
            }
        }
    }
    y == x
}

/// Evaluates `e` under the guard's `Let` layers, provided it does not
/// depend on any name in `taint`. Returns `None` when it does or when
/// evaluation does not produce a value.
fn eval_side<H: QuantHook>(
    ev: &mut Evaluator<'_, H>,
    st: &mut State,
    view: View,
    ctx: &[&[(Name, Exp)]],
    taint: &BTreeSet<Name>,
    e: &Exp,
) -> Option<Value> {
    match ctx.split_first() {
        None => {
            if mentions_any(e, taint) {
                return None;
            }
            let saved = ev.pol;
            ev.pol = Polarity::Neutral;
            let v = ev.eval(st, view, e).ok();
            ev.pol = saved;
            v
        }
        Some((layer, rest)) => {
            let mut inner = taint.clone();
            let mut binds = Vec::new();
            for (y, v) in layer.iter() {
                let val = if mentions_any(v, taint) {
                    None
                } else {
                    let saved = ev.pol;
                    ev.pol = Polarity::Neutral;
                    let r = ev.eval(st, view, v).ok();
                    ev.pol = saved;
                    r
                };
                if val.is_some() {
                    inner.remove(y);
                } else {
                    inner.insert(y.clone());
                }
                binds.push((y.clone(), val));
            }
            ev.with_binds(st, view, binds, |ev, st| eval_side(ev, st, view, rest, &inner, e))
        }
    }
}

/// Comparison `l op r`, with negated comparisons normalized.
fn relation(g: &Exp) -> Option<(BinOp, &Exp, &Exp)> {
    match g {
        Exp::BinOp(op @ (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq), l, r) => Some((*op, l, r)),
        Exp::UnOp(UnOp::Not, inner) => match &**inner {
            Exp::BinOp(op, l, r) => {
                let neg = match op {
                    BinOp::Lt => BinOp::Ge,
                    BinOp::Le => BinOp::Gt,
                    BinOp::Gt => BinOp::Le,
                    BinOp::Ge => BinOp::Lt,
                    BinOp::Neq => BinOp::Eq,
                    _ => return None,
                };
                Some((neg, l, r))
            }
            _ => None,
        },
        _ => None,
    }
}

fn mirror(op: BinOp) -> BinOp {
    match op {
        BinOp::Lt => BinOp::Gt,
        BinOp::Le => BinOp::Ge,
        BinOp::Gt => BinOp::Lt,
        BinOp::Ge => BinOp::Le,
        o => o,
    }
}

/// Orients a relation so that `x` (as seen through `side`) is on the left.
fn oriented<'e>(g: &Guard<'e>, side: impl Fn(&Exp) -> bool) -> Option<(BinOp, &'e Exp)> {
    let (op, l, r) = relation(g.e)?;
    if side(l) {
        Some((op, r))
    } else if side(r) {
        Some((mirror(op), l))
    } else {
        None
    }
}

#[derive(Clone, Debug, Default)]
struct Bounds {
    lo: Option<BigInt>,
    hi: Option<BigInt>,
    pins: Vec<BigInt>,
}

impl Bounds {
    fn raise_lo(&mut self, v: BigInt) {
        if self.lo.as_ref().is_none_or(|l| v > *l) {
            self.lo = Some(v);
        }
    }

    fn lower_hi(&mut self, v: BigInt) {
        if self.hi.as_ref().is_none_or(|h| v < *h) {
            self.hi = Some(v);
        }
    }

    fn apply(&mut self, op: BinOp, v: BigInt) {
        match op {
            BinOp::Lt => self.lower_hi(v - 1),
            BinOp::Le => self.lower_hi(v),
            BinOp::Gt => self.raise_lo(v + 1),
            BinOp::Ge => self.raise_lo(v),
            BinOp::Eq => self.pins.push(v),
            _ => {}
        }
    }
}

/// Candidate values for one binder.
enum Cands {
    Pins(Vec<BigInt>),
    Range(BigInt, BigInt),
    Vals(Vec<Cand>),
}

enum Cand {
    Val(Value),
    Fresh(HArr),
}

struct Plan {
    cands: Cands,
    size: BigInt,
    exact: bool,
}

fn random_elem(rng: &mut ChaCha8Rng, ty: &DType) -> Value {
    match ty {
        DType::Int => Value::int(INT_POOL[rng.gen_range(0..INT_POOL.len())]),
        DType::Bool => Value::Bool(rng.gen()),
        t => default_value(t),
    }
}

fn random_arr(rng: &mut ChaCha8Rng, elem: &DType, len: usize) -> HArr {
    HArr {
        elems: (0..len).map(|_| random_elem(rng, elem)).collect(),
        ty: elem.clone(),
    }
}

fn int_bounds(
    ev: &mut Evaluator<'_, VcHook>,
    st: &mut State,
    view: View,
    rem: &[(Name, DType)],
    guards: &[Guard<'_>],
) -> Vec<Option<Bounds>> {
    let taint: BTreeSet<Name> = rem.iter().map(|(x, _)| x.clone()).collect();
    let mut bounds: Vec<Option<Bounds>> = rem
        .iter()
        .map(|(_, t)| (*t == DType::Int).then(Bounds::default))
        .collect();
    let mut links = Vec::new();
    for (k, (x, t)) in rem.iter().enumerate() {
        if *t != DType::Int {
            continue;
        }
        for g in guards {
            let Some((op, other)) = oriented(g, |e| denotes(&g.ctx, e, x)) else {
                continue;
            };
            let peer = rem
                .iter()
                .position(|(y, ty)| *ty == DType::Int && y != x && denotes(&g.ctx, other, y));
            if let Some(j) = peer {
                links.push((k, op, j));
                continue;
            }
            if let Some(Value::Int(v)) = eval_side(ev, st, view, &g.ctx, &taint, other) {
                if let Some(b) = bounds[k].as_mut() {
                    b.apply(op, v);
                }
            }
        }
    }
    // Interval propagation along binder-to-binder comparisons.
    for _ in 0..=rem.len() {
        for &(k, op, j) in &links {
            let (bk, bj) = (bounds[k].clone().unwrap(), bounds[j].clone().unwrap());
            let (mut nk, mut nj) = (bk, bj.clone());
            let one = BigInt::one();
            match op {
                BinOp::Lt | BinOp::Le => {
                    let d = if op == BinOp::Lt { one.clone() } else { BigInt::from(0) };
                    if let Some(h) = &bj.hi {
                        nk.lower_hi(h - &d);
                    }
                    if let Some(l) = &bounds[k].as_ref().unwrap().lo {
                        nj.raise_lo(l + &d);
                    }
                }
                BinOp::Gt | BinOp::Ge => {
                    let d = if op == BinOp::Gt { one.clone() } else { BigInt::from(0) };
                    if let Some(l) = &bj.lo {
                        nk.raise_lo(l + &d);
                    }
                    if let Some(h) = &bounds[k].as_ref().unwrap().hi {
                        nj.lower_hi(h - &d);
                    }
                }
                BinOp::Eq => {
                    if let Some(l) = &bj.lo {
                        nk.raise_lo(l.clone());
                    }
                    if let Some(h) = &bj.hi {
                        nk.lower_hi(h.clone());
                    }
                    let bk = bounds[k].as_ref().unwrap();
                    if let Some(l) = &bk.lo {
                        nj.raise_lo(l.clone());
                    }
                    if let Some(h) = &bk.hi {
                        nj.lower_hi(h.clone());
                    }
                }
                _ => {}
            }
            bounds[k] = Some(nk);
            bounds[j] = Some(nj);
        }
    }
    bounds
}

fn int_plan(b: &Bounds, budget: &Budget, rng: &mut ChaCha8Rng) -> Plan {
    if !b.pins.is_empty() {
        let first = b.pins[0].clone();
        let agree = b.pins.iter().all(|p| *p == first);
        let inside = b.lo.as_ref().is_none_or(|l| first >= *l) && b.hi.as_ref().is_none_or(|h| first <= *h);
        let pins = if agree && inside { vec![first] } else { vec![] };
        return Plan {
            size: BigInt::from(pins.len()),
            cands: Cands::Pins(pins),
            exact: true,
        };
    }
    let span = budget.span();
    let (lo, hi, mut exact) = match (&b.lo, &b.hi) {
        (Some(l), Some(h)) => (l.clone(), h.clone(), true),
        (None, Some(h)) => {
            let lo = if *h < BigInt::from(budget.int_lo) {
                h - &span + 1
            } else {
                BigInt::from(budget.int_lo)
            };
            (lo, h.clone(), false)
        }
        (Some(l), None) => {
            let hi = if *l > BigInt::from(budget.int_hi) {
                l + &span - 1
            } else {
                BigInt::from(budget.int_hi)
            };
            (l.clone(), hi, false)
        }
        (None, None) => (BigInt::from(budget.int_lo), BigInt::from(budget.int_hi), false),
    };
    let mut hi = hi;
    if &hi - &lo + 1 > BigInt::from(EXACT_RANGE_MAX) {
        hi = &lo + EXACT_RANGE_MAX - 1;
        exact = false;
    }
    let size = if hi < lo { BigInt::from(0) } else { &hi - &lo + 1 };
    if !exact && size > BigInt::from(INEXACT_INT_SAMPLES) {
        let vals = sample_range(&lo, &hi, rng);
        return Plan {
            size: BigInt::from(vals.len()),
            cands: Cands::Pins(vals),
            exact: false,
        };
    }
    Plan {
        cands: Cands::Range(lo, hi),
        size,
        exact,
    }
}

/// Ends of the range, small values and pool values inside it, and random
/// picks, in ascending order.
fn sample_range(lo: &BigInt, hi: &BigInt, rng: &mut ChaCha8Rng) -> Vec<BigInt> {
    let mut vals: BTreeSet<BigInt> = BTreeSet::new();
    for d in 0..2 {
        vals.insert(lo + d);
        vals.insert(hi - d);
    }
    for p in INT_POOL.iter().chain(&[10, -10, 100, -100]) {
        let p = BigInt::from(*p);
        if *lo <= p && p <= *hi {
            vals.insert(p);
        }
    }
    let width = (hi - lo).to_u64().unwrap_or(u64::MAX);
    while vals.len() < INEXACT_INT_SAMPLES {
        vals.insert(lo + rng.gen_range(0..=width));
    }
    vals.into_iter().collect()
}

fn arr_plan(
    ev: &mut Evaluator<'_, VcHook>,
    st: &mut State,
    view: View,
    rem: &[(Name, DType)],
    guards: &[Guard<'_>],
    x: &str,
    elem: &DType,
) -> Plan {
    let taint: BTreeSet<Name> = rem.iter().map(|(y, _)| y.clone()).collect();
    let mut len: Option<usize> = None;
    let mut fill: Option<Value> = None;
    for g in guards {
        let len_side = |e: &Exp| matches!(e, Exp::ArrLen(a) if denotes(&g.ctx, a, x));
        if let Some((BinOp::Eq, other)) = oriented(g, len_side) {
            if let Some(Value::Int(v)) = eval_side(ev, st, view, &g.ctx, &taint, other) {
                len = v.to_usize().filter(|n| *n as u64 <= EXACT_RANGE_MAX);
            }
            continue;
        }
        if let Exp::Forall(i, DType::Int, body) = g.e {
            if i == x {
                continue;
            }
            let Exp::BinOp(BinOp::Imp, _, concl) = &**body else {
                continue;
            };
            let Exp::BinOp(BinOp::Eq, l, r) = &**concl else {
                continue;
            };
            let is_elem = |e: &Exp| {
                matches!(e, Exp::ArrSel(a, k)
                    if denotes(&g.ctx, a, x) && matches!(&**k, Exp::Var(v) if v == i))
            };
            let other = if is_elem(l) {
                r
            } else if is_elem(r) {
                l
            } else {
                continue;
            };
            let mut t = taint.clone();
            t.insert(i.clone());
            if let Some(v) = eval_side(ev, st, view, &g.ctx, &t, other) {
                fill = Some(v);
            }
        }
    }
    let budget = ev.hook.budget.clone();
    let rng = &mut ev.hook.rng;
    let mut cands = Vec::new();
    match (len, fill) {
        (Some(n), Some(v)) => cands.push(Cand::Fresh(HArr {
            elems: vec![v; n],
            ty: elem.clone(),
        })),
        (Some(n), None) => {
            for (loc, h) in st.heap_at(view.heap).iter().enumerate() {
                if h.ty == *elem && h.elems.len() == n {
                    cands.push(Cand::Val(Value::Arr {
                        len: n,
                        loc,
                        ty: elem.clone(),
                    }));
                }
            }
            for _ in 0..budget.heap_variants_max {
                cands.push(Cand::Fresh(random_arr(rng, elem, n)));
            }
        }
        (None, _) => {
            for (loc, h) in st.heap_at(view.heap).iter().enumerate() {
                if h.ty == *elem {
                    cands.push(Cand::Val(Value::Arr {
                        len: h.elems.len(),
                        loc,
                        ty: elem.clone(),
                    }));
                }
            }
            for n in 0..=budget.arr_len_max {
                cands.push(Cand::Fresh(random_arr(rng, elem, n)));
            }
        }
    }
    Plan {
        size: BigInt::from(cands.len()),
        cands: Cands::Vals(cands),
        exact: false,
    }
}

fn plan_for(
    ev: &mut Evaluator<'_, VcHook>,
    st: &mut State,
    view: View,
    rem: &[(Name, DType)],
    guards: &[Guard<'_>],
    k: usize,
    bounds: &[Option<Bounds>],
) -> Plan {
    let (x, ty) = &rem[k];
    match ty {
        DType::Int => {
            let budget = ev.hook.budget.clone();
            int_plan(bounds[k].as_ref().unwrap(), &budget, &mut ev.hook.rng)
        }
        DType::Bool => Plan {
            cands: Cands::Vals(vec![Cand::Val(Value::Bool(false)), Cand::Val(Value::Bool(true))]),
            size: BigInt::from(2),
            exact: true,
        },
        DType::Str => Plan {
            cands: Cands::Vals(["", "a"].iter().map(|s| Cand::Val(Value::Str(s.to_string()))).collect()),
            size: BigInt::from(2),
            exact: false,
        },
        DType::Arr(elem) => arr_plan(ev, st, view, rem, guards, x, elem),
    }
}

enum Outcome {
    False,
    True { exact: bool },
}

fn show_cand(st: &State, view: View, v: &Value) -> String {
    match v {
        Value::Arr { .. } => match st.heap_at(view.heap).get(match v {
            Value::Arr { loc, .. } => *loc,
            _ => unreachable!(),
        }) {
            Some(h) => {
                let items: Vec<String> = h.elems.iter().map(|e| e.to_string()).collect();
                format!("{v} [{}]", items.join(", "))
            }
            None => v.to_string(),
        },
        _ => v.to_string(),
    }
}

fn chain(
    ev: &mut Evaluator<'_, VcHook>,
    st: &mut State,
    view: View,
    rem: &[(Name, DType)],
    guards: &[Guard<'_>],
    inner: &Exp,
) -> Result<Outcome, Halt> {
    if rem.is_empty() {
        ev.hook.leaves += 1;
        return Ok(if ev.eval_bool(st, view, inner)? {
            Outcome::True { exact: true }
        } else {
            Outcome::False
        });
    }
    let bounds = int_bounds(ev, st, view, rem, guards);
    // Prefer the cheapest exact plan; otherwise the cheapest plan.
    let mut best: Option<(usize, Plan)> = None;
    for k in 0..rem.len() {
        let p = plan_for(ev, st, view, rem, guards, k, &bounds);
        let better = match &best {
            None => true,
            Some((_, b)) => (p.exact && !b.exact) || (p.exact == b.exact && p.size < b.size),
        };
        if better {
            best = Some((k, p));
        }
    }
    let (k, plan) = best.expect("non-empty binder list");
    let (x, ty) = rem[k].clone();
    let rest: Vec<(Name, DType)> = rem
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .map(|(_, b)| b.clone())
        .collect();
    let mut exact = plan.exact;
    let mut budget_hit = false;
    let mut try_one = |ev: &mut Evaluator<'_, VcHook>, st: &mut State, cand: Cand| {
        let mark = st.heap_at(view.heap).len();
        let v = match cand {
            Cand::Val(v) => v,
            Cand::Fresh(h) => {
                let len = h.elems.len();
                let ety = h.ty.clone();
                st.heap_at_mut(view.heap).push(h);
                Value::Arr {
                    len,
                    loc: mark,
                    ty: ety,
                }
            }
        };
        let tmark = ev.hook.trail.len();
        let r = ev.with_binds(st, view, vec![(x.clone(), Some(v.clone()))], |ev, st| {
            chain(ev, st, view, &rest, guards, inner)
        });
        let shown = matches!(r, Ok(Outcome::False)).then(|| show_cand(st, view, &v));
        st.heap_at_mut(view.heap).truncate(mark);
        match r {
            Ok(Outcome::False) => {
                ev.hook.trail.insert(
                    tmark,
                    Witness {
                        quantifier: format!("forall {x}: {ty}"),
                        value: shown.unwrap_or_default(),
                    },
                );
                Some(Ok(Outcome::False))
            }
            Ok(Outcome::True { exact: e }) => {
                exact &= e;
                ev.hook.trail.truncate(tmark);
                None
            }
            Err(Halt::Budget) => {
                budget_hit = true;
                ev.hook.trail.truncate(tmark);
                None
            }
            Err(e) => Some(Err(e)),
        }
    };
    let mut cut = false;
    match plan.cands {
        Cands::Pins(vs) => {
            for v in vs {
                if out_of_leaves(ev) {
                    cut = true;
                    break;
                }
                if let Some(r) = try_one(ev, st, Cand::Val(Value::Int(v))) {
                    return r;
                }
            }
        }
        Cands::Range(lo, hi) => {
            let mut v = lo;
            while v <= hi {
                if out_of_leaves(ev) {
                    cut = true;
                    break;
                }
                if let Some(r) = try_one(ev, st, Cand::Val(Value::Int(v.clone()))) {
                    return r;
                }
                v += 1;
            }
        }
        Cands::Vals(cs) => {
            for c in cs {
                if out_of_leaves(ev) {
                    cut = true;
                    break;
                }
                if let Some(r) = try_one(ev, st, c) {
                    return r;
                }
            }
        }
    }
    if budget_hit {
        Err(Halt::Budget)
    } else {
        Ok(Outcome::True { exact: exact && !cut })
    }
}

fn out_of_leaves(ev: &Evaluator<'_, VcHook>) -> bool {
    ev.hook.leaves >= ev.hook.budget.leaves_max
}

fn finish(ev: &mut Evaluator<'_, VcHook>, pol: Polarity, out: Outcome) -> EvalResult {
    match out {
        Outcome::False => Ok(Value::Bool(false)),
        Outcome::True { exact: true } => Ok(Value::Bool(true)),
        Outcome::True { exact: false } if pol == Polarity::Pos => {
            ev.hook.bounded = true;
            Ok(Value::Bool(true))
        }
        Outcome::True { exact: false } => Err(Halt::Budget),
    }
}

/// Point updates `a[i] = e` on havocked arrays found in the antecedent of
/// `body`, plus whether they determine the heap uniquely (the shape
/// produced for a single array update).
fn pinned_updates(
    ev: &mut Evaluator<'_, VcHook>,
    st: &mut State,
    view: View,
    locs: &[usize],
    body: &Exp,
) -> (Vec<(usize, usize, Value)>, bool) {
    let (binders, inner) = match body {
        Exp::Forall(x, t, b) => peel_chain(x, t, b),
        e => (Vec::new(), e),
    };
    let taint: BTreeSet<Name> = binders.iter().map(|(x, _)| x.clone()).collect();
    let guards = guards_of(inner);
    let mut ups = Vec::new();
    for g in &guards {
        let Exp::BinOp(BinOp::Eq, l, r) = g.e else {
            continue;
        };
        for (sel, val) in [(l, r), (r, l)] {
            let Exp::ArrSel(a, i) = &**sel else {
                continue;
            };
            let Some(Value::Arr { loc, len, .. }) = eval_side(ev, st, view, &g.ctx, &taint, a) else {
                continue;
            };
            if !locs.contains(&loc) {
                continue;
            }
            let Some(Value::Int(k)) = eval_side(ev, st, view, &g.ctx, &taint, i) else {
                continue;
            };
            let Some(k) = k.to_usize().filter(|k| *k < len) else {
                continue;
            };
            let Some(v) = eval_side(ev, st, view, &g.ctx, &taint, val) else {
                continue;
            };
            ups.push((loc, k, v));
            break;
        }
    }
    let exact = binders.is_empty()
        && locs.len() == 1
        && ups.len() == 1
        && st.heap_prev.get(locs[0]) == st.heap_at(view.heap).get(locs[0])
        && guards.iter().any(|g| is_frame(ev, st, view, g, locs[0], ups[0].1));
    (ups, exact)
}

/// Recognizes `forall i :: i != k && 0 <= i && i < len(a) ==> a[i] = PrevHeap(a[i])`.
fn is_frame(ev: &mut Evaluator<'_, VcHook>, st: &mut State, view: View, g: &Guard<'_>, loc: usize, k: usize) -> bool {
    let Exp::Forall(i, DType::Int, body) = g.e else {
        return false;
    };
    let Exp::BinOp(BinOp::Imp, ante, concl) = &**body else {
        return false;
    };
    let Exp::BinOp(BinOp::Eq, l, r) = &**concl else {
        return false;
    };
    let is_i = |e: &Exp| matches!(e, Exp::Var(v) if v == i);
    let (Exp::ArrSel(a, ia), Exp::PrevHeap(inner)) = (&**l, &**r) else {
        return false;
    };
    let Exp::ArrSel(a2, ib) = &**inner else {
        return false;
    };
    if a != a2 || !is_i(ia) || !is_i(ib) || a.mentions_var(i) {
        return false;
    }
    let taint: BTreeSet<Name> = [i.clone()].into();
    if !matches!(eval_side(ev, st, view, &g.ctx, &taint, a), Some(Value::Arr { loc: l2, .. }) if l2 == loc) {
        return false;
    }
    let mut conj = Vec::new();
    collect_guards(ante, &mut Vec::new(), &mut conj);
    let mut excluded = false;
    for c in &conj {
        if let Some((x, y)) = neq_sides(c.e) {
            let other = if is_i(x) {
                y
            } else if is_i(y) {
                x
            } else {
                return false;
            };
            match eval_side(ev, st, view, &g.ctx, &taint, other) {
                Some(Value::Int(v)) if v.to_usize() == Some(k) => excluded = true,
                _ => return false,
            }
            continue;
        }
        match c.e {
            Exp::BinOp(BinOp::Neq, ..) => {
                return false;
            }
            Exp::BinOp(BinOp::Le, z, x) if is_i(x) && **z == Exp::int(0) => {}
            Exp::BinOp(BinOp::Lt, x, n) if is_i(x) && matches!(&**n, Exp::ArrLen(b) if b == a) => {}
            _ => return false,
        }
    }
    excluded
}

fn neq_sides(e: &Exp) -> Option<(&Exp, &Exp)> {
    match e {
        Exp::BinOp(BinOp::Neq, x, y) => Some((x, y)),
        Exp::UnOp(UnOp::Not, inner) => match &**inner {
            Exp::BinOp(BinOp::Eq, x, y) => Some((x, y)),
            _ => None,
        },
        _ => None,
    }
}

fn havoc_variants(
    ev: &mut Evaluator<'_, VcHook>,
    st: &mut State,
    view: View,
    locs: &[usize],
    body: &Exp,
) -> (Vec<Heap>, bool) {
    let cur = st.heap_at(view.heap).clone();
    let (ups, exact) = pinned_updates(ev, st, view, locs, body);
    let mut variants = Vec::new();
    if !ups.is_empty() {
        let mut h = cur.clone();
        for (loc, k, v) in ups {
            h[loc].elems[k] = v;
        }
        variants.push(h);
        if exact {
            return (variants, true);
        }
    }
    variants.push(cur.clone());
    let budget = ev.hook.budget.clone();
    let rng = &mut ev.hook.rng;
    let mut n = 0;
    while variants.len() < budget.heap_variants_max {
        let mut h = cur.clone();
        for &loc in locs {
            let ty = h[loc].ty.clone();
            for x in h[loc].elems.iter_mut() {
                if rng.gen_bool(0.5) {
                    *x = random_elem(rng, &ty);
                }
            }
        }
        if n % 2 == 1 {
            let len = rng.gen_range(0..=budget.arr_len_max);
            h.push(random_arr(rng, &DType::Int, len));
        }
        n += 1;
        variants.push(h);
    }
    (variants, false)
}

fn show_heap(h: &Heap, locs: &[usize]) -> String {
    let parts: Vec<String> = locs
        .iter()
        .map(|l| {
            let items: Vec<String> = h[*l].elems.iter().map(|e| e.to_string()).collect();
            format!("@{l} = [{}]", items.join(", "))
        })
        .collect();
    parts.join("; ")
}

impl QuantHook for VcHook {
    fn forall(ev: &mut Evaluator<'_, Self>, st: &mut State, view: View, x: &str, ty: &DType, body: &Exp) -> EvalResult {
        let (binders, inner) = peel_chain(x, ty, body);
        let guards = guards_of(inner);
        let pol = ev.pol;
        let out = chain(ev, st, view, &binders, &guards, inner)?;
        finish(ev, pol, out)
    }

    fn forall_heap(ev: &mut Evaluator<'_, Self>, st: &mut State, view: View, havoc: &[Name], body: &Exp) -> EvalResult {
        let mut locs = Vec::new();
        for a in havoc {
            match st.locals_at(view.locals).lookup(a) {
                Some(Some(Value::Arr { loc, len, .. })) => {
                    // Zero-length arrays have nothing to havoc.
                    if *len > 0 {
                        if *loc >= st.heap_at(view.heap).len() {
                            return Err(FAIL);
                        }
                        locs.push(*loc);
                    }
                }
                _ => return Err(FAIL),
            }
        }
        locs.sort_unstable();
        locs.dedup();
        if locs.is_empty() {
            return ev.eval(st, view, body);
        }
        let pol = ev.pol;
        let (variants, exact) = havoc_variants(ev, st, view, &locs, body);
        let mut budget_hit = false;
        for h in variants {
            let shown = show_heap(&h, &locs);
            let saved = std::mem::replace(st.heap_at_mut(view.heap), h);
            let tmark = ev.hook.trail.len();
            let r = ev.eval_bool(st, view, body);
            *st.heap_at_mut(view.heap) = saved;
            match r {
                Ok(false) => {
                    ev.hook.trail.insert(
                        tmark,
                        Witness {
                            quantifier: format!("forall heap [{}]", havoc.join(" ")),
                            value: shown,
                        },
                    );
                    return Ok(Value::Bool(false));
                }
                Ok(true) => ev.hook.trail.truncate(tmark),
                Err(Halt::Budget) => {
                    budget_hit = true;
                    ev.hook.trail.truncate(tmark);
                }
                Err(e) => return Err(e),
            }
        }
        if budget_hit {
            return Err(Halt::Budget);
        }
        finish(ev, pol, Outcome::True { exact })
    }
}
