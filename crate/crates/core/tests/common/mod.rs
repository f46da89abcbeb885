//! Shared fixtures and generators for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use minidafny::ast::*;
use minidafny::frontend::parse_program;
use minidafny::semantics::{HArr, Locals, State, Value};
use minidafny::simrel::load_program;
use proptest::prelude::*;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus_path(label: &str) -> PathBuf {
    corpus_dir().join(format!("{label}.sexp"))
}

pub fn corpus_text(label: &str) -> String {
    std::fs::read_to_string(corpus_path(label)).expect("corpus file")
}

/// Parsed and normalized corpus program.
pub fn corpus(label: &str) -> Program {
    load_program(&corpus_path(label)).expect("corpus program loads")
}

/// Parses `text`, panicking on error.
pub fn prog(text: &str) -> Program {
    parse_program(text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

pub fn z3_available() -> bool {
    std::process::Command::new("z3")
        .arg("-version")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

// ---- executable programs for the interpreter laws ----

pub const INT_VARS: [&str; 3] = ["x0", "x1", "x2"];
pub const BOOL_VARS: [&str; 2] = ["p0", "p1"];
pub const ARR_VAR: &str = "a0";

/// Callees used by generated expressions and statements.
pub fn law_program() -> Program {
    prog(
        "(program
          (function Twice (ins (x int)) int (+ x x))
          (function Down (ins (x int)) int (ite (<= x 0) 0 (+ 1 (call Down (- x 1)))))
          (method Inc (ins (x int)) (outs (y int))
            (requires) (ensures) (decreases) (modifies)
            (body (then (assign ((y (+ x 1)))) (return)))))",
    )
}

fn int_leaf() -> BoxedStrategy<Exp> {
    prop_oneof![
        (-6i64..=6).prop_map(Exp::int),
        prop::sample::select(INT_VARS.to_vec()).prop_map(Exp::var),
        Just(Exp::len(Exp::var(ARR_VAR))),
    ]
    .boxed()
}

fn bool_leaf() -> BoxedStrategy<Exp> {
    prop_oneof![
        any::<bool>().prop_map(Exp::BoolLit),
        prop::sample::select(BOOL_VARS.to_vec()).prop_map(Exp::var),
    ]
    .boxed()
}

/// Well-typed executable expressions of depth at most `depth`, int-typed
/// and bool-typed.
pub fn exec_exps(depth: u32) -> (BoxedStrategy<Exp>, BoxedStrategy<Exp>) {
    exec_exps_with(depth, true)
}

/// With `wide_mul` off, the right operand of `*` is a literal, so a loop
/// that keeps reassigning a product grows linearly in bits.
fn exec_exps_with(depth: u32, wide_mul: bool) -> (BoxedStrategy<Exp>, BoxedStrategy<Exp>) {
    let mut ints = int_leaf();
    let mut bools = bool_leaf();
    for _ in 0..depth {
        let (i, b) = (ints.clone(), bools.clone());
        let arith = if wide_mul {
            prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Mod])
        } else {
            prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Div, BinOp::Mod])
        };
        let cmp = prop::sample::select(vec![BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Neq]);
        let logic = prop::sample::select(vec![BinOp::And, BinOp::Or, BinOp::Imp, BinOp::Eq]);
        let next_int = prop_oneof![
            2 => int_leaf(),
            3 => (arith, i.clone(), i.clone()).prop_map(|(op, a, c)| Exp::bin(op, a, c)),
            1 => (i.clone(), -6i64..=6).prop_map(|(a, c)| Exp::bin(BinOp::Mul, a, Exp::int(c))),
            1 => i.clone().prop_map(Exp::neg),
            1 => (b.clone(), i.clone(), i.clone()).prop_map(|(c, t, e)| Exp::ite(c, t, e)),
            1 => i.clone().prop_map(|k| Exp::sel(Exp::var(ARR_VAR), k)),
            1 => i.clone().prop_map(|k| Exp::FunCall("Twice".into(), vec![k])),
            1 => i.clone().prop_map(|k| Exp::FunCall("Down".into(), vec![k])),
            1 => (i.clone(), i.clone()).prop_map(|(v, body)| Exp::let_in(
                vec![("x2".into(), v)],
                body
            )),
        ]
        .boxed();
        let next_bool = prop_oneof![
            2 => bool_leaf(),
            3 => (cmp, i.clone(), i.clone()).prop_map(|(op, a, c)| Exp::bin(op, a, c)),
            2 => (logic, b.clone(), b.clone()).prop_map(|(op, a, c)| Exp::bin(op, a, c)),
            1 => b.clone().prop_map(Exp::not),
            1 => (b.clone(), b.clone(), b.clone()).prop_map(|(c, t, e)| Exp::ite(c, t, e)),
        ]
        .boxed();
        ints = next_int;
        bools = next_bool;
    }
    (ints, bools)
}

/// Executable statements of depth at most `depth` over the law variables.
pub fn exec_stmts(depth: u32) -> BoxedStrategy<Stmt> {
    let (ie, be) = exec_exps_with(2, false);
    let int_var = prop::sample::select(INT_VARS.to_vec());
    let leaf = prop_oneof![
        1 => Just(Stmt::Skip),
        1 => Just(Stmt::Return),
        1 => be.clone().prop_map(Stmt::Assert),
        4 => (int_var.clone(), ie.clone()).prop_map(|(x, e)| Stmt::assign_var(x, e)),
        2 => (ie.clone(), ie.clone()).prop_map(|(a, c)| Stmt::Assign(vec![
            (Lhs::Var("x0".into()), Rhs::Exp(a)),
            (Lhs::Var("x1".into()), Rhs::Exp(c)),
        ])),
        1 => (prop::sample::select(BOOL_VARS.to_vec()), be.clone())
            .prop_map(|(x, e)| Stmt::assign_var(x, e)),
        2 => (ie.clone(), ie.clone()).prop_map(|(k, v)| Stmt::Assign(vec![(
            Lhs::ArrSel(Exp::var(ARR_VAR), k),
            Rhs::Exp(v),
        )])),
        1 => ie.clone().prop_map(|n| Stmt::Assign(vec![(
            Lhs::Var(ARR_VAR.into()),
            Rhs::ArrAlloc(DType::Int, Exp::bin(BinOp::Mod, n, Exp::int(6))),
        )])),
        1 => (int_var.clone(), ie.clone())
            .prop_map(|(x, a)| Stmt::MetCall(vec![x.into()], "Inc".into(), vec![a])),
    ]
    .boxed();
    let mut s = leaf.clone();
    for _ in 0..depth {
        let prev = s.clone();
        s = prop_oneof![
            2 => leaf.clone(),
            3 => (prev.clone(), prev.clone()).prop_map(|(a, b)| Stmt::then(a, b)),
            2 => (be.clone(), prev.clone(), prev.clone()).prop_map(|(g, t, e)| Stmt::if_(g, t, e)),
            2 => (be.clone(), prev.clone()).prop_map(|(g, b)| Stmt::While(While {
                guard: g,
                invs: vec![],
                decrs: vec![],
                mods: vec![],
                body: Box::new(b),
            })),
            1 => (prop::option::of(ie.clone()), prev.clone()).prop_map(|(init, b)| Stmt::Dec(
                vec![DecBind { name: "x2".into(), ty: DType::Int, init }],
                Box::new(b)
            )),
        ]
        .boxed();
    }
    s
}

/// A state binding every law variable, with `a0` at heap location 0.
pub fn exec_states() -> BoxedStrategy<State> {
    (
        prop::collection::vec(-10i64..=10, INT_VARS.len()),
        prop::collection::vec(any::<bool>(), BOOL_VARS.len()),
        prop::collection::vec(-5i64..=5, 0..5),
    )
        .prop_map(|(is, bs, arr)| {
            let mut list: Vec<(Name, Option<Value>)> = Vec::new();
            for (x, v) in INT_VARS.iter().zip(is) {
                list.push((x.to_string(), Some(Value::int(v))));
            }
            for (x, v) in BOOL_VARS.iter().zip(bs) {
                list.push((x.to_string(), Some(Value::Bool(v))));
            }
            list.push((
                ARR_VAR.into(),
                Some(Value::Arr {
                    len: arr.len(),
                    loc: 0,
                    ty: DType::Int,
                }),
            ));
            let mut st = State::with_clock(0);
            st.locals = Locals::from_list(list);
            st.heap = vec![HArr {
                elems: arr.into_iter().map(Value::int).collect(),
                ty: DType::Int,
            }];
            st.locals_old = st.locals.clone();
            st.heap_old = st.heap.clone();
            st
        })
        .boxed()
}

// ---- arbitrary syntax for the round trip ----

const NAMES: [&str; 10] = ["x", "y", "n", "a", "r'", "_t", "v0", "neg", "sel", "Big_1"];

pub fn arb_name() -> BoxedStrategy<Name> {
    prop::sample::select(NAMES.to_vec()).prop_map(String::from).boxed()
}

pub fn arb_type() -> BoxedStrategy<DType> {
    let base = prop_oneof![Just(DType::Int), Just(DType::Bool), Just(DType::Str)];
    base.prop_recursive(2, 3, 1, |t| t.prop_map(DType::arr)).boxed()
}

fn arb_binds() -> BoxedStrategy<Vec<(Name, DType)>> {
    (
        prop::sample::subsequence(NAMES.to_vec(), 0..4),
        prop::collection::vec(arb_type(), 4),
    )
        .prop_map(|(xs, ts)| xs.into_iter().zip(ts).map(|(x, t)| (x.to_string(), t)).collect())
        .boxed()
}

/// Any syntactically valid expression, verification forms included.
pub fn arb_exp(depth: u32) -> BoxedStrategy<Exp> {
    let leaf = prop_oneof![
        any::<i64>().prop_map(Exp::int),
        (-3i64..=3).prop_map(Exp::int),
        any::<bool>().prop_map(Exp::BoolLit),
        "[a-z \"\\\\\n()\t]{0,6}".prop_map(Exp::StrLit),
        arb_name().prop_map(Exp::Var),
    ]
    .boxed();
    let mut e = leaf.clone();
    for _ in 0..depth {
        let p = e.clone();
        let un: BoxedStrategy<Exp> = prop_oneof![
            p.clone().prop_map(Exp::not),
            p.clone().prop_map(Exp::neg),
            p.clone().prop_map(Exp::len),
            p.clone().prop_map(Exp::old),
            p.clone().prop_map(|x| Exp::OldHeap(Box::new(x))),
            p.clone().prop_map(Exp::prev),
            p.clone().prop_map(Exp::prev_heap),
            p.clone().prop_map(Exp::set_prev),
        ]
        .boxed();
        e = prop_oneof![
            2 => leaf.clone(),
            4 => (prop::sample::select(BinOp::ALL.to_vec()), p.clone(), p.clone())
                .prop_map(|(op, a, b)| Exp::bin(op, a, b)),
            2 => un,
            1 => (p.clone(), p.clone(), p.clone()).prop_map(|(c, t, f)| Exp::ite(c, t, f)),
            1 => (p.clone(), p.clone()).prop_map(|(a, i)| Exp::sel(a, i)),
            1 => (arb_name(), prop::collection::vec(p.clone(), 0..3))
                .prop_map(|(f, args)| Exp::FunCall(f, args)),
            1 => (arb_name(), arb_type(), p.clone()).prop_map(|(x, t, b)| Exp::forall(x, t, b)),
            1 => (prop::sample::subsequence(NAMES.to_vec(), 0..3), prop::collection::vec(p.clone(), 3), p.clone())
                .prop_map(|(xs, vs, b)| Exp::let_in(
                    xs.into_iter().map(String::from).zip(vs).collect(),
                    b
                )),
            1 => (prop::collection::vec(arb_name(), 0..3), p.clone())
                .prop_map(|(xs, b)| Exp::forall_heap(xs, b)),
        ]
        .boxed();
    }
    e
}

pub fn arb_stmt(depth: u32) -> BoxedStrategy<Stmt> {
    let e = arb_exp(2);
    let lhs = prop_oneof![
        arb_name().prop_map(Lhs::Var),
        (e.clone(), e.clone()).prop_map(|(a, i)| Lhs::ArrSel(a, i)),
    ];
    let rhs = prop_oneof![
        3 => e.clone().prop_map(Rhs::Exp),
        1 => (arb_type(), e.clone()).prop_map(|(t, n)| Rhs::ArrAlloc(t, n)),
    ];
    let leaf = prop_oneof![
        Just(Stmt::Skip),
        Just(Stmt::Return),
        e.clone().prop_map(Stmt::Assert),
        prop::collection::vec((lhs, rhs), 0..3).prop_map(Stmt::Assign),
        (
            prop::collection::vec(arb_name(), 0..3),
            arb_name(),
            prop::collection::vec(e.clone(), 0..3)
        )
            .prop_map(|(ls, f, args)| Stmt::MetCall(ls, f, args)),
    ]
    .boxed();
    let mut s = leaf.clone();
    for _ in 0..depth {
        let p = s.clone();
        let dec_bind = (arb_name(), arb_type(), prop::option::of(e.clone())).prop_map(|(name, ty, init)| DecBind {
            name,
            ty,
            init,
        });
        s = prop_oneof![
            2 => leaf.clone(),
            2 => (p.clone(), p.clone()).prop_map(|(a, b)| Stmt::then(a, b)),
            1 => (e.clone(), p.clone(), p.clone()).prop_map(|(g, t, f)| Stmt::if_(g, t, f)),
            1 => (prop::collection::vec(dec_bind, 0..3), p.clone())
                .prop_map(|(bs, b)| Stmt::Dec(bs, Box::new(b))),
            1 => (
                e.clone(),
                prop::collection::vec(e.clone(), 0..2),
                prop::collection::vec(e.clone(), 0..2),
                prop::collection::vec(arb_name(), 0..2),
                p.clone()
            )
                .prop_map(|(guard, invs, decrs, mods, b)| Stmt::While(While {
                    guard,
                    invs,
                    decrs,
                    mods,
                    body: Box::new(b)
                })),
        ]
        .boxed();
    }
    s
}

pub fn arb_member() -> BoxedStrategy<Member> {
    let e = arb_exp(3);
    let method = (
        arb_name(),
        arb_binds(),
        arb_binds(),
        prop::collection::vec(e.clone(), 0..3),
        prop::collection::vec(e.clone(), 0..3),
        prop::collection::vec(e.clone(), 0..2),
        prop::collection::vec(arb_name(), 0..2),
        arb_stmt(3),
    )
        .prop_map(|(name, ins, outs, reqs, ens, decreases, mods, body)| {
            Member::Method(Method {
                name,
                ins,
                reqs,
                ens,
                decreases,
                mods,
                outs,
                body,
            })
        });
    let function = (arb_name(), arb_binds(), arb_type(), e).prop_map(|(name, ins, res_ty, body)| {
        Member::Function(Function {
            name,
            ins,
            res_ty,
            body,
        })
    });
    prop_oneof![3 => method, 1 => function].boxed()
}

pub fn arb_program() -> BoxedStrategy<Program> {
    prop::collection::vec(arb_member(), 0..4).prop_map(Program::new).boxed()
}

// ---- interpreter laws ----

use minidafny::semantics::{evaluate_exp, evaluate_stmt, ErrResult, StmtResult, Stop};

fn with_clock(st: &State, clock: u64) -> State {
    let mut s = st.clone();
    s.clock = clock;
    s
}

/// Purity, determinism and fuel monotonicity of expression evaluation at
/// fuels `f` and `f + k`.
pub fn exp_laws(p: &Program, st: &State, e: &Exp, f: u64, k: u64) -> Result<(), String> {
    let (s1, r1) = evaluate_exp(with_clock(st, f), p, e);
    if s1.clock > f {
        return Err(format!("clock grew from {f} to {}", s1.clock));
    }
    if with_clock(&s1, f) != with_clock(st, f) {
        return Err("expression evaluation changed more than the clock".into());
    }
    let (s1b, r1b) = evaluate_exp(with_clock(st, f), p, e);
    if (s1b.clock, &r1b) != (s1.clock, &r1) {
        return Err("expression evaluation is not deterministic".into());
    }
    let (s2, r2) = evaluate_exp(with_clock(st, f + k), p, e);
    if r1 != Err(ErrResult::Rtimeout) {
        if r2 != r1 || s2.clock != s1.clock + k {
            return Err(format!("more fuel changed {r1:?} into {r2:?}"));
        }
    } else if r2 == Err(ErrResult::Rtimeout) && s2.clock != 0 {
        return Err("timeout with fuel left".into());
    }
    Ok(())
}

/// Determinism and fuel monotonicity of statement execution.
pub fn stmt_laws(p: &Program, st: &State, s: &Stmt, f: u64, k: u64) -> Result<(), String> {
    let timeout = StmtResult::Rstop(Stop::Serr(ErrResult::Rtimeout));
    let (s1, r1) = evaluate_stmt(with_clock(st, f), p, s);
    let (s1b, r1b) = evaluate_stmt(with_clock(st, f), p, s);
    if (&s1b, r1b) != (&s1, r1) {
        return Err("statement execution is not deterministic".into());
    }
    if s1.clock > f {
        return Err(format!("clock grew from {f} to {}", s1.clock));
    }
    let (s2, r2) = evaluate_stmt(with_clock(st, f + k), p, s);
    if r1 != timeout {
        if r2 != r1 {
            return Err(format!("more fuel changed {r1} into {r2}"));
        }
        if s2.clock != s1.clock + k || with_clock(&s2, 0) != with_clock(&s1, 0) {
            return Err("more fuel changed the final state".into());
        }
    } else if r2 != timeout && k == 0 {
        return Err("same fuel, different outcome".into());
    }
    Ok(())
}

// ---- structural matching on conditions ----

/// Every subexpression of `e`, `e` included, in preorder.
pub fn subexps(e: &Exp) -> Vec<&Exp> {
    let mut out = vec![e];
    let mut k = 0;
    while k < out.len() {
        let cur = out[k];
        out.extend(cur.children());
        k += 1;
    }
    out
}

pub fn count_in(es: &[Exp], pred: impl Fn(&Exp) -> bool) -> usize {
    es.iter().flat_map(subexps).filter(|e| pred(e)).count()
}

pub fn e(text: &str) -> Exp {
    minidafny::frontend::parse_exp_text(text).unwrap_or_else(|err| panic!("{err}: {text}"))
}

/// The three call-site shapes of the 91 function's first recursive call
/// `r := M(n + 11)`: the precondition `Let`, the decreases comparison
/// against `Old`, and the out-parameter `Forall`.
pub fn ninety_one_call_shapes(conds: &[Exp]) -> (usize, usize, usize) {
    let arg = e("(+ n 11)");
    let measure = e("(- 111 n)");
    let pre = count_in(conds, |x| {
        matches!(x, Exp::Let(bs, body)
            if bs.len() == 1 && bs[0].0 == "n" && bs[0].1 == arg && **body == Exp::BoolLit(true))
    });
    let dec = count_in(conds, |x| match x {
        Exp::BinOp(BinOp::Lt, l, r) => {
            matches!(&**l, Exp::Let(bs, body) if bs.len() == 1 && bs[0].1 == arg && **body == measure)
                && **r == Exp::old(measure.clone())
        }
        _ => false,
    });
    let out = count_in(conds, |x| match x {
        Exp::Forall(r, DType::Int, body) if r == "r" => match &**body {
            Exp::BinOp(BinOp::Imp, ens, _) => matches!(&**ens, Exp::Let(bs, _)
                if bs.iter().any(|(x, v)| x == "n" && *v == arg)
                    && bs.iter().any(|(x, v)| x == "r" && *v == Exp::var("r"))),
            _ => false,
        },
        _ => false,
    });
    (pre, dec, out)
}

/// Number of `SetPrev(ForallHeap([a], ...))` array-update frames.
pub fn update_frames(conds: &[Exp], a: &str) -> usize {
    count_in(conds, |x| match x {
        Exp::SetPrev(inner) => matches!(&**inner, Exp::ForallHeap(h, _) if h.len() == 1 && h[0] == a),
        _ => false,
    })
}
