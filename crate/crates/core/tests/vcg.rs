mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use minidafny::ast::*;
use minidafny::frontend::normalize;
use minidafny::vcg::*;

fn ls(pairs: &[(&str, DType)]) -> Vec<(Name, DType)> {
    pairs.iter().map(|(x, t)| (x.to_string(), t.clone())).collect()
}

fn vcg_of(text: &str) -> Result<Vec<VcOutput>, VcgError> {
    program_vcg(&normalize(&prog(text)))
}

const METHOD_HEAD: &str = "(requires) (ensures) (decreases) (modifies)";

#[test]
fn get_types_examples() {
    let l = ls(&[("n", DType::Int), ("a", DType::arr(DType::Int)), ("i", DType::Int)]);
    assert_eq!(get_types(&l, &[e("(<= n 100)")]), Ok(vec![DType::Bool]));
    assert_eq!(get_types(&l, &[e("(sel a i)")]), Ok(vec![DType::Int]));
    assert_eq!(
        get_types(&l, &[e("(old n)"), e("(setprev (prev (len a)))")]),
        Ok(vec![DType::Int, DType::Int])
    );
    assert_eq!(get_types(&l, &[e("(forall (k int) (< k n))")]), Ok(vec![DType::Bool]));
    assert!(get_types(&l, &[e("missing")]).is_err());
    assert!(get_types(&l, &[e("(+ n true)")]).is_err());
    assert!(get_types(&l, &[e("(sel a true)")]).is_err());
    assert!(get_types(&l, &[e("(forall (k int) k)")]).is_err());
}

#[test]
fn levels() {
    let p = corpus("91");
    assert_eq!(method_levels(&p)["M"], 0);

    let p = corpus("swap_twice");
    let lv = method_levels(&p);
    assert!(lv["Swap"] < lv["SwapTwice"]);

    let p = prog(&format!(
        "(program
          (method A (ins (n int)) (outs) {METHOD_HEAD} (body (metcall () B (n))))
          (method B (ins (n int)) (outs) {METHOD_HEAD} (body (metcall () A (n))))
          (method C (ins) (outs) {METHOD_HEAD} (body (metcall () A (1))))
          (method D (ins) (outs) {METHOD_HEAD} (body (skip))))"
    ));
    let lv = method_levels(&p);
    assert_eq!(lv["A"], lv["B"]);
    assert!(lv["A"] < lv["C"]);
    assert_eq!(lv["D"], 0);
}

fn input<'a>(
    m: &'a BTreeMap<Name, MethodInfo>,
    stmt: &'a Stmt,
    post: Vec<Exp>,
    ens: Vec<Exp>,
    l: Vec<(Name, DType)>,
) -> VcInput<'a> {
    VcInput {
        m,
        level: 0,
        stmt,
        post,
        ens,
        decs: vec![],
        mods: vec![],
        ls: l,
        avoid: BTreeSet::new(),
    }
}

#[test]
fn stmt_vcg_examples() {
    let m = BTreeMap::new();
    let ints = ls(&[
        ("a", DType::Int),
        ("b", DType::Int),
        ("c", DType::Int),
        ("x", DType::Int),
        ("y", DType::Int),
    ]);

    let s = Stmt::Return;
    assert_eq!(
        stmt_vcg(input(&m, &s, vec![e("false")], vec![e("(< x y)")], ints.clone())),
        Ok(vec![e("(< x y)")])
    );

    let s = Stmt::Skip;
    assert_eq!(
        stmt_vcg(input(&m, &s, vec![e("(< x y)")], vec![], ints.clone())),
        Ok(vec![e("(< x y)")])
    );

    let s = Stmt::Assert(e("(< 0 a)"));
    assert_eq!(
        stmt_vcg(input(&m, &s, vec![e("(< x y)")], vec![], ints.clone())),
        Ok(vec![e("(< 0 a)"), e("(< x y)")])
    );
    let s = Stmt::Assert(e("a"));
    assert!(stmt_vcg(input(&m, &s, vec![], vec![], ints.clone())).is_err());

    let s =
        minidafny::frontend::parse_stmt_text("(then (assign ((b (+ (+ a a) a)))) (assign ((x (+ (+ b b) b)) (y c))))")
            .unwrap();
    assert_eq!(
        stmt_vcg(input(&m, &s, vec![e("(< x y)")], vec![], ints.clone())),
        Ok(vec![e(
            "(let ((b (+ (+ a a) a))) (let ((x (+ (+ b b) b)) (y c)) (< x y)))"
        )])
    );

    let s = Stmt::if_(e("(< a b)"), Stmt::assign_var("x", e("a")), Stmt::Skip);
    assert_eq!(
        stmt_vcg(input(&m, &s, vec![e("(<= x b)")], vec![], ints.clone())),
        Ok(vec![e("(ite (< a b) (let ((x a)) (<= x b)) (<= x b))")])
    );
}

#[test]
fn assign_checks() {
    let m = BTreeMap::new();
    let l = ls(&[("x", DType::Int), ("p", DType::Bool), ("a", DType::arr(DType::Int))]);
    let run = |s: &Stmt, mods: Vec<Name>| {
        stmt_vcg(VcInput {
            mods,
            ..input(&m, s, vec![e("true")], vec![], l.clone())
        })
    };
    let dup = Stmt::Assign(vec![
        (Lhs::Var("x".into()), Rhs::Exp(e("1"))),
        (Lhs::Var("x".into()), Rhs::Exp(e("2"))),
    ]);
    assert!(run(&dup, vec![]).unwrap_err().0.contains("variables not distinct"));
    let s = Stmt::assign_var("a", e("a"));
    assert!(run(&s, vec!["a".into()]).unwrap_err().0.contains("assigning to mods"));
    let s = Stmt::assign_var("x", e("p"));
    assert!(run(&s, vec![]).unwrap_err().0.contains("type mismatch"));
    let s = Stmt::assign_var("zz", e("1"));
    assert!(run(&s, vec![]).unwrap_err().0.contains("undeclared"));
    let s = Stmt::Assign(vec![(Lhs::ArrSel(e("a"), e("0")), Rhs::Exp(e("1")))]);
    assert!(run(&s, vec![]).unwrap_err().0.contains("modifies clause"));
    let frames = run(&s, vec!["a".into()]).unwrap();
    assert_eq!(update_frames(&frames, "a"), 1);
    assert!(count_in(&frames, |x| *x == e("(< 0 (len a))")) >= 1);
}

#[test]
fn ninety_one_shape() {
    let vcs = program_vcg(&corpus("91")).unwrap();
    assert_eq!(vcs.len(), 1);
    assert_eq!(vcs[0].method, "M");
    assert!(!vcs[0].conditions.is_empty());
    let (pre, dec, out) = ninety_one_call_shapes(&vcs[0].conditions);
    assert!(pre >= 1 && dec >= 1 && out >= 1, "{pre} {dec} {out}");
    // closed over the in-parameter
    for c in &vcs[0].conditions {
        assert!(matches!(c, Exp::Forall(n, DType::Int, _) if n == "n"));
    }
}

#[test]
fn swap_shape() {
    let vcs = program_vcg(&corpus("swap")).unwrap();
    let conds = &vcs[0].conditions;
    assert_eq!(update_frames(conds, "a"), 2);
    // bounds obligations for both updates
    assert!(count_in(conds, |x| *x == e("(< i (len a))")) >= 1);
    assert!(count_in(conds, |x| *x == e("(< j (len a))")) >= 1);
}

#[test]
fn trivial_method() {
    let out = vcg_of(
        "(program (method T (ins (k int)) (outs) (requires (< 0 k)) (ensures true) (decreases) (modifies) (body (return))))",
    )
    .unwrap();
    assert_eq!(out[0].conditions, vec![e("(forall (k int) (==> (< 0 k) true))")]);
    assert_eq!(program_vcg(&Program::default()), Ok(vec![]));
}

#[test]
fn program_level_errors() {
    let dup = format!(
        "(program (method A (ins) (outs) {METHOD_HEAD} (body (skip)))
                  (method A (ins) (outs) {METHOD_HEAD} (body (skip))))"
    );
    assert!(vcg_of(&dup).is_err());
    // missing modifies on an array update
    let t = corpus_text("swap").replace("(modifies a)", "(modifies)");
    assert!(vcg_of(&t).unwrap_err().0.contains("modifies"));
    // callee modifies an array the caller may not
    let t = corpus_text("swap_twice").replacen(
        "(modifies a)\n    (body\n      (then (metcall",
        "(modifies)\n    (body\n      (then (metcall",
        1,
    );
    assert_ne!(t, corpus_text("swap_twice"));
    assert!(vcg_of(&t).is_err());
    // reads before initialization
    let t = format!("(program (method U (ins) (outs (r int)) {METHOD_HEAD} (body (dec ((x int)) (assign ((r x)))))))");
    assert!(vcg_of(&t).unwrap_err().0.contains("initialized"));
    // assignment to an in-parameter
    let t = format!("(program (method U (ins (n int)) (outs) {METHOD_HEAD} (body (assign ((n 1))))))");
    assert!(vcg_of(&t).is_err());
    // function calls are outside the supported fragment
    let t = "(program (function F (ins (x int)) int x)
                      (method U (ins) (outs (r int)) (requires) (ensures (== r (call F 1))) (decreases) (modifies)
                        (body (assign ((r 1))))))";
    assert!(vcg_of(t).unwrap_err().0.contains("unsupported"));
    // loops need a decreases clause
    let t = corpus_text("sum_to_n").replace("(decreases (- n i))", "(decreases)");
    assert!(vcg_of(&t).unwrap_err().0.contains("decreases"));
    // recursion needs one too
    let t = corpus_text("factorial").replace("(decreases n)", "(decreases)");
    assert!(vcg_of(&t).is_err());
}

#[test]
fn every_condition_is_boolean() {
    for f in minidafny::simrel::corpus_files(&corpus_dir()).unwrap() {
        let p = minidafny::simrel::load_program(&f).unwrap();
        for out in program_vcg(&p).unwrap() {
            for c in &out.conditions {
                assert_eq!(
                    get_types(&[], std::slice::from_ref(c)),
                    Ok(vec![DType::Bool]),
                    "{}",
                    f.display()
                );
            }
        }
    }
}

#[test]
fn deterministic() {
    let p = corpus("binary_search");
    assert_eq!(program_vcg(&p), program_vcg(&p));
}

#[test]
fn loop_conditions_have_three_parts() {
    let vcs = program_vcg(&corpus("sum_to_n")).unwrap();
    let conds = &vcs[0].conditions;
    // the snapshot of the measure is a fresh d-name compared lexicographically
    assert!(
        count_in(
            conds,
            |x| matches!(x, Exp::Let(bs, _) if bs.iter().any(|(d, v)| d.starts_with('d') && *v == e("(- n i)")))
        ) >= 1
    );
    assert!(
        count_in(
            conds,
            |x| matches!(x, Exp::BinOp(BinOp::Lt, l, r) if **l == e("(- n i)") && matches!(&**r, Exp::Var(d) if d.starts_with('d')))
        ) >= 1
    );
}
