//! AST to canonical S-expression text.

use super::sexp::{write_pretty, SExp};
use crate::ast::*;

const WIDTH: usize = 88;

fn atom(s: impl Into<String>) -> SExp {
    SExp::atom(s)
}

pub fn type_sexp(t: &DType) -> SExp {
    match t {
        DType::Int => atom("int"),
        DType::Bool => atom("bool"),
        DType::Str => atom("string"),
        DType::Arr(e) => SExp::tagged("array", vec![type_sexp(e)]),
    }
}

fn bind_sexp(x: &str, t: &DType) -> SExp {
    SExp::list(vec![atom(x), type_sexp(t)])
}

fn section(tag: &str, items: Vec<SExp>) -> SExp {
    SExp::tagged(tag, items)
}

pub fn exp_sexp(e: &Exp) -> SExp {
    let un = |tag: &str, e: &Exp| SExp::tagged(tag, vec![exp_sexp(e)]);
    match e {
        Exp::IntLit(i) => atom(i.to_string()),
        Exp::BoolLit(b) => atom(b.to_string()),
        Exp::StrLit(s) => SExp::string(s.clone()),
        Exp::Var(x) => atom(x.clone()),
        Exp::UnOp(UnOp::Not, e) => un("not", e),
        Exp::UnOp(UnOp::Neg, e) => un("neg", e),
        Exp::BinOp(op, a, b) => SExp::tagged(op.symbol(), vec![exp_sexp(a), exp_sexp(b)]),
        Exp::Ite(c, t, f) => SExp::tagged("ite", vec![exp_sexp(c), exp_sexp(t), exp_sexp(f)]),
        Exp::ArrLen(a) => un("len", a),
        Exp::ArrSel(a, i) => SExp::tagged("sel", vec![exp_sexp(a), exp_sexp(i)]),
        Exp::FunCall(f, args) => {
            let mut items = vec![atom(f.clone())];
            items.extend(args.iter().map(exp_sexp));
            SExp::tagged("call", items)
        }
        Exp::Forall(x, t, body) => SExp::tagged("forall", vec![bind_sexp(x, t), exp_sexp(body)]),
        Exp::Let(binds, body) => SExp::tagged(
            "let",
            vec![
                SExp::list(
                    binds
                        .iter()
                        .map(|(x, e)| SExp::list(vec![atom(x.clone()), exp_sexp(e)]))
                        .collect(),
                ),
                exp_sexp(body),
            ],
        ),
        Exp::Old(e) => un("old", e),
        Exp::OldHeap(e) => un("oldheap", e),
        Exp::Prev(e) => un("prev", e),
        Exp::PrevHeap(e) => un("prevheap", e),
        Exp::SetPrev(e) => un("setprev", e),
        Exp::ForallHeap(havoc, e) => SExp::tagged(
            "forallheap",
            vec![SExp::list(havoc.iter().map(|x| atom(x.clone())).collect()), exp_sexp(e)],
        ),
    }
}

pub fn stmt_sexp(s: &Stmt) -> SExp {
    match s {
        Stmt::Skip => SExp::tagged("skip", vec![]),
        Stmt::Return => SExp::tagged("return", vec![]),
        Stmt::Assert(e) => SExp::tagged("assert", vec![exp_sexp(e)]),
        Stmt::Then(a, b) => SExp::tagged("then", vec![stmt_sexp(a), stmt_sexp(b)]),
        Stmt::If(g, t, e) => SExp::tagged("if", vec![exp_sexp(g), stmt_sexp(t), stmt_sexp(e)]),
        Stmt::Dec(binds, scope) => SExp::tagged(
            "dec",
            vec![
                SExp::list(
                    binds
                        .iter()
                        .map(|b| {
                            let mut items = vec![atom(b.name.clone()), type_sexp(&b.ty)];
                            items.extend(b.init.iter().map(exp_sexp));
                            SExp::list(items)
                        })
                        .collect(),
                ),
                stmt_sexp(scope),
            ],
        ),
        Stmt::Assign(pairs) => SExp::tagged(
            "assign",
            vec![SExp::list(
                pairs
                    .iter()
                    .map(|(l, r)| {
                        let l = match l {
                            Lhs::Var(x) => atom(x.clone()),
                            Lhs::ArrSel(a, i) => SExp::tagged("sel", vec![exp_sexp(a), exp_sexp(i)]),
                        };
                        let r = match r {
                            Rhs::Exp(e) => exp_sexp(e),
                            Rhs::ArrAlloc(t, n) => SExp::tagged("alloc", vec![type_sexp(t), exp_sexp(n)]),
                        };
                        SExp::list(vec![l, r])
                    })
                    .collect(),
            )],
        ),
        Stmt::While(w) => SExp::tagged(
            "while",
            vec![
                exp_sexp(&w.guard),
                section("invariants", w.invs.iter().map(exp_sexp).collect()),
                section("decreases", w.decrs.iter().map(exp_sexp).collect()),
                section("modifies", w.mods.iter().map(|x| atom(x.clone())).collect()),
                stmt_sexp(&w.body),
            ],
        ),
        Stmt::MetCall(lhss, f, args) => SExp::tagged(
            "metcall",
            vec![
                SExp::list(lhss.iter().map(|x| atom(x.clone())).collect()),
                atom(f.clone()),
                SExp::list(args.iter().map(exp_sexp).collect()),
            ],
        ),
    }
}

pub fn member_sexp(m: &Member) -> SExp {
    let binds = |bs: &[(Name, DType)]| bs.iter().map(|(x, t)| bind_sexp(x, t)).collect();
    match m {
        Member::Method(m) => SExp::tagged(
            "method",
            vec![
                atom(m.name.clone()),
                section("ins", binds(&m.ins)),
                section("outs", binds(&m.outs)),
                section("requires", m.reqs.iter().map(exp_sexp).collect()),
                section("ensures", m.ens.iter().map(exp_sexp).collect()),
                section("decreases", m.decreases.iter().map(exp_sexp).collect()),
                section("modifies", m.mods.iter().map(|x| atom(x.clone())).collect()),
                section("body", vec![stmt_sexp(&m.body)]),
            ],
        ),
        Member::Function(f) => SExp::tagged(
            "function",
            vec![
                atom(f.name.clone()),
                section("ins", binds(&f.ins)),
                type_sexp(&f.res_ty),
                exp_sexp(&f.body),
            ],
        ),
    }
}

pub fn print_sexp(e: &SExp) -> String {
    let mut out = String::new();
    write_pretty(e, 0, WIDTH, &mut out);
    out
}

pub fn print_exp(e: &Exp) -> String {
    print_sexp(&exp_sexp(e))
}

pub fn print_stmt(s: &Stmt) -> String {
    print_sexp(&stmt_sexp(s))
}

pub fn print_program(p: &Program) -> String {
    if p.members.is_empty() {
        return "(program)\n".to_string();
    }
    let mut out = String::from("(program");
    for m in &p.members {
        out.push_str("\n  ");
        write_pretty(&member_sexp(m), 2, WIDTH, &mut out);
    }
    out.push_str(")\n");
    out
}

/// One `(vc NAME (params ...) cond*)` record per method.
pub fn print_vc_record(name: &str, params: &[(Name, DType)], conds: &[Exp]) -> String {
    let mut items = vec![
        atom(name),
        section("params", params.iter().map(|(x, t)| bind_sexp(x, t)).collect()),
    ];
    items.extend(conds.iter().map(exp_sexp));
    let mut out = print_sexp(&SExp::tagged("vc", items));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse::*;
    use super::*;

    #[test]
    fn empty_program_prints_canonically() {
        assert_eq!(print_program(&Program::default()).trim(), "(program)");
    }

    #[test]
    fn strings_and_negatives_round_trip() {
        let e = Exp::bin(
            BinOp::Eq,
            Exp::StrLit("a \"q\" \\ b".into()),
            Exp::bin(BinOp::Sub, Exp::int(-3), Exp::neg(Exp::int(4))),
        );
        assert_eq!(parse_exp_text(&print_exp(&e)).unwrap(), e);
    }

    #[test]
    fn long_statements_wrap_and_reparse() {
        let mut s = Stmt::Skip;
        for k in 0..30 {
            s = Stmt::then(Stmt::assign_var(format!("x{k}"), Exp::int(k)), s);
        }
        let text = print_stmt(&s);
        assert!(text.contains('\n'));
        assert_eq!(parse_stmt_text(&text).unwrap(), s);
    }
}
