//! Human-readable SML-like rendering and a structural S-expression dump.

use super::syntax::*;
use crate::frontend::print::print_sexp;
use crate::frontend::SExp;

fn ind(n: usize) -> String {
    " ".repeat(n)
}

fn is_atomic(e: &TExp) -> bool {
    match e {
        TExp::Int(i) => i.sign() != num_bigint::Sign::Minus,
        TExp::Bool(_) | TExp::Str(_) | TExp::Unit | TExp::Var(_) | TExp::Tuple(_) => true,
        TExp::Deref(x) => is_atomic(x),
        _ => false,
    }
}

fn int_lit(i: &num_bigint::BigInt) -> String {
    let s = i.to_string();
    match s.strip_prefix('-') {
        Some(rest) => format!("~{rest}"),
        None => s,
    }
}

fn paren(e: &TExp, n: usize) -> String {
    let s = exp(e, n);
    if is_atomic(e) {
        s
    } else {
        format!("({s})")
    }
}

fn app_spine(e: &TExp) -> (&TExp, Vec<&TExp>) {
    let mut args = Vec::new();
    let mut cur = e;
    while let TExp::App(f, a) = cur {
        args.push(&**a);
        cur = f;
    }
    args.reverse();
    (cur, args)
}

fn defs(ds: &[TDef], n: usize, first_kw: &str) -> String {
    let mut out = String::new();
    for (k, d) in ds.iter().enumerate() {
        let mut params = vec![d.param.as_str()];
        let mut body = &d.body;
        while let TExp::Fun(x, b) = body {
            params.push(x);
            body = b;
        }
        let kw = if k == 0 { first_kw } else { "and" };
        if k > 0 {
            out.push('\n');
            out.push_str(&ind(n));
        }
        out.push_str(&format!(
            "{kw} {} {} =\n{}{}",
            d.fname,
            params.join(" "),
            ind(n + 2),
            exp(body, n + 2)
        ));
    }
    out
}

/// Renders an expression whose first line starts at column `n`.
pub fn exp(e: &TExp, n: usize) -> String {
    match e {
        TExp::Int(i) => int_lit(i),
        TExp::Bool(b) => b.to_string(),
        TExp::Str(s) => format!("{s:?}"),
        TExp::Unit => "()".into(),
        TExp::Var(x) => x.clone(),
        TExp::App(..) => {
            let (f, args) = app_spine(e);
            let mut s = paren(f, n);
            for a in args {
                s.push(' ');
                s.push_str(&paren(a, n));
            }
            s
        }
        TExp::Fun(x, b) => format!("fn {x} => {}", exp(b, n + 2)),
        TExp::Letrec(ds, scope) => format!(
            "let\n{}{}\n{}in\n{}{}\n{}end",
            ind(n + 2),
            defs(ds, n + 2, "fun"),
            ind(n),
            ind(n + 2),
            exp(scope, n + 2),
            ind(n)
        ),
        TExp::Let(x, rhs, body) => format!(
            "let val {x} = {}\n{}in {}\n{}end",
            exp(rhs, n + 10),
            ind(n),
            exp(body, n + 3),
            ind(n)
        ),
        TExp::If(c, t, f) => format!(
            "if {}\n{}then {}\n{}else {}",
            exp(c, n + 3),
            ind(n),
            exp(t, n + 5),
            ind(n),
            exp(f, n + 5)
        ),
        TExp::Seq(..) => {
            let mut items = Vec::new();
            let mut cur = e;
            while let TExp::Seq(a, b) = cur {
                items.push(&**a);
                cur = b;
            }
            items.push(cur);
            let body: Vec<String> = items.iter().map(|x| exp(x, n + 1)).collect();
            format!("({})", body.join(&format!(";\n{}", ind(n + 1))))
        }
        TExp::Ref(x) => format!("ref {}", paren(x, n)),
        TExp::Deref(x) => format!("!{}", paren(x, n)),
        TExp::Assign(l, r) => format!("{} := {}", paren(l, n), exp(r, n + 4)),
        TExp::ArrAlloc(len, init) => format!("Array.array {} {}", paren(len, n), paren(init, n)),
        TExp::ArrSub(a, i) => format!("Array.sub ({}, {})", exp(a, n), exp(i, n)),
        TExp::ArrUpd(a, i, v) => {
            format!("Array.update ({}, {}, {})", exp(a, n), exp(i, n), exp(v, n))
        }
        TExp::Tuple(es) => {
            let items: Vec<String> = es.iter().map(|x| exp(x, n)).collect();
            format!("({})", items.join(", "))
        }
        TExp::Proj(0, x) => format!("fst {}", paren(x, n)),
        TExp::Proj(1, x) => format!("snd {}", paren(x, n)),
        TExp::Proj(i, x) => format!("#{} {}", i + 1, paren(x, n)),
        TExp::Raise(x) => format!("raise {x}"),
        TExp::Handle(b, x, h) => format!("({})\n{}handle {x} => {}", exp(b, n + 1), ind(n + 2), exp(h, n + 4)),
        TExp::Prim(op, a, b) => format!("{} {} {}", paren(a, n), op.name(), paren(b, n)),
        TExp::Neg(x) => format!("~{}", paren(x, n)),
        TExp::Not(x) => format!("not {}", paren(x, n)),
    }
}

pub fn pretty_decs(decs: &[TDec]) -> String {
    let mut out = String::new();
    for d in decs {
        match d {
            TDec::Exn(x) => out.push_str(&format!("exception {x};\n")),
            TDec::Letrec(ds) => {
                out.push_str(&defs(ds, 0, "fun"));
                out.push_str(";\n");
            }
            TDec::Val(x, e) => out.push_str(&format!("val {x} = {};\n", exp(e, 6))),
        }
        out.push('\n');
    }
    out
}

fn a(s: impl Into<String>) -> SExp {
    SExp::atom(s)
}

fn t(tag: &str, items: Vec<SExp>) -> SExp {
    SExp::tagged(tag, items)
}

fn def_sexp(d: &TDef) -> SExp {
    SExp::list(vec![a(d.fname.clone()), a(d.param.clone()), exp_sexp(&d.body)])
}

pub fn exp_sexp(e: &TExp) -> SExp {
    let b = |x: &TExp| exp_sexp(x);
    match e {
        TExp::Int(i) => t("int", vec![a(i.to_string())]),
        TExp::Bool(v) => t("bool", vec![a(v.to_string())]),
        TExp::Str(s) => t("str", vec![SExp::string(s.clone())]),
        TExp::Unit => t("unit", vec![]),
        TExp::Var(x) => t("var", vec![a(x.clone())]),
        TExp::App(f, x) => t("app", vec![b(f), b(x)]),
        TExp::Fun(x, body) => t("fun", vec![a(x.clone()), b(body)]),
        TExp::Letrec(ds, scope) => t("letrec", vec![SExp::list(ds.iter().map(def_sexp).collect()), b(scope)]),
        TExp::Let(x, r, body) => t("let", vec![a(x.clone()), b(r), b(body)]),
        TExp::If(c, x, y) => t("if", vec![b(c), b(x), b(y)]),
        TExp::Seq(x, y) => t("seq", vec![b(x), b(y)]),
        TExp::Ref(x) => t("ref", vec![b(x)]),
        TExp::Deref(x) => t("deref", vec![b(x)]),
        TExp::Assign(x, y) => t("assign", vec![b(x), b(y)]),
        TExp::ArrAlloc(x, y) => t("arralloc", vec![b(x), b(y)]),
        TExp::ArrSub(x, y) => t("arrsub", vec![b(x), b(y)]),
        TExp::ArrUpd(x, y, z) => t("arrupd", vec![b(x), b(y), b(z)]),
        TExp::Tuple(es) => t("tuple", es.iter().map(b).collect()),
        TExp::Proj(i, x) => t("proj", vec![a(i.to_string()), b(x)]),
        TExp::Raise(x) => t("raise", vec![a(x.clone())]),
        TExp::Handle(x, n, h) => t("handle", vec![b(x), a(n.clone()), b(h)]),
        TExp::Prim(op, x, y) => t("prim", vec![a(op.name()), b(x), b(y)]),
        TExp::Neg(x) => t("neg", vec![b(x)]),
        TExp::Not(x) => t("not", vec![b(x)]),
    }
}

pub fn sexp_decs(decs: &[TDec]) -> String {
    let mut out = String::new();
    for d in decs {
        let s = match d {
            TDec::Exn(x) => t("exception", vec![a(x.clone())]),
            TDec::Letrec(ds) => t("letrec", ds.iter().map(def_sexp).collect()),
            TDec::Val(x, e) => t("val", vec![a(x.clone()), exp_sexp(e)]),
        };
        out.push_str(&print_sexp(&s));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_loop_shape() {
        let i = TExp::var("i");
        let body = TExp::if_(
            TExp::prim(TPrimOp::Lt, TExp::deref(i.clone()), TExp::int(10)),
            TExp::seq(
                TExp::assign(i.clone(), TExp::prim(TPrimOp::Add, TExp::deref(i), TExp::int(1))),
                TExp::app(TExp::var("loop"), TExp::Unit),
            ),
            TExp::Unit,
        );
        let e = TExp::letrec(
            vec![TDef {
                fname: "loop".into(),
                param: "u".into(),
                body,
            }],
            TExp::app(TExp::var("loop"), TExp::Unit),
        );
        let s = exp(&e, 0);
        assert!(s.contains("fun loop u ="), "{s}");
        assert!(s.contains("i := !i + 1"), "{s}");
        assert!(s.contains("loop ()"), "{s}");
        assert_eq!(exp(&TExp::int(-1), 0), "~1");
        let dump = sexp_decs(&[TDec::Val("x".into(), e)]);
        assert!(dump.starts_with("(val") && dump.contains("(letrec"));
    }
}
