//! Source normalization applied after parsing: explicit final `Return` and
//! entry-state reads of in-parameters inside `ensures`.

use crate::ast::*;

pub fn normalize(p: &Program) -> Program {
    Program::new(
        p.members
            .iter()
            .map(|m| match m {
                Member::Method(m) => Member::Method(normalize_method(m)),
                f => f.clone(),
            })
            .collect(),
    )
}

pub fn normalize_method(m: &Method) -> Method {
    let body = if matches!(m.body.last_in_sequence(), Stmt::Return) {
        m.body.clone()
    } else {
        Stmt::then(m.body.clone(), Stmt::Return)
    };
    let ins: Vec<&str> = m.ins.iter().map(|(x, _)| x.as_str()).collect();
    Method {
        body,
        ens: m.ens.iter().map(|e| wrap_ins(e, &ins, &mut Vec::new())).collect(),
        ..m.clone()
    }
}

/// Replaces free occurrences of in-parameters by `Old(Var x)`. A variable
/// that is already the direct operand of `Old` is left alone, so applying
/// the pass twice changes nothing.
fn wrap_ins(e: &Exp, ins: &[&str], bound: &mut Vec<Name>) -> Exp {
    let go = |e: &Exp, bound: &mut Vec<Name>| Box::new(wrap_ins(e, ins, bound));
    match e {
        Exp::Var(x) if ins.contains(&x.as_str()) && !bound.contains(x) => Exp::Old(Box::new(e.clone())),
        Exp::Old(inner) if matches!(**inner, Exp::Var(_)) => e.clone(),
        Exp::IntLit(_) | Exp::BoolLit(_) | Exp::StrLit(_) | Exp::Var(_) => e.clone(),
        Exp::UnOp(op, a) => Exp::UnOp(*op, go(a, bound)),
        Exp::BinOp(op, a, b) => Exp::BinOp(*op, go(a, bound), go(b, bound)),
        Exp::Ite(c, t, f) => Exp::Ite(go(c, bound), go(t, bound), go(f, bound)),
        Exp::ArrLen(a) => Exp::ArrLen(go(a, bound)),
        Exp::ArrSel(a, i) => Exp::ArrSel(go(a, bound), go(i, bound)),
        Exp::FunCall(f, args) => Exp::FunCall(f.clone(), args.iter().map(|a| wrap_ins(a, ins, bound)).collect()),
        Exp::Forall(x, t, body) => {
            bound.push(x.clone());
            let body = go(body, bound);
            bound.pop();
            Exp::Forall(x.clone(), t.clone(), body)
        }
        Exp::Let(binds, body) => {
            let binds: Vec<_> = binds
                .iter()
                .map(|(x, be)| (x.clone(), wrap_ins(be, ins, bound)))
                .collect();
            let n = bound.len();
            bound.extend(binds.iter().map(|(x, _)| x.clone()));
            let body = go(body, bound);
            bound.truncate(n);
            Exp::Let(binds, body)
        }
        Exp::Old(a) => Exp::Old(go(a, bound)),
        Exp::OldHeap(a) => Exp::OldHeap(go(a, bound)),
        Exp::Prev(a) => Exp::Prev(go(a, bound)),
        Exp::PrevHeap(a) => Exp::PrevHeap(go(a, bound)),
        Exp::SetPrev(a) => Exp::SetPrev(go(a, bound)),
        Exp::ForallHeap(h, a) => Exp::ForallHeap(h.clone(), go(a, bound)),
    }
}
