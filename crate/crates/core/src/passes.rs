//! Source-to-source passes run before compilation.

use std::collections::BTreeSet;

use crate::ast::*;

pub fn remove_assert(p: &Program) -> Program {
    fn go(s: &Stmt) -> Stmt {
        match s {
            Stmt::Assert(_) => Stmt::Skip,
            Stmt::Then(a, b) => Stmt::then(go(a), go(b)),
            Stmt::If(g, t, e) => Stmt::if_(g.clone(), go(t), go(e)),
            Stmt::Dec(binds, scope) => Stmt::Dec(binds.clone(), Box::new(go(scope))),
            Stmt::While(w) => Stmt::While(While {
                body: Box::new(go(&w.body)),
                ..w.clone()
            }),
            s => s.clone(),
        }
    }
    map_method_bodies(p, go)
}

fn map_method_bodies(p: &Program, f: impl Fn(&Stmt) -> Stmt) -> Program {
    Program::new(
        p.members
            .iter()
            .map(|m| match m {
                Member::Method(m) => Member::Method(Method {
                    body: f(&m.body),
                    ..m.clone()
                }),
                f => f.clone(),
            })
            .collect(),
    )
}

/// Consistent renaming with globally unique `v<k>` names.
struct Freshen {
    counter: usize,
    scope: Vec<(Name, Name)>,
}

impl Freshen {
    fn bind(&mut self, x: &str) -> Name {
        let fresh = format!("v{}", self.counter);
        self.counter += 1;
        self.scope.push((x.to_string(), fresh.clone()));
        fresh
    }

    fn lookup(&self, x: &str) -> Name {
        self.scope
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, f)| f.clone())
            .unwrap_or_else(|| x.to_string())
    }

    fn exp(&mut self, e: &Exp) -> Exp {
        match e {
            Exp::Var(x) => Exp::Var(self.lookup(x)),
            Exp::IntLit(_) | Exp::BoolLit(_) | Exp::StrLit(_) => e.clone(),
            Exp::UnOp(op, a) => Exp::UnOp(*op, Box::new(self.exp(a))),
            Exp::BinOp(op, a, b) => Exp::bin(*op, self.exp(a), self.exp(b)),
            Exp::Ite(c, t, f) => Exp::ite(self.exp(c), self.exp(t), self.exp(f)),
            Exp::ArrLen(a) => Exp::len(self.exp(a)),
            Exp::ArrSel(a, i) => Exp::sel(self.exp(a), self.exp(i)),
            Exp::FunCall(f, args) => Exp::FunCall(f.clone(), args.iter().map(|a| self.exp(a)).collect()),
            Exp::Forall(x, t, body) => {
                let n = self.scope.len();
                let fx = self.bind(x);
                let body = self.exp(body);
                self.scope.truncate(n);
                Exp::forall(fx, t.clone(), body)
            }
            Exp::Let(binds, body) => {
                let rhs: Vec<Exp> = binds.iter().map(|(_, e)| self.exp(e)).collect();
                let n = self.scope.len();
                let names: Vec<Name> = binds.iter().map(|(x, _)| self.bind(x)).collect();
                let body = self.exp(body);
                self.scope.truncate(n);
                Exp::let_in(names.into_iter().zip(rhs).collect(), body)
            }
            Exp::Old(a) => Exp::old(self.exp(a)),
            Exp::OldHeap(a) => Exp::OldHeap(Box::new(self.exp(a))),
            Exp::Prev(a) => Exp::prev(self.exp(a)),
            Exp::PrevHeap(a) => Exp::prev_heap(self.exp(a)),
            Exp::SetPrev(a) => Exp::set_prev(self.exp(a)),
            Exp::ForallHeap(h, a) => Exp::forall_heap(h.iter().map(|x| self.lookup(x)).collect(), self.exp(a)),
        }
    }

    fn exps(&mut self, es: &[Exp]) -> Vec<Exp> {
        es.iter().map(|e| self.exp(e)).collect()
    }

    fn names(&self, xs: &[Name]) -> Vec<Name> {
        xs.iter().map(|x| self.lookup(x)).collect()
    }

    fn stmt(&mut self, s: &Stmt) -> Stmt {
        match s {
            Stmt::Skip | Stmt::Return => s.clone(),
            Stmt::Assert(e) => Stmt::Assert(self.exp(e)),
            Stmt::Then(a, b) => {
                let a = self.stmt(a);
                Stmt::then(a, self.stmt(b))
            }
            Stmt::If(g, t, e) => {
                let g = self.exp(g);
                let t = self.stmt(t);
                Stmt::if_(g, t, self.stmt(e))
            }
            Stmt::Dec(binds, scope) => {
                // initializers see the enclosing scope
                let inits: Vec<Option<Exp>> = binds.iter().map(|b| b.init.as_ref().map(|e| self.exp(e))).collect();
                let n = self.scope.len();
                let binds = binds
                    .iter()
                    .zip(inits)
                    .map(|(b, init)| DecBind {
                        name: self.bind(&b.name),
                        ty: b.ty.clone(),
                        init,
                    })
                    .collect();
                let scope = self.stmt(scope);
                self.scope.truncate(n);
                Stmt::Dec(binds, Box::new(scope))
            }
            Stmt::Assign(pairs) => Stmt::Assign(
                pairs
                    .iter()
                    .map(|(l, r)| {
                        let l = match l {
                            Lhs::Var(x) => Lhs::Var(self.lookup(x)),
                            Lhs::ArrSel(a, i) => Lhs::ArrSel(self.exp(a), self.exp(i)),
                        };
                        let r = match r {
                            Rhs::Exp(e) => Rhs::Exp(self.exp(e)),
                            Rhs::ArrAlloc(t, n) => Rhs::ArrAlloc(t.clone(), self.exp(n)),
                        };
                        (l, r)
                    })
                    .collect(),
            ),
            Stmt::While(w) => Stmt::While(While {
                guard: self.exp(&w.guard),
                invs: self.exps(&w.invs),
                decrs: self.exps(&w.decrs),
                mods: self.names(&w.mods),
                body: Box::new(self.stmt(&w.body)),
            }),
            Stmt::MetCall(lhss, f, args) => Stmt::MetCall(self.names(lhss), f.clone(), self.exps(args)),
        }
    }

    fn params(&mut self, ps: &[(Name, DType)]) -> Vec<(Name, DType)> {
        ps.iter().map(|(x, t)| (self.bind(x), t.clone())).collect()
    }

    fn member(&mut self, m: &Member) -> Member {
        self.scope.clear();
        match m {
            Member::Method(m) => {
                let ins = self.params(&m.ins);
                let outs = self.params(&m.outs);
                Member::Method(Method {
                    name: m.name.clone(),
                    ins,
                    outs,
                    reqs: self.exps(&m.reqs),
                    ens: self.exps(&m.ens),
                    decreases: self.exps(&m.decreases),
                    mods: self.names(&m.mods),
                    body: self.stmt(&m.body),
                })
            }
            Member::Function(f) => {
                let ins = self.params(&f.ins);
                Member::Function(Function {
                    name: f.name.clone(),
                    ins,
                    res_ty: f.res_ty.clone(),
                    body: self.exp(&f.body),
                })
            }
        }
    }
}

pub fn freshen_program(p: &Program) -> Program {
    let mut fr = Freshen {
        counter: 0,
        scope: Vec::new(),
    };
    Program::new(p.members.iter().map(|m| fr.member(m)).collect())
}

fn exp_binders(e: &Exp, out: &mut Vec<Name>) {
    match e {
        Exp::Forall(x, _, _) => out.push(x.clone()),
        Exp::Let(binds, _) => out.extend(binds.iter().map(|(x, _)| x.clone())),
        _ => {}
    }
    for c in e.children() {
        exp_binders(c, out);
    }
}

fn stmt_binders(s: &Stmt, out: &mut Vec<Name>) {
    if let Stmt::Dec(binds, _) = s {
        out.extend(binds.iter().map(|b| b.name.clone()));
    }
    for e in s.own_exps() {
        exp_binders(e, out);
    }
    for c in s.children() {
        stmt_binders(c, out);
    }
}

/// Every binder of the program, in traversal order.
pub fn program_binders(p: &Program) -> Vec<Name> {
    let mut out = Vec::new();
    for m in &p.members {
        match m {
            Member::Method(m) => {
                out.extend(m.ins.iter().chain(m.outs.iter()).map(|(x, _)| x.clone()));
                for e in m.reqs.iter().chain(&m.ens).chain(&m.decreases) {
                    exp_binders(e, &mut out);
                }
                stmt_binders(&m.body, &mut out);
            }
            Member::Function(f) => {
                out.extend(f.ins.iter().map(|(x, _)| x.clone()));
                exp_binders(&f.body, &mut out);
            }
        }
    }
    out
}

pub fn is_fresh_program(p: &Program) -> bool {
    let binders = program_binders(p);
    let mut seen = BTreeSet::new();
    binders.iter().all(|x| x.starts_with('v') && seen.insert(x.as_str()))
}

/// No `Dec` inside `s` rebinds a name from `declared` or from an enclosing
/// `Dec` within `s`.
pub fn no_shadow(declared: &BTreeSet<Name>, s: &Stmt) -> bool {
    match s {
        Stmt::Dec(binds, scope) => {
            let mut inner = declared.clone();
            for b in binds {
                if !inner.insert(b.name.clone()) {
                    return false;
                }
            }
            no_shadow(&inner, scope)
        }
        _ => s.children().into_iter().all(|c| no_shadow(declared, c)),
    }
}

/// `no_shadow` for every method body, starting from its parameters.
pub fn program_no_shadow(p: &Program) -> bool {
    p.methods().all(|m| {
        let declared = m.ins.iter().chain(&m.outs).map(|(x, _)| x.clone()).collect();
        no_shadow(&declared, &m.body)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, parse_stmt_text};

    const TWO: &str = r#"
    (program
      (method A (ins (x int)) (outs (y int)) (requires (< 0 x)) (ensures (== y x))
        (decreases) (modifies)
        (body (then (assert (< 0 x)) (dec ((x int 1)) (dec ((x int (+ x 1))) (assign ((y x))))))))
      (method B (ins) (outs (x int)) (requires) (ensures (forall (k int) (< k (+ k 1))))
        (decreases) (modifies)
        (body (dec ((temp int 3)) (assign ((x temp)))))))"#;

    #[test]
    fn remove_assert_replaces_with_skip() {
        let p = parse_program(TWO).unwrap();
        let q = remove_assert(&p);
        let Stmt::Then(first, _) = &q.method("A").unwrap().body else {
            panic!()
        };
        assert_eq!(**first, Stmt::Skip);
        assert_eq!(remove_assert(&q), q);
        assert!(!q
            .methods()
            .any(|m| m.body.any_stmt(&mut |s| matches!(s, Stmt::Assert(_)))));
    }

    #[test]
    fn freshen_satisfies_checkers() {
        let p = parse_program(TWO).unwrap();
        assert!(!is_fresh_program(&p));
        assert!(!program_no_shadow(&p));
        let q = freshen_program(&p);
        assert!(is_fresh_program(&q));
        assert!(program_no_shadow(&q));
        let a = q.method("A").unwrap();
        let b = q.method("B").unwrap();
        assert_ne!(a.ins[0].0, b.outs[0].0);
        // re-freshening keeps both properties
        let r = freshen_program(&q);
        assert!(is_fresh_program(&r) && program_no_shadow(&r));
    }

    #[test]
    fn freshen_follows_binders() {
        let p = parse_program(TWO).unwrap();
        let q = freshen_program(&p);
        let a = q.method("A").unwrap();
        let x = &a.ins[0].0;
        assert_eq!(a.reqs[0], Exp::bin(BinOp::Lt, Exp::int(0), Exp::var(x.clone())));
        // the inner initializer reads the middle declaration, not the parameter
        let Stmt::Then(_, dec) = &a.body else { panic!() };
        let Stmt::Dec(outer, inner) = &**dec else { panic!() };
        let Stmt::Dec(inner_binds, _) = &**inner else { panic!() };
        assert_eq!(
            inner_binds[0].init,
            Some(Exp::bin(BinOp::Add, Exp::var(outer[0].name.clone()), Exp::int(1)))
        );
    }

    #[test]
    fn no_shadow_cases() {
        let s = parse_stmt_text("(dec ((x int)) (dec ((x int)) (skip)))").unwrap();
        assert!(!no_shadow(&BTreeSet::new(), &s));
        let s = parse_stmt_text("(dec ((x int)) (dec ((y int)) (skip)))").unwrap();
        assert!(no_shadow(&BTreeSet::new(), &s));
        assert!(!no_shadow(&["y".to_string()].into_iter().collect(), &s));
    }
}
