//! Weakest-precondition verification condition generator.
//!
//! [`stmt_vcg`] computes the conditions a statement needs from its
//! continuation (`post`, for normal completion) and the method
//! postcondition (`ens`, for `Return`). [`method_vcg`] closes the body
//! conditions over the in-parameters under the method's `requires`.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use crate::ast::*;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct VcgError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, VcgError> {
    Err(VcgError(msg.into()))
}

/// Typing of locals in scope, innermost last.
pub type Locals = [(Name, DType)];

fn lookup<'a>(ls: &'a Locals, x: &str) -> Option<&'a DType> {
    ls.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
}

/// Synthesizes the type of each expression under `ls`.
pub fn get_types(ls: &Locals, es: &[Exp]) -> Result<Vec<DType>, VcgError> {
    let mut scope = ls.to_vec();
    es.iter().map(|e| type_of(&mut scope, e)).collect()
}

fn expect(ls: &mut Vec<(Name, DType)>, e: &Exp, want: &DType) -> Result<(), VcgError> {
    let t = type_of(ls, e)?;
    if t == *want {
        Ok(())
    } else {
        err(format!(
            "type error: {} has type {t}, expected {want}",
            crate::frontend::print_exp(e)
        ))
    }
}

fn type_of(ls: &mut Vec<(Name, DType)>, e: &Exp) -> Result<DType, VcgError> {
    use DType::*;
    Ok(match e {
        Exp::IntLit(_) => Int,
        Exp::BoolLit(_) => Bool,
        Exp::StrLit(_) => Str,
        Exp::Var(x) => match lookup(ls, x) {
            Some(t) => t.clone(),
            None => return err(format!("type error: unbound variable {x}")),
        },
        Exp::UnOp(UnOp::Not, a) => {
            expect(ls, a, &Bool)?;
            Bool
        }
        Exp::UnOp(UnOp::Neg, a) => {
            expect(ls, a, &Int)?;
            Int
        }
        Exp::BinOp(op, a, b) => {
            if op.is_short_circuit() {
                expect(ls, a, &Bool)?;
                expect(ls, b, &Bool)?;
                Bool
            } else if op.is_arith() {
                expect(ls, a, &Int)?;
                expect(ls, b, &Int)?;
                Int
            } else if matches!(op, BinOp::Eq | BinOp::Neq) {
                let t = type_of(ls, a)?;
                expect(ls, b, &t)?;
                Bool
            } else {
                expect(ls, a, &Int)?;
                expect(ls, b, &Int)?;
                Bool
            }
        }
        Exp::Ite(c, t, f) => {
            expect(ls, c, &Bool)?;
            let ty = type_of(ls, t)?;
            expect(ls, f, &ty)?;
            ty
        }
        Exp::ArrLen(a) => match type_of(ls, a)? {
            Arr(_) => Int,
            t => return err(format!("type error: length of non-array type {t}")),
        },
        Exp::ArrSel(a, i) => {
            let t = match type_of(ls, a)? {
                Arr(t) => *t,
                t => return err(format!("type error: indexing non-array type {t}")),
            };
            expect(ls, i, &Int)?;
            t
        }
        Exp::FunCall(f, _) => return err(format!("unsupported: call to function {f}")),
        Exp::Forall(x, t, body) => {
            ls.push((x.clone(), t.clone()));
            let r = expect(ls, body, &Bool);
            ls.pop();
            r?;
            Bool
        }
        Exp::Let(binds, body) => {
            let mut tys = Vec::new();
            for (x, be) in binds {
                tys.push((x.clone(), type_of(ls, be)?));
            }
            let n = tys.len();
            ls.extend(tys);
            let r = type_of(ls, body);
            ls.truncate(ls.len() - n);
            r?
        }
        Exp::Old(a) | Exp::OldHeap(a) | Exp::Prev(a) | Exp::PrevHeap(a) | Exp::SetPrev(a) => type_of(ls, a)?,
        Exp::ForallHeap(havoc, body) => {
            for a in havoc {
                if !matches!(lookup(ls, a), Some(Arr(_))) {
                    return err(format!("type error: havocked name {a} is not an array"));
                }
            }
            expect(ls, body, &Bool)?;
            Bool
        }
    })
}

fn expect_all(ls: &Locals, es: &[Exp], want: &DType) -> Result<(), VcgError> {
    let mut scope = ls.to_vec();
    for e in es {
        expect(&mut scope, e, want)?;
    }
    Ok(())
}

/// Level of each method: strongly connected components of the call graph
/// share a level, and a component sits one above the highest component it
/// calls into. Methods that call nothing outside their component are at 0.
pub fn method_levels(p: &Program) -> BTreeMap<Name, usize> {
    let mut g: DiGraph<Name, ()> = DiGraph::new();
    let mut idx: BTreeMap<Name, NodeIndex> = BTreeMap::new();
    for m in p.methods() {
        idx.entry(m.name.clone()).or_insert_with(|| g.add_node(m.name.clone()));
    }
    for m in p.methods() {
        let from = idx[&m.name];
        m.body.any_stmt(&mut |s| {
            if let Stmt::MetCall(_, f, _) = s {
                if let Some(&to) = idx.get(f) {
                    g.update_edge(from, to, ());
                }
            }
            false
        });
    }
    // Components come out callees first.
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0usize; g.node_count()];
    for (c, nodes) in sccs.iter().enumerate() {
        for n in nodes {
            comp[n.index()] = c;
        }
    }
    let mut level_of_comp = vec![0usize; sccs.len()];
    for (c, nodes) in sccs.iter().enumerate() {
        let mut lvl = 0;
        for n in nodes {
            for succ in g.neighbors(*n) {
                let sc = comp[succ.index()];
                if sc != c {
                    lvl = lvl.max(level_of_comp[sc] + 1);
                }
            }
        }
        level_of_comp[c] = lvl;
    }
    idx.iter()
        .map(|(name, n)| (name.clone(), level_of_comp[comp[n.index()]]))
        .collect()
}

/// What a call site needs to know about its callee.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodInfo {
    pub name: Name,
    pub ins: Vec<(Name, DType)>,
    pub outs: Vec<(Name, DType)>,
    pub reqs: Vec<Exp>,
    pub ens: Vec<Exp>,
    pub decreases: Vec<Exp>,
    pub mods: Vec<Name>,
    pub level: usize,
}

pub fn method_infos(p: &Program) -> BTreeMap<Name, MethodInfo> {
    let levels = method_levels(p);
    p.methods()
        .map(|m| {
            (
                m.name.clone(),
                MethodInfo {
                    name: m.name.clone(),
                    ins: m.ins.clone(),
                    outs: m.outs.clone(),
                    reqs: m.reqs.clone(),
                    ens: m.ens.clone(),
                    decreases: m.decreases.clone(),
                    mods: m.mods.clone(),
                    level: levels[&m.name],
                },
            )
        })
        .collect()
}

/// Inputs of [`stmt_vcg`]. The generated conditions are its output.
pub struct VcInput<'a> {
    pub m: &'a BTreeMap<Name, MethodInfo>,
    /// Level of the method whose body is being processed.
    pub level: usize,
    pub stmt: &'a Stmt,
    pub post: Vec<Exp>,
    pub ens: Vec<Exp>,
    /// The enclosing method's decreases, evaluated at entry.
    pub decs: Vec<Exp>,
    pub mods: Vec<Name>,
    pub ls: Vec<(Name, DType)>,
    /// Names the generator must not use for its own binders.
    pub avoid: BTreeSet<Name>,
}

pub fn stmt_vcg(input: VcInput<'_>) -> Result<Vec<Exp>, VcgError> {
    let mut g = Gen {
        m: input.m,
        level: input.level,
        ens: input.ens,
        decs: input.decs,
        used: input.avoid,
        next: 0,
    };
    g.stmt(input.stmt, input.post, &input.mods, &input.ls)
}

struct Gen<'a> {
    m: &'a BTreeMap<Name, MethodInfo>,
    level: usize,
    ens: Vec<Exp>,
    decs: Vec<Exp>,
    used: BTreeSet<Name>,
    next: usize,
}

fn check_code(e: &Exp) -> Result<(), VcgError> {
    let mut bad = None;
    e.any(&mut |x| {
        if let Exp::FunCall(f, _) = x {
            bad = Some(format!("unsupported: call to function {f}"));
            true
        } else if x.is_verification_only() {
            bad = Some(format!(
                "unsupported: non-executable expression {} in code",
                crate::frontend::print_exp(x)
            ));
            true
        } else {
            false
        }
    });
    match bad {
        Some(msg) => err(msg),
        None => Ok(()),
    }
}

/// Lexicographic decrease of `new` below `old`, with both compared
/// components required to be non-negative. A single measure yields the
/// three separate conditions `new < old`, `0 <= new`, `0 <= old`.
fn lex_decrease(new: &[Exp], old: &[Exp]) -> Vec<Exp> {
    let zero = || Exp::int(0);
    if new.len() == 1 {
        return vec![
            Exp::bin(BinOp::Lt, new[0].clone(), old[0].clone()),
            Exp::bin(BinOp::Le, zero(), new[0].clone()),
            Exp::bin(BinOp::Le, zero(), old[0].clone()),
        ];
    }
    let mut acc: Option<Exp> = None;
    for (n, o) in new.iter().zip(old).rev() {
        let strict = conj(vec![
            Exp::bin(BinOp::Lt, n.clone(), o.clone()),
            Exp::bin(BinOp::Le, zero(), n.clone()),
            Exp::bin(BinOp::Le, zero(), o.clone()),
        ]);
        acc = Some(match acc {
            None => strict,
            Some(rest) => Exp::or(strict, Exp::and(Exp::bin(BinOp::Eq, n.clone(), o.clone()), rest)),
        });
    }
    vec![acc.unwrap_or(Exp::BoolLit(false))]
}

fn replace_old(e: &Exp, by_prev_heap: bool) -> Exp {
    let go = |x: &Exp| Box::new(replace_old(x, by_prev_heap));
    match e {
        Exp::Old(a) | Exp::OldHeap(a) => {
            if by_prev_heap {
                Exp::PrevHeap(go(a))
            } else {
                replace_old(a, by_prev_heap)
            }
        }
        Exp::IntLit(_) | Exp::BoolLit(_) | Exp::StrLit(_) | Exp::Var(_) => e.clone(),
        Exp::UnOp(op, a) => Exp::UnOp(*op, go(a)),
        Exp::BinOp(op, a, b) => Exp::BinOp(*op, go(a), go(b)),
        Exp::Ite(c, t, f) => Exp::Ite(go(c), go(t), go(f)),
        Exp::ArrLen(a) => Exp::ArrLen(go(a)),
        Exp::ArrSel(a, i) => Exp::ArrSel(go(a), go(i)),
        Exp::FunCall(f, args) => Exp::FunCall(f.clone(), args.iter().map(|a| replace_old(a, by_prev_heap)).collect()),
        Exp::Forall(x, t, b) => Exp::Forall(x.clone(), t.clone(), go(b)),
        Exp::Let(binds, b) => Exp::Let(
            binds
                .iter()
                .map(|(x, v)| (x.clone(), replace_old(v, by_prev_heap)))
                .collect(),
            go(b),
        ),
        Exp::Prev(a) => Exp::Prev(go(a)),
        Exp::PrevHeap(a) => Exp::PrevHeap(go(a)),
        Exp::SetPrev(a) => Exp::SetPrev(go(a)),
        Exp::ForallHeap(h, b) => Exp::ForallHeap(h.clone(), go(b)),
    }
}

fn default_exp(t: &DType) -> Option<Exp> {
    match t {
        DType::Int => Some(Exp::int(0)),
        DType::Bool => Some(Exp::BoolLit(false)),
        DType::Str => Some(Exp::StrLit(String::new())),
        DType::Arr(_) => None,
    }
}

impl Gen<'_> {
    fn fresh(&mut self) -> Name {
        loop {
            let x = format!("d{}", self.next);
            self.next += 1;
            if self.used.insert(x.clone()) {
                return x;
            }
        }
    }

    fn stmt(&mut self, s: &Stmt, post: Vec<Exp>, mods: &[Name], ls: &[(Name, DType)]) -> Result<Vec<Exp>, VcgError> {
        match s {
            Stmt::Return => Ok(self.ens.clone()),
            Stmt::Skip => Ok(post),
            Stmt::Assert(e) => {
                check_code(e)?;
                expect_all(ls, std::slice::from_ref(e), &DType::Bool)?;
                let mut out = vec![e.clone()];
                out.extend(post);
                Ok(out)
            }
            Stmt::Then(s1, s2) => {
                if let Stmt::Assign(pairs) = &**s1 {
                    if let [(Lhs::Var(a), Rhs::ArrAlloc(t, len))] = pairs.as_slice() {
                        return self.alloc(a, t, len, s2, post, mods, ls);
                    }
                }
                let pre2 = self.stmt(s2, post, mods, ls)?;
                self.stmt(s1, pre2, mods, ls)
            }
            Stmt::If(g, t, e) => {
                check_code(g)?;
                expect_all(ls, std::slice::from_ref(g), &DType::Bool)?;
                let wt = self.stmt(t, post.clone(), mods, ls)?;
                let we = self.stmt(e, post, mods, ls)?;
                Ok(vec![Exp::ite(g.clone(), conj(wt), conj(we))])
            }
            Stmt::Dec(binds, scope) => self.dec(binds, scope, post, mods, ls),
            Stmt::Assign(pairs) => self.assign(pairs, post, mods, ls),
            Stmt::While(w) => self.while_(w, post, mods, ls),
            Stmt::MetCall(lhss, f, args) => self.call(lhss, f, args, post, mods, ls),
        }
    }

    fn dec(
        &mut self,
        binds: &[DecBind],
        scope: &Stmt,
        post: Vec<Exp>,
        mods: &[Name],
        ls: &[(Name, DType)],
    ) -> Result<Vec<Exp>, VcgError> {
        let mut inner = ls.to_vec();
        let mut lets = Vec::new();
        let mut uninit = BTreeSet::new();
        for b in binds {
            if lookup(ls, &b.name).is_some() || lets.iter().any(|(x, _)| *x == b.name) {
                return err(format!("stmt_vcg:Dec: {} shadows a variable in scope", b.name));
            }
            match &b.init {
                Some(e) => {
                    check_code(e)?;
                    expect_all(ls, std::slice::from_ref(e), &b.ty)?;
                    lets.push((b.name.clone(), e.clone()));
                }
                None => {
                    uninit.insert(b.name.clone());
                }
            }
        }
        for b in binds {
            inner.push((b.name.clone(), b.ty.clone()));
            if post.iter().any(|p| p.mentions_var(&b.name)) {
                return err(format!("stmt_vcg:Dec: {} captures a name of the continuation", b.name));
            }
        }
        let conds = self.stmt(scope, post, mods, &inner)?;
        for c in &conds {
            if let Some(x) = c.free_vars().intersection(&uninit).next() {
                return err(format!("stmt_vcg:Dec: {x} may be read before it is initialized"));
            }
        }
        if lets.is_empty() {
            Ok(conds)
        } else {
            Ok(vec![Exp::let_in(lets, conj(conds))])
        }
    }

    fn assign(
        &mut self,
        pairs: &[(Lhs, Rhs)],
        post: Vec<Exp>,
        mods: &[Name],
        ls: &[(Name, DType)],
    ) -> Result<Vec<Exp>, VcgError> {
        if let [(Lhs::ArrSel(a, idx), rhs)] = pairs {
            let Exp::Var(a) = a else {
                return err("unsupported: array update through a non-variable array expression");
            };
            let Rhs::Exp(e) = rhs else {
                return err("unsupported: allocation into an array element");
            };
            return self.array_update(a, idx, e, post, mods, ls);
        }
        let mut vars = Vec::new();
        let mut es = Vec::new();
        for (l, r) in pairs {
            match (l, r) {
                (Lhs::Var(x), Rhs::Exp(e)) => {
                    vars.push(x.clone());
                    es.push(e.clone());
                }
                (Lhs::ArrSel(..), _) => return err("unsupported: multi-lhs array update"),
                (Lhs::Var(_), Rhs::ArrAlloc(..)) => {
                    return err("unsupported: allocation must be a single assignment followed by a statement")
                }
            }
        }
        self.check_targets("Assign", &vars, mods, ls)?;
        for e in &es {
            check_code(e)?;
        }
        let rhs_tys = get_types(ls, &es)?;
        let lhs_tys = get_types(ls, &vars.iter().map(Exp::var).collect::<Vec<_>>())?;
        if lhs_tys != rhs_tys {
            return err("stmt_vcg:Assign: type mismatch");
        }
        Ok(vec![Exp::let_in(vars.into_iter().zip(es).collect(), conj(post))])
    }

    fn check_targets(&self, what: &str, vars: &[Name], mods: &[Name], ls: &[(Name, DType)]) -> Result<(), VcgError> {
        let distinct: BTreeSet<&Name> = vars.iter().collect();
        if distinct.len() != vars.len() {
            return err(format!("stmt_vcg:{what}: variables not distinct"));
        }
        if let Some(x) = vars.iter().find(|x| mods.contains(x)) {
            return err(format!("stmt_vcg:{what}: assigning to mods ({x})"));
        }
        if let Some(x) = vars.iter().find(|x| lookup(ls, x).is_none()) {
            return err(format!("stmt_vcg:{what}: undeclared variable {x}"));
        }
        Ok(())
    }

    fn array_update(
        &mut self,
        a: &Name,
        idx: &Exp,
        e: &Exp,
        post: Vec<Exp>,
        mods: &[Name],
        ls: &[(Name, DType)],
    ) -> Result<Vec<Exp>, VcgError> {
        if !mods.contains(a) {
            return err(format!("stmt_vcg:ArrayUpdate: {a} is not part of the modifies clause"));
        }
        let elem = match lookup(ls, a) {
            Some(DType::Arr(t)) => (**t).clone(),
            _ => return err(format!("stmt_vcg:ArrayUpdate: {a} is not an array")),
        };
        check_code(idx)?;
        check_code(e)?;
        expect_all(ls, std::slice::from_ref(idx), &DType::Int)?;
        expect_all(ls, std::slice::from_ref(e), &elem)?;
        let av = Exp::var(a.clone());
        let i = self.fresh();
        let iv = Exp::var(i.clone());
        let frame = Exp::forall(
            i,
            DType::Int,
            Exp::imp(
                conj(vec![
                    Exp::bin(BinOp::Neq, iv.clone(), Exp::prev(idx.clone())),
                    Exp::bin(BinOp::Le, Exp::int(0), iv.clone()),
                    Exp::bin(BinOp::Lt, iv.clone(), Exp::len(av.clone())),
                ]),
                Exp::bin(
                    BinOp::Eq,
                    Exp::sel(av.clone(), iv.clone()),
                    Exp::prev_heap(Exp::sel(av.clone(), iv)),
                ),
            ),
        );
        let updated = Exp::bin(
            BinOp::Eq,
            Exp::sel(av.clone(), Exp::prev(idx.clone())),
            Exp::prev(e.clone()),
        );
        Ok(vec![
            Exp::bin(BinOp::Le, Exp::int(0), idx.clone()),
            Exp::bin(BinOp::Lt, idx.clone(), Exp::len(av)),
            Exp::set_prev(Exp::forall_heap(
                vec![a.clone()],
                Exp::imp(Exp::and(updated, frame), conj(post)),
            )),
        ])
    }

    #[allow(clippy::too_many_arguments)]
    fn alloc(
        &mut self,
        a: &Name,
        t: &DType,
        len: &Exp,
        rest: &Stmt,
        post: Vec<Exp>,
        mods: &[Name],
        ls: &[(Name, DType)],
    ) -> Result<Vec<Exp>, VcgError> {
        self.check_targets("Alloc", std::slice::from_ref(a), mods, ls)?;
        if lookup(ls, a) != Some(&DType::arr(t.clone())) {
            return err(format!(
                "stmt_vcg:Alloc: {a} does not have type {}",
                DType::arr(t.clone())
            ));
        }
        check_code(len)?;
        expect_all(ls, std::slice::from_ref(len), &DType::Int)?;
        let Some(def) = default_exp(t) else {
            return err("unsupported: allocation of arrays of arrays");
        };
        let mut mods2 = mods.to_vec();
        mods2.push(a.clone());
        let wp_rest = self.stmt(rest, post, &mods2, ls)?;
        let av = Exp::var(a.clone());
        let x = self.fresh();
        let i = self.fresh();
        let iv = Exp::var(i.clone());
        let fill = Exp::let_in(
            vec![(x.clone(), Exp::prev(def))],
            Exp::forall(
                i,
                DType::Int,
                Exp::imp(
                    Exp::and(
                        Exp::bin(BinOp::Le, Exp::int(0), iv.clone()),
                        Exp::bin(BinOp::Lt, iv.clone(), Exp::len(av.clone())),
                    ),
                    Exp::bin(BinOp::Eq, Exp::sel(av.clone(), iv), Exp::var(x)),
                ),
            ),
        );
        let shape = Exp::and(Exp::bin(BinOp::Eq, Exp::len(av), Exp::prev(len.clone())), fill);
        Ok(vec![
            Exp::bin(BinOp::Le, Exp::int(0), len.clone()),
            Exp::set_prev(Exp::forall_heap(
                vec![],
                Exp::forall(a.clone(), DType::arr(t.clone()), Exp::imp(shape, conj(wp_rest))),
            )),
        ])
    }

    fn close(vars: &[(Name, DType)], body: Exp) -> Exp {
        vars.iter()
            .rev()
            .fold(body, |acc, (x, t)| Exp::forall(x.clone(), t.clone(), acc))
    }

    fn while_(&mut self, w: &While, post: Vec<Exp>, mods: &[Name], ls: &[(Name, DType)]) -> Result<Vec<Exp>, VcgError> {
        for x in &w.mods {
            if !mods.contains(x) {
                return err(format!(
                    "stmt_vcg:While: loop modifies {x} outside the enclosing modifies"
                ));
            }
        }
        check_code(&w.guard)?;
        expect_all(ls, std::slice::from_ref(&w.guard), &DType::Bool)?;
        for e in w.invs.iter().chain(&w.decrs) {
            check_annotation(e, true)?;
        }
        expect_all(ls, &w.invs, &DType::Bool)?;
        expect_all(ls, &w.decrs, &DType::Int)?;
        if w.decrs.is_empty() {
            return err("stmt_vcg:While: loop needs a decreases clause");
        }
        let assigned = assigned_locals(&w.body);
        let mut closed = Vec::new();
        for x in &assigned {
            match lookup(ls, x) {
                Some(t) => closed.push((x.clone(), t.clone())),
                None => return err(format!("stmt_vcg:While: undeclared variable {x}")),
            }
        }
        let snaps: Vec<Name> = w.decrs.iter().map(|_| self.fresh()).collect();
        let snap_vars: Vec<Exp> = snaps.iter().cloned().map(Exp::var).collect();
        let mut body_post = w.invs.clone();
        body_post.extend(lex_decrease(&w.decrs, &snap_vars));
        let wp_body = self.stmt(&w.body, body_post, &w.mods, ls)?;
        let maintain = Self::close(
            &closed,
            Exp::imp(
                Exp::and(w.guard.clone(), conj(w.invs.clone())),
                Exp::let_in(snaps.into_iter().zip(w.decrs.clone()).collect(), conj(wp_body)),
            ),
        );
        let exit = Self::close(
            &closed,
            Exp::imp(Exp::and(Exp::not(w.guard.clone()), conj(w.invs.clone())), conj(post)),
        );
        let frame = |e: Exp| {
            if w.mods.is_empty() {
                e
            } else {
                Exp::forall_heap(w.mods.clone(), e)
            }
        };
        let mut out = w.invs.clone();
        out.push(frame(maintain));
        out.push(frame(exit));
        Ok(out)
    }

    fn call(
        &mut self,
        lhss: &[Name],
        f: &str,
        args: &[Exp],
        post: Vec<Exp>,
        mods: &[Name],
        ls: &[(Name, DType)],
    ) -> Result<Vec<Exp>, VcgError> {
        let Some(info) = self.m.get(f) else {
            return err(format!("stmt_vcg:MetCall: unknown method {f}"));
        };
        let info = info.clone();
        if args.len() != info.ins.len() || lhss.len() != info.outs.len() {
            return err(format!("stmt_vcg:MetCall: arity mismatch calling {f}"));
        }
        self.check_targets("MetCall", lhss, mods, ls)?;
        for a in args {
            check_code(a)?;
        }
        let arg_tys = get_types(ls, args)?;
        let in_tys: Vec<DType> = info.ins.iter().map(|(_, t)| t.clone()).collect();
        if arg_tys != in_tys {
            return err(format!("stmt_vcg:MetCall: argument types do not match {f}"));
        }
        let lhs_tys = get_types(ls, &lhss.iter().map(Exp::var).collect::<Vec<_>>())?;
        let out_tys: Vec<DType> = info.outs.iter().map(|(_, t)| t.clone()).collect();
        if lhs_tys != out_tys {
            return err(format!("stmt_vcg:MetCall: result types do not match {f}"));
        }
        // Arrays the callee may modify, named in the caller.
        let mut havoc = Vec::new();
        for m in &info.mods {
            let Some(k) = info.ins.iter().position(|(x, _)| x == m) else {
                return err(format!("stmt_vcg:MetCall: {f} modifies {m}, which is not a parameter"));
            };
            match &args[k] {
                Exp::Var(a) if mods.contains(a) => havoc.push(a.clone()),
                Exp::Var(a) => {
                    return err(format!(
                        "stmt_vcg:MetCall: {f} modifies {a}, which is not in the modifies clause"
                    ))
                }
                _ => return err(format!("unsupported: modified array argument of {f} is not a variable")),
            }
        }
        let in_binds = |wrap: fn(Exp) -> Exp| -> Vec<(Name, Exp)> {
            info.ins
                .iter()
                .zip(args)
                .map(|((x, _), a)| (x.clone(), wrap(a.clone())))
                .collect()
        };
        let mut out = vec![Exp::let_in(in_binds(|e| e), conj(info.reqs.clone()))];
        if info.level == self.level {
            if self.decs.is_empty() || info.decreases.len() != self.decs.len() {
                return err(format!(
                    "stmt_vcg:MetCall: recursive call to {f} needs decreases clauses of equal length"
                ));
            }
            let new: Vec<Exp> = info
                .decreases
                .iter()
                .map(|d| Exp::let_in(in_binds(|e| e), d.clone()))
                .collect();
            out.extend(lex_decrease(&new, &self.decs));
        }
        let overlap = args.iter().any(|a| lhss.iter().any(|x| a.mentions_var(x)));
        let simple = havoc.is_empty() && !overlap;
        let mut binds = in_binds(if simple { |e| e } else { Exp::prev });
        binds.extend(
            info.outs
                .iter()
                .zip(lhss)
                .map(|((x, _), l)| (x.clone(), Exp::var(l.clone()))),
        );
        let ens = conj(info.ens.iter().map(|e| replace_old(e, !simple)).collect());
        let closed: Vec<(Name, DType)> = lhss.iter().zip(&out_tys).map(|(x, t)| (x.clone(), t.clone())).collect();
        let body = Self::close(&closed, Exp::imp(Exp::let_in(binds, ens), conj(post)));
        out.push(if simple {
            body
        } else if havoc.is_empty() {
            Exp::set_prev(body)
        } else {
            Exp::set_prev(Exp::forall_heap(havoc, body))
        });
        Ok(out)
    }
}

/// Annotations may use `Old` and `OldHeap` (where `allow_old`) and
/// `Forall`, but no function calls or generator-internal forms.
fn check_annotation(e: &Exp, allow_old: bool) -> Result<(), VcgError> {
    let mut bad = None;
    e.any(&mut |x| {
        let msg = match x {
            Exp::FunCall(f, _) => Some(format!("unsupported: call to function {f}")),
            Exp::Old(_) | Exp::OldHeap(_) if !allow_old => Some("old(...) is not allowed here".to_string()),
            Exp::Prev(_) | Exp::PrevHeap(_) | Exp::SetPrev(_) | Exp::ForallHeap(..) => Some(format!(
                "verification-only expression {} in a user annotation",
                crate::frontend::print_exp(x)
            )),
            _ => None,
        };
        let hit = msg.is_some();
        if hit {
            bad = msg;
        }
        hit
    });
    match bad {
        Some(msg) => err(msg),
        None => Ok(()),
    }
}

/// Possibly-uninitialized locals after `s`, or `None` if `s` never
/// completes normally. Reads of possibly-uninitialized names are errors,
/// and so is returning while an out-parameter may be uninitialized.
fn init_check(s: &Stmt, mut u: BTreeSet<Name>, outs: &[Name]) -> Result<Option<BTreeSet<Name>>, VcgError> {
    let reads = |e: &Exp, u: &BTreeSet<Name>| -> Result<(), VcgError> {
        match e.free_vars().intersection(u).next() {
            Some(x) => err(format!("{x} may be read before it is initialized")),
            None => Ok(()),
        }
    };
    match s {
        Stmt::Skip => Ok(Some(u)),
        Stmt::Return => match outs.iter().find(|x| u.contains(*x)) {
            Some(x) => err(format!("out-parameter {x} may be uninitialized at return")),
            None => Ok(None),
        },
        Stmt::Assert(e) => {
            reads(e, &u)?;
            Ok(Some(u))
        }
        Stmt::Then(a, b) => match init_check(a, u, outs)? {
            Some(u1) => init_check(b, u1, outs),
            None => Ok(None),
        },
        Stmt::If(g, t, e) => {
            reads(g, &u)?;
            let rt = init_check(t, u.clone(), outs)?;
            let re = init_check(e, u, outs)?;
            Ok(match (rt, re) {
                (None, r) | (r, None) => r,
                (Some(a), Some(b)) => Some(a.union(&b).cloned().collect()),
            })
        }
        Stmt::Dec(binds, scope) => {
            for b in binds {
                if let Some(e) = &b.init {
                    reads(e, &u)?;
                }
            }
            for b in binds {
                if b.init.is_some() {
                    u.remove(&b.name);
                } else {
                    u.insert(b.name.clone());
                }
            }
            Ok(init_check(scope, u, outs)?.map(|mut r| {
                for b in binds {
                    r.remove(&b.name);
                }
                r
            }))
        }
        Stmt::Assign(pairs) => {
            for e in s.own_exps() {
                reads(e, &u)?;
            }
            for (l, _) in pairs {
                if let Lhs::Var(x) = l {
                    u.remove(x);
                }
            }
            Ok(Some(u))
        }
        Stmt::While(w) => {
            for e in s.own_exps() {
                reads(e, &u)?;
            }
            init_check(&w.body, u.clone(), outs)?;
            Ok(Some(u))
        }
        Stmt::MetCall(lhss, _, args) => {
            for e in args {
                reads(e, &u)?;
            }
            for x in lhss {
                u.remove(x);
            }
            Ok(Some(u))
        }
    }
}

fn all_names(p: &Program) -> BTreeSet<Name> {
    fn exp(e: &Exp, out: &mut BTreeSet<Name>) {
        e.any(&mut |x| {
            match x {
                Exp::Var(y) | Exp::Forall(y, _, _) => {
                    out.insert(y.clone());
                }
                Exp::Let(binds, _) => out.extend(binds.iter().map(|(y, _)| y.clone())),
                Exp::ForallHeap(h, _) => out.extend(h.iter().cloned()),
                _ => {}
            }
            false
        });
    }
    fn stmt(s: &Stmt, out: &mut BTreeSet<Name>) {
        for e in s.own_exps() {
            exp(e, out);
        }
        match s {
            Stmt::Dec(binds, _) => out.extend(binds.iter().map(|b| b.name.clone())),
            Stmt::Assign(pairs) => {
                for (l, _) in pairs {
                    if let Lhs::Var(x) = l {
                        out.insert(x.clone());
                    }
                }
            }
            Stmt::MetCall(lhss, _, _) => out.extend(lhss.iter().cloned()),
            Stmt::While(w) => out.extend(w.mods.iter().cloned()),
            _ => {}
        }
        for c in s.children() {
            stmt(c, out);
        }
    }
    let mut out = BTreeSet::new();
    for m in &p.members {
        match m {
            Member::Method(m) => {
                out.extend(m.ins.iter().chain(&m.outs).map(|(x, _)| x.clone()));
                out.extend(m.mods.iter().cloned());
                for e in m.reqs.iter().chain(&m.ens).chain(&m.decreases) {
                    exp(e, &mut out);
                }
                stmt(&m.body, &mut out);
            }
            Member::Function(f) => {
                out.extend(f.ins.iter().map(|(x, _)| x.clone()));
                exp(&f.body, &mut out);
            }
        }
    }
    out
}

/// Conditions of one method, each closed over its in-parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VcOutput {
    pub method: Name,
    pub params: Vec<(Name, DType)>,
    pub conditions: Vec<Exp>,
}

pub fn method_vcg(p: &Program, f: &str) -> Result<VcOutput, VcgError> {
    let infos = method_infos(p);
    method_vcg_with(p, &infos, f)
}

fn method_vcg_with(p: &Program, infos: &BTreeMap<Name, MethodInfo>, f: &str) -> Result<VcOutput, VcgError> {
    let Some(m) = p.method(f) else {
        return err(format!("unknown method {f}"));
    };
    let ls: Vec<(Name, DType)> = m.ins.iter().chain(&m.outs).cloned().collect();
    let names: BTreeSet<&Name> = ls.iter().map(|(x, _)| x).collect();
    if names.len() != ls.len() {
        return err(format!("{f}: parameter names are not distinct"));
    }
    for e in &m.reqs {
        check_annotation(e, false)?;
    }
    for e in &m.decreases {
        check_annotation(e, false)?;
    }
    for e in &m.ens {
        check_annotation(e, true)?;
    }
    expect_all(&m.ins, &m.reqs, &DType::Bool)?;
    expect_all(&ls, &m.ens, &DType::Bool)?;
    expect_all(&m.ins, &m.decreases, &DType::Int)?;
    for a in &m.mods {
        if !matches!(lookup(&m.ins, a), Some(DType::Arr(_))) {
            return err(format!("{f}: modifies {a}, which is not an array parameter"));
        }
    }
    let assigned = assigned_locals(&m.body);
    if let Some((x, _)) = m.ins.iter().find(|(x, _)| assigned.contains(x)) {
        return err(format!("{f}: assignment to in-parameter {x}"));
    }
    let outs: Vec<Name> = m.outs.iter().map(|(x, _)| x.clone()).collect();
    init_check(&m.body, outs.iter().cloned().collect(), &outs).map_err(|e| VcgError(format!("{f}: {e}")))?;
    let conds = stmt_vcg(VcInput {
        m: infos,
        level: infos[f].level,
        stmt: &m.body,
        post: vec![Exp::BoolLit(false)],
        ens: m.ens.clone(),
        decs: m.decreases.iter().cloned().map(Exp::old).collect(),
        mods: m.mods.clone(),
        ls: ls.clone(),
        avoid: all_names(p),
    })
    .map_err(|e| VcgError(format!("{f}: {e}")))?;
    let pre = conj(m.reqs.clone());
    let conditions: Vec<Exp> = conds
        .into_iter()
        .map(|c| Gen::close(&m.ins, Exp::imp(pre.clone(), c)))
        .collect();
    let mut scope = Vec::new();
    for c in &conditions {
        expect(&mut scope, c, &DType::Bool).map_err(|e| VcgError(format!("{f}: generated condition: {e}")))?;
    }
    Ok(VcOutput {
        method: f.to_string(),
        params: m.ins.clone(),
        conditions,
    })
}

/// Conditions for every method, in program order. Functions are skipped.
pub fn program_vcg(p: &Program) -> Result<Vec<VcOutput>, VcgError> {
    if !p.has_distinct_names() {
        return err("program member names are not distinct");
    }
    let infos = method_infos(p);
    let mut out = Vec::new();
    for member in &p.members {
        match member {
            Member::Method(m) => out.push(method_vcg_with(p, &infos, &m.name)?),
            Member::Function(f) => log::warn!("no conditions generated for function {}", f.name),
        }
    }
    Ok(out)
}
