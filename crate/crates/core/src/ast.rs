//! Abstract syntax for the imperative Dafny subset, plus the syntactic
//! helpers shared by the interpreter, compiler, and VC generator.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;

pub type Name = String;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DType {
    Int,
    Bool,
    Str,
    Arr(Box<DType>),
}

impl DType {
    pub fn arr(elem: DType) -> DType {
        DType::Arr(Box::new(elem))
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DType::Int => write!(f, "int"),
            DType::Bool => write!(f, "bool"),
            DType::Str => write!(f, "string"),
            DType::Arr(t) => write!(f, "(array {t})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Neq,
    And,
    Or,
    Imp,
}

impl BinOp {
    pub const ALL: [BinOp; 14] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Mod,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Neq,
        BinOp::And,
        BinOp::Or,
        BinOp::Imp,
    ];

    /// Surface token used by the S-expression format.
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "div",
            BinOp::Mod => "mod",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Neq => "!=",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Imp => "==>",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        BinOp::ALL.iter().copied().find(|op| op.symbol() == s)
    }

    pub fn is_short_circuit(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or | BinOp::Imp)
    }

    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod)
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Exp {
    IntLit(BigInt),
    BoolLit(bool),
    StrLit(String),
    Var(Name),
    UnOp(UnOp, Box<Exp>),
    BinOp(BinOp, Box<Exp>, Box<Exp>),
    Ite(Box<Exp>, Box<Exp>, Box<Exp>),
    ArrLen(Box<Exp>),
    ArrSel(Box<Exp>, Box<Exp>),
    FunCall(Name, Vec<Exp>),
    Forall(Name, DType, Box<Exp>),
    /// Simultaneous bindings; names within one `Let` are distinct.
    Let(Vec<(Name, Exp)>, Box<Exp>),
    Old(Box<Exp>),
    OldHeap(Box<Exp>),
    Prev(Box<Exp>),
    PrevHeap(Box<Exp>),
    SetPrev(Box<Exp>),
    ForallHeap(Vec<Name>, Box<Exp>),
}

impl Exp {
    pub fn int(i: impl Into<BigInt>) -> Exp {
        Exp::IntLit(i.into())
    }

    pub fn var(name: impl Into<Name>) -> Exp {
        Exp::Var(name.into())
    }

    pub fn bin(op: BinOp, l: Exp, r: Exp) -> Exp {
        Exp::BinOp(op, Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Exp) -> Exp {
        Exp::UnOp(UnOp::Not, Box::new(e))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Exp) -> Exp {
        Exp::UnOp(UnOp::Neg, Box::new(e))
    }

    pub fn and(l: Exp, r: Exp) -> Exp {
        Exp::bin(BinOp::And, l, r)
    }

    pub fn or(l: Exp, r: Exp) -> Exp {
        Exp::bin(BinOp::Or, l, r)
    }

    pub fn imp(l: Exp, r: Exp) -> Exp {
        Exp::bin(BinOp::Imp, l, r)
    }

    pub fn ite(c: Exp, t: Exp, e: Exp) -> Exp {
        Exp::Ite(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn len(a: Exp) -> Exp {
        Exp::ArrLen(Box::new(a))
    }

    pub fn sel(a: Exp, i: Exp) -> Exp {
        Exp::ArrSel(Box::new(a), Box::new(i))
    }

    pub fn forall(x: impl Into<Name>, ty: DType, body: Exp) -> Exp {
        Exp::Forall(x.into(), ty, Box::new(body))
    }

    pub fn let_in(binds: Vec<(Name, Exp)>, body: Exp) -> Exp {
        Exp::Let(binds, Box::new(body))
    }

    pub fn old(e: Exp) -> Exp {
        Exp::Old(Box::new(e))
    }

    pub fn prev(e: Exp) -> Exp {
        Exp::Prev(Box::new(e))
    }

    pub fn prev_heap(e: Exp) -> Exp {
        Exp::PrevHeap(Box::new(e))
    }

    pub fn set_prev(e: Exp) -> Exp {
        Exp::SetPrev(Box::new(e))
    }

    pub fn forall_heap(havoc: Vec<Name>, e: Exp) -> Exp {
        Exp::ForallHeap(havoc, Box::new(e))
    }

    /// Immediate subexpressions, in evaluation order.
    pub fn children(&self) -> Vec<&Exp> {
        match self {
            Exp::IntLit(_) | Exp::BoolLit(_) | Exp::StrLit(_) | Exp::Var(_) => vec![],
            Exp::UnOp(_, e)
            | Exp::ArrLen(e)
            | Exp::Forall(_, _, e)
            | Exp::Old(e)
            | Exp::OldHeap(e)
            | Exp::Prev(e)
            | Exp::PrevHeap(e)
            | Exp::SetPrev(e)
            | Exp::ForallHeap(_, e) => vec![e],
            Exp::BinOp(_, a, b) | Exp::ArrSel(a, b) => vec![a, b],
            Exp::Ite(c, t, e) => vec![c, t, e],
            Exp::FunCall(_, args) => args.iter().collect(),
            Exp::Let(binds, body) => binds.iter().map(|(_, e)| e).chain(std::iter::once(&**body)).collect(),
        }
    }

    /// True if `pred` holds for this node or any descendant.
    pub fn any(&self, pred: &mut impl FnMut(&Exp) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        self.children().into_iter().any(|c| c.any(pred))
    }

    /// Forms that only make sense inside verification conditions or
    /// annotations; the compiler refuses them.
    pub fn is_verification_only(&self) -> bool {
        matches!(
            self,
            Exp::Forall(..)
                | Exp::Old(_)
                | Exp::OldHeap(_)
                | Exp::Prev(_)
                | Exp::PrevHeap(_)
                | Exp::SetPrev(_)
                | Exp::ForallHeap(..)
        )
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        free_vars_into(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn mentions_var(&self, x: &str) -> bool {
        self.free_vars().contains(x)
    }
}

fn free_vars_into(e: &Exp, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match e {
        Exp::Var(x) => {
            if !bound.iter().any(|b| b == x) {
                out.insert(x.clone());
            }
        }
        Exp::Forall(x, _, body) => {
            bound.push(x.clone());
            free_vars_into(body, bound, out);
            bound.pop();
        }
        Exp::Let(binds, body) => {
            for (_, be) in binds {
                free_vars_into(be, bound, out);
            }
            let n = bound.len();
            bound.extend(binds.iter().map(|(x, _)| x.clone()));
            free_vars_into(body, bound, out);
            bound.truncate(n);
        }
        Exp::ForallHeap(havoc, body) => {
            for x in havoc {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            free_vars_into(body, bound, out);
        }
        _ => {
            for c in e.children() {
                free_vars_into(c, bound, out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Lhs {
    Var(Name),
    ArrSel(Exp, Exp),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rhs {
    Exp(Exp),
    /// `new T[len]`; elements get the type's default value.
    ArrAlloc(DType, Exp),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DecBind {
    pub name: Name,
    pub ty: DType,
    pub init: Option<Exp>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct While {
    pub guard: Exp,
    pub invs: Vec<Exp>,
    pub decrs: Vec<Exp>,
    pub mods: Vec<Name>,
    pub body: Box<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Skip,
    Assert(Exp),
    Then(Box<Stmt>, Box<Stmt>),
    If(Exp, Box<Stmt>, Box<Stmt>),
    Dec(Vec<DecBind>, Box<Stmt>),
    Assign(Vec<(Lhs, Rhs)>),
    While(While),
    Return,
    MetCall(Vec<Name>, Name, Vec<Exp>),
}

impl Stmt {
    pub fn then(a: Stmt, b: Stmt) -> Stmt {
        Stmt::Then(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence; empty input gives `Skip`.
    pub fn seq(stmts: impl IntoIterator<Item = Stmt>) -> Stmt {
        let mut items: Vec<Stmt> = stmts.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Stmt::Skip;
        };
        while let Some(s) = items.pop() {
            acc = Stmt::then(s, acc);
        }
        acc
    }

    pub fn assign_var(x: impl Into<Name>, e: Exp) -> Stmt {
        Stmt::Assign(vec![(Lhs::Var(x.into()), Rhs::Exp(e))])
    }

    pub fn if_(g: Exp, t: Stmt, e: Stmt) -> Stmt {
        Stmt::If(g, Box::new(t), Box::new(e))
    }

    /// Last statement along the `Then` spine.
    pub fn last_in_sequence(&self) -> &Stmt {
        match self {
            Stmt::Then(_, b) => b.last_in_sequence(),
            s => s,
        }
    }

    /// Every expression appearing in this statement (including annotations),
    /// without descending into nested statements.
    pub fn own_exps(&self) -> Vec<&Exp> {
        match self {
            Stmt::Skip | Stmt::Return | Stmt::Then(..) => vec![],
            Stmt::Assert(e) => vec![e],
            Stmt::If(g, _, _) => vec![g],
            Stmt::Dec(binds, _) => binds.iter().filter_map(|b| b.init.as_ref()).collect(),
            Stmt::Assign(pairs) => {
                let mut out = vec![];
                for (l, r) in pairs {
                    if let Lhs::ArrSel(a, i) = l {
                        out.push(a);
                        out.push(i);
                    }
                    match r {
                        Rhs::Exp(e) | Rhs::ArrAlloc(_, e) => out.push(e),
                    }
                }
                out
            }
            Stmt::While(w) => std::iter::once(&w.guard)
                .chain(w.invs.iter())
                .chain(w.decrs.iter())
                .collect(),
            Stmt::MetCall(_, _, args) => args.iter().collect(),
        }
    }

    /// The expressions execution evaluates: `own_exps` minus loop
    /// invariants and decreases.
    pub fn run_exps(&self) -> Vec<&Exp> {
        match self {
            Stmt::While(w) => vec![&w.guard],
            s => s.own_exps(),
        }
    }

    pub fn children(&self) -> Vec<&Stmt> {
        match self {
            Stmt::Then(a, b) | Stmt::If(_, a, b) => vec![a, b],
            Stmt::Dec(_, s) => vec![s],
            Stmt::While(w) => vec![&w.body],
            _ => vec![],
        }
    }

    pub fn any_stmt(&self, pred: &mut impl FnMut(&Stmt) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        self.children().into_iter().any(|c| c.any_stmt(pred))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Method {
    pub name: Name,
    pub ins: Vec<(Name, DType)>,
    pub reqs: Vec<Exp>,
    pub ens: Vec<Exp>,
    pub decreases: Vec<Exp>,
    pub mods: Vec<Name>,
    pub outs: Vec<(Name, DType)>,
    pub body: Stmt,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Function {
    pub name: Name,
    pub ins: Vec<(Name, DType)>,
    pub res_ty: DType,
    pub body: Exp,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Member {
    Method(Method),
    Function(Function),
}

impl Member {
    pub fn name(&self) -> &str {
        match self {
            Member::Method(m) => &m.name,
            Member::Function(f) => &f.name,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Program {
    pub members: Vec<Member>,
}

impl Program {
    pub fn new(members: Vec<Member>) -> Program {
        Program { members }
    }

    pub fn methods(&self) -> impl Iterator<Item = &Method> {
        self.members.iter().filter_map(|m| match m {
            Member::Method(m) => Some(m),
            Member::Function(_) => None,
        })
    }

    pub fn method(&self, name: &str) -> Option<&Method> {
        match member_lookup(self, name) {
            Some(Member::Method(m)) => Some(m),
            _ => None,
        }
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        match member_lookup(self, name) {
            Some(Member::Function(f)) => Some(f),
            _ => None,
        }
    }

    pub fn has_distinct_names(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.members.iter().all(|m| seen.insert(m.name()))
    }
}

/// Conjunction of a list: `true` when empty, the element itself when
/// singleton, right-nested `And` otherwise.
pub fn conj(es: Vec<Exp>) -> Exp {
    let mut it = es.into_iter().rev();
    let Some(mut acc) = it.next() else {
        return Exp::BoolLit(true);
    };
    for e in it {
        acc = Exp::and(e, acc);
    }
    acc
}

/// Locals assigned anywhere inside `s` (assignment targets and call
/// out-targets), excluding names declared by a `Dec` within `s`.
pub fn assigned_locals(s: &Stmt) -> BTreeSet<Name> {
    fn go(s: &Stmt, scoped: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        let mut add = |x: &Name, scoped: &Vec<Name>| {
            if !scoped.contains(x) {
                out.insert(x.clone());
            }
        };
        match s {
            Stmt::Assign(pairs) => {
                for (l, _) in pairs {
                    if let Lhs::Var(x) = l {
                        add(x, scoped);
                    }
                }
            }
            Stmt::MetCall(lhss, _, _) => {
                for x in lhss {
                    add(x, scoped);
                }
            }
            Stmt::Dec(binds, scope) => {
                let n = scoped.len();
                scoped.extend(binds.iter().map(|b| b.name.clone()));
                go(scope, scoped, out);
                scoped.truncate(n);
            }
            _ => {
                for c in s.children() {
                    go(c, scoped, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(s, &mut Vec::new(), &mut out);
    out
}

pub fn member_lookup<'p>(p: &'p Program, name: &str) -> Option<&'p Member> {
    p.members.iter().find(|m| m.name() == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_assigned(s: &Stmt) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        s.any_stmt(&mut |s| {
            match s {
                Stmt::Assign(pairs) => {
                    for (l, _) in pairs {
                        if let Lhs::Var(x) = l {
                            out.insert(x.clone());
                        }
                    }
                }
                Stmt::MetCall(lhss, _, _) => out.extend(lhss.iter().cloned()),
                _ => {}
            }
            false
        });
        out
    }

    #[test]
    fn conj_shapes() {
        assert_eq!(conj(vec![]), Exp::BoolLit(true));
        let e1 = Exp::var("a");
        assert_eq!(conj(vec![e1.clone()]), e1);
        let (e2, e3) = (Exp::var("b"), Exp::var("c"));
        assert_eq!(
            conj(vec![e1.clone(), e2.clone(), e3.clone()]),
            Exp::and(e1, Exp::and(e2, e3))
        );
    }

    #[test]
    fn assigned_locals_cases() {
        assert!(assigned_locals(&Stmt::Skip).is_empty());
        let body = Stmt::then(
            Stmt::assign_var("sum", Exp::bin(BinOp::Add, Exp::var("sum"), Exp::var("i"))),
            Stmt::assign_var("i", Exp::bin(BinOp::Add, Exp::var("i"), Exp::int(1))),
        );
        let got: Vec<_> = assigned_locals(&body).into_iter().collect();
        assert_eq!(got, vec!["i".to_string(), "sum".to_string()]);

        let dec = Stmt::Dec(
            vec![DecBind {
                name: "x".into(),
                ty: DType::Int,
                init: None,
            }],
            Box::new(Stmt::assign_var("x", Exp::int(1))),
        );
        assert!(assigned_locals(&dec).is_empty());
        // the naive traversal sees x; the scoped one must not
        assert!(naive_assigned(&dec).contains("x"));
    }

    #[test]
    fn lookup_first_match() {
        let m = |n: &str, ty| {
            Member::Function(Function {
                name: n.into(),
                ins: vec![],
                res_ty: ty,
                body: Exp::int(0),
            })
        };
        let p = Program::new(vec![m("F", DType::Int), m("F", DType::Bool)]);
        assert!(matches!(member_lookup(&p, "F"), Some(Member::Function(f)) if f.res_ty == DType::Int));
        assert!(member_lookup(&p, "Missing").is_none());
        assert!(!p.has_distinct_names());
    }

    #[test]
    fn free_vars_respects_binders() {
        let e = Exp::let_in(
            vec![("x".into(), Exp::var("y"))],
            Exp::forall("k", DType::Int, Exp::bin(BinOp::Lt, Exp::var("k"), Exp::var("x"))),
        );
        let fv: Vec<_> = e.free_vars().into_iter().collect();
        assert_eq!(fv, vec!["y".to_string()]);
    }
}
