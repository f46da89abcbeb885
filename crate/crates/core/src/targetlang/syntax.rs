//! Syntax of the ML-style core language.

use num_bigint::BigInt;

pub type TName = String;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TPrimOp {
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
}

impl TPrimOp {
    pub const ALL: [TPrimOp; 10] = [
        TPrimOp::Add,
        TPrimOp::Sub,
        TPrimOp::Mul,
        TPrimOp::Div,
        TPrimOp::Mod,
        TPrimOp::Lt,
        TPrimOp::Le,
        TPrimOp::Gt,
        TPrimOp::Ge,
        TPrimOp::Eq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TPrimOp::Add => "+",
            TPrimOp::Sub => "-",
            TPrimOp::Mul => "*",
            TPrimOp::Div => "div",
            TPrimOp::Mod => "mod",
            TPrimOp::Lt => "<",
            TPrimOp::Le => "<=",
            TPrimOp::Gt => ">",
            TPrimOp::Ge => ">=",
            TPrimOp::Eq => "=",
        }
    }
}

/// A recursive function definition `fun fname param = body`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TDef {
    pub fname: TName,
    pub param: TName,
    pub body: TExp,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TExp {
    Int(BigInt),
    Bool(bool),
    Str(String),
    Unit,
    Var(TName),
    App(Box<TExp>, Box<TExp>),
    Fun(TName, Box<TExp>),
    Letrec(Vec<TDef>, Box<TExp>),
    Let(TName, Box<TExp>, Box<TExp>),
    If(Box<TExp>, Box<TExp>, Box<TExp>),
    Seq(Box<TExp>, Box<TExp>),
    Ref(Box<TExp>),
    Deref(Box<TExp>),
    Assign(Box<TExp>, Box<TExp>),
    ArrAlloc(Box<TExp>, Box<TExp>),
    ArrSub(Box<TExp>, Box<TExp>),
    ArrUpd(Box<TExp>, Box<TExp>, Box<TExp>),
    Tuple(Vec<TExp>),
    Proj(usize, Box<TExp>),
    Raise(TName),
    Handle(Box<TExp>, TName, Box<TExp>),
    Prim(TPrimOp, Box<TExp>, Box<TExp>),
    Neg(Box<TExp>),
    Not(Box<TExp>),
}

impl TExp {
    /// Number of `App` nodes, i.e. the most ticks one pass over the
    /// expression can spend without repeating a node.
    pub fn app_count(&self) -> u64 {
        use TExp::*;
        match self {
            Int(_) | Bool(_) | Str(_) | Unit | Var(_) | Raise(_) => 0,
            App(f, a) => 1 + f.app_count() + a.app_count(),
            Fun(_, b) | Ref(b) | Deref(b) | Proj(_, b) | Neg(b) | Not(b) => b.app_count(),
            Letrec(defs, b) => defs.iter().map(|d| d.body.app_count()).sum::<u64>() + b.app_count(),
            Let(_, a, b)
            | Seq(a, b)
            | Assign(a, b)
            | ArrAlloc(a, b)
            | ArrSub(a, b)
            | Handle(a, _, b)
            | Prim(_, a, b) => a.app_count() + b.app_count(),
            If(a, b, c) | ArrUpd(a, b, c) => a.app_count() + b.app_count() + c.app_count(),
            Tuple(es) => es.iter().map(TExp::app_count).sum(),
        }
    }

    pub fn int(i: impl Into<BigInt>) -> TExp {
        TExp::Int(i.into())
    }

    pub fn var(x: impl Into<TName>) -> TExp {
        TExp::Var(x.into())
    }

    pub fn app(f: TExp, a: TExp) -> TExp {
        TExp::App(Box::new(f), Box::new(a))
    }

    /// Curried application `f a1 a2 ...`.
    pub fn apps(f: TExp, args: impl IntoIterator<Item = TExp>) -> TExp {
        args.into_iter().fold(f, TExp::app)
    }

    pub fn fun(x: impl Into<TName>, body: TExp) -> TExp {
        TExp::Fun(x.into(), Box::new(body))
    }

    pub fn let_(x: impl Into<TName>, rhs: TExp, body: TExp) -> TExp {
        TExp::Let(x.into(), Box::new(rhs), Box::new(body))
    }

    pub fn letrec(defs: Vec<TDef>, scope: TExp) -> TExp {
        TExp::Letrec(defs, Box::new(scope))
    }

    pub fn if_(c: TExp, t: TExp, e: TExp) -> TExp {
        TExp::If(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn seq(a: TExp, b: TExp) -> TExp {
        TExp::Seq(Box::new(a), Box::new(b))
    }

    pub fn ref_(e: TExp) -> TExp {
        TExp::Ref(Box::new(e))
    }

    pub fn deref(e: TExp) -> TExp {
        TExp::Deref(Box::new(e))
    }

    pub fn assign(l: TExp, r: TExp) -> TExp {
        TExp::Assign(Box::new(l), Box::new(r))
    }

    pub fn proj(i: usize, e: TExp) -> TExp {
        TExp::Proj(i, Box::new(e))
    }

    pub fn prim(op: TPrimOp, a: TExp, b: TExp) -> TExp {
        TExp::Prim(op, Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: TExp) -> TExp {
        TExp::Not(Box::new(e))
    }

    pub fn handle(e: TExp, exn: impl Into<TName>, h: TExp) -> TExp {
        TExp::Handle(Box::new(e), exn.into(), Box::new(h))
    }
}

/// Top-level declarations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TDec {
    Exn(TName),
    Letrec(Vec<TDef>),
    Val(TName, TExp),
}

impl TDec {
    pub fn app_count(&self) -> u64 {
        match self {
            TDec::Exn(_) => 0,
            TDec::Letrec(defs) => defs.iter().map(|d| d.body.app_count()).sum(),
            TDec::Val(_, e) => e.app_count(),
        }
    }
}
