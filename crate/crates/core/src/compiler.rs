//! Translation of (assert-free, freshened) programs into core-language
//! declarations.
//!
//! Variables become references, arrays become `(length, array)` pairs,
//! loops become local tail-recursive functions, and `return` raises the
//! `Return` exception, which each compiled method handles by reading its
//! out-parameters.

use thiserror::Error;

use crate::ast::*;
use crate::passes::{freshen_program, remove_assert};
use crate::targetlang::{TDec, TDef, TExp, TPrimOp};

pub const RETURN_EXN: &str = "Return";
pub const EMPTY_ARRAY: &str = "dfy_empty";
pub const MAIN_ENTRY: &str = "main";

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("cannot compile verification-only expression `{0}`")]
    VerificationOnly(String),
    #[error("call to unknown method `{0}`")]
    UnknownMethod(String),
    #[error("call to unknown function `{0}`")]
    UnknownFunction(String),
    #[error("call to `{0}` with the wrong number of arguments or results")]
    Arity(String),
}

/// Deliberate miscompilations used to check that differential testing
/// detects wrong compilers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// Compile `+` as `-`.
    OpFlip,
    /// Pass call arguments in source order although parameters are reversed.
    NoArgReverse,
    /// Omit the `handle Return` wrapper around method bodies.
    DropReturnHandler,
    /// Read array elements from the length component of the pair.
    WrongArrayComponent,
    /// Run two loop iterations per recursive application.
    MissingClockTick,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::OpFlip,
        Mutation::NoArgReverse,
        Mutation::DropReturnHandler,
        Mutation::WrongArrayComponent,
        Mutation::MissingClockTick,
    ];
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompileOptions {
    pub mutation: Option<Mutation>,
}

pub fn method_fn_name(m: &str) -> String {
    format!("dfy_{m}")
}

type CResult<T> = Result<T, CompileError>;

struct Compiler<'p> {
    prog: &'p Program,
    opts: CompileOptions,
    temps: usize,
    loops: usize,
}

fn v(x: &str) -> TExp {
    TExp::var(x)
}

impl Compiler<'_> {
    fn mutated(&self, m: Mutation) -> bool {
        self.opts.mutation == Some(m)
    }

    fn temp(&mut self) -> String {
        let t = format!("t{}", self.temps);
        self.temps += 1;
        t
    }

    fn default_value(&self, t: &DType) -> TExp {
        match t {
            DType::Int => TExp::int(0),
            DType::Bool => TExp::Bool(false),
            DType::Str => TExp::Str(String::new()),
            DType::Arr(_) => TExp::Tuple(vec![TExp::int(0), v(EMPTY_ARRAY)]),
        }
    }

    /// `f a_n ... a_1` (or `f ()` when there are no arguments).
    fn call_spine(&self, f: &str, mut args: Vec<TExp>) -> TExp {
        if args.is_empty() {
            return TExp::app(v(f), TExp::Unit);
        }
        if !self.mutated(Mutation::NoArgReverse) {
            args.reverse();
        }
        TExp::apps(v(f), args)
    }

    fn exp(&mut self, e: &Exp) -> CResult<TExp> {
        Ok(match e {
            Exp::IntLit(i) => TExp::Int(i.clone()),
            Exp::BoolLit(b) => TExp::Bool(*b),
            Exp::StrLit(s) => TExp::Str(s.clone()),
            Exp::Var(x) => TExp::deref(v(x)),
            Exp::UnOp(UnOp::Not, a) => TExp::not(self.exp(a)?),
            Exp::UnOp(UnOp::Neg, a) => TExp::Neg(Box::new(self.exp(a)?)),
            Exp::BinOp(op, a, b) => {
                let (a, b) = (self.exp(a)?, self.exp(b)?);
                let p = |o| TExp::prim(o, a.clone(), b.clone());
                match op {
                    BinOp::And => TExp::if_(a, b, TExp::Bool(false)),
                    BinOp::Or => TExp::if_(a, TExp::Bool(true), b),
                    BinOp::Imp => TExp::if_(a, b, TExp::Bool(true)),
                    BinOp::Neq => TExp::not(p(TPrimOp::Eq)),
                    BinOp::Add if self.mutated(Mutation::OpFlip) => p(TPrimOp::Sub),
                    BinOp::Add => p(TPrimOp::Add),
                    BinOp::Sub => p(TPrimOp::Sub),
                    BinOp::Mul => p(TPrimOp::Mul),
                    BinOp::Div => p(TPrimOp::Div),
                    BinOp::Mod => p(TPrimOp::Mod),
                    BinOp::Lt => p(TPrimOp::Lt),
                    BinOp::Le => p(TPrimOp::Le),
                    BinOp::Gt => p(TPrimOp::Gt),
                    BinOp::Ge => p(TPrimOp::Ge),
                    BinOp::Eq => p(TPrimOp::Eq),
                }
            }
            Exp::Ite(c, t, f) => TExp::if_(self.exp(c)?, self.exp(t)?, self.exp(f)?),
            Exp::ArrLen(a) => TExp::proj(0, self.exp(a)?),
            Exp::ArrSel(a, i) => {
                let comp = if self.mutated(Mutation::WrongArrayComponent) {
                    0
                } else {
                    1
                };
                TExp::ArrSub(Box::new(TExp::proj(comp, self.exp(a)?)), Box::new(self.exp(i)?))
            }
            Exp::FunCall(f, args) => {
                let func = self
                    .prog
                    .function(f)
                    .ok_or_else(|| CompileError::UnknownFunction(f.clone()))?;
                if func.ins.len() != args.len() {
                    return Err(CompileError::Arity(f.clone()));
                }
                let args = args.iter().map(|a| self.exp(a)).collect::<CResult<_>>()?;
                self.call_spine(&method_fn_name(f), args)
            }
            // binders are fresh, so sequential binding equals simultaneous
            Exp::Let(binds, body) => {
                let mut out = self.exp(body)?;
                for (x, be) in binds.iter().rev() {
                    out = TExp::let_(x.clone(), TExp::ref_(self.exp(be)?), out);
                }
                out
            }
            Exp::Forall(..)
            | Exp::Old(_)
            | Exp::OldHeap(_)
            | Exp::Prev(_)
            | Exp::PrevHeap(_)
            | Exp::SetPrev(_)
            | Exp::ForallHeap(..) => return Err(CompileError::VerificationOnly(crate::frontend::print_exp(e))),
        })
    }

    fn stmt(&mut self, s: &Stmt) -> CResult<TExp> {
        Ok(match s {
            Stmt::Skip | Stmt::Assert(_) => TExp::Unit,
            Stmt::Return => TExp::Raise(RETURN_EXN.into()),
            Stmt::Then(a, b) => TExp::seq(self.stmt(a)?, self.stmt(b)?),
            Stmt::If(g, t, f) => TExp::if_(self.exp(g)?, self.stmt(t)?, self.stmt(f)?),
            Stmt::Dec(binds, scope) => {
                let mut inits = Vec::new();
                for b in binds {
                    if let Some(e) = &b.init {
                        let t = self.temp();
                        inits.push((t, self.exp(e)?, b.name.clone()));
                    }
                }
                let mut body = self.stmt(scope)?;
                for (t, _, x) in inits.iter().rev() {
                    body = TExp::seq(TExp::assign(v(x), v(t)), body);
                }
                for b in binds.iter().rev() {
                    body = TExp::let_(b.name.clone(), TExp::ref_(TExp::int(0)), body);
                }
                for (t, e, _) in inits.into_iter().rev() {
                    body = TExp::let_(t, e, body);
                }
                body
            }
            Stmt::Assign(pairs) => {
                let mut temps = Vec::new();
                for (_, rhs) in pairs {
                    let t = self.temp();
                    let e = match rhs {
                        Rhs::Exp(e) => self.exp(e)?,
                        Rhs::ArrAlloc(ty, len) => {
                            let n = self.temp();
                            let len = self.exp(len)?;
                            let arr = TExp::ArrAlloc(Box::new(v(&n)), Box::new(self.default_value(ty)));
                            TExp::let_(n.clone(), len, TExp::Tuple(vec![v(&n), arr]))
                        }
                    };
                    temps.push((t, e));
                }
                let mut writes = Vec::new();
                for ((lhs, _), (t, _)) in pairs.iter().zip(&temps) {
                    writes.push(match lhs {
                        Lhs::Var(x) => TExp::assign(v(x), v(t)),
                        Lhs::ArrSel(a, i) => TExp::ArrUpd(
                            Box::new(TExp::proj(1, self.exp(a)?)),
                            Box::new(self.exp(i)?),
                            Box::new(v(t)),
                        ),
                    });
                }
                let mut body = writes.pop().unwrap_or(TExp::Unit);
                while let Some(w) = writes.pop() {
                    body = TExp::seq(w, body);
                }
                for (t, e) in temps.into_iter().rev() {
                    body = TExp::let_(t, e, body);
                }
                body
            }
            Stmt::While(w) => {
                let name = format!("loop{}", self.loops);
                self.loops += 1;
                let g = self.exp(&w.guard)?;
                let b = self.stmt(&w.body)?;
                let again = TExp::app(v(&name), TExp::Unit);
                let iter = if self.mutated(Mutation::MissingClockTick) {
                    TExp::seq(b.clone(), TExp::if_(g.clone(), TExp::seq(b, again), TExp::Unit))
                } else {
                    TExp::seq(b, again)
                };
                TExp::letrec(
                    vec![TDef {
                        fname: name.clone(),
                        param: "u".into(),
                        body: TExp::if_(g, iter, TExp::Unit),
                    }],
                    TExp::app(v(&name), TExp::Unit),
                )
            }
            Stmt::MetCall(lhss, f, args) => {
                let m = self
                    .prog
                    .method(f)
                    .ok_or_else(|| CompileError::UnknownMethod(f.clone()))?;
                if m.ins.len() != args.len() || m.outs.len() != lhss.len() {
                    return Err(CompileError::Arity(f.clone()));
                }
                let args = args.iter().map(|a| self.exp(a)).collect::<CResult<_>>()?;
                let call = self.call_spine(&method_fn_name(f), args);
                match lhss.len() {
                    0 => call,
                    1 => {
                        let t = self.temp();
                        TExp::let_(t.clone(), call, TExp::assign(v(&lhss[0]), v(&t)))
                    }
                    n => {
                        let tup = self.temp();
                        let parts: Vec<String> = (0..n).map(|_| self.temp()).collect();
                        let mut body = TExp::assign(v(&lhss[n - 1]), v(&parts[n - 1]));
                        for k in (0..n - 1).rev() {
                            body = TExp::seq(TExp::assign(v(&lhss[k]), v(&parts[k])), body);
                        }
                        for k in (0..n).rev() {
                            body = TExp::let_(parts[k].clone(), TExp::proj(k, v(&tup)), body);
                        }
                        TExp::let_(tup, call, body)
                    }
                }
            }
        })
    }

    /// Curried definition with reversed parameters whose body first binds
    /// each parameter to a fresh reference.
    fn curried(&self, fname: String, ins: &[(Name, DType)], inner: TExp) -> TDef {
        let mut body = inner;
        for (x, _) in ins.iter().rev() {
            body = TExp::let_(x.clone(), TExp::ref_(v(x)), body);
        }
        if ins.is_empty() {
            return TDef {
                fname,
                param: "u".into(),
                body,
            };
        }
        // parameters in reverse: the last source parameter comes first
        let mut params: Vec<&Name> = ins.iter().map(|(x, _)| x).collect();
        params.reverse();
        for p in params[1..].iter().rev() {
            body = TExp::fun((*p).clone(), body);
        }
        TDef {
            fname,
            param: params[0].clone(),
            body,
        }
    }

    fn method(&mut self, m: &Method) -> CResult<TDef> {
        self.temps = 0;
        self.loops = 0;
        let body = self.stmt(&m.body)?;
        let outs = match m.outs.len() {
            0 => TExp::Unit,
            1 => TExp::deref(v(&m.outs[0].0)),
            _ => TExp::Tuple(m.outs.iter().map(|(x, _)| TExp::deref(v(x))).collect()),
        };
        let mut inner = if self.mutated(Mutation::DropReturnHandler) {
            TExp::seq(body, outs)
        } else {
            TExp::handle(body, RETURN_EXN, outs)
        };
        for (x, _) in m.outs.iter().rev() {
            inner = TExp::let_(x.clone(), TExp::ref_(TExp::int(0)), inner);
        }
        Ok(self.curried(method_fn_name(&m.name), &m.ins, inner))
    }

    fn function(&mut self, f: &Function) -> CResult<TDef> {
        self.temps = 0;
        let body = self.exp(&f.body)?;
        Ok(self.curried(method_fn_name(&f.name), &f.ins, body))
    }
}

/// The prelude and the single recursive group of all members, without an
/// entry point.
pub fn compile_library(p: &Program, opts: CompileOptions) -> CResult<Vec<TDec>> {
    let p = freshen_program(&remove_assert(p));
    let mut c = Compiler {
        prog: &p,
        opts,
        temps: 0,
        loops: 0,
    };
    let mut defs = Vec::new();
    for m in &p.members {
        defs.push(match m {
            Member::Method(m) => c.method(m)?,
            Member::Function(f) => c.function(f)?,
        });
    }
    Ok(vec![
        TDec::Exn(RETURN_EXN.into()),
        TDec::Val(
            EMPTY_ARRAY.into(),
            TExp::ArrAlloc(Box::new(TExp::int(0)), Box::new(TExp::int(0))),
        ),
        TDec::Letrec(defs),
    ])
}

/// Full compilation: library plus `val main = dfy_Main ()` when the
/// program has a `Main` method.
pub fn compile_with(p: &Program, opts: CompileOptions) -> CResult<Vec<TDec>> {
    let mut decs = compile_library(p, opts)?;
    if p.method("Main").is_some() {
        decs.push(TDec::Val(
            MAIN_ENTRY.into(),
            TExp::app(v(&method_fn_name("Main")), TExp::Unit),
        ));
    }
    Ok(decs)
}

pub fn compile(p: &Program) -> CResult<Vec<TDec>> {
    compile_with(p, CompileOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{normalize, parse_program};
    use crate::targetlang::{pretty_decs, t_evaluate_decs, TEnv, TRes, TStore, TVal};

    const FIND: &str = r#"
    (program
      (method Find (ins (a (array int)) (key int)) (outs (i int))
        (requires) (ensures) (decreases) (modifies)
        (body (then
          (assign ((i 0)))
          (while (< i (len a)) (invariants) (decreases (- (len a) i)) (modifies)
            (then (if (== (sel a i) key) (return) (skip))
                  (assign ((i (+ i 1))))))
          (assign ((i -1))))))
      (method Main (ins) (outs) (requires) (ensures) (decreases) (modifies)
        (body (dec ((a (array int)) (r int))
          (then (assign ((a (alloc int 3))))
                (assign (((sel a 1) 7)))
                (metcall (r) Find (a 7))
                (assert (== r 1))
                (return))))))"#;

    fn program() -> Program {
        normalize(&parse_program(FIND).unwrap())
    }

    #[test]
    fn find_has_the_expected_shape() {
        let decs = compile(&program()).unwrap();
        assert_eq!(decs[0], TDec::Exn("Return".into()));
        let TDec::Letrec(defs) = &decs[2] else { panic!() };
        let find = &defs[0];
        assert_eq!(find.fname, "dfy_Find");
        let text = pretty_decs(&decs);
        assert!(text.contains("handle Return"), "{text}");
        assert!(text.contains("fun loop0 u ="), "{text}");
        assert!(text.contains("raise Return"), "{text}");
        assert!(text.contains("Array.sub (snd"), "{text}");
        // key (the last source parameter) is the first curried parameter
        let key_param = &find.param;
        let TExp::Fun(a_param, _) = &find.body else { panic!() };
        assert_ne!(key_param, a_param);
        assert!(matches!(decs.last(), Some(TDec::Val(n, _)) if n == "main"));
    }

    #[test]
    fn compiled_find_runs() {
        let decs = compile(&program()).unwrap();
        let mut st = TStore::with_clock(10_000);
        let (env, r) = t_evaluate_decs(&mut st, &TEnv::empty(), &decs);
        assert_eq!(r, TRes::RVal(TVal::Unit));
        assert_eq!(env.lookup("main"), Some(&TVal::Unit));
    }

    #[test]
    fn forall_is_rejected() {
        let src = r#"(program (method M (ins) (outs (b bool)) (requires) (ensures) (decreases) (modifies)
            (body (assign ((b (forall (x int) true)))))))"#;
        let p = parse_program(src).unwrap();
        assert!(matches!(compile(&p), Err(CompileError::VerificationOnly(_))));
        let src = r#"(program (method M (ins) (outs) (requires) (ensures) (decreases) (modifies)
            (body (metcall () Nope ()))))"#;
        let p = parse_program(src).unwrap();
        assert!(matches!(compile(&p), Err(CompileError::UnknownMethod(_))));
    }

    #[test]
    fn out_parameter_shapes() {
        let src = r#"(program
          (method Z (ins) (outs) (requires) (ensures) (decreases) (modifies) (body (return)))
          (method MM (ins (x int)) (outs (lo int) (hi int)) (requires) (ensures) (decreases) (modifies)
            (body (then (assign ((lo (- x 1)) (hi (+ x 1)))) (return))))
          (method Main (ins) (outs) (requires) (ensures) (decreases) (modifies)
            (body (dec ((a int) (b int)) (then (metcall () Z ()) (metcall (a b) MM (5)) (return))))))"#;
        let p = parse_program(src).unwrap();
        let decs = compile(&p).unwrap();
        let text = pretty_decs(&decs);
        assert!(text.contains("handle Return => ()"), "{text}");
        assert!(text.contains("fst t"), "{text}");
        let mut st = TStore::with_clock(10_000);
        let (_, r) = t_evaluate_decs(&mut st, &TEnv::empty(), &decs);
        assert_eq!(r, TRes::RVal(TVal::Unit));
    }
}
