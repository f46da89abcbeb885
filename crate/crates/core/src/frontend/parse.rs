//! S-expression to AST conversion.

use num_bigint::BigInt;

use super::sexp::{read_all, read_one, Atom, ParseError, Pos, SExp};
use crate::ast::*;

type PResult<T> = Result<T, ParseError>;

fn err<T>(pos: Pos, msg: impl Into<String>) -> PResult<T> {
    Err(ParseError::new(pos, msg))
}

fn is_int_text(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// Identifier syntax accepted for variables, methods and functions.
pub fn is_name(s: &str) -> bool {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    cs.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'') && s != "true" && s != "false"
}

fn as_list<'a>(e: &'a SExp, what: &str) -> PResult<&'a [SExp]> {
    match e {
        SExp::List(items, _) => Ok(items),
        SExp::Atom(a) => err(a.pos, format!("expected {what} list, found atom `{}`", a.text)),
    }
}

fn as_plain_atom<'a>(e: &'a SExp, what: &str) -> PResult<&'a Atom> {
    match e {
        SExp::Atom(a) if !a.quoted => Ok(a),
        SExp::Atom(a) => err(a.pos, format!("expected {what}, found string literal")),
        SExp::List(_, p) => err(*p, format!("expected {what}, found list")),
    }
}

fn name(e: &SExp) -> PResult<Name> {
    let a = as_plain_atom(e, "name")?;
    if !is_name(&a.text) {
        return err(a.pos, format!("expected name, found `{}`", a.text));
    }
    Ok(a.text.clone())
}

/// Splits `(tag args...)` and returns the tag text.
fn tagged<'a>(e: &'a SExp, what: &str) -> PResult<(&'a str, &'a [SExp], Pos)> {
    let items = as_list(e, what)?;
    let Some(head) = items.first() else {
        return err(e.pos(), format!("expected {what}, found empty list"));
    };
    let tag = as_plain_atom(head, &format!("{what} tag"))?;
    Ok((&tag.text, &items[1..], e.pos()))
}

fn arity(tag: &str, args: &[SExp], n: usize, pos: Pos) -> PResult<()> {
    if args.len() != n {
        return err(pos, format!("`{tag}` expects {n} argument(s), found {}", args.len()));
    }
    Ok(())
}

/// `(tag items...)` section with a fixed tag.
fn section<'a>(e: &'a SExp, tag: &str) -> PResult<&'a [SExp]> {
    let (t, args, pos) = tagged(e, &format!("({tag} ...) section"))?;
    if t != tag {
        return err(pos, format!("expected `({tag} ...)`, found `({t} ...)`"));
    }
    Ok(args)
}

pub fn parse_type(e: &SExp) -> PResult<DType> {
    match e {
        SExp::Atom(a) if !a.quoted => match a.text.as_str() {
            "int" => Ok(DType::Int),
            "bool" => Ok(DType::Bool),
            "string" => Ok(DType::Str),
            other => err(a.pos, format!("unknown type `{other}`")),
        },
        _ => {
            let (tag, args, pos) = tagged(e, "type")?;
            if tag != "array" {
                return err(pos, format!("unknown type constructor `{tag}`"));
            }
            arity(tag, args, 1, pos)?;
            Ok(DType::arr(parse_type(&args[0])?))
        }
    }
}

fn bind(e: &SExp) -> PResult<(Name, DType)> {
    let items = as_list(e, "binding")?;
    if items.len() != 2 {
        return err(e.pos(), "binding must have the form (NAME TYPE)");
    }
    Ok((name(&items[0])?, parse_type(&items[1])?))
}

pub fn parse_exp(e: &SExp) -> PResult<Exp> {
    match e {
        SExp::Atom(a) if a.quoted => Ok(Exp::StrLit(a.text.clone())),
        SExp::Atom(a) => {
            let t = a.text.as_str();
            if t == "true" {
                Ok(Exp::BoolLit(true))
            } else if t == "false" {
                Ok(Exp::BoolLit(false))
            } else if is_int_text(t) {
                let i: BigInt = t
                    .parse()
                    .map_err(|_| ParseError::new(a.pos, "invalid integer literal"))?;
                Ok(Exp::IntLit(i))
            } else if is_name(t) {
                Ok(Exp::Var(t.to_string()))
            } else {
                err(a.pos, format!("expected expression, found `{t}`"))
            }
        }
        SExp::List(..) => {
            let (tag, args, pos) = tagged(e, "expression")?;
            let sub = |k: usize| parse_exp(&args[k]).map(Box::new);
            if let Some(op) = BinOp::from_symbol(tag) {
                arity(tag, args, 2, pos)?;
                return Ok(Exp::BinOp(op, sub(0)?, sub(1)?));
            }
            let unary = |f: fn(Box<Exp>) -> Exp| -> PResult<Exp> {
                arity(tag, args, 1, pos)?;
                Ok(f(parse_exp(&args[0]).map(Box::new)?))
            };
            match tag {
                "not" => unary(|e| Exp::UnOp(UnOp::Not, e)),
                "neg" => unary(|e| Exp::UnOp(UnOp::Neg, e)),
                "len" => unary(Exp::ArrLen),
                "old" => unary(Exp::Old),
                "oldheap" => unary(Exp::OldHeap),
                "prev" => unary(Exp::Prev),
                "prevheap" => unary(Exp::PrevHeap),
                "setprev" => unary(Exp::SetPrev),
                "ite" => {
                    arity(tag, args, 3, pos)?;
                    Ok(Exp::Ite(sub(0)?, sub(1)?, sub(2)?))
                }
                "sel" => {
                    arity(tag, args, 2, pos)?;
                    Ok(Exp::ArrSel(sub(0)?, sub(1)?))
                }
                "call" => {
                    if args.is_empty() {
                        return err(pos, "`call` expects a function name");
                    }
                    let f = name(&args[0])?;
                    let es = args[1..].iter().map(parse_exp).collect::<PResult<_>>()?;
                    Ok(Exp::FunCall(f, es))
                }
                "forall" => {
                    arity(tag, args, 2, pos)?;
                    let (x, ty) = bind(&args[0])?;
                    Ok(Exp::Forall(x, ty, sub(1)?))
                }
                "let" => {
                    arity(tag, args, 2, pos)?;
                    let mut binds = Vec::new();
                    for b in as_list(&args[0], "let bindings")? {
                        let items = as_list(b, "let binding")?;
                        if items.len() != 2 {
                            return err(b.pos(), "let binding must have the form (NAME exp)");
                        }
                        let x = name(&items[0])?;
                        if binds.iter().any(|(y, _)| *y == x) {
                            return err(b.pos(), format!("duplicate let binding `{x}`"));
                        }
                        binds.push((x, parse_exp(&items[1])?));
                    }
                    Ok(Exp::Let(binds, sub(1)?))
                }
                "forallheap" => {
                    arity(tag, args, 2, pos)?;
                    let havoc = as_list(&args[0], "havoc names")?
                        .iter()
                        .map(name)
                        .collect::<PResult<_>>()?;
                    Ok(Exp::ForallHeap(havoc, sub(1)?))
                }
                other => err(pos, format!("unknown expression tag `{other}`")),
            }
        }
    }
}

fn parse_lhs(e: &SExp) -> PResult<Lhs> {
    match e {
        SExp::Atom(_) => Ok(Lhs::Var(name(e)?)),
        SExp::List(..) => {
            let (tag, args, pos) = tagged(e, "assignment target")?;
            if tag != "sel" {
                return err(pos, format!("expected NAME or (sel ...) target, found `{tag}`"));
            }
            arity(tag, args, 2, pos)?;
            Ok(Lhs::ArrSel(parse_exp(&args[0])?, parse_exp(&args[1])?))
        }
    }
}

fn parse_rhs(e: &SExp) -> PResult<Rhs> {
    if let SExp::List(items, pos) = e {
        if let Some(SExp::Atom(a)) = items.first() {
            if !a.quoted && a.text == "alloc" {
                arity("alloc", &items[1..], 2, *pos)?;
                return Ok(Rhs::ArrAlloc(parse_type(&items[1])?, parse_exp(&items[2])?));
            }
        }
    }
    Ok(Rhs::Exp(parse_exp(e)?))
}

pub fn parse_stmt(e: &SExp) -> PResult<Stmt> {
    let (tag, args, pos) = tagged(e, "statement")?;
    match tag {
        "skip" => {
            arity(tag, args, 0, pos)?;
            Ok(Stmt::Skip)
        }
        "return" => {
            arity(tag, args, 0, pos)?;
            Ok(Stmt::Return)
        }
        "assert" => {
            arity(tag, args, 1, pos)?;
            Ok(Stmt::Assert(parse_exp(&args[0])?))
        }
        // n-ary sequencing is sugar for right-nested binary `then`
        "then" => {
            if args.len() < 2 {
                return err(pos, "`then` expects at least 2 statements");
            }
            let stmts = args.iter().map(parse_stmt).collect::<PResult<Vec<_>>>()?;
            Ok(Stmt::seq(stmts))
        }
        "if" => {
            arity(tag, args, 3, pos)?;
            Ok(Stmt::if_(
                parse_exp(&args[0])?,
                parse_stmt(&args[1])?,
                parse_stmt(&args[2])?,
            ))
        }
        "dec" => {
            arity(tag, args, 2, pos)?;
            let mut binds = Vec::new();
            for b in as_list(&args[0], "declarations")? {
                let items = as_list(b, "declaration")?;
                if !(2..=3).contains(&items.len()) {
                    return err(b.pos(), "declaration must have the form (NAME TYPE exp?)");
                }
                binds.push(DecBind {
                    name: name(&items[0])?,
                    ty: parse_type(&items[1])?,
                    init: items.get(2).map(parse_exp).transpose()?,
                });
            }
            Ok(Stmt::Dec(binds, Box::new(parse_stmt(&args[1])?)))
        }
        "assign" => {
            arity(tag, args, 1, pos)?;
            let mut pairs = Vec::new();
            for p in as_list(&args[0], "assignment pairs")? {
                let items = as_list(p, "assignment pair")?;
                if items.len() != 2 {
                    return err(p.pos(), "assignment pair must have the form (lhs rhs)");
                }
                pairs.push((parse_lhs(&items[0])?, parse_rhs(&items[1])?));
            }
            Ok(Stmt::Assign(pairs))
        }
        "while" => {
            arity(tag, args, 5, pos)?;
            let exps = |xs: &[SExp]| xs.iter().map(parse_exp).collect::<PResult<Vec<_>>>();
            Ok(Stmt::While(While {
                guard: parse_exp(&args[0])?,
                invs: exps(section(&args[1], "invariants")?)?,
                decrs: exps(section(&args[2], "decreases")?)?,
                mods: section(&args[3], "modifies")?
                    .iter()
                    .map(name)
                    .collect::<PResult<_>>()?,
                body: Box::new(parse_stmt(&args[4])?),
            }))
        }
        "metcall" => {
            arity(tag, args, 3, pos)?;
            let lhss = as_list(&args[0], "call targets")?
                .iter()
                .map(name)
                .collect::<PResult<_>>()?;
            let es = as_list(&args[2], "call arguments")?
                .iter()
                .map(parse_exp)
                .collect::<PResult<_>>()?;
            Ok(Stmt::MetCall(lhss, name(&args[1])?, es))
        }
        other => err(pos, format!("unknown statement tag `{other}`")),
    }
}

pub fn parse_member(e: &SExp) -> PResult<Member> {
    let (tag, args, pos) = tagged(e, "member")?;
    let exps = |xs: &[SExp]| xs.iter().map(parse_exp).collect::<PResult<Vec<_>>>();
    let binds = |xs: &[SExp]| xs.iter().map(bind).collect::<PResult<Vec<_>>>();
    match tag {
        "method" => {
            if args.len() != 8 {
                return err(
                    pos,
                    format!(
                        "`method` expects NAME, ins, outs, requires, ensures, decreases, \
                         modifies and body (8 fields), found {}",
                        args.len()
                    ),
                );
            }
            let body = section(&args[7], "body")?;
            arity("body", body, 1, args[7].pos())?;
            Ok(Member::Method(Method {
                name: name(&args[0])?,
                ins: binds(section(&args[1], "ins")?)?,
                outs: binds(section(&args[2], "outs")?)?,
                reqs: exps(section(&args[3], "requires")?)?,
                ens: exps(section(&args[4], "ensures")?)?,
                decreases: exps(section(&args[5], "decreases")?)?,
                mods: section(&args[6], "modifies")?
                    .iter()
                    .map(name)
                    .collect::<PResult<_>>()?,
                body: parse_stmt(&body[0])?,
            }))
        }
        "function" => {
            arity(tag, args, 4, pos)?;
            Ok(Member::Function(Function {
                name: name(&args[0])?,
                ins: binds(section(&args[1], "ins")?)?,
                res_ty: parse_type(&args[2])?,
                body: parse_exp(&args[3])?,
            }))
        }
        other => err(pos, format!("unknown member tag `{other}`")),
    }
}

pub fn parse_program(text: &str) -> PResult<Program> {
    let top = read_one(text)?;
    let (tag, args, pos) = tagged(&top, "program")?;
    if tag != "program" {
        return err(pos, format!("expected `(program ...)`, found `({tag} ...)`"));
    }
    Ok(Program::new(args.iter().map(parse_member).collect::<PResult<_>>()?))
}

pub fn parse_exp_text(text: &str) -> PResult<Exp> {
    parse_exp(&read_one(text)?)
}

pub fn parse_stmt_text(text: &str) -> PResult<Stmt> {
    parse_stmt(&read_one(text)?)
}

/// Method name, parameters and conditions of one VC record.
pub type VcRecord = (Name, Vec<(Name, DType)>, Vec<Exp>);

/// Reads a VC file: a sequence of `(vc NAME (params bind*) exp*)` records.
pub fn parse_vc_file(text: &str) -> PResult<Vec<VcRecord>> {
    let mut out = Vec::new();
    for rec in read_all(text)? {
        let (tag, args, pos) = tagged(&rec, "vc record")?;
        if tag != "vc" || args.len() < 2 {
            return err(pos, "expected `(vc NAME (params ...) exp*)`");
        }
        let params = section(&args[1], "params")?.iter().map(bind).collect::<PResult<_>>()?;
        let conds = args[2..].iter().map(parse_exp).collect::<PResult<_>>()?;
        out.push((name(&args[0])?, params, conds));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_program() {
        assert_eq!(parse_program("(program)").unwrap(), Program::default());
    }

    #[test]
    fn method_missing_fields_is_error() {
        let e = parse_program("(program (method))").unwrap_err();
        assert!(e.msg.contains("8 fields"), "{e}");
    }

    #[test]
    fn swap_method() {
        let src = r#"
        (program
          (method Swap (ins (a (array int)) (i int) (j int)) (outs)
            (requires (and (<= 0 i) (< i (len a))) (and (<= 0 j) (< j (len a))))
            (ensures (== (sel a i) (old (sel a j))) (== (sel a j) (old (sel a i))))
            (decreases)
            (modifies a)
            (body (dec ((tmp int (sel a i)))
                    (then (assign (((sel a i) (sel a j))))
                          (assign (((sel a j) tmp))))))))"#;
        let p = parse_program(src).unwrap();
        let m = p.method("Swap").unwrap();
        assert_eq!(m.ins.len(), 3);
        assert_eq!(m.reqs.len(), 2);
        assert!(m.ens[0].any(&mut |e| matches!(e, Exp::Old(_))));
        assert_eq!(m.mods, vec!["a".to_string()]);
    }

    #[test]
    fn errors_carry_position_and_expectation() {
        let e = parse_exp_text("(+ 1)").unwrap_err();
        assert!(e.msg.contains("expects 2"));
        let e = parse_program("(program\n  (frob))").unwrap_err();
        assert_eq!(e.pos.line, 2);
        assert!(e.msg.contains("unknown member tag"));
        assert!(parse_type(&read_one("(array float)").unwrap()).is_err());
        assert!(parse_exp_text("(let ((x 1) (x 2)) x)").is_err());
    }

    #[test]
    fn negative_literals_and_nary_then() {
        assert_eq!(parse_exp_text("-7").unwrap(), Exp::int(-7));
        assert_eq!(parse_exp_text("(neg 7)").unwrap(), Exp::neg(Exp::int(7)));
        let s = parse_stmt_text("(then (skip) (skip) (return))").unwrap();
        assert_eq!(s, Stmt::then(Stmt::Skip, Stmt::then(Stmt::Skip, Stmt::Return)));
    }
}
