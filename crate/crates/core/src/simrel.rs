//! Value and heap relations between source and compiled runs, and the
//! differential-testing harness built on them.
//!
//! A source method is run by the interpreter; its compiled counterpart is
//! applied to the same arguments in the core language with a large
//! independent clock. Outputs and final arrays must be related through a
//! location map that starts from the materialized inputs and is extended
//! by unification over the outputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ast::*;
use crate::compiler::{compile_library, method_fn_name, CompileError, CompileOptions, EMPTY_ARRAY};
use crate::frontend::{normalize, parse_program, ParseError};
use crate::passes::{freshen_program, remove_assert};
use crate::semantics::{ErrResult, HArr, Heap, Interp, Locals, State, StmtResult, Stop, Value};
use crate::targetlang::{t_evaluate_decs, Cell, TDec, TEnv, TInterp, TRes, TStore, TVal};
use crate::util::pool;
use crate::vccheck::{eval_vc, Budget};

/// Source heap location to core-language store index.
pub type LocMap = BTreeMap<usize, usize>;
/// Source local to the store index of its reference cell.
pub type VarMap = BTreeMap<Name, usize>;

/// Upper clock for compiled runs whose source counterpart finished.
/// The run gets `min(TARGET_FUEL, (source ticks + 1) * (apps + 1))`,
/// where `apps` counts application nodes in the compiled library plus the
/// harness's own argument applications: between
/// two source ticks the compiled code is straight-line and applies each
/// node at most once.
pub const TARGET_FUEL: u64 = 1 << 20;
/// Candidate argument vectors drawn per trial before giving up on a
/// method's `requires`.
pub const ARG_RETRIES: usize = 200;
pub const ARG_INT_RANGE: i64 = 100;
pub const ARG_ARR_LEN_MAX: usize = 8;

pub fn val_rel(m: &LocMap, dv: &Value, tv: &TVal<'_>) -> bool {
    match (dv, tv) {
        (Value::Int(a), TVal::Int(b)) => a == b,
        (Value::Bool(a), TVal::Bool(b)) => a == b,
        (Value::Str(a), TVal::Str(b)) => a == b,
        (Value::Arr { len, loc, .. }, TVal::Tuple(parts)) => match parts.as_slice() {
            [TVal::Int(n), TVal::Loc(l)] => BigInt::from(*len) == *n && (*len == 0 || m.get(loc) == Some(l)),
            _ => false,
        },
        _ => false,
    }
}

/// Every mapped source array has a core-language array of the same
/// length at its image, with related elements.
pub fn array_rel(m: &LocMap, heap: &Heap, store: &TStore<'_>) -> bool {
    m.iter().all(|(l, t)| match (heap.get(*l), store.cells.get(*t)) {
        (Some(h), Some(Cell::Arr(xs))) => {
            h.elems.len() == xs.len() && h.elems.iter().zip(xs).all(|(d, t)| val_rel(m, d, t))
        }
        _ => false,
    })
}

/// Checks `dv` against `tv`, mapping array locations not yet in `m`.
pub fn unify(m: &mut LocMap, heap: &Heap, store: &TStore<'_>, dv: &Value, tv: &TVal<'_>) -> Result<(), String> {
    let Value::Arr { len, loc, .. } = dv else {
        return if val_rel(m, dv, tv) {
            Ok(())
        } else {
            Err(format!("source {dv} vs target {tv}"))
        };
    };
    let t = match tv {
        TVal::Tuple(parts) => match parts.as_slice() {
            [TVal::Int(n), TVal::Loc(t)] if BigInt::from(*len) == *n => *t,
            _ => return Err(format!("source {dv} vs target {tv}")),
        },
        _ => return Err(format!("source {dv} vs target {tv}")),
    };
    if *len == 0 {
        return Ok(());
    }
    if let Some(t0) = m.get(loc) {
        return if *t0 == t {
            Ok(())
        } else {
            Err(format!("source location {loc} related to both {t0} and {t}"))
        };
    }
    if m.values().any(|t0| *t0 == t) {
        return Err(format!("target location {t} related to two source locations"));
    }
    let (Some(h), Some(Cell::Arr(xs))) = (heap.get(*loc), store.cells.get(t)) else {
        return Err(format!("dangling array location {loc} / {t}"));
    };
    if h.elems.len() != xs.len() {
        return Err(format!("array {loc}: length {} vs {}", h.elems.len(), xs.len()));
    }
    m.insert(*loc, t);
    for (d, x) in h.elems.iter().zip(xs) {
        unify(m, heap, store, d, x)?;
    }
    Ok(())
}

/// Arguments of one call, with the arrays they refer to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inputs {
    pub args: Vec<Value>,
    pub heap: Heap,
}

impl Inputs {
    pub fn render(&self) -> Vec<String> {
        self.args.iter().map(|v| render_value(v, &self.heap)).collect()
    }
}

pub fn render_value(v: &Value, heap: &Heap) -> String {
    match v {
        Value::Arr { loc, len, .. } => match heap.get(*loc) {
            Some(h) if *len > 0 || h.elems.is_empty() => {
                let items: Vec<String> = h.elems.iter().map(|e| render_value(e, heap)).collect();
                format!("@{loc}[{}]", items.join(", "))
            }
            _ => "[]".into(),
        },
        _ => v.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Both sides finished with related outputs; carries the source outputs.
    Match(Vec<Value>),
    /// The source run failed, so nothing is required of the target.
    SourceFail,
    SourceTimeout,
    Mismatch(String),
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Match(_) => "match",
            Verdict::SourceFail => "source-fail",
            Verdict::SourceTimeout => "source-timeout",
            Verdict::Mismatch(_) => "mismatch",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Mismatch(d) => write!(f, "mismatch: {d}"),
            v => write!(f, "{}", v.kind()),
        }
    }
}

/// Result of running one method in the source interpreter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceRun {
    pub result: StmtResult,
    pub outs: Vec<Value>,
    pub heap: Heap,
    pub ticks: u64,
}

/// Calls `name` on `inputs` from a synthetic caller frame.
pub fn source_run(p: &Program, name: &str, inputs: &Inputs, fuel: u64) -> SourceRun {
    let n_outs = p.method(name).map_or(0, |m| m.outs.len());
    let arg = |k: usize| format!("arg{k}");
    let out = |k: usize| format!("out{k}");
    let mut list: Vec<(Name, Option<Value>)> = inputs
        .args
        .iter()
        .enumerate()
        .map(|(k, v)| (arg(k), Some(v.clone())))
        .collect();
    list.extend((0..n_outs).map(|k| (out(k), None)));
    let mut st = State::with_clock(fuel);
    st.locals = Locals::from_list(list);
    st.heap = inputs.heap.clone();
    st.locals_old = st.locals.clone();
    st.heap_old = st.heap.clone();
    let call = Stmt::MetCall(
        (0..n_outs).map(out).collect(),
        name.to_string(),
        (0..inputs.args.len()).map(|k| Exp::var(arg(k))).collect(),
    );
    let result = Interp::new(p).stmt(&mut st, &call);
    let outs = if result == StmtResult::Rcont {
        (0..n_outs)
            .filter_map(|k| st.locals.lookup(&out(k)).cloned().flatten())
            .collect()
    } else {
        Vec::new()
    };
    SourceRun {
        result,
        outs,
        heap: st.heap,
        ticks: fuel - st.clock,
    }
}

/// Runs the body of `name` directly in an entry frame (ins bound to
/// `inputs.args`, outs uninitialized, old state = entry state). Returns the
/// body's own result, `Rstop Sret` for a normal return, and the final state
/// for checking ensures. `None` if the method or arity is wrong.
pub fn body_run(p: &Program, name: &str, inputs: &Inputs, fuel: u64) -> Option<(State, StmtResult)> {
    let m = p.method(name)?;
    if m.ins.len() != inputs.args.len() {
        return None;
    }
    let mut frame: Vec<(Name, Option<Value>)> = m
        .ins
        .iter()
        .zip(&inputs.args)
        .map(|((x, _), v)| (x.clone(), Some(v.clone())))
        .collect();
    frame.extend(m.outs.iter().map(|(x, _)| (x.clone(), None)));
    let mut st = State::with_clock(fuel);
    st.locals = Locals::from_list(frame);
    st.heap = inputs.heap.clone();
    st.locals_old = st.locals.clone();
    st.heap_old = st.heap.clone();
    let r = Interp::new(p).stmt(&mut st, &m.body);
    Some((st, r))
}

/// A compiled program, ready to run methods in fresh stores.
pub struct Harness {
    decs: Vec<TDec>,
    apps: u64,
}

struct TargetRun<'a> {
    res: TRes<'a>,
    store: TStore<'a>,
    m: LocMap,
}

fn to_tval<'a>(m: &LocMap, empty: &TVal<'a>, v: &Value) -> TVal<'a> {
    match v {
        Value::Int(i) => TVal::Int(i.clone()),
        Value::Bool(b) => TVal::Bool(*b),
        Value::Str(s) => TVal::Str(s.clone()),
        Value::Arr { len, loc, .. } => TVal::Tuple(vec![
            TVal::int(*len),
            match m.get(loc) {
                Some(t) => TVal::Loc(*t),
                None => empty.clone(),
            },
        ]),
    }
}

impl Harness {
    pub fn new(p: &Program, opts: CompileOptions) -> Result<Harness, CompileError> {
        let decs = compile_library(p, opts)?;
        let apps = decs.iter().map(TDec::app_count).sum();
        Ok(Harness { decs, apps })
    }

    fn run<'a>(&'a self, name: &str, inputs: &Inputs, fuel: u64) -> TargetRun<'a> {
        let mut store = TStore::with_clock(TARGET_FUEL);
        let (env, res) = t_evaluate_decs(&mut store, &TEnv::empty(), &self.decs);
        let fail = |res, store| TargetRun {
            res,
            store,
            m: LocMap::new(),
        };
        if res != TRes::RVal(TVal::Unit) {
            return fail(res, store);
        }
        let empty = match env.lookup(EMPTY_ARRAY) {
            Some(v @ TVal::Loc(_)) => v.clone(),
            _ => return fail(TRes::RCrash, store),
        };
        let mut m = LocMap::new();
        for l in 0..inputs.heap.len() {
            m.insert(l, store.alloc(Cell::Arr(Vec::new())));
        }
        for (l, h) in inputs.heap.iter().enumerate() {
            let xs = h.elems.iter().map(|v| to_tval(&m, &empty, v)).collect();
            store.cells[m[&l]] = Cell::Arr(xs);
        }
        let Some(f) = env.lookup(&method_fn_name(name)).cloned() else {
            return fail(TRes::RCrash, store);
        };
        let mut args: Vec<TVal<'a>> = inputs.args.iter().map(|v| to_tval(&m, &empty, v)).collect();
        if args.is_empty() {
            args.push(TVal::Unit);
        }
        store.clock = fuel;
        let mut it = TInterp::new(&mut store);
        let mut r = Ok(f);
        for a in args.into_iter().rev() {
            r = r.and_then(|f| it.apply(f, a));
        }
        TargetRun {
            res: r.into(),
            store,
            m,
        }
    }

    /// Runs only the compiled `name` and renders its result value, or the
    /// abnormal outcome as the error.
    pub fn call_target(&self, name: &str, inputs: &Inputs, fuel: u64) -> Result<String, String> {
        match self.run(name, inputs, fuel).res {
            TRes::RVal(v) => Ok(v.to_string()),
            other => Err(format!("{other:?}")),
        }
    }

    /// Source against target on one argument vector.
    pub fn difftest(&self, p: &Program, name: &str, inputs: &Inputs, fuel: u64) -> Verdict {
        let Some(method) = p.method(name) else {
            return Verdict::Mismatch(format!("no method {name}"));
        };
        let src = source_run(p, name, inputs, fuel);
        match src.result {
            StmtResult::Rcont => {}
            StmtResult::Rstop(Stop::Serr(ErrResult::Rtimeout)) => {
                // The target spends at least as many ticks as the source.
                let t = self.run(name, inputs, fuel);
                return match t.res {
                    TRes::RVal(v) => Verdict::Mismatch(format!("source timed out at fuel {fuel}, target returned {v}")),
                    _ => Verdict::SourceTimeout,
                };
            }
            _ => return Verdict::SourceFail,
        }
        let apps = self.apps + inputs.args.len().max(1) as u64;
        let budget = (src.ticks + 1).saturating_mul(apps + 1).min(TARGET_FUEL);
        let t = self.run(name, inputs, budget);
        let v = match t.res {
            TRes::RVal(v) => v,
            other => return Verdict::Mismatch(format!("target ended with {other:?}")),
        };
        let outs: Vec<TVal<'_>> = match method.outs.len() {
            0 => match v {
                TVal::Unit => vec![],
                v => return Verdict::Mismatch(format!("target returned {v} for no outputs")),
            },
            1 => vec![v],
            n => match v {
                TVal::Tuple(vs) if vs.len() == n => vs,
                v => return Verdict::Mismatch(format!("target returned {v} for {n} outputs")),
            },
        };
        if outs.len() != src.outs.len() {
            return Verdict::Mismatch("output count differs".into());
        }
        let mut m = t.m;
        for (d, x) in src.outs.iter().zip(&outs) {
            if let Err(e) = unify(&mut m, &src.heap, &t.store, d, x) {
                return Verdict::Mismatch(e);
            }
        }
        if !array_rel(&m, &src.heap, &t.store) {
            return Verdict::Mismatch("final arrays differ".into());
        }
        if src.ticks > 0 {
            let probe = self.run(name, inputs, src.ticks - 1);
            if let TRes::RVal(v) = probe.res {
                return Verdict::Mismatch(format!(
                    "target returned {v} with {} ticks, source needed {}",
                    src.ticks - 1,
                    src.ticks
                ));
            }
        }
        Verdict::Match(src.outs)
    }
}

/// Compiles `p` and compares one call of `name` on both sides.
pub fn difftest_method(p: &Program, name: &str, inputs: &Inputs, fuel: u64) -> Result<Verdict, CompileError> {
    let h = Harness::new(p, CompileOptions::default())?;
    Ok(pool().install(|| h.difftest(p, name, inputs, fuel)))
}

/// Method bodies that the interpreter and compiler can both run.
pub fn is_executable(m: &Method) -> bool {
    !m.body
        .any_stmt(&mut |s| s.run_exps().iter().any(|e| e.any(&mut |x| x.is_verification_only())))
}

fn stable_hash(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for b in p.bytes().chain([0u8]) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn gen_scalar(rng: &mut ChaCha8Rng, t: &DType) -> Value {
    match t {
        DType::Int => {
            if rng.gen_bool(0.5) {
                Value::int(rng.gen_range(-10i64..=10))
            } else {
                Value::int(rng.gen_range(-ARG_INT_RANGE..=ARG_INT_RANGE))
            }
        }
        DType::Bool => Value::Bool(rng.gen()),
        DType::Str => Value::Str(["", "a", "ab", "b"][rng.gen_range(0..4)].to_string()),
        DType::Arr(_) => unreachable!("arrays are generated separately"),
    }
}

fn gen_value(rng: &mut ChaCha8Rng, t: &DType, heap: &mut Heap) -> Value {
    let DType::Arr(elem) = t else {
        return gen_scalar(rng, t);
    };
    let shared: Vec<usize> = (0..heap.len()).filter(|l| heap[*l].ty == **elem).collect();
    if !shared.is_empty() && rng.gen_ratio(1, 5) {
        let loc = shared[rng.gen_range(0..shared.len())];
        return Value::Arr {
            len: heap[loc].elems.len(),
            loc,
            ty: (**elem).clone(),
        };
    }
    let len = rng.gen_range(0..=ARG_ARR_LEN_MAX);
    let mut elems: Vec<Value> = (0..len).map(|_| gen_value(rng, elem, heap)).collect();
    if **elem == DType::Int && rng.gen_ratio(1, 3) {
        elems.sort_by(|a, b| a.as_int().cmp(&b.as_int()));
    }
    heap.push(HArr {
        elems,
        ty: (**elem).clone(),
    });
    Value::Arr {
        len,
        loc: heap.len() - 1,
        ty: (**elem).clone(),
    }
}

fn requires_hold(p: &Program, m: &Method, inputs: &Inputs) -> bool {
    let list: Vec<(Name, Option<Value>)> = m
        .ins
        .iter()
        .zip(&inputs.args)
        .map(|((x, _), v)| (x.clone(), Some(v.clone())))
        .collect();
    let mut st = State::with_clock(TARGET_FUEL);
    st.locals = Locals::from_list(list);
    st.heap = inputs.heap.clone();
    st.locals_old = st.locals.clone();
    st.heap_old = st.heap.clone();
    let b = Budget::default();
    m.reqs
        .iter()
        .all(|r| matches!(eval_vc(&mut st, p, r, &b).result, Ok(Value::Bool(true))))
}

/// Seeded arguments for trial `trial` of `m`, retried until the method's
/// `requires` evaluate to true. `None` if no candidate qualified.
pub fn gen_inputs(p: &Program, m: &Method, seed: u64, trial: usize) -> Option<Inputs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stable_hash(&[&m.name]));
    rng.set_stream(trial as u64);
    for _ in 0..ARG_RETRIES {
        let mut heap = Heap::new();
        let args = m.ins.iter().map(|(_, t)| gen_value(&mut rng, t, &mut heap)).collect();
        let inputs = Inputs { args, heap };
        if requires_hold(p, m, &inputs) {
            return Some(inputs);
        }
    }
    None
}

#[derive(Clone, Debug)]
pub struct DiffConfig {
    pub fuel: u64,
    pub trials: usize,
    pub seed: u64,
    pub mutation: Option<crate::compiler::Mutation>,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig {
            fuel: 100_000,
            trials: 50,
            seed: 1,
            mutation: None,
        }
    }
}

/// One trial, as written to the structured report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub program: String,
    pub method: String,
    pub trial: usize,
    pub args: Vec<String>,
    /// `match`, `source-fail`, `source-timeout`, `mismatch`, or `no-input`.
    pub verdict: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiffReport {
    pub records: Vec<TrialRecord>,
    /// Programs that could not be loaded or compiled, with the reason.
    pub errors: Vec<(String, String)>,
    /// Methods not run because their bodies use verification-only forms.
    pub skipped: Vec<(String, String)>,
}

impl DiffReport {
    pub fn count(&self, verdict: &str) -> usize {
        self.records.iter().filter(|r| r.verdict == verdict).count()
    }

    pub fn mismatches(&self) -> usize {
        self.count("mismatch")
    }

    pub fn ok(&self) -> bool {
        self.mismatches() == 0 && self.errors.is_empty()
    }

    /// Per-method verdict counts followed by mismatch details.
    pub fn render_text(&self) -> String {
        let mut groups: BTreeMap<(&str, &str), BTreeMap<&str, usize>> = BTreeMap::new();
        for r in &self.records {
            *groups
                .entry((&r.program, &r.method))
                .or_default()
                .entry(&r.verdict)
                .or_default() += 1;
        }
        let mut out = String::new();
        for ((prog, meth), counts) in &groups {
            let cs: Vec<String> = counts.iter().map(|(k, n)| format!("{k} {n}")).collect();
            out.push_str(&format!("{prog} {meth}: {}\n", cs.join(", ")));
        }
        for (prog, e) in &self.errors {
            out.push_str(&format!("{prog}: error: {e}\n"));
        }
        for (prog, meth) in &self.skipped {
            out.push_str(&format!("{prog} {meth}: skipped (not executable)\n"));
        }
        for r in self.records.iter().filter(|r| r.verdict == "mismatch") {
            out.push_str(&format!(
                "MISMATCH {} {} trial {} args ({}): {}\n",
                r.program,
                r.method,
                r.trial,
                r.args.join(", "),
                r.detail
            ));
        }
        out.push_str(&format!(
            "total: {} trials, {} match, {} source-fail, {} source-timeout, {} no-input, {} mismatch\n",
            self.records.len(),
            self.count("match"),
            self.count("source-fail"),
            self.count("source-timeout"),
            self.count("no-input"),
            self.mismatches()
        ));
        out
    }

    pub fn render_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("serializable record") + "\n")
            .collect()
    }
}

/// Runs every executable method of `p` on `cfg.trials` seeded inputs.
pub fn difftest_program(program: &str, p: &Program, cfg: &DiffConfig) -> Result<Vec<TrialRecord>, CompileError> {
    let h = Harness::new(p, CompileOptions { mutation: cfg.mutation })?;
    let seed = cfg.seed ^ stable_hash(&[program]);
    let jobs: Vec<(&Method, usize)> = p
        .methods()
        .filter(|m| is_executable(m))
        .flat_map(|m| (0..cfg.trials).map(move |k| (m, k)))
        .collect();
    let records = pool().install(|| {
        jobs.par_iter()
            .map(|(m, k)| {
                let record = |args, verdict: &str, detail: String| TrialRecord {
                    program: program.to_string(),
                    method: m.name.clone(),
                    trial: *k,
                    args,
                    verdict: verdict.to_string(),
                    detail,
                };
                match gen_inputs(p, m, seed, *k) {
                    None => record(vec![], "no-input", "requires never held".into()),
                    Some(inputs) => {
                        let v = h.difftest(p, &m.name, &inputs, cfg.fuel);
                        let detail = match &v {
                            Verdict::Match(outs) => outs.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(", "),
                            Verdict::Mismatch(d) => d.clone(),
                            _ => String::new(),
                        };
                        record(inputs.render(), v.kind(), detail)
                    }
                }
            })
            .collect()
    });
    Ok(records)
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Parse(PathBuf, ParseError),
}

/// The `.sexp` files of a directory in name order, or the file itself.
pub fn corpus_files(path: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let rd = std::fs::read_dir(path).map_err(|e| CorpusError::Io(path.into(), e))?;
    let mut files: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "sexp"))
        .collect();
    files.sort();
    Ok(files)
}

/// Parses and normalizes a program file.
pub fn load_program(path: &Path) -> Result<Program, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io(path.into(), e))?;
    let p = parse_program(&text).map_err(|e| CorpusError::Parse(path.into(), e))?;
    Ok(normalize(&p))
}

pub fn program_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Differential test of every program under `path`.
pub fn difftest_corpus(path: &Path, cfg: &DiffConfig) -> Result<DiffReport, CorpusError> {
    let mut report = DiffReport::default();
    for file in corpus_files(path)? {
        let p = load_program(&file)?;
        let label = program_label(&file);
        for m in p.methods().filter(|m| !is_executable(m)) {
            report.skipped.push((label.clone(), m.name.clone()));
        }
        match difftest_program(&label, &p, cfg) {
            Ok(rs) => report.records.extend(rs),
            Err(e) => report.errors.push((label, e.to_string())),
        }
    }
    Ok(report)
}

/// `remove_assert` followed by `freshen_program`.
pub fn pass_pipeline(p: &Program) -> Program {
    freshen_program(&remove_assert(p))
}

/// Compares `p` with `q` (a transformed copy) on one input. Runs where `p`
/// fails make no demand; otherwise both must end alike with equal outputs
/// and heaps.
pub fn passtest(p: &Program, q: &Program, name: &str, inputs: &Inputs, fuel: u64) -> Verdict {
    let a = source_run(p, name, inputs, fuel);
    if a.result == StmtResult::FAIL {
        return Verdict::SourceFail;
    }
    let b = source_run(q, name, inputs, fuel);
    if a.result != b.result {
        return Verdict::Mismatch(format!("{} vs {}", a.result, b.result));
    }
    if a.result == StmtResult::TIMEOUT {
        return Verdict::SourceTimeout;
    }
    if a.outs != b.outs || a.heap != b.heap || a.ticks != b.ticks {
        return Verdict::Mismatch("outputs, heap or clock differ".into());
    }
    Verdict::Match(a.outs)
}

/// [`passtest`] of `p` against [`pass_pipeline`]`(p)` on seeded inputs for
/// every executable method.
pub fn passtest_program(program: &str, p: &Program, cfg: &DiffConfig) -> Vec<TrialRecord> {
    let q = pass_pipeline(p);
    let seed = cfg.seed ^ stable_hash(&[program]);
    let mut out = Vec::new();
    let names: BTreeSet<&str> = q.methods().map(|m| m.name.as_str()).collect();
    for m in p.methods().filter(|m| is_executable(m)) {
        for k in 0..cfg.trials {
            let record = |args, verdict: &str, detail: String| TrialRecord {
                program: program.to_string(),
                method: m.name.clone(),
                trial: k,
                args,
                verdict: verdict.to_string(),
                detail,
            };
            if !names.contains(m.name.as_str()) {
                out.push(record(vec![], "mismatch", "method renamed by passes".into()));
                continue;
            }
            let r = match gen_inputs(p, m, seed, k) {
                None => record(vec![], "no-input", String::new()),
                Some(inputs) => {
                    let v = pool().install(|| passtest(p, &q, &m.name, &inputs, cfg.fuel));
                    let detail = if let Verdict::Mismatch(d) = &v {
                        d.clone()
                    } else {
                        String::new()
                    };
                    record(inputs.render(), v.kind(), detail)
                }
            };
            out.push(r);
        }
    }
    out
}
