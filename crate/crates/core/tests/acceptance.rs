//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Thresholds are the constants below.

mod common;

use std::time::{Duration, Instant};

use common::*;
use minidafny::ast::Program;
use minidafny::compiler::{CompileOptions, Mutation};
use minidafny::frontend::{parse_program, print_program};
use minidafny::passes::{freshen_program, is_fresh_program, program_no_shadow};
use minidafny::semantics::{StmtResult, Stop, Value};
use minidafny::simrel::{
    body_run, corpus_files, difftest_corpus, gen_inputs, is_executable, load_program, pass_pipeline, passtest_program,
    program_label, source_run, DiffConfig, Harness, Inputs,
};
use minidafny::util::with_large_stack;
use minidafny::vccheck::{eval_vc, falsify, smt_check, Budget, SmtVerdict};
use minidafny::vcg::program_vcg;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

const NINETY_ONE_INPUTS: [i64; 7] = [-5, 0, 50, 100, 101, 102, 150];
const NINETY_ONE_FUEL: u64 = 100_000;
const NINETY_ONE_LIMIT: Duration = Duration::from_secs(1);

const CORPUS_MIN: usize = 15;
const REQUIRED_PROGRAMS: [&str; 6] = ["91", "swap", "find", "sum_to_n", "fibonacci", "binary_search"];
const DIFF_TRIALS: usize = 50;
const DIFF_SEED: u64 = 1;
const DIFF_LIMIT: Duration = Duration::from_secs(60);

const LAW_CASES: u32 = 10_000;
const LAW_DEPTH: u32 = 6;

const SMT_LIMIT: Duration = Duration::from_secs(10);
const SMT_TIMEOUT: Duration = Duration::from_secs(10);
const FALSIFY_INTS: (i64, i64) = (-200, 200);
const FALSIFY_STATES: usize = 500;
const FALSIFY_LIMIT: Duration = Duration::from_secs(30);

const SPEC_MUTANTS_MIN: usize = 8;

const SOUND_INPUTS: usize = 200;
const SOUND_FUEL: u64 = 100_000;
const SOUND_SEED: u64 = 8;
const SOUND_LIMIT: Duration = Duration::from_secs(60);

const PASS_TRIALS: usize = 50;

const ROUNDTRIP_CASES: u32 = 10_000;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(t < limit, || format!("{what} took {t:.2?}, limit {limit:?}"))
}

fn all_corpus() -> Vec<(String, Program)> {
    corpus_files(&corpus_dir())
        .expect("corpus directory")
        .iter()
        .map(|f| (program_label(f), load_program(f).expect("corpus program")))
        .collect()
}

fn falsify_budget() -> Budget {
    Budget {
        int_lo: FALSIFY_INTS.0,
        int_hi: FALSIFY_INTS.1,
        states_max: FALSIFY_STATES,
        ..Budget::default()
    }
}

fn ninety_one() -> Outcome {
    let p = corpus("91");
    let h = Harness::new(&p, CompileOptions::default()).map_err(|e| e.to_string())?;
    let start = Instant::now();
    for n in NINETY_ONE_INPUTS {
        let want = if n <= 100 { 91 } else { n - 10 };
        let inputs = Inputs {
            args: vec![Value::int(n)],
            heap: vec![],
        };
        let src = source_run(&p, "M", &inputs, NINETY_ONE_FUEL);
        ensure(
            src.result == StmtResult::Rcont && src.outs == vec![Value::int(want)],
            || format!("interpreter M({n}) = {} {:?}, want {want}", src.result, src.outs),
        )?;
        let tgt = h.call_target("M", &inputs, NINETY_ONE_FUEL);
        ensure(tgt == Ok(want.to_string()), || {
            format!("compiled M({n}) = {tgt:?}, want {want}")
        })?;
    }
    let t = start.elapsed();
    within(t, NINETY_ONE_LIMIT, "both runs")?;
    Ok(format!(
        "{} inputs agree on both sides in {t:.2?}",
        NINETY_ONE_INPUTS.len()
    ))
}

fn diff_cfg(mutation: Option<Mutation>) -> DiffConfig {
    DiffConfig {
        trials: DIFF_TRIALS,
        seed: DIFF_SEED,
        mutation,
        ..DiffConfig::default()
    }
}

fn corpus_difftest() -> Outcome {
    let labels: Vec<String> = all_corpus().into_iter().map(|(l, _)| l).collect();
    ensure(labels.len() >= CORPUS_MIN, || {
        format!("{} programs, need {CORPUS_MIN}", labels.len())
    })?;
    for r in REQUIRED_PROGRAMS {
        ensure(labels.iter().any(|l| l == r), || format!("corpus lacks {r}"))?;
    }
    let start = Instant::now();
    let rep = difftest_corpus(&corpus_dir(), &diff_cfg(None)).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    ensure(rep.errors.is_empty(), || format!("errors: {:?}", rep.errors))?;
    ensure(rep.mismatches() == 0, || rep.render_text())?;
    // every method that ran must have matched at least once
    for (prog, p) in all_corpus() {
        for m in p.methods().filter(|m| is_executable(m)) {
            let hit = rep
                .records
                .iter()
                .any(|r| r.program == prog && r.method == m.name && r.verdict == "match");
            ensure(hit, || format!("{prog} {} never matched", m.name))?;
        }
    }
    within(t, DIFF_LIMIT, "difftest")?;
    Ok(format!(
        "{} programs, {} trials, {} match, 0 mismatch, {} not executable, {t:.2?}",
        labels.len(),
        rep.records.len(),
        rep.count("match"),
        rep.skipped.len()
    ))
}

fn mutation_sensitivity() -> Outcome {
    let muts = [
        ("op-flip", Mutation::OpFlip),
        ("no-arg-reverse", Mutation::NoArgReverse),
        ("drop-return-handler", Mutation::DropReturnHandler),
        ("wrong-array-component", Mutation::WrongArrayComponent),
        ("missing-clock-tick", Mutation::MissingClockTick),
    ];
    let mut found = Vec::new();
    for (name, m) in muts {
        let rep = difftest_corpus(&corpus_dir(), &diff_cfg(Some(m))).map_err(|e| e.to_string())?;
        let n = rep.mismatches();
        ensure(n >= 1, || format!("{name} went unnoticed"))?;
        found.push(format!("{name} {n}"));
    }
    Ok(format!("mismatches: {}", found.join(", ")))
}

fn interpreter_laws() -> Outcome {
    let p = law_program();
    let cfg = || Config {
        cases: LAW_CASES,
        failure_persistence: None,
        ..Config::default()
    };
    let (ints, bools) = exec_exps(LAW_DEPTH);
    let fuel = || 0u64..200;
    let mut runner = TestRunner::new(cfg());
    runner
        .run(&(exec_states(), ints, fuel(), fuel()), |(st, e, f, k)| {
            exp_laws(&p, &st, &e, f, k).map_err(TestCaseError::fail)
        })
        .map_err(|e| format!("int expressions: {e}"))?;
    let mut runner = TestRunner::new(cfg());
    runner
        .run(&(exec_states(), bools, fuel(), fuel()), |(st, e, f, k)| {
            exp_laws(&p, &st, &e, f, k).map_err(TestCaseError::fail)
        })
        .map_err(|e| format!("bool expressions: {e}"))?;
    let mut runner = TestRunner::new(cfg());
    runner
        .run(
            &(exec_states(), exec_stmts(LAW_DEPTH), fuel(), fuel()),
            |(st, s, f, k)| stmt_laws(&p, &st, &s, f, k).map_err(TestCaseError::fail),
        )
        .map_err(|e| format!("statements: {e}"))?;
    Ok(format!("3 x {LAW_CASES} cases at depth {LAW_DEPTH}, no violation"))
}

fn vcg_shapes() -> Outcome {
    let vcs = program_vcg(&corpus("91")).map_err(|e| e.to_string())?;
    let (pre, dec, out) = ninety_one_call_shapes(&vcs[0].conditions);
    ensure(pre >= 1 && dec >= 1 && out >= 1, || {
        format!("91 call shapes: pre {pre}, decreases {dec}, out forall {out}")
    })?;
    let vcs = program_vcg(&corpus("swap")).map_err(|e| e.to_string())?;
    let frames = update_frames(&vcs[0].conditions, "a");
    ensure(frames == 2, || format!("swap has {frames} update frames"))?;
    Ok(format!(
        "91: pre {pre}, decreases {dec}, out {out}; swap frames {frames}"
    ))
}

fn discharge_91() -> Outcome {
    let p = corpus("91");
    let vcs = program_vcg(&p).map_err(|e| e.to_string())?;
    let v = &vcs[0];
    let mut notes = Vec::new();
    if z3_available() {
        let start = Instant::now();
        let verdicts = smt_check(&v.conditions, &v.params, "z3", SMT_TIMEOUT).map_err(|e| e.to_string())?;
        let t = start.elapsed();
        for (i, r) in verdicts.iter().enumerate() {
            ensure(*r == SmtVerdict::Valid, || format!("condition {i}: {r:?}"))?;
        }
        within(t, SMT_LIMIT, "z3")?;
        notes.push(format!("z3: {} conditions valid in {t:.2?}", verdicts.len()));
    } else {
        notes.push("z3 not installed".into());
    }
    let start = Instant::now();
    let r = falsify(&p, &v.conditions, &v.params, &falsify_budget());
    let t = start.elapsed();
    ensure(r.counterexample.is_none() && r.bounded_valid(), || {
        format!("falsifier: {r:?}")
    })?;
    within(t, FALSIFY_LIMIT, "falsifier")?;
    notes.push(format!("falsifier: bounded-valid, {} states in {t:.2?}", r.passed));
    Ok(notes.join("; "))
}

/// Rejected means the VCG refuses the program or some condition has a
/// counterexample (or an SMT model, when z3 is present).
fn rejected(p: &Program) -> bool {
    let Ok(vcs) = program_vcg(p) else {
        return true;
    };
    vcs.iter().any(|v| {
        if falsify(p, &v.conditions, &v.params, &falsify_budget())
            .counterexample
            .is_some()
        {
            return true;
        }
        z3_available()
            && smt_check(&v.conditions, &v.params, "z3", SMT_TIMEOUT)
                .is_ok_and(|vs| vs.iter().any(|x| matches!(x, SmtVerdict::Invalid(_))))
    })
}

fn mutant(label: &str, from: &str, to: &str) -> Result<Program, String> {
    let text = corpus_text(label);
    ensure(text.contains(from), || format!("{label}: pattern {from:?} not found"))?;
    parse_program(&text.replacen(from, to, 1)).map_err(|e| format!("{label}: {e}"))
}

fn spec_refutation() -> Outcome {
    let cases: [(&str, &str, &str, &str); 12] = [
        ("91", "ensures constant", "91 (- n 10)", "92 (- n 10)"),
        (
            "sum_to_n",
            "ensures divisor",
            "(div (* n (+ n 1)) 2)",
            "(div (* n (+ n 1)) 3)",
        ),
        ("factorial", "ensures bound", "(ensures (<= 1 r)", "(ensures (<= 2 r)"),
        (
            "power",
            "ensures constant",
            "(==> (== e 0) (== r 1))",
            "(==> (== e 0) (== r 0))",
        ),
        ("sum_to_n", "invariant dropped", "(== s (div (* i (+ i 1)) 2))", ""),
        ("fibonacci", "invariant dropped", "(<= 1 b)", ""),
        ("gcd", "invariant dropped", "(<= 1 x) ", ""),
        ("sum_to_n", "measure increases", "(decreases (- n i))", "(decreases i)"),
        ("91", "measure increases", "(decreases (- 111 n))", "(decreases n)"),
        ("factorial", "measure constant", "(decreases n)", "(decreases 5)"),
        ("swap", "modifies missing", "(modifies a)", "(modifies)"),
        (
            "add_one",
            "loop modifies missing",
            "(modifies a)\n          (then",
            "(modifies)\n          (then",
        ),
    ];
    ensure(cases.len() >= SPEC_MUTANTS_MIN, || "too few mutants".into())?;
    let mut accepted = Vec::new();
    for (label, what, from, to) in cases {
        let p = minidafny::frontend::normalize(&mutant(label, from, to)?);
        if !rejected(&p) {
            accepted.push(format!("{label} ({what})"));
        }
    }
    // the unmutated originals must be accepted, or rejection means nothing
    for label in [
        "91",
        "sum_to_n",
        "factorial",
        "power",
        "fibonacci",
        "gcd",
        "swap",
        "add_one",
    ] {
        ensure(!rejected(&corpus(label)), || format!("original {label} is rejected"))?;
    }
    ensure(accepted.is_empty(), || format!("accepted: {}", accepted.join(", ")))?;
    Ok(format!("{} mutants rejected, originals accepted", cases.len()))
}

fn passes_bar(p: &Program, method: &str) -> Result<bool, String> {
    let vcs = program_vcg(p).map_err(|e| e.to_string())?;
    let Some(v) = vcs.iter().find(|v| v.method == method) else {
        return Ok(false);
    };
    let r = falsify(p, &v.conditions, &v.params, &falsify_budget());
    if r.counterexample.is_some() || !r.bounded_valid() {
        return Ok(false);
    }
    if z3_available() {
        let vs = smt_check(&v.conditions, &v.params, "z3", SMT_TIMEOUT).map_err(|e| e.to_string())?;
        if vs.iter().any(|x| matches!(x, SmtVerdict::Invalid(_))) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn soundness_by_execution() -> Outcome {
    let corpus = all_corpus();
    let mut verifying = Vec::new();
    for (label, p) in &corpus {
        for m in p.methods() {
            if passes_bar(p, &m.name)? {
                verifying.push((label.as_str(), p, m));
            }
        }
    }
    ensure(!verifying.is_empty(), || "no method verifies".into())?;
    let b = Budget::default();
    let start = Instant::now();
    let mut runs = 0;
    for (label, p, m) in &verifying {
        for k in 0..SOUND_INPUTS {
            let Some(inputs) = gen_inputs(p, m, SOUND_SEED, k) else {
                continue;
            };
            let args = inputs.render().join(", ");
            let (mut st, r) = body_run(p, &m.name, &inputs, SOUND_FUEL).ok_or("arity")?;
            ensure(r == StmtResult::Rstop(Stop::Sret), || {
                format!("{label} {}({args}) ended with {r}", m.name)
            })?;
            for (i, ens) in m.ens.iter().enumerate() {
                let v = eval_vc(&mut st, p, ens, &b);
                ensure(v.result == Ok(Value::Bool(true)), || {
                    format!("{label} {}({args}): ensures {i} is {:?}", m.name, v.result)
                })?;
            }
            runs += 1;
        }
    }
    let t = start.elapsed();
    within(t, SOUND_LIMIT, "runs")?;
    Ok(format!(
        "{} verifying methods, {runs} runs returned with ensures true in {t:.2?}",
        verifying.len()
    ))
}

fn pass_correctness() -> Outcome {
    let cfg = DiffConfig {
        trials: PASS_TRIALS,
        seed: DIFF_SEED,
        ..DiffConfig::default()
    };
    let mut trials = 0;
    for (label, p) in all_corpus() {
        for q in [freshen_program(&p), pass_pipeline(&p)] {
            ensure(is_fresh_program(&q), || format!("{label}: binders not fresh"))?;
            ensure(program_no_shadow(&q), || format!("{label}: shadowing after freshen"))?;
        }
        let recs = passtest_program(&label, &p, &cfg);
        if let Some(bad) = recs.iter().find(|r| r.verdict == "mismatch") {
            return Err(format!("{label} {} trial {}: {}", bad.method, bad.trial, bad.detail));
        }
        trials += recs.len();
    }
    Ok(format!("fresh and shadow-free everywhere; {trials} trials preserved"))
}

fn round_trip() -> Outcome {
    let files = corpus_files(&corpus_dir()).map_err(|e| e.to_string())?;
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(|e| e.to_string())?;
        let p = parse_program(&text).map_err(|e| e.to_string())?;
        let back = parse_program(&print_program(&p)).map_err(|e| e.to_string())?;
        ensure(back == p, || format!("{} does not round-trip", program_label(f)))?;
    }
    let mut runner = TestRunner::new(Config {
        cases: ROUNDTRIP_CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&arb_program(), |p| {
            let text = print_program(&p);
            match parse_program(&text) {
                Ok(q) if q == p => Ok(()),
                Ok(_) => Err(TestCaseError::fail(format!("changed: {text}"))),
                Err(e) => Err(TestCaseError::fail(format!("{e}: {text}"))),
            }
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{} corpus files and {ROUNDTRIP_CASES} random programs",
        files.len()
    ))
}

fn main() {
    let checks: [Check; 10] = [
        ("91-function behavior", ninety_one),
        ("corpus differential test", corpus_difftest),
        ("mutation sensitivity", mutation_sensitivity),
        ("interpreter purity and fuel laws", interpreter_laws),
        ("VCG shapes", vcg_shapes),
        ("VC discharge for 91", discharge_91),
        ("VC refutation of mutated specs", spec_refutation),
        ("soundness by execution", soundness_by_execution),
        ("pass correctness", pass_correctness),
        ("frontend round-trip", round_trip),
    ];
    let failed = with_large_stack(move || {
        let mut failed = 0;
        for (i, (name, f)) in checks.iter().enumerate() {
            let start = Instant::now();
            let r = f();
            let t = start.elapsed();
            match r {
                Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{t:.1?}]", i + 1),
                Err(msg) => {
                    failed += 1;
                    println!("criterion {:>2} FAIL  {name}: {msg} [{t:.1?}]", i + 1);
                }
            }
        }
        failed
    });
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
