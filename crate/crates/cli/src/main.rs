//! `minidafny` batch driver.

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};

use minidafny::ast::Program;
use minidafny::compiler::{compile_with, CompileOptions, Mutation};
use minidafny::frontend::{normalize, parse_program, print_program, print_vc_record};
use minidafny::semantics::{run_program, StmtResult, Stop};
use minidafny::simrel::{self, render_value, DiffConfig};
use minidafny::targetlang::{pretty_decs, sexp_decs};
use minidafny::util::{pool, with_large_stack};
use minidafny::vccheck::{falsify, smt_check, Budget, FalsifyReport, SmtVerdict};
use minidafny::vcg::{program_vcg, VcOutput};

const EXIT_USAGE: u8 = 64;
const EXIT_PARSE: u8 = 65;
const EXIT_NOINPUT: u8 = 66;
const EXIT_SOFTWARE: u8 = 70;

#[derive(Parser)]
#[command(
    name = "minidafny",
    version,
    about = "Interpreter, compiler and verifier for a small imperative Dafny subset"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Pretty,
    Sexp,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    OpFlip,
    NoArgReverse,
    DropReturnHandler,
    WrongArrayComponent,
    MissingClockTick,
}

impl From<MutationArg> for Mutation {
    fn from(m: MutationArg) -> Mutation {
        match m {
            MutationArg::OpFlip => Mutation::OpFlip,
            MutationArg::NoArgReverse => Mutation::NoArgReverse,
            MutationArg::DropReturnHandler => Mutation::DropReturnHandler,
            MutationArg::WrongArrayComponent => Mutation::WrongArrayComponent,
            MutationArg::MissingClockTick => Mutation::MissingClockTick,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a program and print its canonical form.
    Parse { file: PathBuf },
    /// Run `Main` and print the result and Main's final locals.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        fuel: u64,
    },
    /// Compile to the core language.
    Compile {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "pretty")]
        emit: Emit,
        #[arg(short, long)]
        o: Option<PathBuf>,
        /// Apply a deliberate miscompilation.
        #[arg(long, value_enum, hide = true)]
        mutation: Option<MutationArg>,
    },
    /// Print verification conditions.
    Vcg {
        file: PathBuf,
        #[arg(short, long)]
        o: Option<PathBuf>,
    },
    /// Generate and discharge verification conditions.
    Check {
        file: PathBuf,
        /// Integer range for unbounded quantifiers and sampled values.
        #[arg(long, value_name = "LO..HI", value_parser = parse_range, default_value = "-200..200")]
        budget_ints: (i64, i64),
        /// Number of sampled states per method.
        #[arg(long, value_name = "K", default_value_t = 500)]
        budget_states: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// External SMT-LIB solver command, e.g. `z3`.
        #[arg(long, value_name = "CMD")]
        smt_solver: Option<String>,
        /// Per-condition solver timeout in seconds.
        #[arg(long, value_name = "SECS", default_value_t = 10.0)]
        timeout: f64,
    },
    /// Compare interpreter and compiled runs on seeded inputs.
    Difftest {
        path: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        fuel: u64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write one JSON record per trial to this file.
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
        #[arg(long, value_enum, hide = true)]
        mutation: Option<MutationArg>,
    },
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s.split_once("..").ok_or("expected LO..HI")?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("{lo}: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("{hi}: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

struct Fail(u8, String);

type CmdResult = Result<u8, Fail>;

fn color() -> bool {
    std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

fn paint(s: &str, code: &str) -> String {
    if color() {
        format!("\x1b[{code}m{s}\x1b[0m")
    } else {
        s.to_string()
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail(EXIT_NOINPUT, format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Program, Fail> {
    let text = read(path)?;
    let p = parse_program(&text).map_err(|e| Fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    Ok(normalize(&p))
}

fn write_out(o: &Option<PathBuf>, text: &str) -> Result<(), Fail> {
    match o {
        Some(path) => std::fs::write(path, text).map_err(|e| Fail(EXIT_SOFTWARE, format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_parse(file: &Path) -> CmdResult {
    let text = read(file)?;
    match parse_program(&text) {
        Ok(p) => {
            print!("{}", print_program(&p));
            Ok(0)
        }
        Err(e) => {
            eprintln!("{}: {e}", file.display());
            Ok(1)
        }
    }
}

fn cmd_run(file: &Path, fuel: u64) -> CmdResult {
    let p = load(file)?;
    let out = run_program(fuel, &p);
    println!("result: {}", out.result);
    if let Some(locals) = &out.main_locals {
        let mut seen = std::collections::BTreeSet::new();
        for (x, v) in locals.iter() {
            if !seen.insert(x.clone()) {
                continue;
            }
            match v {
                Some(v) => println!("{x} = {}", render_value(v, &out.state.heap)),
                None => println!("{x} = <uninitialized>"),
            }
        }
    }
    Ok(match out.result {
        StmtResult::Rcont | StmtResult::Rstop(Stop::Sret) => 0,
        StmtResult::Rstop(Stop::Serr(minidafny::semantics::ErrResult::Rfail)) => 2,
        StmtResult::Rstop(Stop::Serr(_)) => 3,
    })
}

fn cmd_compile(file: &Path, emit: Emit, o: &Option<PathBuf>, mutation: Option<MutationArg>) -> CmdResult {
    let p = load(file)?;
    let opts = CompileOptions {
        mutation: mutation.map(Mutation::from),
    };
    let decs = compile_with(&p, opts).map_err(|e| Fail(EXIT_SOFTWARE, format!("{}: {e}", file.display())))?;
    let text = match emit {
        Emit::Pretty => pretty_decs(&decs),
        Emit::Sexp => sexp_decs(&decs),
    };
    write_out(o, &text)?;
    Ok(0)
}

fn vcs(file: &Path, p: &Program) -> Result<Vec<VcOutput>, Fail> {
    program_vcg(p).map_err(|e| Fail(EXIT_SOFTWARE, format!("{}: {e}", file.display())))
}

fn cmd_vcg(file: &Path, o: &Option<PathBuf>) -> CmdResult {
    let p = load(file)?;
    let text: String = vcs(file, &p)?
        .iter()
        .map(|v| print_vc_record(&v.method, &v.params, &v.conditions))
        .collect();
    write_out(o, &text)?;
    Ok(0)
}

#[derive(PartialEq, Eq, PartialOrd, Ord, Clone, Copy)]
enum Status {
    Valid,
    Unknown,
    Refuted,
}

fn falsify_status(r: &FalsifyReport) -> Status {
    if r.counterexample.is_some() {
        Status::Refuted
    } else if r.bounded_valid() {
        Status::Valid
    } else {
        Status::Unknown
    }
}

fn describe_falsify(r: &FalsifyReport) -> String {
    match &r.counterexample {
        Some(_) => "counterexample".into(),
        None if r.bounded_valid() => format!(
            "bounded-valid ({} states passed, {} skipped{})",
            r.passed,
            r.skipped,
            if r.truncated { ", truncated quantifiers" } else { "" }
        ),
        None => format!("unknown (no state fully checked, {} skipped)", r.skipped),
    }
}

fn cmd_check(file: &Path, budget: Budget, solver: Option<&str>, timeout: Duration) -> CmdResult {
    budget.validate().map_err(|e| Fail(EXIT_USAGE, e))?;
    let p = load(file)?;
    let outs = vcs(file, &p)?;
    let mut worst = Status::Valid;
    for vo in &outs {
        let start = Instant::now();
        let mut status = Status::Valid;
        let mut lines = Vec::new();
        let mut leftover = Vec::new();
        if let Some(cmd) = solver {
            let verdicts =
                smt_check(&vo.conditions, &vo.params, cmd, timeout).map_err(|e| Fail(EXIT_SOFTWARE, e.to_string()))?;
            for (i, v) in verdicts.into_iter().enumerate() {
                match v {
                    SmtVerdict::Valid => lines.push(format!("  condition {i}: valid")),
                    SmtVerdict::Invalid(model) => {
                        status = status.max(Status::Refuted);
                        lines.push(format!("  condition {i}: {}\n{model}", paint("invalid", "31")));
                    }
                    SmtVerdict::Unknown(why) => {
                        lines.push(format!("  condition {i}: solver unknown ({why}); falsifying"));
                        leftover.push(i);
                    }
                    SmtVerdict::Unsupported(why) => {
                        lines.push(format!("  condition {i}: outside solver fragment ({why}); falsifying"));
                        leftover.push(i);
                    }
                }
            }
        } else {
            leftover = (0..vo.conditions.len()).collect();
        }
        if !leftover.is_empty() {
            let conds: Vec<_> = leftover.iter().map(|i| vo.conditions[*i].clone()).collect();
            let r = pool().install(|| falsify(&p, &conds, &vo.params, &budget));
            status = status.max(falsify_status(&r));
            let mut line = format!("  falsifier: {}", describe_falsify(&r));
            if let Some(c) = &r.counterexample {
                let mut c = c.clone();
                c.condition = leftover[c.condition];
                line.push('\n');
                for l in c.render().lines() {
                    line.push_str(&format!("    {l}\n"));
                }
                line.pop();
            }
            lines.push(line);
        }
        let tag = match status {
            Status::Valid => paint("ok", "32"),
            Status::Unknown => paint("unknown", "33"),
            Status::Refuted => paint("FAILED", "31"),
        };
        println!("{} {tag} ({} conditions)", vo.method, vo.conditions.len());
        for l in lines {
            println!("{l}");
        }
        log::info!("{}: checked in {:?}", vo.method, start.elapsed());
        worst = worst.max(status);
    }
    Ok(match worst {
        Status::Valid => 0,
        Status::Refuted => 4,
        Status::Unknown => 5,
    })
}

fn cmd_difftest(path: &Path, cfg: DiffConfig, json: &Option<PathBuf>) -> CmdResult {
    if !path.exists() {
        return Err(Fail(
            EXIT_NOINPUT,
            format!("{}: no such file or directory", path.display()),
        ));
    }
    let report = simrel::difftest_corpus(path, &cfg).map_err(|e| match e {
        simrel::CorpusError::Io(..) => Fail(EXIT_NOINPUT, e.to_string()),
        simrel::CorpusError::Parse(..) => Fail(EXIT_PARSE, e.to_string()),
    })?;
    print!("{}", report.render_text());
    if let Some(out) = json {
        std::fs::write(out, report.render_jsonl())
            .map_err(|e| Fail(EXIT_SOFTWARE, format!("{}: {e}", out.display())))?;
    }
    Ok(if report.ok() { 0 } else { 1 })
}

fn dispatch(cmd: Cmd) -> CmdResult {
    match cmd {
        Cmd::Parse { file } => cmd_parse(&file),
        Cmd::Run { file, fuel } => cmd_run(&file, fuel),
        Cmd::Compile {
            file,
            emit,
            o,
            mutation,
        } => cmd_compile(&file, emit, &o, mutation),
        Cmd::Vcg { file, o } => cmd_vcg(&file, &o),
        Cmd::Check {
            file,
            budget_ints,
            budget_states,
            seed,
            smt_solver,
            timeout,
        } => {
            if !(timeout.is_finite() && timeout > 0.0) {
                return Err(Fail(EXIT_USAGE, "timeout must be positive".into()));
            }
            let budget = Budget {
                int_lo: budget_ints.0,
                int_hi: budget_ints.1,
                states_max: budget_states,
                seed,
                ..Budget::default()
            };
            cmd_check(&file, budget, smt_solver.as_deref(), Duration::from_secs_f64(timeout))
        }
        Cmd::Difftest {
            path,
            fuel,
            trials,
            seed,
            json,
            mutation,
        } => {
            let cfg = DiffConfig {
                fuel,
                trials,
                seed,
                mutation: mutation.map(Mutation::from),
            };
            cmd_difftest(&path, cfg, &json)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match with_large_stack(move || dispatch(cli.cmd)) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
