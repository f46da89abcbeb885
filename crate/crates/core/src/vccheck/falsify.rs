//! Counterexample search over sampled initial states.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ast::{DType, Exp, Name, Program};
use crate::semantics::{default_value, HArr, Halt, Heap, Locals, State, Value};
use crate::util::pool;

use super::eval::{eval_vc, Budget, VcEval, Witness, INT_POOL};

/// Clock given to sampled states. Verification conditions contain no
/// function calls, so it is never consumed.
const VC_CLOCK: u64 = 1 << 20;

/// A state in which one condition does not evaluate to true.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    /// Index of the failing condition.
    pub condition: usize,
    /// Index of the sampled state; replays use it to rebuild the budget seed.
    pub sample: usize,
    pub locals: Vec<(Name, Value)>,
    pub heap: Heap,
    pub trail: Vec<Witness>,
    /// `false`, or the error the condition produced.
    pub outcome: String,
}

impl Counterexample {
    pub fn state(&self) -> State {
        entry_state(&self.locals, &self.heap)
    }

    /// Re-evaluates the failing condition in the recorded state.
    pub fn replay(&self, prog: &Program, conds: &[Exp], ls: &[(Name, DType)], b: &Budget) -> VcEval {
        let mut st = self.state();
        let body = peel_params(&conds[self.condition], ls);
        eval_vc(&mut st, prog, body, &sample_budget(b, self.sample))
    }

    pub fn render(&self) -> String {
        let mut out = format!("condition {} is {}\n", self.condition, self.outcome);
        for (x, v) in &self.locals {
            match v {
                Value::Arr { loc, .. } if *loc < self.heap.len() => {
                    let items: Vec<String> = self.heap[*loc].elems.iter().map(|e| e.to_string()).collect();
                    out.push_str(&format!("  {x} = [{}]\n", items.join(", ")));
                }
                _ => out.push_str(&format!("  {x} = {v}\n")),
            }
        }
        for w in &self.trail {
            out.push_str(&format!("  {} := {}\n", w.quantifier, w.value));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FalsifyReport {
    pub counterexample: Option<Counterexample>,
    /// States on which every condition evaluated to true.
    pub passed: usize,
    /// States abandoned because enumeration limits left a result undecided.
    pub skipped: usize,
    /// Some passing evaluation relied on a truncated universal.
    pub truncated: bool,
}

impl FalsifyReport {
    /// No counterexample and at least one state fully checked.
    pub fn bounded_valid(&self) -> bool {
        self.counterexample.is_none() && self.passed > 0
    }
}

/// Strips the leading `Forall` closure over `ls` from a method-level
/// condition, leaving the body to be evaluated in a sampled state.
pub fn peel_params<'e>(cond: &'e Exp, ls: &[(Name, DType)]) -> &'e Exp {
    let mut e = cond;
    for (x, t) in ls {
        match e {
            Exp::Forall(y, ty, body) if y == x && ty == t => e = body,
            _ => return cond,
        }
    }
    e
}

fn entry_state(locals: &[(Name, Value)], heap: &Heap) -> State {
    let list: Vec<(Name, Option<Value>)> = locals.iter().map(|(x, v)| (x.clone(), Some(v.clone()))).collect();
    let mut st = State::with_clock(VC_CLOCK);
    st.locals = Locals::from_list(list);
    st.heap = heap.clone();
    st.locals_old = st.locals.clone();
    st.heap_old = heap.clone();
    st
}

fn sample_budget(b: &Budget, k: usize) -> Budget {
    Budget {
        seed: b.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        ..b.clone()
    }
}

/// Integer literals of `conds` and their neighbours, inside the budget's
/// range, sorted.
pub fn literal_pool(conds: &[Exp], b: &Budget) -> Vec<BigInt> {
    let mut out = Vec::new();
    for c in conds {
        c.any(&mut |e| {
            if let Exp::IntLit(i) = e {
                for d in [-1, 0, 1] {
                    out.push(i + d);
                    out.push(-i + d);
                }
            }
            false
        });
    }
    let (lo, hi) = (BigInt::from(b.int_lo), BigInt::from(b.int_hi));
    out.retain(|v| lo <= *v && *v <= hi);
    out.sort();
    out.dedup();
    out
}

fn random_int(rng: &mut ChaCha8Rng, b: &Budget, lits: &[BigInt]) -> BigInt {
    match rng.gen_range(0..5) {
        0 | 1 => BigInt::from(rng.gen_range(-10i64..=10)),
        2 => BigInt::from(INT_POOL[rng.gen_range(0..INT_POOL.len())]),
        3 if !lits.is_empty() => lits[rng.gen_range(0..lits.len())].clone(),
        _ => BigInt::from(rng.gen_range(b.int_lo..=b.int_hi)),
    }
}

fn random_scalar(rng: &mut ChaCha8Rng, b: &Budget, t: &DType, lits: &[BigInt]) -> Value {
    match t {
        DType::Int => Value::Int(random_int(rng, b, lits)),
        DType::Bool => Value::Bool(rng.gen()),
        DType::Str => Value::Str(["", "a", "ab"][rng.gen_range(0..3)].to_string()),
        DType::Arr(_) => default_value(t),
    }
}

/// Sampled valuation of `ls`. The first samples give every integer the
/// same corner value, then each value of `lits` in turn; later samples are
/// random, drawing from `lits` part of the time.
pub fn sample_state(ls: &[(Name, DType)], b: &Budget, k: usize, lits: &[BigInt]) -> (Vec<(Name, Value)>, Heap) {
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    rng.set_stream(k as u64);
    let corners = [0, 1, -1, b.int_lo, b.int_hi];
    let mut heap: Heap = Vec::new();
    let mut locals = Vec::new();
    for (x, t) in ls {
        let v = match t {
            DType::Int if k < corners.len() => Value::int(corners[k]),
            DType::Int if k < corners.len() + lits.len() => Value::Int(lits[k - corners.len()].clone()),
            DType::Bool if k < 2 => Value::Bool(k == 1),
            DType::Arr(elem) => {
                let shared = heap
                    .iter()
                    .enumerate()
                    .filter(|(_, h)| h.ty == **elem)
                    .map(|(loc, h)| (loc, h.elems.len()))
                    .next();
                match shared {
                    Some((loc, len)) if rng.gen_ratio(1, 5) => Value::Arr {
                        len,
                        loc,
                        ty: (**elem).clone(),
                    },
                    _ => {
                        let len = rng.gen_range(0..=b.arr_len_max);
                        let mut elems: Vec<Value> = (0..len).map(|_| random_scalar(&mut rng, b, elem, lits)).collect();
                        if **elem == DType::Int && rng.gen_ratio(1, 3) {
                            elems.sort_by(|p, q| p.as_int().cmp(&q.as_int()));
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
                }
            }
            t => random_scalar(&mut rng, b, t, lits),
        };
        locals.push((x.clone(), v));
    }
    (locals, heap)
}

enum Sample {
    Pass { truncated: bool },
    Skipped,
    Refuted(Box<Counterexample>),
}

fn check_sample(prog: &Program, conds: &[Exp], ls: &[(Name, DType)], b: &Budget, lits: &[BigInt], k: usize) -> Sample {
    let (locals, heap) = sample_state(ls, b, k, lits);
    let sb = sample_budget(b, k);
    let mut truncated = false;
    for (i, c) in conds.iter().enumerate() {
        let mut st = entry_state(&locals, &heap);
        let r = eval_vc(&mut st, prog, peel_params(c, ls), &sb);
        let outcome = match r.result {
            Ok(Value::Bool(true)) => {
                truncated |= r.bounded;
                continue;
            }
            Err(Halt::Budget) => return Sample::Skipped,
            Ok(v) => v.to_string(),
            Err(Halt::Err(e)) => format!("{e:?}"),
        };
        return Sample::Refuted(Box::new(Counterexample {
            condition: i,
            sample: k,
            locals,
            heap,
            trail: r.trail,
            outcome,
        }));
    }
    Sample::Pass { truncated }
}

/// Evaluates every condition on up to `b.states_max` sampled valuations of
/// `ls`. Returns the counterexample with the smallest sample index, if any.
pub fn falsify(prog: &Program, conds: &[Exp], ls: &[(Name, DType)], b: &Budget) -> FalsifyReport {
    let lits = literal_pool(conds, b);
    let samples: Vec<Sample> = pool().install(|| {
        (0..b.states_max)
            .into_par_iter()
            .map(|k| check_sample(prog, conds, ls, b, &lits, k))
            .collect()
    });
    let mut report = FalsifyReport {
        counterexample: None,
        passed: 0,
        skipped: 0,
        truncated: false,
    };
    for s in samples {
        match s {
            Sample::Pass { truncated } => {
                report.passed += 1;
                report.truncated |= truncated;
            }
            Sample::Skipped => report.skipped += 1,
            Sample::Refuted(c) => {
                report.counterexample = Some(*c);
                break;
            }
        }
    }
    report
}
