//! Interpreter purity, determinism and fuel monotonicity on random
//! expressions and statements of depth at most 6.

mod common;

use common::*;
use proptest::prelude::*;

const CASES: u32 = 10_000;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn int_expressions(st in exec_states(), e in exec_exps(6).0, f in 0u64..200, k in 0u64..200) {
        let p = law_program();
        prop_assert_eq!(exp_laws(&p, &st, &e, f, k), Ok(()));
    }

    #[test]
    fn bool_expressions(st in exec_states(), e in exec_exps(6).1, f in 0u64..200, k in 0u64..200) {
        let p = law_program();
        prop_assert_eq!(exp_laws(&p, &st, &e, f, k), Ok(()));
    }

    #[test]
    fn statements(st in exec_states(), s in exec_stmts(6), f in 0u64..200, k in 0u64..200) {
        let p = law_program();
        prop_assert_eq!(stmt_laws(&p, &st, &s, f, k), Ok(()));
    }
}
