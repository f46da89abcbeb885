//! parse(print(p)) == p on arbitrary syntax and on the corpus.

mod common;

use common::*;
use minidafny::frontend::{parse_exp_text, parse_program, parse_stmt_text, print_exp, print_program, print_stmt};
use minidafny::simrel::{corpus_files, program_label};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn programs(p in arb_program()) {
        let text = print_program(&p);
        prop_assert_eq!(parse_program(&text).map_err(|e| e.to_string()), Ok(p), "{}", text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn expressions(e in arb_exp(6)) {
        let text = print_exp(&e);
        prop_assert_eq!(parse_exp_text(&text).map_err(|e| e.to_string()), Ok(e), "{}", text);
    }

    #[test]
    fn statements(s in arb_stmt(5)) {
        let text = print_stmt(&s);
        prop_assert_eq!(parse_stmt_text(&text).map_err(|e| e.to_string()), Ok(s), "{}", text);
    }
}

#[test]
fn corpus_round_trips() {
    let files = corpus_files(&corpus_dir()).unwrap();
    assert!(files.len() >= 15);
    for f in files {
        let p = parse_program(&std::fs::read_to_string(&f).unwrap()).unwrap();
        let text = print_program(&p);
        assert_eq!(parse_program(&text).unwrap(), p, "{}", program_label(&f));
        // printing is a fixed point
        assert_eq!(print_program(&parse_program(&text).unwrap()), text);
    }
}
