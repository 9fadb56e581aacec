#![allow(dead_code)]

use std::path::PathBuf;

use xconv_core::{load_model, Closure, Model, PropFormula, Term};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> Model {
    let src = std::fs::read_to_string(fixture_path(name)).expect("fixture readable");
    load_model(&src, Closure::Close).expect("fixture loads")
}

pub const MODEL_FIXTURES: [&str; 5] = [
    "example1.json",
    "example3.json",
    "example4.json",
    "chatbot.json",
    "closure_counterexample.json",
];

pub fn p(n: &str) -> PropFormula {
    PropFormula::atom(n)
}

pub fn imp(a: &str, b: &str) -> PropFormula {
    PropFormula::implies(p(a), p(b))
}

pub fn c(n: &str) -> Term {
    Term::constant(n)
}

pub fn app(f: Term, a: Term) -> Term {
    Term::app(f, a)
}
