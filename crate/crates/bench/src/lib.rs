//! Inputs shared by the benchmarks.

use xconv_core::generate::{Generator, PlantedCase};
use xconv_core::{load_model, Closure, Model, WorldId};

pub fn chatbot() -> (Model, WorldId) {
    let src = include_str!("../../core/fixtures/chatbot.json");
    (load_model(src, Closure::Close).expect("fixture loads"), WorldId::new("w0"))
}

/// `n` generated conversations with a fixed seed.
pub fn planted_cases(n: usize, max_worlds: usize, max_depth: usize) -> Vec<PlantedCase> {
    let mut g = Generator::new(7);
    (0..n).map(|_| g.planted(max_worlds, max_depth)).collect()
}
