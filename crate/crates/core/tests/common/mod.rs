#![allow(dead_code)]

use std::path::PathBuf;

use lexcheck::preprocess::TokenStream;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn fixture(name: &str) -> PathBuf {
    data_dir().join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).expect("fixture readable")
}

/// Twenty documents, the first ten drawn from words `a0..a9`, the rest from
/// `b0..b9`. Returns the documents and each one's group.
pub fn two_vocab_corpus(seed: u64) -> (Vec<TokenStream>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut groups = Vec::new();
    for d in 0..20 {
        let g = d / 10;
        let prefix = if g == 0 { "a" } else { "b" };
        let len = rng.gen_range(30..50);
        let tokens = (0..len).map(|_| format!("{prefix}{}", rng.gen_range(0..10))).collect();
        docs.push(TokenStream::new(tokens));
        groups.push(g);
    }
    (docs, groups)
}
