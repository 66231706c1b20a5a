//! Correlates a provider's cosine similarities with STS gold scores.
//!
//! ```text
//! cargo run --example sts_eval -- [STS_TSV] [static:<path>|precomputed:<path>]
//! ```

use std::path::{Path, PathBuf};

use lexcheck::bundled;
use lexcheck::preprocess::Stopwords;
use lexcheck::similarity::{sts_eval, EmbeddingProvider, ProviderSpec};

fn main() -> lexcheck::Result<()> {
    let mut args = std::env::args().skip(1);
    let sts = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures/sts_sample.tsv"));
    let provider: Box<dyn EmbeddingProvider> = match args.next() {
        Some(spec) => spec.parse::<ProviderSpec>()?.load(&Stopwords::bundled())?,
        None => Box::new(bundled::fixture_vectors()),
    };
    let r = sts_eval(&sts, provider.as_ref())?;
    println!("{}: pearson {:.4} over {} pairs ({} skipped)", provider.id(), r.pearson, r.n, r.skipped);
    Ok(())
}
