//! Trains the per-category LR and SVM models on an OPP-115 style corpus and
//! prints held-out precision, recall and F1.
//!
//! ```text
//! cargo run --release --example train_classifiers -- [CORPUS_DIR] [OUT_DIR]
//! ```
//!
//! Without arguments the bundled ten-policy fixture is used and nothing is saved.

use std::path::{Path, PathBuf};

use lexcheck::classify::{train_all, TrainingOptions};
use lexcheck::corpus::{consolidate, load_opp115, DEFAULT_QUORUM};

fn main() -> lexcheck::Result<()> {
    let mut args = std::env::args().skip(1);
    let corpus_dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures/opp115"));
    let records = load_opp115(&corpus_dir)?;
    let corpus = consolidate(&records, DEFAULT_QUORUM);
    println!("{} policies, {} consolidated segments", records.len(), corpus.len());

    let run = train_all(&corpus, &TrainingOptions::default())?;
    print!("{}", run.metrics_tsv());
    if let Some(out) = args.next() {
        run.save(Path::new(&out))?;
        println!("saved to {out}");
    }
    Ok(())
}
