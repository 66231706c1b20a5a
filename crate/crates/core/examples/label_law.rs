//! Segments GDPR text into articles and recitals, then compares LDA topic
//! counts by perplexity and UMass coherence.
//!
//! ```text
//! cargo run --release --example label_law -- [GDPR_TEXT] [K,K,...]
//! ```

use std::path::{Path, PathBuf};

use lexcheck::lawmodel::lda::{lda_fit, select_k, LdaConfig};
use lexcheck::lawmodel::parse_gdpr;
use lexcheck::preprocess::{analyze, Stopwords};

fn main() -> lexcheck::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures/gdpr_three_articles.txt"));
    let grid: Vec<usize> = match args.next() {
        Some(g) => g.split(',').map(|k| k.trim().parse().expect("K must be an integer")).collect(),
        None => vec![2, 3],
    };

    let text = std::fs::read_to_string(&path).expect("readable law text");
    let segments = parse_gdpr(&text)?;
    for s in &segments {
        println!("{:<12} {:?} {} words", s.article_id, s.kind, s.word_count());
    }

    let stopwords = Stopwords::bundled();
    let docs: Vec<_> = segments.iter().map(|s| analyze(&s.text, &stopwords, true)).collect();
    let base = LdaConfig {
        iterations: 200,
        ..LdaConfig::new(grid[0])
    };
    print!("{}", select_k(&docs, &grid, &[7, 8, 9], &base, 10)?.to_tsv());

    let model = lda_fit(&docs, &base)?;
    for t in 0..model.k {
        let words: Vec<&str> = model.top_words(t, 8).into_iter().map(|(w, _)| w).collect();
        println!("topic {t}: {}", words.join(" "));
    }
    Ok(())
}
