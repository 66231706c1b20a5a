//! Builds a small static word-vector table from the bundled texts by
//! truncated SVD of the positive PMI co-occurrence matrix.
//!
//! ```text
//! cargo run --release --example build_vectors -- [OUT] [DIM]
//! ```
//!
//! Defaults write `data/vectors/fixture_50d.txt` with 50 dimensions. The
//! Nestle test policy is deliberately not part of the training text.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use lexcheck::corpus::{consolidate, load_opp115};
use lexcheck::lawmodel::load_requirements;
use lexcheck::preprocess::{segment_text, Stopwords};
use lexcheck::similarity::{EmbeddingTable, StaticTableProvider};
use nalgebra::DMatrix;

const WINDOW: usize = 5;

fn training_texts(data: &Path) -> lexcheck::Result<Vec<String>> {
    let mut texts: BTreeSet<String> = BTreeSet::new();
    for seg in consolidate(&load_opp115(&data.join("fixtures/opp115"))?, 1) {
        texts.insert(seg.segment.text);
    }
    for law in ["gdpr", "pdpa"] {
        let set = load_requirements(&data.join(format!("config/{law}_requirements.json")))?;
        texts.extend(set.segments.into_iter().map(|s| s.text));
    }
    let gdpr = std::fs::read_to_string(data.join("fixtures/gdpr_three_articles.txt")).expect("gdpr fixture");
    texts.extend(segment_text("gdpr", &gdpr).into_iter().map(|s| s.text));
    Ok(texts.into_iter().collect())
}

fn main() -> lexcheck::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let data = root.join("data");
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = args
        .first()
        .map(PathBuf::from)
        .unwrap_or_else(|| data.join("vectors/fixture_50d.txt"));
    let dim: usize = args.get(1).map(|d| d.parse().expect("DIM must be an integer")).unwrap_or(50);

    // Same token pipeline the static provider uses at query time.
    let tok = StaticTableProvider::new(EmbeddingTable::new(1)?, Stopwords::bundled(), "tok");
    let docs: Vec<Vec<String>> = training_texts(&data)?
        .iter()
        .map(|t| tok.tokens(t).tokens)
        .collect();

    let vocab: Vec<&str> = docs
        .iter()
        .flatten()
        .map(String::as_str)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = vocab.iter().enumerate().map(|(i, w)| (*w, i)).collect();
    let v = vocab.len();
    assert!(dim < v, "dimension {dim} must be below the vocabulary size {v}");

    let mut counts = DMatrix::<f64>::zeros(v, v);
    for doc in &docs {
        for (i, w) in doc.iter().enumerate() {
            for j in i + 1..doc.len().min(i + 1 + WINDOW) {
                let weight = 1.0 / (j - i) as f64;
                let (a, b) = (index[w.as_str()], index[doc[j].as_str()]);
                counts[(a, b)] += weight;
                counts[(b, a)] += weight;
            }
        }
    }

    let row: Vec<f64> = (0..v).map(|i| counts.row(i).sum()).collect();
    // Context distribution smoothing with exponent 0.75.
    let ctx: Vec<f64> = row.iter().map(|r| r.powf(0.75)).collect();
    let ctx_total: f64 = ctx.iter().sum();
    let ppmi = DMatrix::from_fn(v, v, |i, j| {
        let c = counts[(i, j)];
        if c == 0.0 {
            return 0.0;
        }
        (c * ctx_total / (row[i] * ctx[j])).ln().max(0.0)
    });

    let svd = ppmi.svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    // Fix the sign of each singular vector so its largest entry is positive.
    let signs: Vec<f64> = order[..dim]
        .iter()
        .map(|&k| if u[(u.column(k).iamax(), k)] < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let mut vectors: Vec<Vec<f64>> = (0..v)
        .map(|i| {
            order[..dim]
                .iter()
                .zip(&signs)
                .map(|(&k, s)| s * u[(i, k)] * svd.singular_values[k].sqrt())
                .collect()
        })
        .collect();

    // Remove the frequency-weighted mean, the direction every mean-pooled
    // sentence of this domain shares, then scale each word to unit length.
    let mut freq = vec![0.0; v];
    for w in docs.iter().flatten() {
        freq[index[w.as_str()]] += 1.0;
    }
    let freq_total: f64 = freq.iter().sum();
    let mean: Vec<f64> = (0..dim)
        .map(|k| vectors.iter().zip(&freq).map(|(x, f)| f * x[k]).sum::<f64>() / freq_total)
        .collect();
    for x in &mut vectors {
        for (a, m) in x.iter_mut().zip(&mean) {
            *a -= m;
        }
        let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.0 {
            x.iter_mut().for_each(|a| *a /= n);
        }
    }

    let mut table = EmbeddingTable::new(dim)?;
    for (w, x) in vocab.iter().zip(vectors) {
        table.insert(*w, x)?;
    }
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent).expect("create output directory");
    }
    table.write(&out)?;
    println!("wrote {} vectors of dimension {dim} to {}", table.len(), out.display());
    Ok(())
}
