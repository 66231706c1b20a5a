//! Writes sentence vectors in the JSONL exchange format, reads them back and
//! scores one pair with both measures.
//!
//! An external encoder produces the same records keyed by segment id; the
//! engine then consumes them with `--provider precomputed:<path>`.
//!
//! ```text
//! cargo run --example precomputed_vectors -- [OUT_JSONL]
//! ```

use std::path::PathBuf;

use lexcheck::bundled;
use lexcheck::similarity::{load_precomputed, similarity, write_precomputed, EmbeddingProvider, ExchangeRecord, Measure};

fn main() -> lexcheck::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("lexcheck_vectors.jsonl"));
    let encoder = bundled::fixture_vectors();
    let sentences = [
        ("policy#0", "We keep your data only as long as necessary."),
        ("gdpr3-art5-1e", "Personal data shall be kept no longer than is necessary."),
    ];
    let mut records = Vec::new();
    for (key, text) in sentences {
        let v = encoder.embed(key, text)?;
        records.push(ExchangeRecord {
            key: key.to_string(),
            dim: v.values.len(),
            values: v.values,
            provider: encoder.id().to_string(),
        });
    }
    write_precomputed(&out, &records)?;

    let pre = load_precomputed(&out)?;
    let a = pre.embed(sentences[0].0, "")?;
    let b = pre.embed(sentences[1].0, "")?;
    for m in [Measure::Cosine, Measure::Euclidean] {
        println!("{m}: {:.4}", similarity(&a, &b, m)?.value);
    }
    println!("{} records in {}", pre.len(), out.display());
    Ok(())
}
