mod common;

use lexcheck::preprocess::{normalize, segment_text, tokenize, Stopwords, TokenStream, Vectorizer, VectorizerConfig};
use proptest::prelude::*;

fn ts(words: &[&str]) -> TokenStream {
    TokenStream::new(words.iter().map(|w| w.to_string()).collect())
}

fn words(t: &TokenStream) -> Vec<&str> {
    t.iter().collect()
}

fn strip_ws(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

#[test]
fn paragraph_segmentation() {
    let texts: Vec<String> = segment_text("d", "A\n\nB").into_iter().map(|s| s.text).collect();
    assert_eq!(texts, ["A", "B"]);
    let texts: Vec<String> = segment_text("d", "A\nB").into_iter().map(|s| s.text).collect();
    assert_eq!(texts, ["A\nB"]);
    assert!(segment_text("d", " \n\n\t\n").is_empty());
}

#[test]
fn segmentation_reconstructs_source() {
    let doc = "First paragraph\nwith two lines.\n\n  Second one.  \n \n\nThird.\n\n\n";
    let segs = segment_text("d", doc);
    assert_eq!(segs.len(), 3);
    let joined: String = segs.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
    assert_eq!(strip_ws(&joined), strip_ws(doc));
    for (i, s) in segs.iter().enumerate() {
        assert_eq!(s.index, i);
        assert_eq!(&doc[s.char_span.0..s.char_span.1], s.text);
    }
    for w in segs.windows(2) {
        assert!(w[0].char_span.1 <= w[1].char_span.0);
    }
}

#[test]
fn tokenizer_boundaries() {
    assert_eq!(words(&tokenize("Data, data!")), ["data", "data"]);
    assert!(tokenize("").is_empty());
    assert_eq!(words(&tokenize("Article 14(1)(d)")), ["article", "14", "1", "d"]);
}

#[test]
fn normalize_examples() {
    let sw = Stopwords::bundled();
    assert_eq!(words(&normalize(&ts(&["the", "data", "was", "processed"]), &sw)), ["data", "process"]);
    assert!(normalize(&ts(&[]), &sw).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn normalize_is_idempotent(tokens in prop::collection::vec("[a-z]{1,12}", 0..30)) {
        let sw = Stopwords::bundled();
        let t = TokenStream::new(tokens);
        let once = normalize(&t, &sw);
        prop_assert!(once.len() <= t.len());
        prop_assert_eq!(normalize(&once, &sw), once);
    }
}

fn cfg(min_df: usize, max_features: usize) -> VectorizerConfig {
    VectorizerConfig { min_df, max_features }
}

#[test]
fn idf_values() {
    let docs = [ts(&["a", "b"]), ts(&["a"]), ts(&["a", "c"])];
    let v = Vectorizer::fit(&docs, cfg(1, 100)).unwrap();
    let idf = |t: &str| v.idf()[v.column(t).unwrap()];
    assert!((idf("a") - 1.0).abs() < 1e-12);
    assert!((idf("b") - 1.6931).abs() < 1e-4);
    assert!((idf("b") - ((4.0f64 / 2.0).ln() + 1.0)).abs() < 1e-12);
}

#[test]
fn max_features_keeps_highest_df() {
    let docs = [ts(&["p", "q", "r", "s"]), ts(&["p", "q", "r", "t"]), ts(&["p"])];
    let v = Vectorizer::fit(&docs, cfg(1, 2)).unwrap();
    // df: p=3, q=2, r=2, s=1, t=1; q wins the tie with r lexicographically.
    assert_eq!(v.terms(), ["p", "q"]);
}

#[test]
fn empty_vocabulary_is_an_error() {
    assert!(Vectorizer::fit(&[ts(&["a"]), ts(&["b"])], cfg(2, 100)).is_err());
}

#[test]
fn vectorize_weights() {
    let docs = [ts(&["a", "a", "b"]), ts(&["a"]), ts(&["c"])];
    let v = Vectorizer::fit(&docs, cfg(1, 100)).unwrap();

    let x = v.vectorize(&ts(&["a", "a", "b"]));
    let wa = 2.0 * ((4.0f64 / 3.0).ln() + 1.0);
    let wb = (4.0f64 / 2.0).ln() + 1.0;
    let n = (wa * wa + wb * wb).sqrt();
    assert_eq!(x.entries.len(), 2);
    assert!((x.entries[0].1 - wa / n).abs() < 1e-12);
    assert!((x.entries[1].1 - wb / n).abs() < 1e-12);

    let single = v.vectorize(&ts(&["c"]));
    assert_eq!(single.entries.len(), 1);
    assert!((single.entries[0].1 - 1.0).abs() < 1e-12);

    let oov = v.vectorize(&ts(&["zzz", "yyy"]));
    assert!(oov.entries.is_empty());
    assert_eq!(oov.dimension, v.dimension());
}

#[test]
fn vectorize_norm_is_zero_or_one() {
    let sw = Stopwords::bundled();
    let texts: Vec<String> = lexcheck::corpus::consolidate(
        &lexcheck::corpus::load_opp115(&common::fixture("opp115")).unwrap(),
        1,
    )
    .into_iter()
    .map(|s| s.segment.text)
    .collect();
    let docs: Vec<TokenStream> = texts.iter().map(|t| normalize(&tokenize(t), &sw)).collect();
    let v = Vectorizer::fit(&docs, VectorizerConfig::default()).unwrap();
    for d in docs.iter().chain([&ts(&["qqqq"])]) {
        let n = v.vectorize(d).norm();
        assert!(n.abs() < 1e-9 || (n - 1.0).abs() < 1e-9, "norm {n}");
    }
}

#[test]
fn vectorizer_round_trip() {
    let docs = [ts(&["a", "b"]), ts(&["a"]), ts(&["b", "c"])];
    let v = Vectorizer::fit(&docs, cfg(1, 100)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.json");
    v.save(&path).unwrap();
    let back = Vectorizer::load(&path).unwrap();
    assert_eq!(back, v);
    assert_eq!(back.fingerprint(), v.fingerprint());
}
