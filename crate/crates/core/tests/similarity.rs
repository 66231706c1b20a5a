mod common;

use std::path::Path;

use lexcheck::preprocess::{Stopwords, TokenStream};
use lexcheck::similarity::{
    cosine_values, embed_mean, euclidean_values, load_embeddings, load_precomputed, parse_precomputed, parse_sts,
    pearson, sts_eval, sts_key, write_precomputed, EmbeddingProvider, EmbeddingTable, ExchangeRecord, ProviderSpec,
    SentenceVector, StaticTableProvider,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ts(words: &[&str]) -> TokenStream {
    TokenStream::new(words.iter().map(|w| w.to_string()).collect())
}

fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect()
}

#[test]
fn table_loading() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.txt");
    std::fs::write(&path, "data 1 2 3 4\nkeep 0.5 0.5 0.5 0.5\nlaw -1 0 0 1\n").unwrap();
    let t = load_embeddings(&path).unwrap();
    assert_eq!((t.dimension(), t.len()), (4, 3));
    assert_eq!(t.get("law").unwrap(), [-1.0, 0.0, 0.0, 1.0]);

    std::fs::write(&path, "data 1 2 3 4\nkeep 0.5 0.5 0.5\n").unwrap();
    let err = load_embeddings(&path).unwrap_err().to_string();
    assert!(err.contains(":2") || err.contains("line 2"), "{err}");

    std::fs::write(&path, "").unwrap();
    assert!(load_embeddings(&path).is_err());
}

#[test]
fn bundled_50d_rows_match_file() {
    let path = common::data_dir().join("vectors/fixture_50d.txt");
    let t = load_embeddings(&path).unwrap();
    assert_eq!(t.dimension(), 50);
    let content = std::fs::read_to_string(&path).unwrap();
    let line = content.lines().find(|l| l.starts_with("retain ")).unwrap();
    let expected: Vec<f64> = line.split(' ').skip(1).map(|x| x.parse().unwrap()).collect();
    assert_eq!(t.get("retain").unwrap(), expected.as_slice());
}

fn small_table() -> EmbeddingTable {
    let mut t = EmbeddingTable::new(3).unwrap();
    t.insert("alpha", vec![1.0, 2.0, 3.0]).unwrap();
    t.insert("beta", vec![-1.0, -2.0, -3.0]).unwrap();
    t.insert("gamma", vec![0.5, 0.0, -4.0]).unwrap();
    t
}

#[test]
fn mean_pooling() {
    let t = small_table();
    assert_eq!(embed_mean(&t, &ts(&["alpha"]), "p").values, [1.0, 2.0, 3.0]);
    let zero = embed_mean(&t, &ts(&["alpha", "beta"]), "p");
    assert_eq!(zero.values, [0.0, 0.0, 0.0]);
    assert!(!zero.all_oov);

    let v = embed_mean(&t, &ts(&["alpha", "gamma", "zzz", "gamma"]), "p");
    let hand = [(1.0 + 0.5 + 0.5) / 3.0, 2.0 / 3.0, (3.0 - 4.0 - 4.0) / 3.0];
    for (x, h) in v.values.iter().zip(hand) {
        assert!((x - h).abs() < 1e-12);
    }

    let oov = embed_mean(&t, &ts(&["zzz"]), "p");
    assert!(oov.all_oov && oov.values.iter().all(|&x| x == 0.0));
}

#[test]
fn mean_pooling_ignores_order() {
    let t = small_table();
    let a = embed_mean(&t, &ts(&["alpha", "gamma", "beta", "gamma"]), "p");
    let b = embed_mean(&t, &ts(&["gamma", "beta", "gamma", "alpha"]), "p");
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn static_provider_filters_stopwords() {
    let p = StaticTableProvider::new(small_table(), Stopwords::bundled(), "static:test");
    let v = p.embed("k", "The Alpha and the Gamma").unwrap();
    let w = embed_mean(&small_table(), &ts(&["alpha", "gamma"]), "x");
    assert_eq!(v.values, w.values);
    assert_eq!(v.provider_id, "static:test");
}

#[test]
fn cosine_and_euclidean_hand_values() {
    assert!((cosine_values(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap().value - 1.0).abs() < 1e-12);
    assert_eq!(cosine_values(&[1.0, 0.0], &[0.0, 1.0]).unwrap().value, 0.0);
    let c = cosine_values(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap().value;
    assert!((c - 32.0 / (14f64.sqrt() * 77f64.sqrt())).abs() < 1e-12);
    assert!((c - 0.974631846).abs() < 1e-9);

    let z = cosine_values(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
    assert_eq!(z.value, 0.0);
    assert!(z.zero_vector);

    assert_eq!(euclidean_values(&[1.5, -2.0], &[1.5, -2.0]).unwrap().value, 0.0);
    assert_eq!(euclidean_values(&[0.0, 0.0], &[3.0, 4.0]).unwrap().value, 5.0);

    assert!(cosine_values(&[1.0], &[1.0, 2.0]).is_err());
    assert!(euclidean_values(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn metric_properties_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2020);
    for _ in 0..1000 {
        let d = rng.gen_range(1..20);
        let (a, b, c) = (random_vec(&mut rng, d), random_vec(&mut rng, d), random_vec(&mut rng, d));

        let ab = cosine_values(&a, &b).unwrap().value;
        assert!((-1.0..=1.0).contains(&ab));
        assert!((ab - cosine_values(&b, &a).unwrap().value).abs() < 1e-12);
        let (s, t) = (rng.gen_range(0.01..100.0), rng.gen_range(0.01..100.0));
        let sa: Vec<f64> = a.iter().map(|x| x * s).collect();
        let tb: Vec<f64> = b.iter().map(|x| x * t).collect();
        assert!((cosine_values(&sa, &tb).unwrap().value - ab).abs() < 1e-9);

        let e = |x: &[f64], y: &[f64]| euclidean_values(x, y).unwrap().value;
        assert_eq!(e(&a, &a), 0.0);
        assert!((e(&a, &b) - e(&b, &a)).abs() < 1e-12);
        assert!(e(&a, &b) >= 0.0);
        assert!(e(&a, &c) <= e(&a, &b) + e(&b, &c) + 1e-9);
    }
}

#[test]
fn pearson_hand_values() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let lin: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    assert!((pearson(&x, &lin).unwrap() - 1.0).abs() < 1e-12);
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
    assert!((pearson(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);

    assert!(pearson(&x, &[2.0; 4]).is_err());
    assert!(pearson(&[1.0], &[1.0]).is_err());
}

#[test]
fn pearson_affine_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let n = rng.gen_range(3..30);
        let x = random_vec(&mut rng, n);
        let y = random_vec(&mut rng, n);
        let r = pearson(&x, &y).unwrap();
        let (a, b) = (rng.gen_range(0.1..10.0), rng.gen_range(-5.0..5.0));
        let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        assert!((pearson(&x2, &y).unwrap() - r).abs() < 1e-9);
        assert!((pearson(&y, &x2).unwrap() - r).abs() < 1e-9);
    }
}

fn record(key: &str, values: Vec<f64>) -> ExchangeRecord {
    ExchangeRecord {
        key: key.into(),
        dim: values.len(),
        values,
        provider: "test-encoder/mean_tokens".into(),
    }
}

#[test]
fn exchange_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.jsonl");
    let recs = vec![record("p#0", vec![0.1, -0.2, 1.0 / 3.0]), record("law#1", vec![1e-7, 2.5, -9.75])];
    write_precomputed(&path, &recs).unwrap();
    let p = load_precomputed(&path).unwrap();
    assert_eq!(p.len(), 2);
    assert_eq!(p.id(), "precomputed:test-encoder/mean_tokens");
    for r in &recs {
        let v = p.embed(&r.key, "").unwrap();
        for (a, b) in v.values.iter().zip(&r.values) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!((cosine_values(&v.values, &v.values).unwrap().value - 1.0).abs() < 1e-12);
    }
    assert!(p.embed("missing", "").is_err());
}

#[test]
fn exchange_validation() {
    let o = Path::new("v.jsonl");
    let dup = "{\"key\":\"a\",\"dim\":2,\"values\":[1,2],\"provider\":\"x\"}\n{\"key\":\"a\",\"dim\":2,\"values\":[3,4],\"provider\":\"x\"}\n";
    assert!(parse_precomputed(dup, o).unwrap_err().to_string().contains('a'));
    let mixed = "{\"key\":\"a\",\"dim\":2,\"values\":[1,2],\"provider\":\"x\"}\n{\"key\":\"b\",\"dim\":3,\"values\":[3,4,5],\"provider\":\"x\"}\n";
    assert!(parse_precomputed(mixed, o).is_err());
    let wrong_dim = "{\"key\":\"a\",\"dim\":3,\"values\":[1,2],\"provider\":\"x\"}\n";
    assert!(parse_precomputed(wrong_dim, o).is_err());
}

#[test]
fn wide_exchange_file() {
    let mut rng = ChaCha8Rng::seed_from_u64(512);
    let recs: Vec<_> = (0..10).map(|i| record(&format!("s#{i}"), random_vec(&mut rng, 512))).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wide.jsonl");
    write_precomputed(&path, &recs).unwrap();
    let p = load_precomputed(&path).unwrap();
    assert_eq!((p.len(), p.dimension()), (10, 512));
}

#[test]
fn provider_spec_parsing() {
    assert!(matches!("static:/tmp/v.txt".parse::<ProviderSpec>().unwrap(), ProviderSpec::Static(_)));
    assert!(matches!("precomputed:v.jsonl".parse::<ProviderSpec>().unwrap(), ProviderSpec::Precomputed(_)));
    assert!("bert:v".parse::<ProviderSpec>().is_err());
    assert!("static:".parse::<ProviderSpec>().is_err());
}

#[test]
fn sts_constructed_perfect_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let golds = [0.5, 2.0, 3.5, 5.0];
    let mut sts = String::new();
    let mut recs = Vec::new();
    for (row, g) in golds.iter().enumerate() {
        sts.push_str(&format!("{g}\tleft {row}\tright {row}\n"));
        let c: f64 = g / 5.0;
        recs.push(record(&sts_key(row, 1), vec![1.0, 0.0]));
        recs.push(record(&sts_key(row, 2), vec![c, (1.0 - c * c).sqrt()]));
    }
    let sts_path = dir.path().join("sts.tsv");
    std::fs::write(&sts_path, sts).unwrap();
    let vec_path = dir.path().join("v.jsonl");
    write_precomputed(&vec_path, &recs).unwrap();

    let r = sts_eval(&sts_path, &load_precomputed(&vec_path).unwrap()).unwrap();
    assert_eq!((r.n, r.skipped), (4, 0));
    assert!((r.pearson - 1.0).abs() < 1e-9);
}

#[test]
fn sts_needs_two_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.tsv");
    std::fs::write(&path, "3.0\talpha\tgamma\n").unwrap();
    let p = StaticTableProvider::new(small_table(), Stopwords::bundled(), "t");
    assert!(sts_eval(&path, &p).is_err());
}

#[test]
fn sts_layouts_and_oov_skips() {
    let o = Path::new("sts.tsv");
    let seven = "genre\tfile\tyear\tid\tscore\tsentence1\tsentence2\nmain\tx\t2012\t1\t4.2\ta b\ta c\n";
    let pairs = parse_sts(seven, o).unwrap();
    assert_eq!(pairs.len(), 1);
    assert_eq!(pairs[0].gold, 4.2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.tsv");
    std::fs::write(&path, "5\talpha\talpha\n1\talpha\tgamma\n3\tqqq\tzzz\n0\tbeta\tgamma\n").unwrap();
    let p = StaticTableProvider::new(small_table(), Stopwords::bundled(), "t");
    let r = sts_eval(&path, &p).unwrap();
    assert_eq!((r.n, r.skipped), (3, 1));
}

#[test]
fn sentence_vector_helpers() {
    let v = SentenceVector {
        values: vec![3.0, 4.0],
        provider_id: "x".into(),
        all_oov: false,
    };
    assert_eq!(v.norm(), 5.0);
    assert!(!v.is_zero());
}
