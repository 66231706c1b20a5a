//! Sentence vectors from pluggable providers, similarity measures and the
//! STS evaluation harness.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};
use crate::preprocess::{tokenize, Stopwords, TokenStream};

/// Word vectors read from a whitespace-separated text file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingTable {
            dimension,
            vectors: HashMap::new(),
        })
    }

    /// Adds or replaces a word vector.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite embedding value".into()));
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Parses `word v1 ... vd` lines. A leading `count dim` header line, as
    /// written by word2vec tools, is recognised and skipped. The first
    /// occurrence of a duplicated word wins.
    pub fn parse(content: &str, origin: &Path) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (i, line) in content.lines().enumerate() {
            let lineno = i + 1;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let values: Vec<&str> = fields.collect();
            if i == 0 && values.len() == 1 && word.parse::<usize>().is_ok() && values[0].parse::<usize>().is_ok() {
                continue;
            }
            let vector = values
                .iter()
                .map(|v| match v.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(Error::parse(origin, lineno, format!("invalid value `{v}`"))),
                })
                .collect::<Result<Vec<f64>>>()?;
            if vector.is_empty() {
                return Err(Error::parse(origin, lineno, format!("no values for `{word}`")));
            }
            let t = match table.as_mut() {
                Some(t) => t,
                None => table.insert(EmbeddingTable::new(vector.len())?),
            };
            if vector.len() != t.dimension {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("inconsistent dimension: expected {}, found {}", t.dimension, vector.len()),
                ));
            }
            t.vectors.entry(word.to_string()).or_insert(vector);
        }
        table.ok_or_else(|| Error::parse(origin, 0, "empty embedding file"))
    }

    /// Writes the header-less text format.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        let mut out = String::new();
        for w in words {
            out.push_str(w);
            for v in &self.vectors[w] {
                out.push(' ');
                out.push_str(&format!("{v:.6}"));
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    EmbeddingTable::parse(&read_to_string(path)?, path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentenceVector {
    pub values: Vec<f64>,
    pub provider_id: String,
    /// Set when no input token had a vector; `values` is then all zeros.
    pub all_oov: bool,
}

impl SentenceVector {
    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Mean of the in-vocabulary token vectors.
pub fn embed_mean(table: &EmbeddingTable, tokens: &TokenStream, provider_id: &str) -> SentenceVector {
    let mut sum = vec![0.0; table.dimension];
    let mut n = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t)) {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        n += 1;
    }
    if n > 0 {
        for s in &mut sum {
            *s /= n as f64;
        }
    }
    SentenceVector {
        values: sum,
        provider_id: provider_id.to_string(),
        all_oov: n == 0,
    }
}

/// Source of sentence vectors. `key` identifies the text for providers that
/// look vectors up rather than compute them.
pub trait EmbeddingProvider {
    fn id(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, key: &str, text: &str) -> Result<SentenceVector>;
}

/// Mean-pooled static word vectors over lowercased, stopword-filtered tokens.
#[derive(Debug, Clone)]
pub struct StaticTableProvider {
    id: String,
    table: EmbeddingTable,
    stopwords: Stopwords,
}

impl StaticTableProvider {
    pub fn new(table: EmbeddingTable, stopwords: Stopwords, id: impl Into<String>) -> Self {
        StaticTableProvider {
            id: id.into(),
            table,
            stopwords,
        }
    }

    pub fn load(path: &Path, stopwords: Stopwords) -> Result<Self> {
        let table = load_embeddings(path)?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(Self::new(table, stopwords, format!("static:{name}")))
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    pub fn tokens(&self, text: &str) -> TokenStream {
        tokenize(text).tokens.into_iter().filter(|t| !self.stopwords.contains(t)).collect()
    }
}

impl EmbeddingProvider for StaticTableProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.table.dimension
    }

    fn embed(&self, _key: &str, text: &str) -> Result<SentenceVector> {
        Ok(embed_mean(&self.table, &self.tokens(text), &self.id))
    }
}

/// One line of the embedding exchange file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeRecord {
    pub key: String,
    pub dim: usize,
    pub values: Vec<f64>,
    pub provider: String,
}

/// Vectors produced elsewhere and looked up by segment key.
#[derive(Debug, Clone)]
pub struct PrecomputedProvider {
    id: String,
    dimension: usize,
    vectors: HashMap<String, SentenceVector>,
}

impl PrecomputedProvider {
    pub fn get(&self, key: &str) -> Option<&SentenceVector> {
        self.vectors.get(key)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }
}

impl EmbeddingProvider for PrecomputedProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, key: &str, _text: &str) -> Result<SentenceVector> {
        self.vectors
            .get(key)
            .cloned()
            .ok_or_else(|| Error::MissingEmbedding(key.to_string()))
    }
}

pub fn parse_precomputed(content: &str, origin: &Path) -> Result<PrecomputedProvider> {
    let mut vectors = HashMap::new();
    let mut dimension = None;
    let mut providers: Vec<String> = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ExchangeRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        if rec.values.len() != rec.dim || rec.dim == 0 {
            return Err(Error::parse(
                origin,
                lineno,
                format!("dim {} does not match {} values", rec.dim, rec.values.len()),
            ));
        }
        if *dimension.get_or_insert(rec.dim) != rec.dim {
            return Err(Error::parse(
                origin,
                lineno,
                format!("inconsistent dimension: expected {}, found {}", dimension.unwrap_or(0), rec.dim),
            ));
        }
        if rec.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(origin, lineno, "non-finite value"));
        }
        if !providers.contains(&rec.provider) {
            providers.push(rec.provider.clone());
        }
        let sv = SentenceVector {
            all_oov: false,
            values: rec.values,
            provider_id: rec.provider,
        };
        if vectors.insert(rec.key.clone(), sv).is_some() {
            return Err(Error::parse(origin, lineno, format!("duplicate key `{}`", rec.key)));
        }
    }
    let dimension = dimension.ok_or_else(|| Error::parse(origin, 0, "empty embedding exchange file"))?;
    Ok(PrecomputedProvider {
        id: format!("precomputed:{}", providers.join("+")),
        dimension,
        vectors,
    })
}

pub fn load_precomputed(path: &Path) -> Result<PrecomputedProvider> {
    parse_precomputed(&read_to_string(path)?, path)
}

/// Writes records in the exchange format, one JSON object per line.
pub fn write_precomputed(path: &Path, records: &[ExchangeRecord]) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::json(path, e))?;
        out.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| Error::io(path, e))
}

/// `static:<path>` or `precomputed:<path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSpec {
    Static(PathBuf),
    Precomputed(PathBuf),
}

impl FromStr for ProviderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("static", p)) if !p.is_empty() => Ok(ProviderSpec::Static(p.into())),
            Some(("precomputed", p)) if !p.is_empty() => Ok(ProviderSpec::Precomputed(p.into())),
            _ => Err(Error::InvalidArgument(format!(
                "provider must be static:<path> or precomputed:<path>, got `{s}`"
            ))),
        }
    }
}

impl ProviderSpec {
    pub fn path(&self) -> &Path {
        match self {
            ProviderSpec::Static(p) | ProviderSpec::Precomputed(p) => p,
        }
    }

    pub fn load(&self, stopwords: &Stopwords) -> Result<Box<dyn EmbeddingProvider>> {
        Ok(match self {
            ProviderSpec::Static(p) => Box::new(StaticTableProvider::load(p, stopwords.clone())?),
            ProviderSpec::Precomputed(p) => Box::new(load_precomputed(p)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    Cosine,
    Euclidean,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Cosine => "cosine",
            Measure::Euclidean => "euclidean",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" => Ok(Measure::Cosine),
            "euclidean" => Ok(Measure::Euclidean),
            _ => Err(Error::InvalidArgument(format!("unknown measure `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityScore {
    pub value: f64,
    pub measure: Measure,
    /// Cosine against a zero vector, reported as 0.
    pub zero_vector: bool,
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

pub fn cosine_values(a: &[f64], b: &[f64]) -> Result<SimilarityScore> {
    check_dims(a, b)?;
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(SimilarityScore {
            value: 0.0,
            measure: Measure::Cosine,
            zero_vector: true,
        });
    }
    Ok(SimilarityScore {
        value: (dot / (na * nb)).clamp(-1.0, 1.0),
        measure: Measure::Cosine,
        zero_vector: false,
    })
}

pub fn euclidean_values(a: &[f64], b: &[f64]) -> Result<SimilarityScore> {
    check_dims(a, b)?;
    let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    Ok(SimilarityScore {
        value: d,
        measure: Measure::Euclidean,
        zero_vector: false,
    })
}

pub fn cosine(a: &SentenceVector, b: &SentenceVector) -> Result<SimilarityScore> {
    cosine_values(&a.values, &b.values)
}

pub fn euclidean(a: &SentenceVector, b: &SentenceVector) -> Result<SimilarityScore> {
    euclidean_values(&a.values, &b.values)
}

pub fn similarity(a: &SentenceVector, b: &SentenceVector, measure: Measure) -> Result<SimilarityScore> {
    match measure {
        Measure::Cosine => cosine(a, b),
        Measure::Euclidean => euclidean(a, b),
    }
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("pearson needs at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StsPair {
    pub gold: f64,
    pub sentence1: String,
    pub sentence2: String,
}

/// Reads tab-separated `gold, sentence1, sentence2` rows. Rows with seven or
/// more fields are read in the STS-B layout (score in field 5, sentences in
/// 6 and 7). A first row whose score does not parse is taken as a header.
pub fn parse_sts(content: &str, origin: &Path) -> Result<Vec<StsPair>> {
    let mut pairs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let (score, s1, s2) = match f.len() {
            3 => (f[0], f[1], f[2]),
            n if n >= 7 => (f[4], f[5], f[6]),
            n => return Err(Error::parse(origin, i + 1, format!("expected 3 or 7 fields, found {n}"))),
        };
        match score.trim().parse::<f64>() {
            Ok(gold) if gold.is_finite() => pairs.push(StsPair {
                gold,
                sentence1: s1.to_string(),
                sentence2: s2.to_string(),
            }),
            _ if i == 0 => continue,
            _ => return Err(Error::parse(origin, i + 1, format!("invalid gold score `{score}`"))),
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StsResult {
    pub pearson: f64,
    /// Pairs that entered the correlation.
    pub n: usize,
    /// Pairs skipped because both sentences had no known token.
    pub skipped: usize,
}

/// Key under which a precomputed provider is expected to hold STS sentence
/// `side` (1 or 2) of 0-based pair `row`.
pub fn sts_key(row: usize, side: u8) -> String {
    format!("sts:{row}:{side}")
}

/// Pearson correlation between gold scores and provider cosine similarities.
pub fn sts_eval_pairs(pairs: &[StsPair], provider: &dyn EmbeddingProvider) -> Result<StsResult> {
    let mut gold = Vec::with_capacity(pairs.len());
    let mut sims = Vec::with_capacity(pairs.len());
    let mut skipped = 0;
    for (row, p) in pairs.iter().enumerate() {
        let a = provider.embed(&sts_key(row, 1), &p.sentence1)?;
        let b = provider.embed(&sts_key(row, 2), &p.sentence2)?;
        if a.all_oov && b.all_oov {
            skipped += 1;
            continue;
        }
        gold.push(p.gold);
        sims.push(cosine(&a, &b)?.value);
    }
    if gold.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "no scorable pairs: {} usable, at least 2 needed",
            gold.len()
        )));
    }
    Ok(StsResult {
        pearson: pearson(&gold, &sims)?,
        n: gold.len(),
        skipped,
    })
}

pub fn sts_eval(path: &Path, provider: &dyn EmbeddingProvider) -> Result<StsResult> {
    sts_eval_pairs(&parse_sts(&read_to_string(path)?, path)?, provider)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> SentenceVector {
        SentenceVector {
            values: v.to_vec(),
            provider_id: "t".into(),
            all_oov: false,
        }
    }

    #[test]
    fn cosine_hand_values() {
        let c = cosine(&sv(&[1.0, 2.0, 3.0]), &sv(&[4.0, 5.0, 6.0])).unwrap().value;
        assert!((c - 32.0 / (14f64.sqrt() * 77f64.sqrt())).abs() < 1e-12);
        assert_eq!(cosine(&sv(&[1.0, 0.0]), &sv(&[0.0, 1.0])).unwrap().value, 0.0);
        let z = cosine(&sv(&[0.0, 0.0]), &sv(&[1.0, 1.0])).unwrap();
        assert!(z.zero_vector && z.value == 0.0);
        assert!(cosine(&sv(&[1.0]), &sv(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn euclidean_345() {
        assert_eq!(euclidean(&sv(&[0.0, 0.0]), &sv(&[3.0, 4.0])).unwrap().value, 5.0);
    }

    #[test]
    fn pearson_hand_values() {
        assert!((pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 5.0], &[3.0, 5.0, 11.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 5.0], &[-1.0, -2.0, -5.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::ZeroVariance(_))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn table_parsing() {
        let t = EmbeddingTable::parse("a 1 0 0 0\nb 0 1 0 0\nc 0 0 1 0\n", Path::new("v")).unwrap();
        assert_eq!((t.dimension(), t.len()), (4, 3));
        let err = EmbeddingTable::parse("a 1 0 0 0\nb 0 1 0\n", Path::new("v")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(EmbeddingTable::parse("", Path::new("v")).is_err());
        let h = EmbeddingTable::parse("2 3\nx 1 2 3\ny 4 5 6\n", Path::new("v")).unwrap();
        assert_eq!((h.dimension(), h.get("y")), (3, Some(&[4.0, 5.0, 6.0][..])));
    }

    #[test]
    fn mean_pooling() {
        let t = EmbeddingTable::parse("a 1 2\nb -1 -2\nc 3 0\n", Path::new("v")).unwrap();
        let ts = |w: &[&str]| w.iter().copied().collect::<TokenStream>();
        assert_eq!(embed_mean(&t, &ts(&["a"]), "p").values, vec![1.0, 2.0]);
        assert_eq!(embed_mean(&t, &ts(&["a", "b"]), "p").values, vec![0.0, 0.0]);
        let m = embed_mean(&t, &ts(&["a", "zz", "c", "c"]), "p");
        assert!((m.values[0] - 7.0 / 3.0).abs() < 1e-12 && (m.values[1] - 2.0 / 3.0).abs() < 1e-12);
        let o = embed_mean(&t, &ts(&["zz"]), "p");
        assert!(o.all_oov && o.is_zero());
    }

    #[test]
    fn precomputed_errors() {
        let line = |k: &str, v: &str, d: usize| format!(r#"{{"key":"{k}","dim":{d},"values":[{v}],"provider":"m"}}"#);
        let ok = format!("{}\n{}\n", line("a", "1,2", 2), line("b", "3,4", 2));
        let p = parse_precomputed(&ok, Path::new("e")).unwrap();
        assert_eq!((p.len(), p.dimension()), (2, 2));
        assert_eq!(p.embed("b", "").unwrap().values, vec![3.0, 4.0]);
        assert!(matches!(p.embed("c", ""), Err(Error::MissingEmbedding(_))));

        let dup = format!("{}\n{}\n", line("a", "1,2", 2), line("a", "3,4", 2));
        assert!(parse_precomputed(&dup, Path::new("e")).unwrap_err().to_string().contains("duplicate"));
        let dims = format!("{}\n{}\n", line("a", "1,2", 2), line("b", "3,4,5", 3));
        assert!(matches!(parse_precomputed(&dims, Path::new("e")), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn sts_layouts() {
        let p = parse_sts("score\ts1\ts2\n4.5\ta b\tc\n", Path::new("s")).unwrap();
        assert_eq!(p.len(), 1);
        let p = parse_sts("main-captions\tMSRvid\t2012test\t0001\t5.000\tA man.\tA guy.\n", Path::new("s")).unwrap();
        assert_eq!((p[0].gold, p[0].sentence2.as_str()), (5.0, "A guy."));
        assert!(parse_sts("1\tx\n", Path::new("s")).is_err());
    }

    #[test]
    fn provider_spec_parsing() {
        assert_eq!("static:v.txt".parse::<ProviderSpec>().unwrap(), ProviderSpec::Static("v.txt".into()));
        assert!("bert:x".parse::<ProviderSpec>().is_err());
        assert!("static:".parse::<ProviderSpec>().is_err());
    }
}
