//! Segmentation, tokenization, normalization and TF-IDF features.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Segment;
use crate::error::{read_to_string, Error, Result};
use crate::stem::stem;

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Lowercase word tokens in document order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<String>,
}

impl TokenStream {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenStream { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for TokenStream {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenStream {
            tokens: iter.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    /// The English list shipped in `data/stopwords_en.txt`.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&read_to_string(path)?))
    }

    pub fn parse(content: &str) -> Self {
        Stopwords(
            content
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Self::bundled()
    }
}

/// Splits a document into paragraphs separated by one or more blank lines.
///
/// Each segment is trimmed; spans are byte offsets of the trimmed text in
/// `document`.
pub fn segment_text(doc_id: &str, document: &str) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut para_start: Option<usize> = None;
    let mut para_end = 0usize;
    let mut offset = 0usize;

    let flush = |start: usize, end: usize, segments: &mut Vec<Segment>| {
        let raw = &document[start..end];
        let lead = raw.len() - raw.trim_start().len();
        let trimmed = raw.trim();
        if !trimmed.is_empty() {
            let s = start + lead;
            segments.push(Segment {
                doc_id: doc_id.to_string(),
                index: segments.len(),
                text: trimmed.to_string(),
                char_span: (s, s + trimmed.len()),
            });
        }
    };

    for line in document.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        if line.trim().is_empty() {
            if let Some(s) = para_start.take() {
                flush(s, para_end, &mut segments);
            }
        } else {
            para_start.get_or_insert(start);
            para_end = offset;
        }
    }
    if let Some(s) = para_start {
        flush(s, para_end, &mut segments);
    }
    segments
}

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> TokenStream {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Removes stopwords and stems what remains.
///
/// Stems that collide with a stopword are dropped as well, so the result is a
/// fixed point of `normalize`.
pub fn normalize(tokens: &TokenStream, stopwords: &Stopwords) -> TokenStream {
    tokens
        .iter()
        .filter(|t| !stopwords.contains(t))
        .map(stem)
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// `tokenize` then optionally `normalize`.
pub fn analyze(text: &str, stopwords: &Stopwords, normalize_tokens: bool) -> TokenStream {
    let tokens = tokenize(text);
    if normalize_tokens {
        normalize(&tokens, stopwords)
    } else {
        tokens
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub entries: Vec<(usize, f64)>,
    pub dimension: usize,
}

impl SparseVector {
    pub fn zeros(dimension: usize) -> Self {
        SparseVector {
            entries: Vec::new(),
            dimension,
        }
    }

    /// Builds from unordered entries, summing duplicates and dropping zeros.
    pub fn from_entries(dimension: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, w) in entries {
            if i >= dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    actual: i + 1,
                });
            }
            *acc.entry(i).or_default() += w;
        }
        Ok(SparseVector {
            entries: acc.into_iter().filter(|(_, w)| *w != 0.0).collect(),
            dimension,
        })
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector {
            entries: self.entries.iter().map(|&(i, w)| (i, w * factor)).collect(),
            dimension: self.dimension,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorizerConfig {
    pub min_df: usize,
    pub max_features: usize,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        VectorizerConfig {
            min_df: 2,
            max_features: 10_000,
        }
    }
}

const VECTORIZER_FORMAT: u32 = 1;

/// Smoothed TF-IDF vectorizer. Immutable once fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Vectorizer {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    idf: Vec<f64>,
    config: VectorizerConfig,
}

#[derive(Serialize, Deserialize)]
struct VectorizerFile {
    format_version: u32,
    config: VectorizerConfig,
    vocabulary: Vec<String>,
    idf: Vec<f64>,
}

impl Vectorizer {
    /// Fits vocabulary and `idf(t) = ln((1 + N) / (1 + df(t))) + 1`.
    ///
    /// Terms below `min_df` are dropped; if more than `max_features` remain the
    /// highest-df terms are kept, ties broken lexicographically. Column order
    /// is lexicographic.
    pub fn fit(corpus: &[TokenStream], config: VectorizerConfig) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InvalidArgument("cannot fit a vectorizer on an empty corpus".into()));
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpus {
            let uniq: BTreeSet<&str> = doc.iter().collect();
            for t in uniq {
                *df.entry(t).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = df
            .into_iter()
            .filter(|&(_, d)| d >= config.min_df.max(1))
            .collect();
        if kept.len() > config.max_features {
            kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            kept.truncate(config.max_features);
            kept.sort_by(|a, b| a.0.cmp(b.0));
        }
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let n = corpus.len() as f64;
        let terms: Vec<String> = kept.iter().map(|(t, _)| t.to_string()).collect();
        let idf = kept
            .iter()
            .map(|&(_, d)| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        Ok(Self::from_parts(terms, idf, config))
    }

    fn from_parts(terms: Vec<String>, idf: Vec<f64>, config: VectorizerConfig) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vectorizer {
            terms,
            index,
            idf,
            config,
        }
    }

    pub fn dimension(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn config(&self) -> VectorizerConfig {
        self.config
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Term frequency times idf, L2-normalized. Unknown tokens are ignored.
    pub fn vectorize(&self, tokens: &TokenStream) -> SparseVector {
        let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokens.iter() {
            if let Some(&col) = self.index.get(t) {
                *tf.entry(col).or_default() += 1.0;
            }
        }
        let weighted: Vec<(usize, f64)> = tf.into_iter().map(|(c, f)| (c, f * self.idf[c])).collect();
        let norm = weighted.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        SparseVector {
            entries: if norm > 0.0 {
                weighted.into_iter().map(|(c, w)| (c, w / norm)).collect()
            } else {
                Vec::new()
            },
            dimension: self.dimension(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&VectorizerFile {
            format_version: VECTORIZER_FORMAT,
            config: self.config,
            vocabulary: self.terms.clone(),
            idf: self.idf.clone(),
        })
        .expect("vectorizer serializes")
    }

    /// Hex SHA-256 of the canonical JSON form; models record it to detect mismatches.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = read_to_string(path)?;
        let file: VectorizerFile = serde_json::from_str(&content).map_err(|e| Error::json(path, e))?;
        if file.format_version != VECTORIZER_FORMAT {
            return Err(Error::FormatVersion {
                found: file.format_version,
                expected: VECTORIZER_FORMAT,
            });
        }
        if file.vocabulary.len() != file.idf.len() {
            return Err(Error::Config(format!(
                "{}: vocabulary has {} terms but idf has {} values",
                path.display(),
                file.vocabulary.len(),
                file.idf.len()
            )));
        }
        if file.idf.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(format!("{}: idf values must be finite and >= 0", path.display())));
        }
        Ok(Self::from_parts(file.vocabulary, file.idf, file.config))
    }
}
