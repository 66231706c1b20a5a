//! Latent Dirichlet Allocation by collapsed Gibbs sampling, with the
//! perplexity and UMass coherence diagnostics used to pick the topic count.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::preprocess::TokenStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    pub fn new(k: usize) -> Self {
        LdaConfig {
            k,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed: 7,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

/// Sampler state. Counts are kept consistent with `assignments` at all times
/// outside of a single token update.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub vocabulary: Vec<String>,
    /// `k x V`
    pub topic_word_counts: Vec<Vec<u32>>,
    pub topic_totals: Vec<u64>,
    /// `D x k`
    pub doc_topic_counts: Vec<Vec<u32>>,
    /// Word id of every token, per document.
    pub doc_words: Vec<Vec<usize>>,
    /// Topic of every token, per document.
    pub assignments: Vec<Vec<usize>>,
    pub iterations_run: usize,
}

impl TopicModel {
    pub fn num_docs(&self) -> usize {
        self.doc_words.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn total_tokens(&self) -> usize {
        self.doc_words.iter().map(Vec::len).sum()
    }

    /// Smoothed `P(topic | doc)`.
    pub fn theta(&self, doc: usize) -> Vec<f64> {
        let n_d = self.doc_words[doc].len() as f64;
        let denom = n_d + self.k as f64 * self.alpha;
        self.doc_topic_counts[doc]
            .iter()
            .map(|&c| (c as f64 + self.alpha) / denom)
            .collect()
    }

    /// Smoothed `P(word | topic)`.
    pub fn phi(&self, topic: usize, word: usize) -> f64 {
        let v = self.vocab_size() as f64;
        (self.topic_word_counts[topic][word] as f64 + self.beta) / (self.topic_totals[topic] as f64 + v * self.beta)
    }

    /// Word ids of the `n` highest-count words of `topic` (ties by word id).
    pub fn top_word_ids(&self, topic: usize, n: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.vocab_size())
            .filter(|&w| self.topic_word_counts[topic][w] > 0)
            .collect();
        ids.sort_by(|&a, &b| {
            self.topic_word_counts[topic][b]
                .cmp(&self.topic_word_counts[topic][a])
                .then(a.cmp(&b))
        });
        ids.truncate(n);
        ids
    }

    pub fn top_words(&self, topic: usize, n: usize) -> Vec<(&str, u32)> {
        self.top_word_ids(topic, n)
            .into_iter()
            .map(|w| (self.vocabulary[w].as_str(), self.topic_word_counts[topic][w]))
            .collect()
    }

    /// Topic holding most of a document's tokens (lowest id on ties).
    pub fn dominant_topic(&self, doc: usize) -> usize {
        let counts = &self.doc_topic_counts[doc];
        (0..self.k).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a))).unwrap_or(0)
    }

    /// Number of documents whose dominant topic is each topic.
    pub fn docs_per_topic(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for d in 0..self.num_docs() {
            out[self.dominant_topic(d)] += 1;
        }
        out
    }

    /// Verifies that the count tables agree with the token assignments.
    pub fn check_conservation(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("count invariant violated: {m}")));
        let mut tw = vec![vec![0u32; self.vocab_size()]; self.k];
        for (d, (words, topics)) in self.doc_words.iter().zip(&self.assignments).enumerate() {
            let mut dt = vec![0u32; self.k];
            for (&w, &t) in words.iter().zip(topics) {
                tw[t][w] += 1;
                dt[t] += 1;
            }
            if dt != self.doc_topic_counts[d] {
                return bad(format!("doc {d} topic counts"));
            }
            let row_sum: u64 = self.doc_topic_counts[d].iter().map(|&c| c as u64).sum();
            if row_sum != words.len() as u64 {
                return bad(format!("doc {d} length"));
            }
        }
        if tw != self.topic_word_counts {
            return bad("topic-word counts".into());
        }
        let totals: Vec<u64> = tw.iter().map(|r| r.iter().map(|&c| c as u64).sum()).collect();
        if totals != self.topic_totals {
            return bad("topic totals".into());
        }
        if totals.iter().sum::<u64>() != self.total_tokens() as u64 {
            return bad("corpus token count".into());
        }
        Ok(())
    }

    /// `topic_id, rank, word, count` rows for the top `n` words of every topic.
    pub fn top_words_tsv(&self, n: usize) -> String {
        let mut out = String::from("topic_id\trank\tword\tcount\n");
        for t in 0..self.k {
            for (rank, (word, count)) in self.top_words(t, n).into_iter().enumerate() {
                out.push_str(&format!("{t}\t{}\t{word}\t{count}\n", rank + 1));
            }
        }
        out
    }
}

pub struct GibbsSampler {
    model: TopicModel,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsSampler {
    /// Builds the vocabulary (sorted) and draws a uniform initial assignment.
    pub fn new(docs: &[TokenStream], config: &LdaConfig) -> Result<Self> {
        if config.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let total: usize = docs.iter().map(TokenStream::len).sum();
        if total == 0 {
            return Err(Error::InvalidArgument("no tokens to model".into()));
        }
        if config.k > total {
            return Err(Error::InvalidArgument(format!(
                "k = {} exceeds the corpus token count {total}",
                config.k
            )));
        }
        let vocabulary: Vec<String> = docs
            .iter()
            .flat_map(|d| d.iter())
            .collect::<BTreeSet<&str>>()
            .into_iter()
            .map(String::from)
            .collect();
        let index: HashMap<&str, usize> = vocabulary.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
        let doc_words: Vec<Vec<usize>> = docs.iter().map(|d| d.iter().map(|w| index[w]).collect()).collect();

        let k = config.k;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut topic_word_counts = vec![vec![0u32; vocabulary.len()]; k];
        let mut topic_totals = vec![0u64; k];
        let mut doc_topic_counts = vec![vec![0u32; k]; docs.len()];
        let mut assignments = Vec::with_capacity(docs.len());
        for (d, words) in doc_words.iter().enumerate() {
            let mut z = Vec::with_capacity(words.len());
            for &w in words {
                let t = rng.gen_range(0..k);
                topic_word_counts[t][w] += 1;
                topic_totals[t] += 1;
                doc_topic_counts[d][t] += 1;
                z.push(t);
            }
            assignments.push(z);
        }
        Ok(GibbsSampler {
            model: TopicModel {
                k,
                alpha: config.alpha(),
                beta: config.beta,
                seed: config.seed,
                vocabulary,
                topic_word_counts,
                topic_totals,
                doc_topic_counts,
                doc_words,
                assignments,
                iterations_run: 0,
            },
            rng,
            weights: vec![0.0; k],
        })
    }

    /// Resamples every token once, in document order.
    pub fn sweep(&mut self) {
        let m = &mut self.model;
        let v_beta = m.vocab_size() as f64 * m.beta;
        for d in 0..m.doc_words.len() {
            for i in 0..m.doc_words[d].len() {
                let w = m.doc_words[d][i];
                let old = m.assignments[d][i];
                m.topic_word_counts[old][w] -= 1;
                m.topic_totals[old] -= 1;
                m.doc_topic_counts[d][old] -= 1;

                let mut total = 0.0;
                for t in 0..m.k {
                    let p = (m.topic_word_counts[t][w] as f64 + m.beta) / (m.topic_totals[t] as f64 + v_beta)
                        * (m.doc_topic_counts[d][t] as f64 + m.alpha);
                    total += p;
                    self.weights[t] = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(m.k - 1);

                m.topic_word_counts[new][w] += 1;
                m.topic_totals[new] += 1;
                m.doc_topic_counts[d][new] += 1;
                m.assignments[d][i] = new;
            }
        }
        m.iterations_run += 1;
    }

    pub fn model(&self) -> &TopicModel {
        &self.model
    }

    pub fn into_model(self) -> TopicModel {
        self.model
    }
}

pub fn lda_fit(docs: &[TokenStream], config: &LdaConfig) -> Result<TopicModel> {
    let mut sampler = GibbsSampler::new(docs, config)?;
    for _ in 0..config.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model())
}

/// `exp(-log-likelihood / tokens)` of the training documents under the point
/// estimates of theta and phi. `docs` must be the documents the model was fitted on.
pub fn perplexity(model: &TopicModel, docs: &[TokenStream]) -> Result<f64> {
    if docs.len() != model.num_docs() {
        return Err(Error::InvalidArgument(format!(
            "model was fitted on {} documents, got {}",
            model.num_docs(),
            docs.len()
        )));
    }
    let index: HashMap<&str, usize> = model
        .vocabulary
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let mut log_lik = 0.0;
    let mut n = 0usize;
    for (d, doc) in docs.iter().enumerate() {
        let theta = model.theta(d);
        for w in doc.iter().filter_map(|w| index.get(w)) {
            let p: f64 = (0..model.k).map(|t| theta[t] * model.phi(t, *w)).sum();
            log_lik += p.ln();
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no in-vocabulary tokens".into()));
    }
    Ok((-log_lik / n as f64).exp())
}

/// Document co-occurrence statistics over a fixed corpus.
struct CoDocCounts {
    doc_sets: Vec<BTreeSet<usize>>,
}

impl CoDocCounts {
    fn new(model: &TopicModel, docs: &[TokenStream]) -> Self {
        let index: HashMap<&str, usize> = model
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), i))
            .collect();
        CoDocCounts {
            doc_sets: docs
                .iter()
                .map(|d| d.iter().filter_map(|w| index.get(w).copied()).collect())
                .collect(),
        }
    }

    fn df(&self, w: usize) -> usize {
        self.doc_sets.iter().filter(|s| s.contains(&w)).count()
    }

    fn co_df(&self, a: usize, b: usize) -> usize {
        self.doc_sets.iter().filter(|s| s.contains(&a) && s.contains(&b)).count()
    }
}

/// Per-topic UMass score over the ranked top words `w_1..w_n`:
/// `sum over i < j of ln((D(w_i, w_j) + 1) / D(w_j))`.
pub fn topic_coherence_umass(model: &TopicModel, docs: &[TokenStream], top_n: usize) -> Result<Vec<f64>> {
    if top_n < 2 {
        return Err(Error::InvalidArgument("top_n must be at least 2".into()));
    }
    let counts = CoDocCounts::new(model, docs);
    Ok((0..model.k)
        .map(|t| {
            let top = model.top_word_ids(t, top_n);
            let mut score = 0.0;
            for j in 1..top.len() {
                let d_j = counts.df(top[j]);
                if d_j == 0 {
                    continue;
                }
                for i in 0..j {
                    score += ((counts.co_df(top[i], top[j]) as f64 + 1.0) / d_j as f64).ln();
                }
            }
            score
        })
        .collect())
}

/// Mean of [`topic_coherence_umass`] over topics.
pub fn coherence_umass(model: &TopicModel, docs: &[TokenStream], top_n: usize) -> Result<f64> {
    let per_topic = topic_coherence_umass(model, docs, top_n)?;
    Ok(per_topic.iter().sum::<f64>() / per_topic.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectKRow {
    pub k: usize,
    /// Means over seeds.
    pub perplexity: f64,
    pub coherence: f64,
    /// Dominant-topic document counts from the first seed.
    pub docs_per_topic: Vec<usize>,
    /// Topics holding at most [`SMALL_TOPIC_DOCS`] documents.
    pub small_topics: Vec<usize>,
}

pub const SMALL_TOPIC_DOCS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectKReport {
    pub rows: Vec<SelectKRow>,
}

impl SelectKReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("k\tperplexity\tcoherence_umass\tsmall_topics\n");
        for r in &self.rows {
            let small: Vec<String> = r.small_topics.iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "{}\t{:.6}\t{:.6}\t{}\n",
                r.k,
                r.perplexity,
                r.coherence,
                small.join(",")
            ));
        }
        out
    }

    /// `k, topic, segments` rows.
    pub fn topic_counts_tsv(&self) -> String {
        let mut out = String::from("k\ttopic\tsegments\n");
        for r in &self.rows {
            for (t, n) in r.docs_per_topic.iter().enumerate() {
                out.push_str(&format!("{}\t{t}\t{n}\n", r.k));
            }
        }
        out
    }
}

/// Fits every `k` in the grid for every seed and tabulates the diagnostics.
/// Choosing `k` is left to the reader of the report.
pub fn select_k(
    docs: &[TokenStream],
    k_grid: &[usize],
    seeds: &[u64],
    base: &LdaConfig,
    top_n: usize,
) -> Result<SelectKReport> {
    if k_grid.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument("k grid and seed list must be non-empty".into()));
    }
    let mut rows = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let mut perp = 0.0;
        let mut coh = 0.0;
        let mut first: Option<Vec<usize>> = None;
        for &seed in seeds {
            let cfg = LdaConfig {
                k,
                seed,
                alpha: base.alpha,
                ..*base
            };
            let model = lda_fit(docs, &cfg)?;
            perp += perplexity(&model, docs)?;
            coh += coherence_umass(&model, docs, top_n)?;
            first.get_or_insert_with(|| model.docs_per_topic());
        }
        let docs_per_topic = first.unwrap_or_default();
        let small_topics = docs_per_topic
            .iter()
            .enumerate()
            .filter(|(_, &n)| n <= SMALL_TOPIC_DOCS)
            .map(|(t, _)| t)
            .collect();
        rows.push(SelectKRow {
            k,
            perplexity: perp / seeds.len() as f64,
            coherence: coh / seeds.len() as f64,
            docs_per_topic,
            small_topics,
        });
    }
    Ok(SelectKReport { rows })
}

/// Majority-mapping purity of dominant topics against known groups.
pub fn purity(model: &TopicModel, groups: &[usize]) -> f64 {
    let mut table: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (d, &g) in groups.iter().enumerate() {
        *table.entry(model.dominant_topic(d)).or_default().entry(g).or_default() += 1;
    }
    let hits: usize = table.values().map(|row| row.values().copied().max().unwrap_or(0)).sum();
    hits as f64 / groups.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(words: &[&str]) -> TokenStream {
        words.iter().copied().collect()
    }

    #[test]
    fn single_topic_assigns_everything_to_zero() {
        let docs = vec![ts(&["a", "b", "a"]), ts(&["c"])];
        let m = lda_fit(&docs, &LdaConfig { iterations: 5, ..LdaConfig::new(1) }).unwrap();
        assert!(m.assignments.iter().flatten().all(|&t| t == 0));
        assert_eq!(m.topic_totals, vec![4]);
        m.check_conservation().unwrap();
    }

    #[test]
    fn uniform_single_topic_perplexity_is_vocab_size() {
        let docs = vec![ts(&["a", "b", "c", "d", "e"])];
        let m = lda_fit(&docs, &LdaConfig { iterations: 3, ..LdaConfig::new(1) }).unwrap();
        let p = perplexity(&m, &docs).unwrap();
        assert!((p - 5.0).abs() < 1e-9, "{p}");
    }

    #[test]
    fn too_many_topics_is_an_error() {
        let docs = vec![ts(&["a", "b"])];
        assert!(lda_fit(&docs, &LdaConfig::new(3)).is_err());
        assert!(lda_fit(&[ts(&[])], &LdaConfig::new(1)).is_err());
    }

    #[test]
    fn fit_is_reproducible() {
        let docs = vec![ts(&["a", "b", "c", "a"]), ts(&["b", "c", "d"]), ts(&["d", "e", "a"])];
        let cfg = LdaConfig { iterations: 20, ..LdaConfig::new(2) };
        assert_eq!(lda_fit(&docs, &cfg).unwrap(), lda_fit(&docs, &cfg).unwrap());
    }

    #[test]
    fn umass_terms() {
        // One topic, words always together: every pair scores ln((D+1)/D).
        let docs = vec![ts(&["x", "y"]), ts(&["x", "y"])];
        let m = lda_fit(&docs, &LdaConfig { iterations: 2, ..LdaConfig::new(1) }).unwrap();
        let c = coherence_umass(&m, &docs, 2).unwrap();
        assert!((c - (3.0f64 / 2.0).ln()).abs() < 1e-12);

        // Never together: ln(1 / D(w_j)). x ranks first (count 3), y second (2 docs).
        let docs = vec![ts(&["x", "x", "x"]), ts(&["y"]), ts(&["y"])];
        let m = lda_fit(&docs, &LdaConfig { iterations: 2, ..LdaConfig::new(1) }).unwrap();
        let c = coherence_umass(&m, &docs, 2).unwrap();
        assert!((c - (1.0f64 / 2.0).ln()).abs() < 1e-12);
        assert!(coherence_umass(&m, &docs, 1).is_err());
    }

    #[test]
    fn perplexity_requires_training_docs() {
        let docs = vec![ts(&["a", "b"])];
        let m = lda_fit(&docs, &LdaConfig { iterations: 1, ..LdaConfig::new(1) }).unwrap();
        assert!(perplexity(&m, &[ts(&["a"]), ts(&["b"])]).is_err());
    }

    #[test]
    fn top_words_dump_format() {
        let docs = vec![ts(&["a", "a", "b"])];
        let m = lda_fit(&docs, &LdaConfig { iterations: 1, ..LdaConfig::new(1) }).unwrap();
        assert_eq!(m.top_words_tsv(5), "topic_id\trank\tword\tcount\n0\t1\ta\t2\n0\t2\tb\t1\n");
    }
}
