//! One-vs-rest linear classifiers over TF-IDF features.
//!
//! Logistic regression is fitted by seeded SGD on the L2-regularized log loss;
//! the linear SVM by Pegasos subgradient steps on the hinge loss (with the
//! ball projection), returning the mean of the late end-of-epoch iterates.
//! Both keep the weight vector as `scale * v` so the L2 shrink is O(1) per step on
//! sparse inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, BinaryDataset, CategoryLabel, LabeledSegment, Segment};
use crate::error::{read_to_string, Error, Result};
use crate::preprocess::{analyze, SparseVector, Stopwords, Vectorizer, VectorizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    LogisticRegression,
    LinearSvm,
}

impl ModelKind {
    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "lr",
            ModelKind::LinearSvm => "svm",
        }
    }

    pub fn default_threshold(self) -> f64 {
        match self {
            ModelKind::LogisticRegression => 0.5,
            ModelKind::LinearSvm => 0.0,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr" | "LogisticRegression" => Ok(ModelKind::LogisticRegression),
            "svm" | "LinearSvm" | "LinearSVM" => Ok(ModelKind::LinearSvm),
            other => Err(Error::InvalidArgument(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Turns raw segment text into the sparse features a model was trained on.
#[derive(Debug, Clone)]
pub struct Featurizer {
    pub vectorizer: Vectorizer,
    pub stopwords: Stopwords,
    /// Apply stopword removal and stemming before vectorizing.
    pub normalize: bool,
}

impl Featurizer {
    pub fn fit(texts: &[&str], config: VectorizerConfig, stopwords: Stopwords, normalize: bool) -> Result<Self> {
        let docs: Vec<_> = texts.iter().map(|t| analyze(t, &stopwords, normalize)).collect();
        Ok(Featurizer {
            vectorizer: Vectorizer::fit(&docs, config)?,
            stopwords,
            normalize,
        })
    }

    pub fn features(&self, text: &str) -> SparseVector {
        self.vectorizer
            .vectorize(&analyze(text, &self.stopwords, self.normalize))
    }

    pub fn dimension(&self) -> usize {
        self.vectorizer.dimension()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegParams {
    pub l2: f64,
    pub epochs: usize,
    /// Step size is `lr0 / (1 + epoch)`.
    pub lr0: f64,
    pub seed: u64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            l2: 1e-4,
            epochs: 50,
            lr0: 0.1,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 50,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub kind: ModelKind,
    pub category: CategoryLabel,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub decision_threshold: f64,
    pub vectorizer_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Probability for logistic regression, raw margin for the SVM.
    pub score: f64,
    pub positive: bool,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Weight vector stored as `scale * v`.
struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
    /// Squared norm of `v`.
    sq_norm: f64,
}

impl ScaledWeights {
    fn new(dim: usize) -> Self {
        ScaledWeights {
            v: vec![0.0; dim],
            scale: 1.0,
            sq_norm: 0.0,
        }
    }

    fn dot(&self, x: &SparseVector) -> f64 {
        self.scale * x.dot_dense(&self.v)
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            self.v.iter_mut().for_each(|w| *w = 0.0);
            self.scale = 1.0;
            self.sq_norm = 0.0;
            return;
        }
        self.scale *= factor;
        if self.scale < 1e-9 {
            let s = self.scale;
            self.v.iter_mut().for_each(|w| *w *= s);
            self.sq_norm *= s * s;
            self.scale = 1.0;
        }
    }

    fn add(&mut self, x: &SparseVector, step: f64) {
        let k = step / self.scale;
        for &(i, xi) in &x.entries {
            let old = self.v[i];
            self.v[i] += k * xi;
            self.sq_norm += self.v[i] * self.v[i] - old * old;
        }
    }

    fn norm(&self) -> f64 {
        self.scale * self.sq_norm.max(0.0).sqrt()
    }

    fn into_dense(self) -> Vec<f64> {
        let s = self.scale;
        self.v.into_iter().map(|w| w * s).collect()
    }
}

fn check_two_classes(category: CategoryLabel, examples: &[(SparseVector, bool)]) -> Result<()> {
    let pos = examples.iter().filter(|(_, y)| *y).count();
    if pos == 0 || pos == examples.len() {
        return Err(Error::SingleClass(category.to_string()));
    }
    Ok(())
}

fn check_dims(dim: usize, examples: &[(SparseVector, bool)]) -> Result<()> {
    match examples.iter().find(|(x, _)| x.dimension != dim) {
        Some((x, _)) => Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.dimension,
        }),
        None => Ok(()),
    }
}

fn epoch_order(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Mean log loss plus `l2/2 * |w|^2`, with its gradient in `(w, b)`.
pub fn logistic_objective(
    weights: &[f64],
    bias: f64,
    examples: &[(SparseVector, bool)],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = examples.len() as f64;
    let mut loss = 0.0;
    let mut grad: Vec<f64> = weights.iter().map(|w| l2 * w).collect();
    let mut grad_b = 0.0;
    for (x, y) in examples {
        let z = x.dot_dense(weights) + bias;
        let y = if *y { 1.0 } else { 0.0 };
        // log(1 + e^z) - y z, evaluated stably
        loss += if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() } - y * z;
        let g = (sigmoid(z) - y) / n;
        for &(i, xi) in &x.entries {
            grad[i] += g * xi;
        }
        grad_b += g;
    }
    let reg = 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss / n + reg, grad, grad_b)
}

/// Regularized hinge objective with the bias treated as a weight on a constant feature.
pub fn hinge_objective(weights: &[f64], bias: f64, examples: &[(SparseVector, bool)], lambda: f64) -> f64 {
    let n = examples.len() as f64;
    let hinge: f64 = examples
        .iter()
        .map(|(x, y)| {
            let y = if *y { 1.0 } else { -1.0 };
            (1.0 - y * (x.dot_dense(weights) + bias)).max(0.0)
        })
        .sum();
    let reg = 0.5 * lambda * (weights.iter().map(|w| w * w).sum::<f64>() + bias * bias);
    reg + hinge / n
}

/// Fits logistic regression on pre-vectorized examples.
pub fn fit_logreg(
    category: CategoryLabel,
    dim: usize,
    examples: &[(SparseVector, bool)],
    params: &LogRegParams,
) -> Result<(Vec<f64>, f64)> {
    check_dims(dim, examples)?;
    check_two_classes(category, examples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w = ScaledWeights::new(dim);
    let mut bias = 0.0;
    for epoch in 0..params.epochs {
        let eta = params.lr0 / (1.0 + epoch as f64);
        for i in epoch_order(examples.len(), &mut rng) {
            let (x, y) = &examples[i];
            let y = if *y { 1.0 } else { 0.0 };
            let g = sigmoid(w.dot(x) + bias) - y;
            w.shrink(1.0 - eta * params.l2);
            w.add(x, -eta * g);
            bias -= eta * g;
        }
    }
    Ok((w.into_dense(), bias))
}

/// Fits a linear SVM with Pegasos steps `eta_t = 1 / (lambda t)`.
pub fn fit_svm(
    category: CategoryLabel,
    dim: usize,
    examples: &[(SparseVector, bool)],
    params: &SvmParams,
) -> Result<(Vec<f64>, f64)> {
    check_dims(dim, examples)?;
    check_two_classes(category, examples)?;
    if params.lambda <= 0.0 {
        return Err(Error::InvalidArgument("SVM lambda must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    // Last coordinate carries the bias.
    let augmented: Vec<(SparseVector, f64)> = examples
        .iter()
        .map(|(x, y)| {
            let mut entries = x.entries.clone();
            entries.push((dim, 1.0));
            (
                SparseVector {
                    entries,
                    dimension: dim + 1,
                },
                if *y { 1.0 } else { -1.0 },
            )
        })
        .collect();
    let mut w = ScaledWeights::new(dim + 1);
    let mut t = 0usize;
    // Average of end-of-epoch iterates over the second half of training.
    let first_averaged = params.epochs / 2;
    let mut avg = vec![0.0; dim + 1];
    let mut snapshots = 0usize;
    let radius = 1.0 / params.lambda.sqrt();
    for epoch in 0..params.epochs {
        for i in epoch_order(augmented.len(), &mut rng) {
            t += 1;
            let eta = 1.0 / (params.lambda * t as f64);
            let (x, y) = &augmented[i];
            let margin = y * w.dot(x);
            w.shrink(1.0 - eta * params.lambda);
            if margin < 1.0 {
                w.add(x, eta * y);
            }
            // Project onto the ball of radius 1/sqrt(lambda), which holds the optimum.
            let norm = w.norm();
            if norm > radius {
                w.shrink(radius / norm);
            }
        }
        if epoch >= first_averaged {
            snapshots += 1;
            let k = 1.0 / snapshots as f64;
            for (a, v) in avg.iter_mut().zip(&w.v) {
                *a += (w.scale * v - *a) * k;
            }
        }
    }
    let mut dense = avg;
    let bias = dense.pop().unwrap_or(0.0);
    Ok((dense, bias))
}

fn vectorize_dataset(ds: &BinaryDataset, featurizer: &Featurizer) -> Vec<(SparseVector, bool)> {
    ds.examples
        .iter()
        .map(|(s, y)| (featurizer.features(&s.text), *y))
        .collect()
}

pub fn train_logreg(train: &BinaryDataset, featurizer: &Featurizer, params: &LogRegParams) -> Result<LinearModel> {
    let examples = vectorize_dataset(train, featurizer);
    let (weights, bias) = fit_logreg(train.category, featurizer.dimension(), &examples, params)?;
    Ok(LinearModel {
        kind: ModelKind::LogisticRegression,
        category: train.category,
        weights,
        bias,
        decision_threshold: ModelKind::LogisticRegression.default_threshold(),
        vectorizer_hash: featurizer.vectorizer.fingerprint(),
    })
}

pub fn train_svm(train: &BinaryDataset, featurizer: &Featurizer, params: &SvmParams) -> Result<LinearModel> {
    let examples = vectorize_dataset(train, featurizer);
    let (weights, bias) = fit_svm(train.category, featurizer.dimension(), &examples, params)?;
    Ok(LinearModel {
        kind: ModelKind::LinearSvm,
        category: train.category,
        weights,
        bias,
        decision_threshold: ModelKind::LinearSvm.default_threshold(),
        vectorizer_hash: featurizer.vectorizer.fingerprint(),
    })
}

pub fn predict(model: &LinearModel, x: &SparseVector) -> Result<Prediction> {
    if x.dimension != model.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len(),
            actual: x.dimension,
        });
    }
    let z = x.dot_dense(&model.weights) + model.bias;
    let score = match model.kind {
        ModelKind::LogisticRegression => sigmoid(z),
        ModelKind::LinearSvm => z,
    };
    Ok(Prediction {
        score,
        positive: score >= model.decision_threshold,
    })
}

/// Counts and scores for the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl PrfMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        PrfMetrics {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
            tn,
        }
    }

    /// From `(predicted, gold)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for pair in pairs {
            match pair {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        Self::from_counts(tp, fp, fn_, tn)
    }
}

pub fn evaluate(model: &LinearModel, test: &BinaryDataset, featurizer: &Featurizer) -> Result<PrfMetrics> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate on an empty test set".into()));
    }
    let mut pairs = Vec::with_capacity(test.len());
    for (seg, gold) in &test.examples {
        pairs.push((predict(model, &featurizer.features(&seg.text))?.positive, *gold));
    }
    Ok(PrfMetrics::from_pairs(pairs))
}

/// Anything that can attach category labels to a policy segment.
pub trait SegmentLabeler {
    fn label(&self, segment: &Segment) -> Result<BTreeSet<CategoryLabel>>;
}

/// One binary model per category sharing a featurizer.
#[derive(Debug, Clone)]
pub struct MultiLabelClassifier {
    featurizer: Featurizer,
    models: Vec<LinearModel>,
}

impl MultiLabelClassifier {
    pub fn new(featurizer: Featurizer, models: Vec<LinearModel>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let hash = featurizer.vectorizer.fingerprint();
        for m in &models {
            if !seen.insert(m.category) {
                return Err(Error::Config(format!("duplicate model for category {}", m.category)));
            }
            if m.weights.len() != featurizer.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: featurizer.dimension(),
                    actual: m.weights.len(),
                });
            }
            if m.vectorizer_hash != hash {
                return Err(Error::Config(format!(
                    "model for {} was trained with a different vectorizer",
                    m.category
                )));
            }
        }
        if models.is_empty() {
            return Err(Error::Config("classifier has no models".into()));
        }
        Ok(MultiLabelClassifier { featurizer, models })
    }

    pub fn models(&self) -> &[LinearModel] {
        &self.models
    }

    pub fn featurizer(&self) -> &Featurizer {
        &self.featurizer
    }

    /// Per-category predictions for a piece of text.
    pub fn scores(&self, text: &str) -> Result<Vec<(CategoryLabel, Prediction)>> {
        let x = self.featurizer.features(text);
        self.models
            .iter()
            .map(|m| Ok((m.category, predict(m, &x)?)))
            .collect()
    }

    /// Union of positive predictions; when none fire, the category whose score
    /// sits highest above its own threshold.
    pub fn classify_segment(&self, segment: &Segment) -> Result<BTreeSet<CategoryLabel>> {
        let scores = self.scores(&segment.text)?;
        let thresholds: BTreeMap<CategoryLabel, f64> = self
            .models
            .iter()
            .map(|m| (m.category, m.decision_threshold))
            .collect();
        Ok(pick_labels(&scores, &thresholds))
    }

    /// Loads `vectorizer.json` and every `<kind>_<Category>.json` of one kind from `dir`.
    pub fn load_dir(dir: &Path, kind: ModelKind, stopwords: Stopwords, normalize: bool) -> Result<Self> {
        let vectorizer = Vectorizer::load(&dir.join(VECTORIZER_FILE))?;
        let featurizer = Featurizer {
            vectorizer,
            stopwords,
            normalize,
        };
        let mut models = Vec::new();
        for c in CategoryLabel::ALL {
            let path = model_path(dir, kind, c);
            if path.exists() {
                models.push(load_model(&path)?);
            }
        }
        Self::new(featurizer, models)
    }
}

fn pick_labels(
    scores: &[(CategoryLabel, Prediction)],
    thresholds: &BTreeMap<CategoryLabel, f64>,
) -> BTreeSet<CategoryLabel> {
    let positive: BTreeSet<CategoryLabel> = scores
        .iter()
        .filter(|(_, p)| p.positive)
        .map(|(c, _)| *c)
        .collect();
    if !positive.is_empty() {
        return positive;
    }
    scores
        .iter()
        .max_by(|a, b| {
            let da = a.1.score - thresholds[&a.0];
            let db = b.1.score - thresholds[&b.0];
            da.total_cmp(&db)
        })
        .map(|(c, _)| BTreeSet::from([*c]))
        .unwrap_or_default()
}

impl SegmentLabeler for MultiLabelClassifier {
    fn label(&self, segment: &Segment) -> Result<BTreeSet<CategoryLabel>> {
        self.classify_segment(segment)
    }
}

/// Externally produced labels keyed by `(doc_id, segment_index)`.
///
/// File layout: `doc_id <TAB> segment_index <TAB> Cat1,Cat2,...`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SideLoadedLabels {
    labels: BTreeMap<(String, usize), BTreeSet<CategoryLabel>>,
}

impl SideLoadedLabels {
    pub fn parse(path: &Path, content: &str) -> Result<Self> {
        let mut labels = BTreeMap::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(path, i + 1, "expected doc_id, segment_index, categories"));
            }
            let idx: usize = f[1]
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad segment index `{}`", f[1])))?;
            let cats = f[2]
                .split(',')
                .filter(|c| !c.trim().is_empty())
                .map(str::parse)
                .collect::<Result<BTreeSet<CategoryLabel>>>()?;
            labels.insert((f[0].trim().to_string(), idx), cats);
        }
        Ok(SideLoadedLabels { labels })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(path, &read_to_string(path)?)
    }

    pub fn insert(&mut self, doc_id: &str, index: usize, labels: BTreeSet<CategoryLabel>) {
        self.labels.insert((doc_id.to_string(), index), labels);
    }
}

impl SegmentLabeler for SideLoadedLabels {
    fn label(&self, segment: &Segment) -> Result<BTreeSet<CategoryLabel>> {
        Ok(self
            .labels
            .get(&(segment.doc_id.clone(), segment.index))
            .cloned()
            .unwrap_or_default())
    }
}

const MODEL_FORMAT: u32 = 1;
pub const VECTORIZER_FILE: &str = "vectorizer.json";
/// Token pipeline settings written next to the vectorizer.
pub const FEATURIZER_FILE: &str = "featurizer.json";

/// Reads the `normalize` flag saved by [`TrainingRun::save`].
pub fn load_normalize_flag(dir: &Path) -> Result<bool> {
    let path = dir.join(FEATURIZER_FILE);
    let v: serde_json::Value = serde_json::from_str(&read_to_string(&path)?).map_err(|e| Error::json(&path, e))?;
    v.get("normalize")
        .and_then(serde_json::Value::as_bool)
        .ok_or_else(|| Error::parse(&path, 1, "missing boolean `normalize`"))
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    kind: ModelKind,
    category: CategoryLabel,
    dimension: usize,
    /// Little-endian f64 values, base64.
    weights: String,
    bias: f64,
    threshold: f64,
    vectorizer_hash: String,
}

pub fn model_path(dir: &Path, kind: ModelKind, category: CategoryLabel) -> PathBuf {
    dir.join(format!("{}_{}.json", kind.short_name(), category.as_str()))
}

pub fn model_to_json(model: &LinearModel) -> String {
    let bytes: Vec<u8> = model.weights.iter().flat_map(|w| w.to_le_bytes()).collect();
    serde_json::to_string_pretty(&ModelFile {
        format_version: MODEL_FORMAT,
        kind: model.kind,
        category: model.category,
        dimension: model.weights.len(),
        weights: B64.encode(bytes),
        bias: model.bias,
        threshold: model.decision_threshold,
        vectorizer_hash: model.vectorizer_hash.clone(),
    })
    .expect("model serializes")
}

pub fn save_model(path: &Path, model: &LinearModel) -> Result<()> {
    std::fs::write(path, model_to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<LinearModel> {
    let f: ModelFile = serde_json::from_str(&read_to_string(path)?).map_err(|e| Error::json(path, e))?;
    if f.format_version != MODEL_FORMAT {
        return Err(Error::FormatVersion {
            found: f.format_version,
            expected: MODEL_FORMAT,
        });
    }
    let bytes = B64
        .decode(f.weights.as_bytes())
        .map_err(|e| Error::Config(format!("{}: bad weights encoding: {e}", path.display())))?;
    if bytes.len() != f.dimension * 8 {
        return Err(Error::Config(format!(
            "{}: weights hold {} bytes, expected {}",
            path.display(),
            bytes.len(),
            f.dimension * 8
        )));
    }
    let weights: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if weights.iter().any(|w| !w.is_finite()) || !f.bias.is_finite() {
        return Err(Error::Config(format!("{}: non-finite parameters", path.display())));
    }
    Ok(LinearModel {
        kind: f.kind,
        category: f.category,
        weights,
        bias: f.bias,
        decision_threshold: f.threshold,
        vectorizer_hash: f.vectorizer_hash,
    })
}

#[derive(Debug, Clone)]
pub struct TrainingOptions {
    pub vectorizer: VectorizerConfig,
    pub logreg: LogRegParams,
    pub svm: SvmParams,
    pub test_fraction: f64,
    pub split_seed: u64,
    pub normalize: bool,
    pub include_do_not_track: bool,
    pub categories: Vec<CategoryLabel>,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        TrainingOptions {
            vectorizer: VectorizerConfig::default(),
            logreg: LogRegParams::default(),
            svm: SvmParams::default(),
            test_fraction: corpus::DEFAULT_TEST_FRACTION,
            split_seed: 7,
            normalize: true,
            include_do_not_track: false,
            categories: CategoryLabel::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CategoryResult {
    pub category: CategoryLabel,
    pub logreg: LinearModel,
    pub svm: LinearModel,
    pub logreg_metrics: PrfMetrics,
    pub svm_metrics: PrfMetrics,
    pub train_size: usize,
    pub test_size: usize,
}

#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub featurizer: Featurizer,
    pub results: Vec<CategoryResult>,
}

impl TrainingRun {
    pub fn classifier(&self, kind: ModelKind) -> Result<MultiLabelClassifier> {
        let models = self
            .results
            .iter()
            .map(|r| match kind {
                ModelKind::LogisticRegression => r.logreg.clone(),
                ModelKind::LinearSvm => r.svm.clone(),
            })
            .collect();
        MultiLabelClassifier::new(self.featurizer.clone(), models)
    }

    pub fn result(&self, category: CategoryLabel) -> Option<&CategoryResult> {
        self.results.iter().find(|r| r.category == category)
    }

    /// Tab-separated metrics, one row per (category, model).
    pub fn metrics_tsv(&self) -> String {
        let mut out = String::from("category\tmodel\tprecision\trecall\tf1\ttp\tfp\tfn\ttn\ttrain\ttest\n");
        for r in &self.results {
            for (kind, m) in [
                (ModelKind::LogisticRegression, &r.logreg_metrics),
                (ModelKind::LinearSvm, &r.svm_metrics),
            ] {
                out.push_str(&format!(
                    "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                    r.category, kind, m.precision, m.recall, m.f1, m.tp, m.fp, m.fn_, m.tn, r.train_size, r.test_size
                ));
            }
        }
        out
    }

    /// Writes the vectorizer, one file per model and `metrics.tsv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.featurizer.vectorizer.save(&dir.join(VECTORIZER_FILE))?;
        for r in &self.results {
            save_model(&model_path(dir, r.logreg.kind, r.category), &r.logreg)?;
            save_model(&model_path(dir, r.svm.kind, r.category), &r.svm)?;
        }
        let settings = dir.join(FEATURIZER_FILE);
        let json = serde_json::json!({ "format_version": 1, "normalize": self.featurizer.normalize });
        std::fs::write(&settings, format!("{json}\n")).map_err(|e| Error::io(&settings, e))?;
        let metrics = dir.join("metrics.tsv");
        std::fs::write(&metrics, self.metrics_tsv()).map_err(|e| Error::io(&metrics, e))
    }
}

/// Splits, trains LR and SVM, and evaluates on the held-out side for each category.
///
/// The vectorizer is fitted on every training-corpus segment (no labels are
/// used). `DoNotTrack`-only segments and the `DoNotTrack` model are skipped
/// unless `include_do_not_track` is set.
pub fn train_all(corpus: &[LabeledSegment], opts: &TrainingOptions) -> Result<TrainingRun> {
    let corpus = if opts.include_do_not_track {
        corpus.to_vec()
    } else {
        corpus::without_do_not_track_only(corpus)
    };
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("training corpus is empty".into()));
    }
    let texts: Vec<&str> = corpus.iter().map(|s| s.segment.text.as_str()).collect();
    let featurizer = Featurizer::fit(&texts, opts.vectorizer, Stopwords::bundled(), opts.normalize)?;

    let mut results = Vec::new();
    for ds in corpus::to_binary_datasets(&corpus) {
        if !opts.categories.contains(&ds.category) {
            continue;
        }
        if ds.category == CategoryLabel::DoNotTrack && !opts.include_do_not_track {
            continue;
        }
        let (train, test) = corpus::split(&ds, opts.test_fraction, opts.split_seed)?;
        let logreg = train_logreg(&train, &featurizer, &opts.logreg)?;
        let svm = train_svm(&train, &featurizer, &opts.svm)?;
        results.push(CategoryResult {
            category: ds.category,
            logreg_metrics: evaluate(&logreg, &test, &featurizer)?,
            svm_metrics: evaluate(&svm, &test, &featurizer)?,
            logreg,
            svm,
            train_size: train.len(),
            test_size: test.len(),
        });
    }
    Ok(TrainingRun { featurizer, results })
}

#[cfg(test)]
mod tests {
    use super::*;
    use CategoryLabel::*;

    fn sv(dim: usize, entries: &[(usize, f64)]) -> SparseVector {
        SparseVector::from_entries(dim, entries.iter().copied()).unwrap()
    }

    /// Positives at x > 0, negatives at x < 0, second coordinate noise.
    fn separable() -> Vec<(SparseVector, bool)> {
        let mut out = Vec::new();
        for i in 0..20 {
            let x = 0.5 + (i % 5) as f64 * 0.2;
            let y = -1.0 + (i % 7) as f64 * 0.3;
            out.push((sv(2, &[(0, x), (1, y)]), true));
            out.push((sv(2, &[(0, -x), (1, y)]), false));
        }
        out
    }

    fn model(kind: ModelKind, weights: Vec<f64>, bias: f64) -> LinearModel {
        LinearModel {
            kind,
            category: DataSecurity,
            weights,
            bias,
            decision_threshold: kind.default_threshold(),
            vectorizer_hash: String::new(),
        }
    }

    #[test]
    fn logreg_separates_toy_set() {
        let data = separable();
        let (w, b) = fit_logreg(DataSecurity, 2, &data, &LogRegParams::default()).unwrap();
        let m = model(ModelKind::LogisticRegression, w, b);
        for (x, y) in &data {
            assert_eq!(predict(&m, x).unwrap().positive, *y);
        }
    }

    #[test]
    fn single_class_training_is_rejected() {
        let data: Vec<_> = separable().into_iter().filter(|(_, y)| *y).collect();
        assert!(matches!(
            fit_logreg(DataSecurity, 2, &data, &LogRegParams::default()),
            Err(Error::SingleClass(_))
        ));
        assert!(matches!(
            fit_svm(DataSecurity, 2, &data, &SvmParams::default()),
            Err(Error::SingleClass(_))
        ));
    }

    #[test]
    fn logistic_gradient_matches_central_differences() {
        let data = vec![
            (sv(3, &[(0, 0.5), (2, -1.0)]), true),
            (sv(3, &[(1, 1.5)]), false),
            (sv(3, &[(0, -0.3), (1, 0.2), (2, 0.9)]), true),
            (sv(3, &[(2, 2.0)]), false),
            (sv(3, &[(0, 1.0), (1, -1.0)]), true),
        ];
        let w = vec![0.3, -0.7, 0.25];
        let b = 0.1;
        let l2 = 0.05;
        let (_, grad, grad_b) = logistic_objective(&w, b, &data, l2);
        let h = 1e-6;
        for i in 0..3 {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[i] += h;
            wm[i] -= h;
            let fd = (logistic_objective(&wp, b, &data, l2).0 - logistic_objective(&wm, b, &data, l2).0) / (2.0 * h);
            assert!((fd - grad[i]).abs() <= 1e-4 * fd.abs().max(1e-8), "coord {i}: {fd} vs {}", grad[i]);
        }
        let fd_b = (logistic_objective(&w, b + h, &data, l2).0 - logistic_objective(&w, b - h, &data, l2).0) / (2.0 * h);
        assert!((fd_b - grad_b).abs() <= 1e-4 * fd_b.abs());
    }

    #[test]
    fn svm_reaches_zero_hinge_on_separable_data() {
        let data = separable();
        let (w, b) = fit_svm(DataSecurity, 2, &data, &SvmParams::default()).unwrap();
        let hinge = hinge_objective(&w, b, &data, 0.0);
        assert_eq!(hinge, 0.0, "w={w:?} b={b}");
    }

    #[test]
    fn svm_margin_flips_with_labels() {
        let data = separable();
        let flipped: Vec<_> = data.iter().map(|(x, y)| (x.clone(), !y)).collect();
        let (w, b) = fit_svm(DataSecurity, 2, &data, &SvmParams::default()).unwrap();
        let (wf, bf) = fit_svm(DataSecurity, 2, &flipped, &SvmParams::default()).unwrap();
        let m = model(ModelKind::LinearSvm, w, b);
        let mf = model(ModelKind::LinearSvm, wf, bf);
        for (x, _) in &data {
            let a = predict(&m, x).unwrap().score;
            let c = predict(&mf, x).unwrap().score;
            assert!(a * c < 0.0);
        }
    }

    #[test]
    fn svm_objective_beats_zero_vector() {
        // Overlapping 10-example fixture.
        let data: Vec<_> = (0..10)
            .map(|i| {
                let x = (i as f64 - 4.5) / 3.0;
                (sv(2, &[(0, x), (1, ((i * 7) % 5) as f64 / 5.0)]), i % 3 != 0 && i > 2)
            })
            .collect();
        // Pegasos needs on the order of 1/lambda steps; 500 steps suit lambda = 1e-2.
        let p = SvmParams {
            lambda: 1e-2,
            ..SvmParams::default()
        };
        let (w, b) = fit_svm(DataSecurity, 2, &data, &p).unwrap();
        let trained = hinge_objective(&w, b, &data, p.lambda);
        let zero = hinge_objective(&[0.0, 0.0], 0.0, &data, p.lambda);
        assert_eq!(zero, 1.0);
        assert!(trained <= zero, "{trained} > {zero}");
    }

    #[test]
    fn predict_definitions() {
        let lr = model(ModelKind::LogisticRegression, vec![1.0, -2.0], 0.3);
        let zero = sv(2, &[]);
        assert!((predict(&lr, &zero).unwrap().score - sigmoid(0.3)).abs() < 1e-15);

        let svm = model(ModelKind::LinearSvm, vec![1.0, -2.0], 0.0);
        let x = sv(2, &[(0, 0.4), (1, 0.5)]);
        let a = predict(&svm, &x).unwrap();
        let b = predict(&svm, &x.scaled(2.0)).unwrap();
        assert_eq!(a.positive, b.positive);
        assert!((b.score - 2.0 * a.score).abs() < 1e-12);

        // 1*0.4 - 2*0.5 + 0.25 = -0.35
        let svm_b = model(ModelKind::LinearSvm, vec![1.0, -2.0], 0.25);
        let p = predict(&svm_b, &x).unwrap();
        assert!((p.score + 0.35).abs() < 1e-12);
        assert!(!p.positive);

        assert!(matches!(predict(&svm, &sv(3, &[])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn metrics_formula() {
        let m = PrfMetrics::from_counts(2, 1, 2, 5);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall - 0.5).abs() < 1e-12);
        assert!((m.f1 - 4.0 / 7.0).abs() < 1e-12);
        assert_eq!(PrfMetrics::from_counts(3, 0, 0, 4).f1, 1.0);
        assert_eq!(PrfMetrics::from_counts(0, 0, 3, 4).f1, 0.0);
    }

    #[test]
    fn constant_positive_f1_floor() {
        let gold = [true, false, false, true, false, false, false, true, false, false];
        let p = 3.0 / 10.0;
        let m = PrfMetrics::from_pairs(gold.iter().map(|&g| (true, g)));
        assert!((m.f1 - 2.0 * p / (p + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn fallback_picks_highest_relative_score() {
        let scores = vec![
            (DataRetention, Prediction { score: 0.2, positive: false }),
            (DataSecurity, Prediction { score: 0.45, positive: false }),
            (Other, Prediction { score: 0.1, positive: false }),
        ];
        let th: BTreeMap<_, _> = scores.iter().map(|(c, _)| (*c, 0.5)).collect();
        assert_eq!(pick_labels(&scores, &th), BTreeSet::from([DataSecurity]));

        let mut scores = scores;
        scores[0].1 = Prediction { score: 0.9, positive: true };
        assert_eq!(pick_labels(&scores, &th), BTreeSet::from([DataRetention]));
    }

    #[test]
    fn model_file_round_trip() {
        let m = LinearModel {
            kind: ModelKind::LinearSvm,
            category: UserChoiceControl,
            weights: vec![0.1, -3.5, 1e-300, 42.0],
            bias: -0.25,
            decision_threshold: 0.0,
            vectorizer_hash: "abc".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        save_model(&p, &m).unwrap();
        assert_eq!(load_model(&p).unwrap(), m);
    }

    #[test]
    fn side_loaded_labels() {
        let s = SideLoadedLabels::parse(
            Path::new("p.tsv"),
            "nestle\t3\tDataRetention,DataSecurity\nnestle\t4\t\n",
        )
        .unwrap();
        let seg = |i| Segment {
            doc_id: "nestle".into(),
            index: i,
            text: "x".into(),
            char_span: (0, 1),
        };
        assert_eq!(s.label(&seg(3)).unwrap(), BTreeSet::from([DataRetention, DataSecurity]));
        assert!(s.label(&seg(4)).unwrap().is_empty());
        assert!(s.label(&seg(9)).unwrap().is_empty());
        assert!(SideLoadedLabels::parse(Path::new("p.tsv"), "a\tb\tOther\n").is_err());
    }
}
