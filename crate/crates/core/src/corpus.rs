//! OPP-115 corpus ingestion.
//!
//! Annotations are read from a tab-separated layout with one row per
//! (annotator, segment, category) assignment:
//!
//! ```text
//! doc_id <TAB> annotator_id <TAB> segment_index <TAB> category <TAB> segment_text
//! ```
//!
//! Newlines inside `segment_text` are written as the two characters `\n`.
//! [`import_opp115_release`] converts the upstream release (annotation CSVs
//! plus sanitized policy HTML) into this layout.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};

/// The ten broad OPP-115 data-practice categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CategoryLabel {
    FirstPartyCollectionUse,
    ThirdPartySharingCollection,
    UserChoiceControl,
    UserAccessEditDeletion,
    DataRetention,
    DataSecurity,
    PolicyChange,
    InternationalSpecificAudiences,
    DoNotTrack,
    Other,
}

impl CategoryLabel {
    pub const ALL: [CategoryLabel; 10] = [
        CategoryLabel::FirstPartyCollectionUse,
        CategoryLabel::ThirdPartySharingCollection,
        CategoryLabel::UserChoiceControl,
        CategoryLabel::UserAccessEditDeletion,
        CategoryLabel::DataRetention,
        CategoryLabel::DataSecurity,
        CategoryLabel::PolicyChange,
        CategoryLabel::InternationalSpecificAudiences,
        CategoryLabel::DoNotTrack,
        CategoryLabel::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CategoryLabel::FirstPartyCollectionUse => "FirstPartyCollectionUse",
            CategoryLabel::ThirdPartySharingCollection => "ThirdPartySharingCollection",
            CategoryLabel::UserChoiceControl => "UserChoiceControl",
            CategoryLabel::UserAccessEditDeletion => "UserAccessEditDeletion",
            CategoryLabel::DataRetention => "DataRetention",
            CategoryLabel::DataSecurity => "DataSecurity",
            CategoryLabel::PolicyChange => "PolicyChange",
            CategoryLabel::InternationalSpecificAudiences => "InternationalSpecificAudiences",
            CategoryLabel::DoNotTrack => "DoNotTrack",
            CategoryLabel::Other => "Other",
        }
    }

    /// Category name as spelled in the upstream OPP-115 release.
    pub fn opp115_name(self) -> &'static str {
        match self {
            CategoryLabel::FirstPartyCollectionUse => "First Party Collection/Use",
            CategoryLabel::ThirdPartySharingCollection => "Third Party Sharing/Collection",
            CategoryLabel::UserChoiceControl => "User Choice/Control",
            CategoryLabel::UserAccessEditDeletion => "User Access, Edit and Deletion",
            CategoryLabel::DataRetention => "Data Retention",
            CategoryLabel::DataSecurity => "Data Security",
            CategoryLabel::PolicyChange => "Policy Change",
            CategoryLabel::InternationalSpecificAudiences => "International and Specific Audiences",
            CategoryLabel::DoNotTrack => "Do Not Track",
            CategoryLabel::Other => "Other",
        }
    }
}

impl fmt::Display for CategoryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CategoryLabel {
    type Err = Error;

    /// Accepts both the identifier spelling and the upstream display name.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        CategoryLabel::ALL
            .into_iter()
            .find(|c| c.as_str() == s || c.opp115_name() == s)
            .ok_or_else(|| Error::UnknownCategory(s.to_string()))
    }
}

/// A paragraph of policy or law text with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    /// Byte offsets `(start, end)` into the source document.
    pub char_span: (usize, usize),
}

impl Segment {
    /// Key used to look up externally computed vectors and side-loaded labels.
    pub fn key(&self) -> String {
        format!("{}#{}", self.doc_id, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSegment {
    pub segment: Segment,
    pub labels: BTreeSet<CategoryLabel>,
}

/// One annotator's assignment of one category to one segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub annotator_id: String,
    pub segment_index: usize,
    pub category: CategoryLabel,
    pub text: String,
}

/// All raw annotation rows for one policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyRecords {
    pub doc_id: String,
    pub records: Vec<AnnotationRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDataset {
    pub category: CategoryLabel,
    pub examples: Vec<(Segment, bool)>,
}

impl BinaryDataset {
    pub fn positives(&self) -> usize {
        self.examples.iter().filter(|(_, y)| *y).count()
    }

    pub fn negatives(&self) -> usize {
        self.examples.len() - self.positives()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

pub const DEFAULT_QUORUM: usize = 2;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

fn decode_text(field: &str) -> String {
    field.replace("\\n", "\n")
}

fn encode_text(text: &str) -> String {
    text.replace('\r', "").replace('\n', "\\n").replace('\t', " ")
}

/// Parses one annotation file in the internal layout.
pub fn parse_annotation_file(path: &Path, content: &str) -> Result<Vec<(String, AnnotationRecord)>> {
    let mut out = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(5, '\t').collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 5 tab-separated fields, found {}", fields.len()),
            ));
        }
        let segment_index = fields[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::parse(path, lineno, format!("bad segment index `{}`", fields[2])))?;
        let category = fields[3].parse::<CategoryLabel>()?;
        let text = decode_text(fields[4]);
        if text.trim().is_empty() {
            return Err(Error::parse(path, lineno, "empty segment text"));
        }
        out.push((
            fields[0].trim().to_string(),
            AnnotationRecord {
                annotator_id: fields[1].trim().to_string(),
                segment_index,
                category,
                text,
            },
        ));
    }
    Ok(out)
}

/// Writes records in the internal layout, one row per record.
pub fn write_annotation_file(path: &Path, policies: &[PolicyRecords]) -> Result<()> {
    let mut out = String::new();
    for p in policies {
        for r in &p.records {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                p.doc_id,
                r.annotator_id,
                r.segment_index,
                r.category.as_str(),
                encode_text(&r.text)
            ));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads every `*.tsv` annotation file under `root`, grouped by policy.
///
/// Groups are returned sorted by `doc_id`; records keep file order.
pub fn load_opp115(root: &Path) -> Result<Vec<PolicyRecords>> {
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::NoAnnotationFiles(root.to_path_buf()));
    }

    let mut groups: BTreeMap<String, Vec<AnnotationRecord>> = BTreeMap::new();
    for file in &files {
        let content = read_to_string(file)?;
        for (doc_id, rec) in parse_annotation_file(file, &content)? {
            groups.entry(doc_id).or_default().push(rec);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(doc_id, records)| PolicyRecords { doc_id, records })
        .collect())
}

/// Converts an upstream OPP-115 release directory into internal records.
///
/// Expects `annotations/*.csv` (no header; annotator id in column 2, segment
/// id in column 4, category name in column 5) next to `sanitized_policies/*.html`
/// whose segments are separated by `|||`. The policy id is the file stem.
pub fn import_opp115_release(root: &Path) -> Result<Vec<PolicyRecords>> {
    let ann_dir = root.join("annotations");
    let pol_dir = root.join("sanitized_policies");
    let entries = std::fs::read_dir(&ann_dir).map_err(|e| Error::io(&ann_dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::NoAnnotationFiles(ann_dir));
    }

    let mut out = Vec::with_capacity(files.len());
    for file in files {
        let stem = file
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let html_path = pol_dir.join(format!("{stem}.html"));
        let html = read_to_string(&html_path)?;
        let segments: Vec<String> = html.split("|||").map(strip_html).collect();

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(&file)
            .map_err(|e| Error::parse(&file, 0, e.to_string()))?;
        let mut records = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::parse(&file, i + 1, e.to_string()))?;
            if row.len() < 6 {
                return Err(Error::parse(&file, i + 1, "expected at least 6 columns"));
            }
            let segment_index: usize = row[4]
                .trim()
                .parse()
                .map_err(|_| Error::parse(&file, i + 1, format!("bad segment id `{}`", &row[4])))?;
            let category = row[5].parse::<CategoryLabel>()?;
            let text = segments
                .get(segment_index)
                .ok_or_else(|| {
                    Error::parse(&file, i + 1, format!("segment {segment_index} not in {}", html_path.display()))
                })?
                .clone();
            if text.trim().is_empty() {
                continue;
            }
            records.push(AnnotationRecord {
                annotator_id: row[2].trim().to_string(),
                segment_index,
                category,
                text,
            });
        }
        out.push(PolicyRecords { doc_id: stem, records });
    }
    out.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(out)
}

fn strip_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => {
                in_tag = true;
                out.push(' ');
            }
            '>' if in_tag => in_tag = false,
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    let out = out
        .replace("&nbsp;", " ")
        .replace("&amp;", "&")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&lt;", "<")
        .replace("&gt;", ">");
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Keeps a label on a segment iff at least `quorum` distinct annotators gave it.
///
/// Segments left without labels are dropped. Output is ordered by
/// `(doc_id, segment_index)`. Spans are assigned as if the segments of one
/// policy were joined with blank lines.
pub fn consolidate(policies: &[PolicyRecords], quorum: usize) -> Vec<LabeledSegment> {
    let quorum = quorum.max(1);
    let mut out = Vec::new();
    let mut sorted: Vec<&PolicyRecords> = policies.iter().collect();
    sorted.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));

    for policy in sorted {
        // segment index -> (text, category -> annotators)
        let mut by_segment: BTreeMap<usize, (&str, BTreeMap<CategoryLabel, BTreeSet<&str>>)> =
            BTreeMap::new();
        for r in &policy.records {
            let entry = by_segment
                .entry(r.segment_index)
                .or_insert_with(|| (r.text.as_str(), BTreeMap::new()));
            entry
                .1
                .entry(r.category)
                .or_default()
                .insert(r.annotator_id.as_str());
        }

        let mut offset = 0usize;
        for (index, (text, votes)) in by_segment {
            let start = offset;
            let end = start + text.len();
            offset = end + 2;
            let labels: BTreeSet<CategoryLabel> = votes
                .into_iter()
                .filter(|(_, who)| who.len() >= quorum)
                .map(|(c, _)| c)
                .collect();
            if labels.is_empty() || text.trim().is_empty() {
                continue;
            }
            out.push(LabeledSegment {
                segment: Segment {
                    doc_id: policy.doc_id.clone(),
                    index,
                    text: text.to_string(),
                    char_span: (start, end),
                },
                labels,
            });
        }
    }
    out
}

/// Re-expresses consolidated segments as single-annotator records.
pub fn records_from_labeled(corpus: &[LabeledSegment]) -> Vec<PolicyRecords> {
    let mut groups: BTreeMap<&str, Vec<AnnotationRecord>> = BTreeMap::new();
    for ls in corpus {
        let records = groups.entry(ls.segment.doc_id.as_str()).or_default();
        for &category in &ls.labels {
            records.push(AnnotationRecord {
                annotator_id: "consolidated".to_string(),
                segment_index: ls.segment.index,
                category,
                text: ls.segment.text.clone(),
            });
        }
    }
    groups
        .into_iter()
        .map(|(doc_id, records)| PolicyRecords {
            doc_id: doc_id.to_string(),
            records,
        })
        .collect()
}

/// Drops segments whose only label is `DoNotTrack`.
pub fn without_do_not_track_only(corpus: &[LabeledSegment]) -> Vec<LabeledSegment> {
    corpus
        .iter()
        .filter(|ls| !(ls.labels.len() == 1 && ls.labels.contains(&CategoryLabel::DoNotTrack)))
        .cloned()
        .collect()
}

/// One positive/negative dataset per category, in [`CategoryLabel::ALL`] order.
pub fn to_binary_datasets(corpus: &[LabeledSegment]) -> Vec<BinaryDataset> {
    CategoryLabel::ALL
        .into_iter()
        .map(|category| BinaryDataset {
            category,
            examples: corpus
                .iter()
                .map(|ls| (ls.segment.clone(), ls.labels.contains(&category)))
                .collect(),
        })
        .collect()
}

/// Seeded stratified train/test split.
///
/// The test side gets `round(n * test_fraction)` examples (at least 2, at most
/// `n - 2`), with positives allocated in proportion and each side holding at
/// least one example of each class. Both sides keep the input order.
pub fn split(
    dataset: &BinaryDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(BinaryDataset, BinaryDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = dataset.len();
    let pos: Vec<usize> = (0..n).filter(|&i| dataset.examples[i].1).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| !dataset.examples[i].1).collect();
    if pos.len() < 2 || neg.len() < 2 {
        return Err(Error::TooSmallToStratify {
            category: dataset.category.to_string(),
            positives: pos.len(),
            negatives: neg.len(),
        });
    }

    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(2, n - 2);
    let ideal_pos = (n_test as f64 * pos.len() as f64 / n as f64).round() as usize;
    let lo = 1.max(n_test.saturating_sub(neg.len() - 1));
    let hi = (pos.len() - 1).min(n_test - 1);
    let n_test_pos = ideal_pos.clamp(lo, hi);
    let n_test_neg = n_test - n_test_pos;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = pos;
    let mut neg = neg;
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut in_test = vec![false; n];
    for &i in pos.iter().take(n_test_pos).chain(neg.iter().take(n_test_neg)) {
        in_test[i] = true;
    }

    let mut train = Vec::with_capacity(n - n_test);
    let mut test = Vec::with_capacity(n_test);
    for (i, ex) in dataset.examples.iter().enumerate() {
        if in_test[i] {
            test.push(ex.clone());
        } else {
            train.push(ex.clone());
        }
    }
    Ok((
        BinaryDataset {
            category: dataset.category,
            examples: train,
        },
        BinaryDataset {
            category: dataset.category,
            examples: test,
        },
    ))
}
