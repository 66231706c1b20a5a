//! Turning segment similarities into per-requirement compliance scores.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::SegmentLabeler;
use crate::corpus::CategoryLabel;
use crate::error::{read_to_string, Error, Result};
use crate::lawmodel::{Law, RequirementCategory, RequirementSet};
use crate::mapping::MappingTable;
use crate::preprocess::segment_text;
use crate::similarity::{similarity, EmbeddingProvider, Measure, SentenceVector};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    HigherIsCompliant,
    LowerIsCompliant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub law: Law,
    pub measure: Measure,
    pub min_score: f64,
    pub max_score: f64,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub experimental: bool,
}

impl Calibration {
    pub fn new(law: Law, measure: Measure, min_score: f64, max_score: f64, direction: Direction) -> Result<Self> {
        let c = Calibration {
            law,
            measure,
            min_score,
            max_score,
            direction,
            experimental: false,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.min_score.is_finite() || !self.max_score.is_finite() {
            return Err(Error::Config("calibration bounds must be finite".into()));
        }
        if self.min_score == self.max_score {
            return Err(Error::Config(format!(
                "calibration min_score and max_score are both {}",
                self.min_score
            )));
        }
        Ok(())
    }

    /// Shipped calibrations. The PDPA one is flagged experimental.
    pub fn default_for(law: Law) -> Self {
        match law {
            Law::Gdpr => Calibration::new(law, Measure::Cosine, 0.25, 0.6, Direction::HigherIsCompliant),
            Law::Pdpa => Calibration::new(law, Measure::Cosine, 0.09, 0.50, Direction::LowerIsCompliant).map(|c| {
                Calibration {
                    experimental: true,
                    ..c
                }
            }),
        }
        .expect("shipped calibration is valid")
    }

    pub fn normalize(&self, score: f64) -> f64 {
        normalize_score(score, self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration serializes") + "\n"
    }
}

pub fn parse_calibration(json: &str, origin: &Path) -> Result<Calibration> {
    let c: Calibration = serde_json::from_str(json).map_err(|e| Error::json(origin, e))?;
    c.validate()?;
    Ok(c)
}

pub fn load_calibration(path: &Path) -> Result<Calibration> {
    parse_calibration(&read_to_string(path)?, path)
}

/// Clamped linear map of a raw score onto `[0, 1]`.
pub fn normalize_score(score: f64, calib: &Calibration) -> f64 {
    let span = calib.max_score - calib.min_score;
    let x = match calib.direction {
        Direction::HigherIsCompliant => (score - calib.min_score) / span,
        Direction::LowerIsCompliant => (calib.max_score - score) / span,
    };
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Whether `a` beats `b` under `measure`: higher cosine, lower distance.
fn better(measure: Measure, a: f64, b: f64) -> bool {
    match measure {
        Measure::Cosine => a > b,
        Measure::Euclidean => a < b,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub policy_segment: String,
    pub law_segment: String,
    pub raw_score: f64,
    pub normalized_score: f64,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub zero_vector: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequirementScore {
    pub compliance: f64,
    /// Best raw score over all pairs; `None` when no policy segment maps here.
    pub raw_score: Option<f64>,
    /// Every scored pair, best first.
    pub evidence: Vec<Evidence>,
}

/// Scores one requirement from already-embedded segments. The raw score is
/// the best pairwise similarity (maximum cosine or minimum distance).
pub fn score_requirement(
    policy: &[(String, SentenceVector)],
    law: &[(String, SentenceVector)],
    measure: Measure,
    calib: &Calibration,
) -> Result<RequirementScore> {
    if law.is_empty() {
        return Err(Error::InvalidArgument("requirement has no law segments".into()));
    }
    let mut evidence = Vec::with_capacity(policy.len() * law.len());
    for (pk, pv) in policy {
        for (lk, lv) in law {
            let s = similarity(pv, lv, measure)?;
            evidence.push(Evidence {
                policy_segment: pk.clone(),
                law_segment: lk.clone(),
                raw_score: s.value,
                normalized_score: normalize_score(s.value, calib),
                zero_vector: s.zero_vector,
            });
        }
    }
    evidence.sort_by(|a, b| {
        let ord = a.raw_score.total_cmp(&b.raw_score);
        let ord = if measure == Measure::Cosine { ord.reverse() } else { ord };
        ord.then_with(|| a.policy_segment.cmp(&b.policy_segment))
            .then_with(|| a.law_segment.cmp(&b.law_segment))
    });
    let raw = evidence
        .iter()
        .map(|e| e.raw_score)
        .reduce(|best, s| if better(measure, s, best) { s } else { best });
    Ok(RequirementScore {
        compliance: raw.map_or(0.0, |r| normalize_score(r, calib)),
        raw_score: raw,
        evidence,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentLabels {
    pub key: String,
    pub labels: BTreeSet<CategoryLabel>,
    pub requirements: BTreeSet<RequirementCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequirementResult {
    pub requirement: RequirementCategory,
    pub title: String,
    pub compliance: f64,
    pub raw_score: Option<f64>,
    pub policy_segments: usize,
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplianceReport {
    pub format_version: u32,
    pub law: Law,
    pub policy: String,
    pub provider: String,
    pub calibration: Calibration,
    pub requirements: Vec<RequirementResult>,
    pub segments: Vec<SegmentLabels>,
    pub warnings: Vec<String>,
}

impl ComplianceReport {
    pub fn requirement(&self, r: RequirementCategory) -> Option<&RequirementResult> {
        self.requirements.iter().find(|x| x.requirement == r)
    }

    pub fn compliance(&self, r: RequirementCategory) -> Option<f64> {
        self.requirement(r).map(|x| x.compliance)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} compliance report for {}", self.law, self.policy);
        let _ = writeln!(
            out,
            "provider {}, measure {}, calibration [{}, {}] {:?}{}",
            self.provider,
            self.calibration.measure,
            self.calibration.min_score,
            self.calibration.max_score,
            self.calibration.direction,
            if self.calibration.experimental { " (experimental)" } else { "" }
        );
        out.push('\n');
        for r in &self.requirements {
            let _ = write!(out, "{:<26} {:>6.1}%  {}", r.requirement.as_str(), r.compliance * 100.0, r.title);
            match r.evidence.first() {
                Some(e) => {
                    let _ = writeln!(
                        out,
                        "\n{:<26} best pair {} / {} (raw {:.4})",
                        "", e.policy_segment, e.law_segment, e.raw_score
                    );
                }
                None => out.push('\n'),
            }
        }
        if !self.warnings.is_empty() {
            out.push_str("\nwarnings:\n");
            for w in &self.warnings {
                let _ = writeln!(out, "  - {w}");
            }
        }
        out
    }
}

/// Segments the policy, labels each segment, maps labels to requirements and
/// scores every requirement of the law.
pub fn build_report(
    policy_id: &str,
    policy_text: &str,
    labeler: &dyn SegmentLabeler,
    requirements: &RequirementSet,
    mapping: &MappingTable,
    provider: &dyn EmbeddingProvider,
    calib: &Calibration,
) -> Result<ComplianceReport> {
    let law = requirements.law;
    if mapping.law != law || calib.law != law {
        return Err(Error::Config(format!(
            "law mismatch: requirements {law}, mapping {}, calibration {}",
            mapping.law, calib.law
        )));
    }
    let mut warnings = Vec::new();
    let segments = segment_text(policy_id, policy_text);
    if segments.is_empty() {
        warnings.push("policy contains no text segments".to_string());
    }

    let mut labelled = Vec::with_capacity(segments.len());
    let mut embedded = Vec::with_capacity(segments.len());
    for seg in &segments {
        let labels = labeler.label(seg)?;
        let reqs = mapping.requirements_for(&labels);
        let key = seg.key();
        if reqs.is_empty() {
            let names: Vec<&str> = labels.iter().map(|l| l.as_str()).collect();
            warnings.push(format!("segment {key} ({}) maps to no {law} requirement", names.join(",")));
        }
        let v = provider.embed(&key, &seg.text)?;
        if v.all_oov {
            warnings.push(format!("segment {key} has no embeddable tokens; its vector is zero"));
        }
        embedded.push((key.clone(), v));
        labelled.push(SegmentLabels {
            key,
            labels,
            requirements: reqs,
        });
    }

    let mut results = Vec::with_capacity(law.requirements().len());
    for &r in law.requirements() {
        let law_vecs = requirements
            .for_requirement(r)
            .map(|s| {
                let v = provider.embed(&s.id, &s.text)?;
                if v.all_oov {
                    warnings.push(format!("law segment {} has no embeddable tokens; its vector is zero", s.id));
                }
                Ok((s.id.clone(), v))
            })
            .collect::<Result<Vec<_>>>()?;
        let policy_vecs: Vec<(String, SentenceVector)> = labelled
            .iter()
            .zip(&embedded)
            .filter(|(l, _)| l.requirements.contains(&r))
            .map(|(_, e)| e.clone())
            .collect();
        let scored = score_requirement(&policy_vecs, &law_vecs, calib.measure, calib)?;
        if policy_vecs.is_empty() {
            warnings.push(format!("requirement {r} unaddressed: no policy segment maps to it"));
        }
        results.push(RequirementResult {
            requirement: r,
            title: r.title().to_string(),
            compliance: scored.compliance,
            raw_score: scored.raw_score,
            policy_segments: policy_vecs.len(),
            evidence: scored.evidence,
        });
    }

    Ok(ComplianceReport {
        format_version: REPORT_FORMAT_VERSION,
        law,
        policy: policy_id.to_string(),
        provider: provider.id().to_string(),
        calibration: calib.clone(),
        requirements: results,
        segments: labelled,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalibrationExample {
    pub law_segment_id: String,
    pub gold: u8,
    pub policy_text: String,
}

/// Tab-separated `law_segment_id, gold, policy_text`; a first row with a
/// non-numeric grade is a header.
pub fn parse_calibration_examples(content: &str, origin: &Path) -> Result<Vec<CalibrationExample>> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.splitn(3, '\t').collect();
        if f.len() != 3 {
            return Err(Error::parse(origin, i + 1, "expected law_segment_id, gold, policy_text"));
        }
        let gold = match f[1].trim().parse::<u8>() {
            Ok(g) if g <= 5 => g,
            Ok(g) => return Err(Error::parse(origin, i + 1, format!("gold grade {g} outside 0..=5"))),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(Error::parse(origin, i + 1, format!("invalid gold grade `{}`", f[1]))),
        };
        out.push(CalibrationExample {
            law_segment_id: f[0].to_string(),
            gold,
            policy_text: f[2].to_string(),
        });
    }
    Ok(out)
}

pub fn load_calibration_examples(path: &Path) -> Result<Vec<CalibrationExample>> {
    parse_calibration_examples(&read_to_string(path)?, path)
}

/// Calibration from graded raw scores: `max_score` is the mean raw score of
/// grade-5 examples, `min_score` the mean over grades 0 and 1.
pub fn calibrate_scores(
    graded: &[(u8, f64)],
    law: Law,
    measure: Measure,
    direction: Direction,
) -> Result<Calibration> {
    let mean = |keep: &dyn Fn(u8) -> bool| {
        let xs: Vec<f64> = graded.iter().filter(|(g, _)| keep(*g)).map(|&(_, s)| s).collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    };
    let max = mean(&|g| g == 5).ok_or_else(|| Error::InvalidArgument("no examples graded 5".into()))?;
    let min = mean(&|g| g <= 1).ok_or_else(|| Error::InvalidArgument("no examples graded 0 or 1".into()))?;
    Calibration::new(law, measure, min, max, direction)
}

/// Scores every example against its law segment with `provider` and
/// derives the calibration from the anchor grades.
pub fn calibrate(
    examples: &[CalibrationExample],
    requirements: &RequirementSet,
    provider: &dyn EmbeddingProvider,
    measure: Measure,
    direction: Direction,
) -> Result<Calibration> {
    let mut graded = Vec::with_capacity(examples.len());
    for (i, ex) in examples.iter().enumerate() {
        let seg = requirements
            .segments
            .iter()
            .find(|s| s.id == ex.law_segment_id)
            .ok_or_else(|| Error::Config(format!("unknown law segment `{}`", ex.law_segment_id)))?;
        let law_v = provider.embed(&seg.id, &seg.text)?;
        let pol_v = provider.embed(&format!("calibration:{i}"), &ex.policy_text)?;
        graded.push((ex.gold, similarity(&pol_v, &law_v, measure)?.value));
    }
    calibrate_scores(&graded, requirements.law, measure, direction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gdpr() -> Calibration {
        Calibration::default_for(Law::Gdpr)
    }

    #[test]
    fn endpoints_and_clamp() {
        let c = gdpr();
        assert_eq!(normalize_score(0.6, &c), 1.0);
        assert_eq!(normalize_score(0.25, &c), 0.0);
        assert!((normalize_score(0.425, &c) - 0.5).abs() < 1e-12);
        assert_eq!(normalize_score(0.9, &c), 1.0);
        assert_eq!(normalize_score(-0.2, &c), 0.0);
    }

    #[test]
    fn lower_is_compliant() {
        let c = Calibration::default_for(Law::Pdpa);
        assert!(c.experimental);
        assert_eq!(normalize_score(0.09, &c), 1.0);
        assert_eq!(normalize_score(0.50, &c), 0.0);
        assert!(normalize_score(0.2, &c) > normalize_score(0.3, &c));
    }

    #[test]
    fn equal_bounds_rejected() {
        assert!(Calibration::new(Law::Gdpr, Measure::Cosine, 0.3, 0.3, Direction::HigherIsCompliant).is_err());
    }

    fn sv(v: &[f64]) -> SentenceVector {
        SentenceVector {
            values: v.to_vec(),
            provider_id: "t".into(),
            all_oov: false,
        }
    }

    #[test]
    fn unaddressed_requirement_scores_zero() {
        let law = vec![("l".to_string(), sv(&[1.0, 0.0]))];
        let s = score_requirement(&[], &law, Measure::Cosine, &gdpr()).unwrap();
        assert_eq!((s.compliance, s.raw_score), (0.0, None));
        assert!(score_requirement(&[], &[], Measure::Cosine, &gdpr()).is_err());
    }

    #[test]
    fn euclidean_takes_smallest_distance() {
        let c = Calibration::new(Law::Gdpr, Measure::Euclidean, 2.0, 0.0, Direction::HigherIsCompliant).unwrap();
        let law = vec![("l".to_string(), sv(&[0.0, 0.0]))];
        let pol = vec![("a".to_string(), sv(&[3.0, 4.0])), ("b".to_string(), sv(&[0.6, 0.8]))];
        let s = score_requirement(&pol, &law, Measure::Euclidean, &c).unwrap();
        assert!((s.raw_score.unwrap() - 1.0).abs() < 1e-12);
        assert!((s.compliance - 0.5).abs() < 1e-12);
        assert_eq!(s.evidence[0].policy_segment, "b");
    }

    #[test]
    fn calibration_anchor_means() {
        let g = [(5, 0.58), (5, 0.62), (0, 0.24), (0, 0.26), (3, 0.9)];
        let c = calibrate_scores(&g, Law::Gdpr, Measure::Cosine, Direction::HigherIsCompliant).unwrap();
        assert!((c.min_score - 0.25).abs() < 1e-12 && (c.max_score - 0.6).abs() < 1e-12);
        assert!(calibrate_scores(&[(3, 0.5)], Law::Gdpr, Measure::Cosine, Direction::HigherIsCompliant).is_err());
    }

    #[test]
    fn calibration_json_round_trip() {
        for law in [Law::Gdpr, Law::Pdpa] {
            let c = Calibration::default_for(law);
            assert_eq!(parse_calibration(&c.to_json(), Path::new("c")).unwrap(), c);
        }
    }

    #[test]
    fn example_file_parsing() {
        let ex = parse_calibration_examples("law_segment_id\tgold\tpolicy_text\ng3\t5\tWe delete\tdata.\n", Path::new("e"))
            .unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].policy_text, "We delete\tdata.");
        assert!(parse_calibration_examples("g3\t7\tx\n", Path::new("e")).is_err());
    }
}
