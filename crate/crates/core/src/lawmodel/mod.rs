//! Law texts: GDPR segmentation, topic modelling over the segments, and the
//! curated requirement segments the compliance check runs against.

mod gdpr;
pub mod lda;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};

pub use gdpr::parse_gdpr;

pub const REQUIREMENTS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Law {
    Gdpr,
    Pdpa,
}

impl Law {
    pub fn as_str(self) -> &'static str {
        match self {
            Law::Gdpr => "GDPR",
            Law::Pdpa => "PDPA",
        }
    }

    /// Lower-case name used for bundled file names and CLI values.
    pub fn slug(self) -> &'static str {
        match self {
            Law::Gdpr => "gdpr",
            Law::Pdpa => "pdpa",
        }
    }

    pub fn requirements(self) -> &'static [RequirementCategory] {
        use RequirementCategory::*;
        match self {
            Law::Gdpr => &[Gdpr1, Gdpr2, Gdpr3, Gdpr4],
            Law::Pdpa => &[PdpaConsent, PdpaPurposeNotification, PdpaAccessCorrection, PdpaRetention],
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gdpr" => Ok(Law::Gdpr),
            "pdpa" => Ok(Law::Pdpa),
            _ => Err(Error::InvalidArgument(format!("unknown law `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    Recital,
    Article,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub chapter: Option<String>,
    pub section: Option<String>,
    pub article: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawSegment {
    pub law: Law,
    pub article_id: String,
    pub kind: SegmentKind,
    pub text: String,
    pub hierarchy: Hierarchy,
    pub char_span: (usize, usize),
}

impl LawSegment {
    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RequirementCategory {
    #[serde(rename = "GDPR1")]
    Gdpr1,
    #[serde(rename = "GDPR2")]
    Gdpr2,
    #[serde(rename = "GDPR3")]
    Gdpr3,
    #[serde(rename = "GDPR4")]
    Gdpr4,
    #[serde(rename = "PDPA_Consent")]
    PdpaConsent,
    #[serde(rename = "PDPA_PurposeNotification")]
    PdpaPurposeNotification,
    #[serde(rename = "PDPA_AccessCorrection")]
    PdpaAccessCorrection,
    #[serde(rename = "PDPA_Retention")]
    PdpaRetention,
}

impl RequirementCategory {
    pub const ALL: [RequirementCategory; 8] = [
        RequirementCategory::Gdpr1,
        RequirementCategory::Gdpr2,
        RequirementCategory::Gdpr3,
        RequirementCategory::Gdpr4,
        RequirementCategory::PdpaConsent,
        RequirementCategory::PdpaPurposeNotification,
        RequirementCategory::PdpaAccessCorrection,
        RequirementCategory::PdpaRetention,
    ];

    pub fn as_str(self) -> &'static str {
        use RequirementCategory::*;
        match self {
            Gdpr1 => "GDPR1",
            Gdpr2 => "GDPR2",
            Gdpr3 => "GDPR3",
            Gdpr4 => "GDPR4",
            PdpaConsent => "PDPA_Consent",
            PdpaPurposeNotification => "PDPA_PurposeNotification",
            PdpaAccessCorrection => "PDPA_AccessCorrection",
            PdpaRetention => "PDPA_Retention",
        }
    }

    pub fn law(self) -> Law {
        use RequirementCategory::*;
        match self {
            Gdpr1 | Gdpr2 | Gdpr3 | Gdpr4 => Law::Gdpr,
            _ => Law::Pdpa,
        }
    }

    pub fn title(self) -> &'static str {
        use RequirementCategory::*;
        match self {
            Gdpr1 => "What data will be collected and why",
            Gdpr2 => "How data will be processed",
            Gdpr3 => "How long data will be retained",
            Gdpr4 => "Who can be contacted to have data removed or produced",
            PdpaConsent => "Consent",
            PdpaPurposeNotification => "Purpose and notification",
            PdpaAccessCorrection => "Access and correction",
            PdpaRetention => "Retention",
        }
    }
}

impl fmt::Display for RequirementCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RequirementCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::UnknownRequirement(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequirementSegment {
    pub id: String,
    pub requirement: RequirementCategory,
    pub article_refs: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequirementSet {
    pub law: Law,
    pub segments: Vec<RequirementSegment>,
}

impl RequirementSet {
    pub fn for_requirement(&self, r: RequirementCategory) -> impl Iterator<Item = &RequirementSegment> {
        self.segments.iter().filter(move |s| s.requirement == r)
    }
}

#[derive(Deserialize)]
struct RawSegment {
    id: String,
    requirement: String,
    #[serde(default)]
    article_refs: Vec<String>,
    text: String,
}

#[derive(Deserialize)]
struct RawRequirements {
    format_version: u32,
    law: String,
    segments: Vec<RawSegment>,
}

/// Parses and validates a requirement config. Every requirement category of
/// the law must have at least one segment.
pub fn parse_requirements(json: &str, origin: &Path) -> Result<RequirementSet> {
    let raw: RawRequirements = serde_json::from_str(json).map_err(|e| Error::json(origin, e))?;
    if raw.format_version != REQUIREMENTS_FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: raw.format_version,
            expected: REQUIREMENTS_FORMAT_VERSION,
        });
    }
    let law: Law = raw.law.parse()?;
    let mut ids = BTreeSet::new();
    let mut segments = Vec::with_capacity(raw.segments.len());
    for s in raw.segments {
        let requirement: RequirementCategory = s.requirement.parse()?;
        if requirement.law() != law {
            return Err(Error::Config(format!(
                "segment `{}`: requirement {requirement} does not belong to {law}",
                s.id
            )));
        }
        if !ids.insert(s.id.clone()) {
            return Err(Error::Config(format!("duplicate segment id `{}`", s.id)));
        }
        if s.text.trim().is_empty() {
            return Err(Error::Config(format!("segment `{}` has empty text", s.id)));
        }
        segments.push(RequirementSegment {
            id: s.id,
            requirement,
            article_refs: s.article_refs,
            text: s.text,
        });
    }
    for &r in law.requirements() {
        if !segments.iter().any(|s| s.requirement == r) {
            return Err(Error::Config(format!("requirement {r} has no segments")));
        }
    }
    Ok(RequirementSet { law, segments })
}

pub fn load_requirements(path: &Path) -> Result<RequirementSet> {
    parse_requirements(&read_to_string(path)?, path)
}
