//! Policy category to law requirement correlation tables.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CategoryLabel;
use crate::error::{read_to_string, Error, Result};
use crate::lawmodel::{Law, RequirementCategory};

pub const MAPPING_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTable {
    pub law: Law,
    pub edges: BTreeSet<(CategoryLabel, RequirementCategory)>,
}

impl MappingTable {
    /// Validates that every edge belongs to `law` and that every requirement
    /// of the law has an incoming edge.
    pub fn new(law: Law, edges: impl IntoIterator<Item = (CategoryLabel, RequirementCategory)>) -> Result<Self> {
        let edges: BTreeSet<_> = edges.into_iter().collect();
        if let Some((c, r)) = edges.iter().find(|(_, r)| r.law() != law) {
            return Err(Error::Config(format!("edge {c} -> {r} does not belong to {law}")));
        }
        for &r in law.requirements() {
            if !edges.iter().any(|&(_, e)| e == r) {
                return Err(Error::Config(format!("requirement {r} has no mapped policy category")));
            }
        }
        Ok(MappingTable { law, edges })
    }

    /// Shipped defaults for `law`.
    pub fn default_for(law: Law) -> Self {
        use CategoryLabel::*;
        use RequirementCategory::*;
        let edges: &[(CategoryLabel, RequirementCategory)] = match law {
            Law::Gdpr => &[
                (FirstPartyCollectionUse, Gdpr1),
                (ThirdPartySharingCollection, Gdpr1),
                (FirstPartyCollectionUse, Gdpr2),
                (DataSecurity, Gdpr2),
                (DataRetention, Gdpr3),
                (UserAccessEditDeletion, Gdpr4),
                (UserChoiceControl, Gdpr4),
            ],
            Law::Pdpa => &[
                (UserChoiceControl, PdpaConsent),
                (FirstPartyCollectionUse, PdpaConsent),
                (FirstPartyCollectionUse, PdpaPurposeNotification),
                (ThirdPartySharingCollection, PdpaPurposeNotification),
                (UserAccessEditDeletion, PdpaAccessCorrection),
                (DataRetention, PdpaRetention),
            ],
        };
        MappingTable::new(law, edges.iter().copied()).expect("shipped mapping is valid")
    }

    pub fn requirements_for(&self, labels: &BTreeSet<CategoryLabel>) -> BTreeSet<RequirementCategory> {
        self.edges
            .iter()
            .filter(|(c, _)| labels.contains(c))
            .map(|&(_, r)| r)
            .collect()
    }

    pub fn categories_for(&self, requirement: RequirementCategory) -> BTreeSet<CategoryLabel> {
        self.edges
            .iter()
            .filter(|&&(_, r)| r == requirement)
            .map(|&(c, _)| c)
            .collect()
    }

    pub fn to_json(&self) -> String {
        let doc = RawMapping {
            format_version: MAPPING_FORMAT_VERSION,
            law: self.law.as_str().to_string(),
            edges: self
                .edges
                .iter()
                .map(|(c, r)| RawEdge {
                    policy_category: c.as_str().to_string(),
                    requirement: r.as_str().to_string(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("mapping serializes") + "\n"
    }
}

/// Free-function form of [`MappingTable::requirements_for`].
pub fn requirements_for(table: &MappingTable, labels: &BTreeSet<CategoryLabel>) -> BTreeSet<RequirementCategory> {
    table.requirements_for(labels)
}

#[derive(Serialize, Deserialize)]
struct RawEdge {
    policy_category: String,
    requirement: String,
}

#[derive(Serialize, Deserialize)]
struct RawMapping {
    format_version: u32,
    law: String,
    edges: Vec<RawEdge>,
}

pub fn parse_mapping(json: &str, origin: &Path) -> Result<MappingTable> {
    let raw: RawMapping = serde_json::from_str(json).map_err(|e| Error::json(origin, e))?;
    if raw.format_version != MAPPING_FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: raw.format_version,
            expected: MAPPING_FORMAT_VERSION,
        });
    }
    let law: Law = raw.law.parse()?;
    let edges = raw
        .edges
        .iter()
        .map(|e| Ok((e.policy_category.parse()?, e.requirement.parse()?)))
        .collect::<Result<Vec<_>>>()?;
    MappingTable::new(law, edges)
}

pub fn load_mapping(path: &Path) -> Result<MappingTable> {
    parse_mapping(&read_to_string(path)?, path)
}
