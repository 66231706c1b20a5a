//! Shipped configuration: requirement segments, mappings and calibrations for
//! each law, plus a small static word-vector table.
//!
//! The files are compiled into the library. Setting `LEXCHECK_DATA_DIR` to a
//! directory holding `<law>_requirements.json`, `<law>_mapping.json` and
//! `<law>_calibration.json` replaces the compiled-in copies.

use std::path::{Path, PathBuf};

use crate::compliance::{parse_calibration, Calibration};
use crate::error::Result;
use crate::lawmodel::{parse_requirements, Law, RequirementSet};
use crate::mapping::{parse_mapping, MappingTable};
use crate::preprocess::Stopwords;
use crate::similarity::{EmbeddingTable, StaticTableProvider};

pub const DATA_DIR_ENV: &str = "LEXCHECK_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigKind {
    Requirements,
    Mapping,
    Calibration,
}

impl ConfigKind {
    fn suffix(self) -> &'static str {
        match self {
            ConfigKind::Requirements => "requirements",
            ConfigKind::Mapping => "mapping",
            ConfigKind::Calibration => "calibration",
        }
    }
}

fn embedded(law: Law, kind: ConfigKind) -> &'static str {
    match (law, kind) {
        (Law::Gdpr, ConfigKind::Requirements) => include_str!("../data/config/gdpr_requirements.json"),
        (Law::Gdpr, ConfigKind::Mapping) => include_str!("../data/config/gdpr_mapping.json"),
        (Law::Gdpr, ConfigKind::Calibration) => include_str!("../data/config/gdpr_calibration.json"),
        (Law::Pdpa, ConfigKind::Requirements) => include_str!("../data/config/pdpa_requirements.json"),
        (Law::Pdpa, ConfigKind::Mapping) => include_str!("../data/config/pdpa_mapping.json"),
        (Law::Pdpa, ConfigKind::Calibration) => include_str!("../data/config/pdpa_calibration.json"),
    }
}

const FIXTURE_VECTORS: &str = include_str!("../data/vectors/fixture_50d.txt");

pub fn file_name(law: Law, kind: ConfigKind) -> String {
    format!("{}_{}.json", law.slug(), kind.suffix())
}

/// The override directory, if `LEXCHECK_DATA_DIR` is set and non-empty.
pub fn data_dir_override() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Config text and a path naming its origin (for error messages).
fn source(law: Law, kind: ConfigKind, dir: Option<&Path>) -> Result<(String, PathBuf)> {
    match dir {
        Some(dir) => {
            let path = dir.join(file_name(law, kind));
            Ok((crate::error::read_to_string(&path)?, path))
        }
        None => Ok((
            embedded(law, kind).to_string(),
            PathBuf::from(format!("<bundled>/{}", file_name(law, kind))),
        )),
    }
}

/// Loads from `dir` when given, otherwise from the compiled-in copy.
pub fn requirements_from(law: Law, dir: Option<&Path>) -> Result<RequirementSet> {
    let (text, origin) = source(law, ConfigKind::Requirements, dir)?;
    parse_requirements(&text, &origin)
}

pub fn mapping_from(law: Law, dir: Option<&Path>) -> Result<MappingTable> {
    let (text, origin) = source(law, ConfigKind::Mapping, dir)?;
    parse_mapping(&text, &origin)
}

pub fn calibration_from(law: Law, dir: Option<&Path>) -> Result<Calibration> {
    let (text, origin) = source(law, ConfigKind::Calibration, dir)?;
    parse_calibration(&text, &origin)
}

/// Requirement set honouring `LEXCHECK_DATA_DIR`.
pub fn requirements(law: Law) -> Result<RequirementSet> {
    requirements_from(law, data_dir_override().as_deref())
}

pub fn mapping(law: Law) -> Result<MappingTable> {
    mapping_from(law, data_dir_override().as_deref())
}

pub fn calibration(law: Law) -> Result<Calibration> {
    calibration_from(law, data_dir_override().as_deref())
}

/// 50-dimensional vectors fitted on the bundled fixture texts. Adequate for
/// tests and demos; real use should supply a general-purpose table.
pub fn fixture_vectors() -> StaticTableProvider {
    let table = EmbeddingTable::parse(FIXTURE_VECTORS, Path::new("<bundled>/fixture_50d.txt"))
        .expect("bundled vectors parse");
    StaticTableProvider::new(table, Stopwords::bundled(), "static:fixture_50d")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lawmodel::RequirementCategory;

    #[test]
    fn shipped_configs_match_code_defaults() {
        for law in [Law::Gdpr, Law::Pdpa] {
            assert_eq!(mapping_from(law, None).unwrap(), MappingTable::default_for(law));
            assert_eq!(calibration_from(law, None).unwrap(), Calibration::default_for(law));
        }
    }

    #[test]
    fn shipped_requirement_counts() {
        let g = requirements_from(Law::Gdpr, None).unwrap();
        assert_eq!(g.segments.len(), 10);
        let art14 = g.segments.iter().find(|s| s.id == "gdpr1-art14-1de").unwrap();
        assert_eq!(art14.requirement, RequirementCategory::Gdpr1);
        assert!(art14.text.contains("the categories of personal data concerned"));
        let p = requirements_from(Law::Pdpa, None).unwrap();
        assert!(p.segments.len() >= 4);
    }

    #[test]
    fn fixture_vectors_load() {
        let p = fixture_vectors();
        assert_eq!(p.table().dimension(), 50);
        assert!(p.table().get("retain").is_some());
    }
}
