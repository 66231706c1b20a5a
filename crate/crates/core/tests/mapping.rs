mod common;

use std::collections::BTreeSet;
use std::path::Path;

use lexcheck::corpus::CategoryLabel::{self, *};
use lexcheck::lawmodel::{Law, RequirementCategory::*};
use lexcheck::mapping::{load_mapping, parse_mapping, requirements_for, MappingTable};

fn set(xs: &[CategoryLabel]) -> BTreeSet<CategoryLabel> {
    xs.iter().copied().collect()
}

fn shipped(law: Law) -> MappingTable {
    load_mapping(&common::data_dir().join(format!("config/{}_mapping.json", law.slug()))).unwrap()
}

#[test]
fn shipped_gdpr_edges() {
    let t = shipped(Law::Gdpr);
    assert_eq!(t, MappingTable::default_for(Law::Gdpr));
    assert_eq!(requirements_for(&t, &set(&[DataRetention])), BTreeSet::from([Gdpr3]));
    assert!(t.categories_for(Gdpr1).is_superset(&set(&[FirstPartyCollectionUse, ThirdPartySharingCollection])));
    assert!(requirements_for(&t, &set(&[])).is_empty());
    assert_eq!(
        requirements_for(&t, &set(&[UserAccessEditDeletion, DataRetention])),
        BTreeSet::from([Gdpr3, Gdpr4])
    );
}

#[test]
fn shipped_pdpa_edges() {
    let t = shipped(Law::Pdpa);
    assert_eq!(t, MappingTable::default_for(Law::Pdpa));
    assert_eq!(requirements_for(&t, &set(&[DataRetention])), BTreeSet::from([PdpaRetention]));
}

#[test]
fn all_categories_cover_every_requirement() {
    for law in [Law::Gdpr, Law::Pdpa] {
        let t = shipped(law);
        let all = requirements_for(&t, &CategoryLabel::ALL.into_iter().collect());
        assert_eq!(all, law.requirements().iter().copied().collect());
    }
}

#[test]
fn requirements_for_is_monotone() {
    let t = shipped(Law::Gdpr);
    // Every subset of the ten categories against every superset formed by adding one label.
    for mask in 0u16..1024 {
        let labels: BTreeSet<_> = CategoryLabel::ALL
            .into_iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, c)| c)
            .collect();
        let base = requirements_for(&t, &labels);
        for c in CategoryLabel::ALL {
            let mut more = labels.clone();
            more.insert(c);
            assert!(requirements_for(&t, &more).is_superset(&base));
        }
    }
}

#[test]
fn missing_requirement_edges_are_rejected() {
    let mut v: serde_json::Value = serde_json::from_str(&shipped(Law::Pdpa).to_json()).unwrap();
    v["edges"].as_array_mut().unwrap().retain(|e| e["requirement"] != "PDPA_Retention");
    let err = parse_mapping(&v.to_string(), Path::new("m.json")).unwrap_err();
    assert!(err.to_string().contains("PDPA_Retention"), "{err}");
}

#[test]
fn unknown_labels_are_rejected() {
    let json = shipped(Law::Gdpr).to_json();
    let bad = json.replacen("DataRetention", "DataHoarding", 1);
    assert!(parse_mapping(&bad, Path::new("m.json")).is_err());
    let bad = json.replacen("GDPR3", "GDPR7", 1);
    assert!(parse_mapping(&bad, Path::new("m.json")).is_err());
    // A PDPA requirement inside a GDPR table.
    let bad = json.replacen("\"GDPR3\"", "\"PDPA_Retention\"", 1);
    assert!(parse_mapping(&bad, Path::new("m.json")).is_err());
}

#[test]
fn json_round_trip() {
    for law in [Law::Gdpr, Law::Pdpa] {
        let t = MappingTable::default_for(law);
        assert_eq!(parse_mapping(&t.to_json(), Path::new("m.json")).unwrap(), t);
    }
}
