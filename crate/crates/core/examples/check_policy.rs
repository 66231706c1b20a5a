//! Trains classifiers on the bundled fixture corpus, then checks the Nestle
//! test policy and its altered variant against a law.
//!
//! ```text
//! cargo run --example check_policy -- [gdpr|pdpa]
//! ```

use std::path::Path;

use lexcheck::bundled;
use lexcheck::classify::{train_all, ModelKind, TrainingOptions};
use lexcheck::compliance::build_report;
use lexcheck::corpus::{consolidate, load_opp115, DEFAULT_QUORUM};
use lexcheck::lawmodel::Law;

fn main() -> lexcheck::Result<()> {
    let law: Law = std::env::args().nth(1).as_deref().unwrap_or("gdpr").parse()?;
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");

    let corpus = consolidate(&load_opp115(&data.join("fixtures/opp115"))?, DEFAULT_QUORUM);
    let run = train_all(&corpus, &TrainingOptions::default())?;
    let classifier = run.classifier(ModelKind::LogisticRegression)?;

    let requirements = bundled::requirements(law)?;
    let mapping = bundled::mapping(law)?;
    let calibration = bundled::calibration(law)?;
    let provider = bundled::fixture_vectors();

    let policy = std::fs::read_to_string(data.join("fixtures/nestle_policy.txt")).expect("fixture policy");
    let altered = std::fs::read_to_string(data.join("fixtures/nestle_policy_altered.txt")).expect("fixture policy");

    for (id, text) in [("nestle", &policy), ("nestle-altered", &altered)] {
        let report = build_report(id, text, &classifier, &requirements, &mapping, &provider, &calibration)?;
        println!("{}", report.to_text());
    }
    Ok(())
}
