//! Derives a calibration for the bundled static vectors from graded
//! law/policy pairs.
//!
//! ```text
//! cargo run --example calibrate -- [EXAMPLES_TSV]
//! ```

use std::path::{Path, PathBuf};

use lexcheck::bundled;
use lexcheck::compliance::{calibrate, load_calibration_examples, Direction};
use lexcheck::lawmodel::Law;
use lexcheck::similarity::Measure;

fn main() -> lexcheck::Result<()> {
    let default = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures/calibration_gdpr.tsv");
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or(default);
    let examples = load_calibration_examples(&path)?;
    let requirements = bundled::requirements(Law::Gdpr)?;
    let provider = bundled::fixture_vectors();
    let calib = calibrate(&examples, &requirements, &provider, Measure::Cosine, Direction::HigherIsCompliant)?;
    print!("{}", calib.to_json());
    Ok(())
}
