//! The `lexcheck` command line.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bundled;
use crate::classify::{load_normalize_flag, train_all, ModelKind, MultiLabelClassifier, SegmentLabeler, SideLoadedLabels, TrainingOptions};
use crate::compliance::{build_report, calibrate, load_calibration, load_calibration_examples, Direction};
use crate::corpus::{consolidate, import_opp115_release, load_opp115, DEFAULT_QUORUM, DEFAULT_TEST_FRACTION};
use crate::error::{read_to_string, Error, Result};
use crate::lawmodel::lda::{lda_fit, select_k, LdaConfig};
use crate::lawmodel::{load_requirements, parse_gdpr, Law};
use crate::mapping::load_mapping;
use crate::preprocess::{analyze, Stopwords};
use crate::similarity::{sts_eval, EmbeddingProvider, Measure, ProviderSpec};

#[derive(Debug, Parser)]
#[command(name = "lexcheck", version, about = "Privacy-policy compliance checks against GDPR and PDPA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one-vs-rest LR and SVM classifiers on an OPP-115 corpus.
    Train(TrainArgs),
    /// Segment a law text and tabulate LDA diagnostics over a k grid.
    LabelLaw(LabelLawArgs),
    /// Score a policy against a law and write a compliance report.
    Check(CheckArgs),
    /// Pearson correlation of provider similarities with STS gold scores.
    EvalSts(EvalStsArgs),
    /// Derive calibration thresholds from graded law/policy pairs.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    Gdpr,
    Pdpa,
}

impl From<LawArg> for Law {
    fn from(l: LawArg) -> Law {
        match l {
            LawArg::Gdpr => Law::Gdpr,
            LawArg::Pdpa => Law::Pdpa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Cosine,
    Euclidean,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Measure {
        match m {
            MeasureArg::Cosine => Measure::Cosine,
            MeasureArg::Euclidean => Measure::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Lr,
    Svm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Higher,
    Lower,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of annotation files in the internal TSV layout.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Read `--corpus` as the upstream release (annotations/ + sanitized_policies/).
    #[arg(long)]
    pub release_layout: bool,
    /// Output directory for models, vectorizer and metrics.tsv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_QUORUM)]
    pub quorum: usize,
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    /// Also train a DoNotTrack model and keep DoNotTrack-only segments.
    #[arg(long)]
    pub include_do_not_track: bool,
    /// Skip stopword removal and stemming of policy text.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Args)]
pub struct LabelLawArgs {
    #[arg(long, value_enum, default_value_t = LawArg::Gdpr)]
    pub law: LawArg,
    /// Plain-text law with CHAPTER / Section / Article heading lines.
    #[arg(long)]
    pub text: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 15])]
    pub k_grid: Vec<usize>,
    /// Topic count for the top-words dump.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Further seeds averaged in the grid report.
    #[arg(long, value_delimiter = ',')]
    pub extra_seeds: Vec<u64>,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 10)]
    pub top_n: usize,
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    /// `static:<path>` or `precomputed:<path>`; defaults to the bundled fixture vectors.
    #[arg(long)]
    pub provider: Option<ProviderSpec>,
}

impl ProviderArgs {
    fn load(&self) -> Result<Box<dyn EmbeddingProvider>> {
        match &self.provider {
            Some(spec) => spec.load(&Stopwords::bundled()),
            None => Ok(Box::new(bundled::fixture_vectors())),
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, value_enum, default_value_t = LawArg::Gdpr)]
    pub law: LawArg,
    /// Policy text file; paragraphs are separated by blank lines.
    #[arg(long)]
    pub policy: PathBuf,
    /// Directory written by `train`.
    #[arg(long, required_unless_present = "predictions")]
    pub models: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KindArg::Lr)]
    pub model_kind: KindArg,
    /// Side-loaded segment labels (doc_id, segment_index, categories) used instead of models.
    #[arg(long, conflicts_with = "models")]
    pub predictions: Option<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Must agree with the calibration's measure when given.
    #[arg(long, value_enum)]
    pub measure: Option<MeasureArg>,
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    #[arg(long)]
    pub requirements: Option<PathBuf>,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Document id used for segment keys; defaults to the policy file stem.
    #[arg(long)]
    pub doc_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalStsArgs {
    /// Tab-separated gold, sentence1, sentence2 (or the 7-column STS-B layout).
    #[arg(long)]
    pub sts: PathBuf,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, value_enum, default_value_t = LawArg::Gdpr)]
    pub law: LawArg,
    /// Tab-separated law_segment_id, gold, policy_text.
    #[arg(long)]
    pub examples: PathBuf,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long, value_enum, default_value_t = MeasureArg::Cosine)]
    pub measure: MeasureArg,
    #[arg(long, value_enum, default_value_t = DirectionArg::Higher)]
    pub direction: DirectionArg,
    #[arg(long)]
    pub requirements: Option<PathBuf>,
    /// Calibration JSON file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn require_exists(what: &str, path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} not found: {}", path.display())))
    }
}

fn write_output(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            std::fs::write(path, content).map_err(|e| Error::io(path, e))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| Error::io(&path, e))
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    require_exists("corpus directory", &args.corpus)?;
    if !(args.test_fraction > 0.0 && args.test_fraction < 1.0) {
        return Err(Error::InvalidArgument("--test-fraction must lie in (0, 1)".into()));
    }
    if args.quorum == 0 {
        return Err(Error::InvalidArgument("--quorum must be at least 1".into()));
    }
    let records = if args.release_layout {
        import_opp115_release(&args.corpus)?
    } else {
        load_opp115(&args.corpus)?
    };
    let corpus = consolidate(&records, args.quorum);
    let mut opts = TrainingOptions {
        test_fraction: args.test_fraction,
        split_seed: args.seed,
        normalize: !args.no_normalize,
        include_do_not_track: args.include_do_not_track,
        ..TrainingOptions::default()
    };
    opts.logreg.seed = args.seed;
    opts.svm.seed = args.seed;
    let run = train_all(&corpus, &opts)?;
    run.save(&args.out)?;
    eprintln!(
        "trained {} models on {} segments from {} policies; wrote {}",
        run.results.len() * 2,
        corpus.len(),
        records.len(),
        args.out.display()
    );
    print!("{}", run.metrics_tsv());
    Ok(())
}

pub fn cmd_label_law(args: &LabelLawArgs) -> Result<()> {
    require_exists("law text", &args.text)?;
    let law: Law = args.law.into();
    if law != Law::Gdpr {
        return Err(Error::InvalidArgument(format!(
            "{law} is configured by hand; only GDPR text is segmented"
        )));
    }
    if args.k_grid.is_empty() || args.k_grid.contains(&0) || args.k == 0 {
        return Err(Error::InvalidArgument("topic counts must be positive".into()));
    }
    let text = read_to_string(&args.text)?;
    let segments = parse_gdpr(&text)?;
    let stopwords = Stopwords::bundled();
    let docs: Vec<_> = segments.iter().map(|s| analyze(&s.text, &stopwords, true)).collect();

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut seg_tsv = String::from("article_id\tkind\tchapter\tsection\twords\tstart\tend\n");
    for s in &segments {
        seg_tsv.push_str(&format!(
            "{}\t{:?}\t{}\t{}\t{}\t{}\t{}\n",
            s.article_id,
            s.kind,
            s.hierarchy.chapter.as_deref().unwrap_or(""),
            s.hierarchy.section.as_deref().unwrap_or(""),
            s.word_count(),
            s.char_span.0,
            s.char_span.1
        ));
    }
    write_file(&args.out, "segments.tsv", &seg_tsv)?;

    let base = LdaConfig {
        iterations: args.iterations,
        seed: args.seed,
        ..LdaConfig::new(args.k)
    };
    let mut seeds = vec![args.seed];
    seeds.extend(&args.extra_seeds);
    let report = select_k(&docs, &args.k_grid, &seeds, &base, args.top_n)?;
    write_file(&args.out, "select_k.tsv", &report.to_tsv())?;
    write_file(&args.out, "topic_counts.tsv", &report.topic_counts_tsv())?;

    let model = lda_fit(&docs, &base)?;
    write_file(&args.out, "top_words.tsv", &model.top_words_tsv(args.top_n))?;
    let mut assign = String::from("article_id\ttopic\n");
    for (d, s) in segments.iter().enumerate() {
        assign.push_str(&format!("{}\t{}\n", s.article_id, model.dominant_topic(d)));
    }
    write_file(&args.out, "segment_topics.tsv", &assign)?;

    let words: usize = segments.iter().map(|s| s.word_count()).sum();
    eprintln!(
        "{} segments, mean {:.2} words; wrote {}",
        segments.len(),
        words as f64 / segments.len() as f64,
        args.out.display()
    );
    print!("{}", report.to_tsv());
    Ok(())
}

pub fn cmd_check(args: &CheckArgs) -> Result<()> {
    require_exists("policy", &args.policy)?;
    for (what, p) in [
        ("models directory", &args.models),
        ("predictions file", &args.predictions),
        ("mapping config", &args.mapping),
        ("requirements config", &args.requirements),
        ("calibration config", &args.calibration),
    ] {
        if let Some(p) = p {
            require_exists(what, p)?;
        }
    }
    if let Some(spec) = &args.provider.provider {
        require_exists("provider file", spec.path())?;
    }

    let law: Law = args.law.into();
    let requirements = match &args.requirements {
        Some(p) => load_requirements(p)?,
        None => bundled::requirements(law)?,
    };
    let mapping = match &args.mapping {
        Some(p) => load_mapping(p)?,
        None => bundled::mapping(law)?,
    };
    let calibration = match &args.calibration {
        Some(p) => load_calibration(p)?,
        None => bundled::calibration(law)?,
    };
    if let Some(m) = args.measure {
        let m: Measure = m.into();
        if m != calibration.measure {
            return Err(Error::InvalidArgument(format!(
                "--measure {m} disagrees with the calibration's measure {}",
                calibration.measure
            )));
        }
    }
    let labeler: Box<dyn SegmentLabeler> = match (&args.predictions, &args.models) {
        (Some(p), _) => Box::new(SideLoadedLabels::load(p)?),
        (None, Some(dir)) => {
            let kind = match args.model_kind {
                KindArg::Lr => ModelKind::LogisticRegression,
                KindArg::Svm => ModelKind::LinearSvm,
            };
            let normalize = load_normalize_flag(dir)?;
            Box::new(MultiLabelClassifier::load_dir(dir, kind, Stopwords::bundled(), normalize)?)
        }
        (None, None) => return Err(Error::InvalidArgument("either --models or --predictions is required".into())),
    };
    let provider = args.provider.load()?;

    let doc_id = args.doc_id.clone().unwrap_or_else(|| {
        args.policy
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "policy".into())
    });
    let text = read_to_string(&args.policy)?;
    let report = build_report(
        &doc_id,
        &text,
        labeler.as_ref(),
        &requirements,
        &mapping,
        provider.as_ref(),
        &calibration,
    )?;
    let rendered = match args.format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
    };
    write_output(args.out.as_deref(), &rendered)
}

pub fn cmd_eval_sts(args: &EvalStsArgs) -> Result<()> {
    require_exists("STS file", &args.sts)?;
    if let Some(spec) = &args.provider.provider {
        require_exists("provider file", spec.path())?;
    }
    let provider = args.provider.load()?;
    let r = sts_eval(&args.sts, provider.as_ref())?;
    let out = format!(
        "provider\t{}\npearson\t{:.6}\nn\t{}\nskipped\t{}\n",
        provider.id(),
        r.pearson,
        r.n,
        r.skipped
    );
    write_output(args.out.as_deref(), &out)
}

pub fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    require_exists("calibration examples", &args.examples)?;
    if let Some(p) = &args.requirements {
        require_exists("requirements config", p)?;
    }
    if let Some(spec) = &args.provider.provider {
        require_exists("provider file", spec.path())?;
    }
    let law: Law = args.law.into();
    let requirements = match &args.requirements {
        Some(p) => load_requirements(p)?,
        None => bundled::requirements(law)?,
    };
    let examples = load_calibration_examples(&args.examples)?;
    let provider = args.provider.load()?;
    let direction = match args.direction {
        DirectionArg::Higher => Direction::HigherIsCompliant,
        DirectionArg::Lower => Direction::LowerIsCompliant,
    };
    let calib = calibrate(&examples, &requirements, provider.as_ref(), args.measure.into(), direction)?;
    write_output(args.out.as_deref(), &calib.to_json())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::LabelLaw(a) => cmd_label_law(a),
        Command::Check(a) => cmd_check(a),
        Command::EvalSts(a) => cmd_eval_sts(a),
        Command::Calibrate(a) => cmd_calibrate(a),
    }
}

pub fn exit_code(err: &Error) -> u8 {
    if err.is_input_error() {
        2
    } else {
        1
    }
}

/// Parses `std::env::args`, runs the subcommand and maps errors to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lexcheck: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
