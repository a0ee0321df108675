use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use glocalx::aggregator::{batch_rng, singleton_theories};
use glocalx::harness::{self, MetricsReport};
use glocalx::synthetic::{label_with_oracle, CommandOracle, GaussianModel};
use glocalx::{run, Dataset, Error, FeatureSchema, Result, RunConfig, TheoryClassifier};

#[derive(Parser)]
#[command(name = "glocalx", version, about = "Merge local decision rules into a global rule theory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge local rules using a labelled dataset.
    Run(RunArgs),
    /// Merge local rules using a sampled dataset labelled by an external oracle.
    RunSynth(SynthArgs),
    /// Print one predicted label per data row.
    Classify(ClassifyArgs),
    /// Report fidelity, accuracy and size of a theory on a test set.
    Evaluate(EvaluateArgs),
    /// Shuffle a CSV file and split it into black-box, explanation and test parts.
    Split(SplitArgs),
}

#[derive(Args)]
struct MergeOpts {
    /// Keep the best ⌈N/2⌉ rules per class.
    #[arg(long, conflicts_with = "alpha_q")]
    alpha: Option<usize>,
    /// Drop rules below this fidelity percentile.
    #[arg(long = "alpha-q")]
    alpha_q: Option<f64>,
    #[arg(long = "batch-size", default_value_t = glocalx::aggregator::DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max-iterations")]
    max_iterations: Option<usize>,
    /// Theory output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dendrogram: Option<PathBuf>,
    /// Print a metrics table for the final theory on the merging data to stderr.
    #[arg(long)]
    metrics: bool,
}

impl MergeOpts {
    fn config(&self) -> RunConfig {
        RunConfig {
            batch_size: self.batch_size,
            alpha: self.alpha,
            alpha_q: self.alpha_q,
            seed: self.seed,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[command(flatten)]
    merge: MergeOpts,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Shell command reading CSV rows on stdin and writing one label per line.
    #[arg(long)]
    oracle: String,
    #[arg(long = "n-samples")]
    n_samples: usize,
    /// Instances to fit the feature distribution on.
    #[arg(long = "fit-from", conflicts_with = "params", required_unless_present = "params")]
    fit_from: Option<PathBuf>,
    /// Explicit distribution parameters as JSON.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Also write the labelled sample as CSV.
    #[arg(long = "sample-out")]
    sample_out: Option<PathBuf>,
    #[command(flatten)]
    merge: MergeOpts,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    theory: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Labelled data scoring the rules; defaults to `--data`.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Uni,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    theory: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, value_enum, requires = "rules")]
    baseline: Option<Baseline>,
    /// Local rules for the baseline.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Labelled data scoring the rules; defaults to `--test`.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.2,0.1")]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Writes `<prefix>_bb.csv`, `<prefix>_le.csv` and `<prefix>_ts.csv`.
    #[arg(long = "out-prefix")]
    out_prefix: String,
}

fn load_schema(path: &Path) -> Result<Arc<FeatureSchema>> {
    Ok(Arc::new(FeatureSchema::from_path(path)?))
}

fn merge_and_write(rules: Vec<glocalx::Rule>, data: &Dataset, opts: &MergeOpts) -> Result<()> {
    let start = Instant::now();
    let out = run(singleton_theories(rules), data, &opts.config())?;
    let elapsed = start.elapsed().as_secs_f64();
    let text = harness::rules_to_json(out.theory.rules(), data.schema());
    match &opts.out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    if let Some(path) = &opts.dendrogram {
        fs::write(path, out.dendrogram.to_json())?;
    }
    if opts.metrics {
        let clf = TheoryClassifier::build(out.theory, data)?;
        let mut report = harness::evaluate(&clf, data);
        report.runtime_seconds = elapsed;
        eprint!("{}", harness::render_reports(&[("glx", &report)]));
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let schema = load_schema(&a.schema)?;
    let data = harness::load_csv(&a.data, schema.clone())?;
    let rules = harness::load_rules(&a.rules, &schema)?;
    merge_and_write(rules, &data, &a.merge)
}

fn cmd_run_synth(a: SynthArgs) -> Result<()> {
    let schema = load_schema(&a.schema)?;
    let model = match (&a.fit_from, &a.params) {
        (Some(path), _) => {
            let rows = harness::load_instances(path, &schema)?;
            GaussianModel::fit(&schema, rows.iter().map(Vec::as_slice))?
        }
        (None, Some(path)) => {
            let model: GaussianModel = serde_json::from_str(&fs::read_to_string(path)?)?;
            model.validate(&schema)?;
            model
        }
        (None, None) => return Err(Error::InvalidInput("one of --fit-from and --params is required".into())),
    };
    // the last stream is never used for batches
    let rows = model.sample(&schema, a.n_samples, &mut batch_rng(a.merge.seed, u64::MAX))?;
    let labels = label_with_oracle(&schema, &rows, &mut CommandOracle::new(a.oracle.clone()))?;
    let data = Dataset::new(schema.clone(), rows, labels, None)?;
    if let Some(path) = &a.sample_out {
        harness::write_csv(path, &data)?;
    }
    let rules = harness::load_rules(&a.rules, &schema)?;
    merge_and_write(rules, &data, &a.merge)
}

fn build_classifier(theory: &Path, schema: &Arc<FeatureSchema>, reference: &Path) -> Result<TheoryClassifier> {
    let theory = harness::load_theory(theory, schema)?;
    let reference = harness::load_csv(reference, schema.clone())?;
    TheoryClassifier::build(theory, &reference)
}

fn cmd_classify(a: ClassifyArgs) -> Result<()> {
    let schema = load_schema(&a.schema)?;
    let clf = build_classifier(&a.theory, &schema, a.reference.as_deref().unwrap_or(&a.data))?;
    let rows = harness::load_instances(&a.data, &schema)?;
    let mut out = io::BufWriter::new(io::stdout().lock());
    for row in &rows {
        writeln!(out, "{}", schema.label_name(clf.predict(row)))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let schema = load_schema(&a.schema)?;
    let test = harness::load_csv(&a.test, schema.clone())?;
    let reference_path = a.reference.as_deref().unwrap_or(&a.test);
    let clf = build_classifier(&a.theory, &schema, reference_path)?;
    let mut reports: Vec<(&str, MetricsReport)> = vec![("glx", harness::evaluate(&clf, &test))];
    if let (Some(Baseline::Uni), Some(rules)) = (a.baseline, &a.rules) {
        let rules = harness::load_rules(rules, &schema)?;
        let reference = harness::load_csv(reference_path, schema.clone())?;
        let uni = harness::uni_baseline(&rules, &reference)?;
        reports.push(("uni", harness::evaluate(&uni, &test)));
    }
    if a.json {
        let map: serde_json::Map<String, serde_json::Value> =
            reports.iter().map(|(name, r)| (name.to_string(), json!(r))).collect();
        println!("{}", serde_json::to_string_pretty(&map)?);
    } else {
        let refs: Vec<(&str, &MetricsReport)> = reports.iter().map(|(n, r)| (*n, r)).collect();
        print!("{}", harness::render_reports(&refs));
    }
    Ok(())
}

fn cmd_split(a: SplitArgs) -> Result<()> {
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        Error::Parse { line, message: e.to_string() }
    };
    let mut reader = csv::Reader::from_path(&a.data).map_err(csv_err)?;
    let header = reader.byte_headers().map_err(csv_err)?.clone();
    let records = reader.byte_records().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_err)?;
    let ratios: [f64; 3] = a
        .ratios
        .as_slice()
        .try_into()
        .map_err(|_| Error::InvalidInput("--ratios takes exactly three values".into()))?;
    let parts = harness::split_indices(records.len(), ratios, a.seed)?;
    for (suffix, idx) in ["bb", "le", "ts"].iter().zip(&parts) {
        let mut w = csv::Writer::from_path(format!("{}_{suffix}.csv", a.out_prefix)).map_err(csv_err)?;
        w.write_byte_record(&header).map_err(csv_err)?;
        for &i in idx {
            w.write_byte_record(&records[i]).map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run(a) => cmd_run(a),
        Command::RunSynth(a) => cmd_run_synth(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Split(a) => cmd_split(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
