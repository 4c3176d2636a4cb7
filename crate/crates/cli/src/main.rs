use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use wavefault::bench::{
    audit_no_leakage, emit_report, extract_features, resolve_dataset, run_experiment,
    sweep_reference, train_method, DatasetSource, ExperimentConfig, Method, ReportFormat,
    ResultsReport,
};
use wavefault::classify::{BatchMode, ModelBody, TrainedModel};
use wavefault::pairwise::Aggregation;
use wavefault::signal::{segment_recording, ClassLabel, IndividualId};
use wavefault::storage::{
    read_container, read_json, write_container, write_features_csv, write_json, write_pd_csv,
    PayloadKind,
};
use wavefault::synth::{make_benchmark, GeneratorConfig};

const THREADS_VAR: &str = "WAVEFAULT_THREADS";

#[derive(Parser)]
#[command(
    name = "wavefault",
    version,
    about = "Reference-relative fault classification benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic benchmark to a directory.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Generator TOML; defaults to the stock configuration.
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        cycles_per_case: usize,
    },
    /// Segment every recording and write cycle boundaries.
    Segment {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute relative features and pairwise vectors.
    Extract {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one method on the training split and save the model.
    Train {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every configured method and write the report.
    Evaluate {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated subset of json,csv.
        #[arg(long, default_value = "json,csv", value_delimiter = ',')]
        format: Vec<String>,
    },
    /// Accuracy as a function of how many consecutive cycles are averaged.
    SweepBatch {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run with each individual as the trainer and report the spread.
    SweepReference {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check that no individual's data leaked into another's role.
    Audit {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// A report.json from `evaluate` to audit alongside the dataset.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Summarize a saved model.
    InspectModel { path: PathBuf },
}

/// Experiment settings. A config file is read first and flags override it.
#[derive(Args)]
struct ExperimentArgs {
    /// ExperimentConfig as TOML or JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset manifest; otherwise the benchmark is generated in memory.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Generator TOML for in-memory generation.
    #[arg(long, conflicts_with = "manifest")]
    generator: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cycles_per_case: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    band: Option<usize>,
    #[arg(long)]
    n_refs: Option<usize>,
    #[arg(long)]
    aggregation: Option<Aggregation>,
    #[arg(long, value_delimiter = ',')]
    batch_sizes: Option<Vec<usize>>,
    #[arg(long)]
    batch_mode: Option<BatchMode>,
    #[arg(long)]
    train_individual: Option<u32>,
    #[arg(long)]
    holdout_fraction: Option<f64>,
    #[arg(long)]
    ref_pool_size: Option<usize>,
    #[arg(long)]
    refs_per_cycle: Option<usize>,
}

impl ExperimentArgs {
    fn resolve(&self, seed_required: bool) -> Result<ExperimentConfig> {
        if seed_required && self.seed.is_none() {
            return Err(wavefault::Error::InvalidConfig("--seed is required".into()).into());
        }
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::stock(self.seed.unwrap_or(0)),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            if let DatasetSource::Generate { seed: s, .. } = &mut cfg.dataset {
                *s = seed;
            }
        }
        if let Some(path) = &self.manifest {
            cfg.dataset = DatasetSource::Manifest { path: path.clone() };
        }
        if let Some(path) = &self.generator {
            if let DatasetSource::Generate { config, .. } = &mut cfg.dataset {
                *config = Some(path.clone());
            } else {
                cfg.dataset = DatasetSource::Generate {
                    config: Some(path.clone()),
                    seed: cfg.seed,
                    cycles_per_case: 40,
                };
            }
        }
        if let Some(n) = self.cycles_per_case {
            match &mut cfg.dataset {
                DatasetSource::Generate {
                    cycles_per_case, ..
                } => *cycles_per_case = n,
                DatasetSource::Manifest { .. } => cfg.cycles_per_case = Some(n),
            }
        }
        if let Some(m) = &self.methods {
            cfg.methods = m.clone();
        }
        if self.band.is_some() {
            cfg.band = self.band;
        }
        if let Some(n) = self.n_refs {
            cfg.n_refs = n;
        }
        if let Some(a) = self.aggregation {
            cfg.aggregation = a;
        }
        if let Some(b) = &self.batch_sizes {
            cfg.batch_sizes = b.clone();
        }
        if let Some(m) = self.batch_mode {
            cfg.batch_mode = m;
        }
        if let Some(i) = self.train_individual {
            cfg.train_individual = Some(IndividualId(i));
        }
        if let Some(f) = self.holdout_fraction {
            cfg.holdout_fraction = f;
        }
        if let Some(n) = self.ref_pool_size {
            cfg.ref_pool_size = n;
        }
        if let Some(n) = self.refs_per_cycle {
            cfg.refs_per_cycle = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(read_json(path)?);
    }
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text)
        .map_err(|e| wavefault::Error::InvalidConfig(format!("{}: {e}", path.display())).into())
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = match value.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => {
            return Err(wavefault::Error::InvalidConfig(format!(
                "{THREADS_VAR} must be a positive integer, got {value:?}"
            ))
            .into())
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

#[derive(Serialize)]
struct SegmentSummary {
    class: ClassLabel,
    individual: IndividualId,
    samples: PathBuf,
    cycles: usize,
    starts: Vec<usize>,
    lengths: Vec<usize>,
}

fn segment(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let dataset = resolve_dataset(&cfg.dataset)?;
    let mut summaries = Vec::new();
    for r in &dataset.recordings {
        let cycles = segment_recording(&r.recording, &cfg.segmentation)?;
        println!(
            "{} {}: {} cycles",
            r.entry.individual,
            r.entry.class,
            cycles.len()
        );
        summaries.push(SegmentSummary {
            class: r.entry.class,
            individual: r.entry.individual,
            samples: r.entry.samples.clone(),
            cycles: cycles.len(),
            starts: cycles.iter().map(|c| c.start).collect(),
            lengths: cycles.iter().map(|c| c.len()).collect(),
        });
    }
    create_dir(out)?;
    write_json(&out.join("segments.json"), &summaries)?;
    Ok(())
}

fn extract(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let dataset = resolve_dataset(&cfg.dataset)?;
    let set = extract_features(cfg, &dataset)?;
    create_dir(out)?;
    write_features_csv(&out.join("features.csv"), &set.features)?;
    write_pd_csv(&out.join("pairwise.csv"), &set.pairwise)?;
    write_container(&out.join("features.bin"), PayloadKind::Features, &set)?;
    println!(
        "{} relative features, {} pairwise vectors written to {}",
        set.features.len(),
        set.pairwise.len(),
        out.display()
    );
    Ok(())
}

fn train(cfg: &ExperimentConfig, method: Method, out: &Path) -> Result<()> {
    let dataset = resolve_dataset(&cfg.dataset)?;
    let model = train_method(cfg, &dataset, method)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_container(out, PayloadKind::Model, &model)?;
    println!(
        "{method} trained on individual {} with {} examples; saved to {}",
        model.individual,
        model.training_ids().len(),
        out.display()
    );
    Ok(())
}

fn print_table(report: &ResultsReport) {
    println!("{:<14} {:>8} {:>10}", "method", "same", "different");
    for m in &report.methods {
        println!(
            "{:<14} {:>8.3} {:>10.3}",
            m.method, m.accuracy_same, m.accuracy_different
        );
    }
}

fn parse_formats(names: &[String]) -> Result<Vec<ReportFormat>> {
    names
        .iter()
        .map(|n| match n.as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(wavefault::Error::Parse {
                what: "report format",
                value: other.to_string(),
            }
            .into()),
        })
        .collect()
}

fn evaluate(cfg: &ExperimentConfig, out: &Path, formats: &[ReportFormat]) -> Result<ResultsReport> {
    let report = run_experiment(cfg)?;
    emit_report(&report, out, formats)?;
    Ok(report)
}

fn sweep_batch(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let report = evaluate(cfg, out, &[ReportFormat::Json, ReportFormat::Csv])?;
    print!("{:<14}", "method");
    for b in &cfg.batch_sizes {
        print!(" {:>13}", format!("b{b} same/diff"));
    }
    println!();
    for m in &report.methods {
        print!("{:<14}", m.method.name());
        for b in &m.accuracy_by_batch_size {
            print!(" {:>13}", format!("{:.3}/{:.3}", b.same, b.different));
        }
        println!();
    }
    Ok(())
}

fn sweep_ref(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let dataset = resolve_dataset(&cfg.dataset)?;
    let sweep = sweep_reference(cfg, &dataset)?;
    create_dir(out)?;
    write_json(&out.join("sweep_reference.json"), &sweep)?;
    println!("{:<14} {:>8} {:>8} {:>8}", "method", "min", "mean", "max");
    for (m, s) in &sweep.spread {
        println!(
            "{:<14} {:>8.3} {:>8.3} {:>8.3}",
            m.name(),
            s.min,
            s.mean,
            s.max
        );
    }
    Ok(())
}

/// Returns whether the audit passed.
fn audit(cfg: &ExperimentConfig, report: Option<&Path>) -> Result<bool> {
    let report: Option<ResultsReport> = report.map(read_json).transpose()?;
    let verdict = audit_no_leakage(cfg, report.as_ref())?;
    println!("{}", serde_json::to_string_pretty(&verdict)?);
    Ok(verdict.passed)
}

#[derive(Serialize)]
struct ModelSummary<'a> {
    variant: String,
    individual: IndividualId,
    config: &'a wavefault::classify::ModelConfig,
    training_examples: usize,
    foreign_examples: usize,
    classes: Vec<ClassLabel>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    input_layout: Vec<String>,
    bank_members: usize,
}

fn inspect(path: &Path) -> Result<()> {
    let model: TrainedModel = read_container(path, PayloadKind::Model)?;
    let (classes, layout) = match &model.body {
        ModelBody::NearestNeighbor(nn) => {
            let mut c: Vec<ClassLabel> = nn.exemplars.iter().map(|e| e.label).collect();
            c.sort();
            c.dedup();
            (c, Vec::new())
        }
        ModelBody::Svm(svm) => (svm.classes.clone(), svm.layout.clone()),
    };
    let summary = ModelSummary {
        variant: model.variant.to_string(),
        individual: model.individual,
        config: &model.config,
        training_examples: model.training_ids().len(),
        foreign_examples: model.foreign_ids().len(),
        classes,
        input_layout: layout,
        bank_members: model.bank.as_ref().map_or(0, |b| b.member_ids().len()),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Generate {
            out,
            seed,
            generator,
            cycles_per_case,
        } => {
            let cfg = match generator {
                Some(path) => GeneratorConfig::from_toml(
                    &std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?,
                )?,
                None => GeneratorConfig::stock(),
            };
            let manifest = make_benchmark(&cfg, cycles_per_case, seed, &out)?;
            println!(
                "{} recordings written; manifest at {}",
                manifest.recordings.len(),
                out.join("manifest.json").display()
            );
        }
        Command::Segment { exp, out } => segment(&exp.resolve(false)?, &out)?,
        Command::Extract { exp, out } => extract(&exp.resolve(false)?, &out)?,
        Command::Train { exp, method, out } => train(&exp.resolve(true)?, method, &out)?,
        Command::Evaluate { exp, out, format } => {
            let formats = parse_formats(&format)?;
            let report = evaluate(&exp.resolve(false)?, &out, &formats)?;
            print_table(&report);
        }
        Command::SweepBatch { exp, out } => sweep_batch(&exp.resolve(false)?, &out)?,
        Command::SweepReference { exp, out } => sweep_ref(&exp.resolve(false)?, &out)?,
        Command::Audit { exp, report } => {
            if !audit(&exp.resolve(false)?, report.as_deref())? {
                return Ok(ExitCode::from(2));
            }
        }
        Command::InspectModel { path } => inspect(&path)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<wavefault::Error>() {
        Some(e) if e.is_validation() => 2,
        _ => 1,
    }
}

/// The error chain on one line, skipping causes a message already quotes.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
