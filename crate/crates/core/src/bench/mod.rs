//! End-to-end experiments: segmentation, per-individual normalization,
//! relative features, training on one individual and evaluation on the
//! same individual's held-out cycles and on every other individual.

mod audit;
mod report;
mod run;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use audit::{audit_manifest, audit_no_leakage, audit_report, AuditVerdict};
pub use report::{
    emit_report, report_json, strip_wall_clock, BatchAccuracy, MethodResult, Provenance,
    ReferenceUse, ReportFormat, ResultsReport, REPORT_VERSION,
};
pub use run::{
    extract_features, prepare, resolve_dataset, run_experiment, run_on_dataset, sweep_reference,
    train_method, CycleFeatures, FeatureSet, IndividualCycles, PreparedData, ReferenceSweep,
    Spread, SweepRun,
};

use crate::classify::{BatchMode, SvmHyper};
use crate::error::{Error, Result};
use crate::pairwise::Aggregation;
use crate::signal::{IndividualId, PhaseWindow, SegmentationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "1nn_raw")]
    OneNnRaw,
    #[serde(rename = "svm_raw")]
    SvmRaw,
    #[serde(rename = "1nn_amp")]
    OneNnAmp,
    #[serde(rename = "1nn_ts")]
    OneNnTs,
    #[serde(rename = "svm_amp")]
    SvmAmp,
    #[serde(rename = "svm_ts")]
    SvmTs,
    #[serde(rename = "svm_amp_ts")]
    SvmAmpTs,
    #[serde(rename = "svm_amp_ts_f")]
    SvmAmpTsF,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::OneNnRaw,
        Method::SvmRaw,
        Method::OneNnAmp,
        Method::OneNnTs,
        Method::SvmAmp,
        Method::SvmTs,
        Method::SvmAmpTs,
        Method::SvmAmpTsF,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::OneNnRaw => "1nn_raw",
            Method::SvmRaw => "svm_raw",
            Method::OneNnAmp => "1nn_amp",
            Method::OneNnTs => "1nn_ts",
            Method::SvmAmp => "svm_amp",
            Method::SvmTs => "svm_ts",
            Method::SvmAmpTs => "svm_amp_ts",
            Method::SvmAmpTsF => "svm_amp_ts_f",
        }
    }

    /// Uses features computed against the individual's own NF references.
    pub fn is_relative(self) -> bool {
        !matches!(self, Method::OneNnRaw | Method::SvmRaw)
    }

    /// Trained on pairwise-distance vectors.
    pub fn uses_pairwise(self) -> bool {
        matches!(
            self,
            Method::SvmAmp | Method::SvmTs | Method::SvmAmpTs | Method::SvmAmpTsF
        )
    }

    /// Whether a pairwise-vector column belongs to this method's input.
    pub fn keeps_column(self, name: &str) -> bool {
        let amp = name.starts_with("p_amp_");
        let ts = name.starts_with("p_ts_");
        match self {
            Method::SvmAmp => amp,
            Method::SvmTs => ts,
            Method::SvmAmpTs => amp || ts,
            Method::SvmAmpTsF => true,
            _ => false,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse {
                what: "method",
                value: s.to_string(),
            })
    }
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_n_refs() -> usize {
    5
}

fn default_batch_sizes() -> Vec<usize> {
    vec![1, 5, 10, 25, 50]
}

fn default_holdout() -> f64 {
    0.3
}

fn default_pool() -> usize {
    10
}

fn default_refs_per_cycle() -> usize {
    1
}

fn default_stock_cycles() -> usize {
    40
}

/// Where the recordings come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum DatasetSource {
    /// A manifest written by `make_benchmark` or by hand.
    Manifest { path: PathBuf },
    /// Generate in memory. `config` is a generator TOML file; `None` is the
    /// stock configuration.
    Generate {
        #[serde(default)]
        config: Option<PathBuf>,
        seed: u64,
        #[serde(default = "default_stock_cycles")]
        cycles_per_case: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Sakoe-Chiba band for every DTW call; `None` is unconstrained.
    #[serde(default)]
    pub band: Option<usize>,
    /// References per (class, kind) in the pairwise bank.
    #[serde(default = "default_n_refs")]
    pub n_refs: usize,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default = "default_batch_sizes")]
    pub batch_sizes: Vec<usize>,
    #[serde(default)]
    pub batch_mode: BatchMode,
    pub seed: u64,
    /// Overrides the manifest's training individual.
    #[serde(default)]
    pub train_individual: Option<IndividualId>,
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
    /// Overrides the manifest's cycles per case.
    #[serde(default)]
    pub cycles_per_case: Option<usize>,
    /// Leading NF cycles of each individual kept as its reference pool.
    #[serde(default = "default_pool")]
    pub ref_pool_size: usize,
    /// NF references drawn per evaluated cycle; scores are averaged over
    /// them.
    #[serde(default = "default_refs_per_cycle")]
    pub refs_per_cycle: usize,
    /// The seed field is replaced by one derived from `seed`.
    #[serde(default)]
    pub svm: SvmHyper,
    #[serde(default)]
    pub segmentation: SegmentationConfig,
    #[serde(default)]
    pub phase_window: PhaseWindow,
}

impl ExperimentConfig {
    /// Defaults on the stock generator.
    pub fn stock(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            dataset: DatasetSource::Generate {
                config: None,
                seed,
                cycles_per_case: default_stock_cycles(),
            },
            methods: default_methods(),
            band: None,
            n_refs: default_n_refs(),
            aggregation: Aggregation::default(),
            batch_sizes: default_batch_sizes(),
            batch_mode: BatchMode::default(),
            seed,
            train_individual: None,
            holdout_fraction: default_holdout(),
            cycles_per_case: None,
            ref_pool_size: default_pool(),
            refs_per_cycle: default_refs_per_cycle(),
            svm: SvmHyper::default(),
            segmentation: SegmentationConfig::default(),
            phase_window: PhaseWindow::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        if self.batch_sizes.is_empty() || self.batch_sizes.contains(&0) {
            return bad("batch sizes must be non-empty and positive");
        }
        if !self.batch_sizes.contains(&1) {
            return bad("batch sizes must include 1");
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return bad("holdout_fraction must be in (0, 1)");
        }
        if self.n_refs == 0 {
            return bad("n_refs must be positive");
        }
        if self.ref_pool_size < 2 {
            return bad("ref_pool_size must be at least 2");
        }
        if self.refs_per_cycle == 0 || self.refs_per_cycle > self.ref_pool_size {
            return bad("refs_per_cycle must be in 1..=ref_pool_size");
        }
        if !(self.svm.lambda > 0.0) || self.svm.epochs == 0 {
            return bad("svm lambda and epochs must be positive");
        }
        Ok(())
    }
}
