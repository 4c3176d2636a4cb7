use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, Method};
use crate::error::{Error, Result};
use crate::signal::{ClassLabel, CycleId, IndividualId};
use crate::storage::write_text;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchAccuracy {
    pub batch_size: usize,
    pub same: f64,
    pub different: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    /// Single-cycle accuracy on the training individual's held-out cycles.
    pub accuracy_same: f64,
    /// Single-cycle accuracy on every test individual.
    pub accuracy_different: f64,
    pub accuracy_by_batch_size: Vec<BatchAccuracy>,
    pub accuracy_by_individual: BTreeMap<IndividualId, f64>,
    /// Test individuals at batch size 1; rows are true classes, columns
    /// predictions, both in canonical class order.
    pub confusion: Vec<Vec<usize>>,
    pub training_examples: usize,
    /// Input columns of SVM models over pairwise vectors.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub input_layout: Vec<String>,
    pub wall_clock_s: f64,
}

impl MethodResult {
    pub fn batch(&self, size: usize) -> Option<&BatchAccuracy> {
        self.accuracy_by_batch_size
            .iter()
            .find(|b| b.batch_size == size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceUse {
    pub target: CycleId,
    pub refs: Vec<CycleId>,
}

/// Which cycles went where, for the leakage audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub train_individual: IndividualId,
    pub test_individuals: Vec<IndividualId>,
    pub train_ids: Vec<CycleId>,
    pub holdout_ids: Vec<CycleId>,
    pub different_ids: Vec<CycleId>,
    /// NF reference pool of each individual.
    pub pools: BTreeMap<IndividualId, Vec<CycleId>>,
    /// NF references used for each cycle's relative features.
    pub references: Vec<ReferenceUse>,
    pub bank_ids: Vec<CycleId>,
    /// Stored exemplars, training vectors and bank members of each model.
    pub model_training_ids: BTreeMap<String, Vec<CycleId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsReport {
    pub version: u32,
    pub config: ExperimentConfig,
    /// How pairwise entries were aggregated.
    pub aggregation: String,
    pub cycles_per_case: usize,
    pub sample_rate: f64,
    pub methods: Vec<MethodResult>,
    pub provenance: Provenance,
    pub wall_clock_s: f64,
}

impl ResultsReport {
    pub fn method(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == method)
    }
}

pub fn report_json(report: &ResultsReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// The report as JSON with every `wall_clock_s` field removed.
pub fn strip_wall_clock(report: &ResultsReport) -> Result<String> {
    fn strip(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(map) => {
                map.remove("wall_clock_s");
                map.values_mut().for_each(strip);
            }
            serde_json::Value::Array(items) => items.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut value = serde_json::to_value(report)?;
    strip(&mut value);
    Ok(serde_json::to_string_pretty(&value)?)
}

fn pct(x: f64) -> String {
    format!("{x:.4}")
}

fn table1(report: &ResultsReport) -> String {
    let mut out = String::from("method,same,different\n");
    for m in &report.methods {
        out.push_str(&format!(
            "{},{},{}\n",
            m.method,
            pct(m.accuracy_same),
            pct(m.accuracy_different)
        ));
    }
    out
}

fn table2(report: &ResultsReport) -> String {
    let sizes: Vec<usize> = report
        .methods
        .first()
        .map(|m| {
            m.accuracy_by_batch_size
                .iter()
                .map(|b| b.batch_size)
                .collect()
        })
        .unwrap_or_default();
    let mut out = String::from("method");
    for s in &sizes {
        out.push_str(&format!(",same_b{s},different_b{s}"));
    }
    out.push('\n');
    for m in &report.methods {
        out.push_str(m.method.name());
        for b in &m.accuracy_by_batch_size {
            out.push_str(&format!(",{},{}", pct(b.same), pct(b.different)));
        }
        out.push('\n');
    }
    out
}

fn confusion_csv(m: &MethodResult) -> String {
    let mut out = String::from("true");
    for c in ClassLabel::ALL {
        out.push(',');
        out.push_str(c.code());
    }
    out.push('\n');
    for (c, row) in ClassLabel::ALL.iter().zip(&m.confusion) {
        out.push_str(c.code());
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Writes `report.json` and/or `table1.csv` (single-cycle accuracy),
/// `table2.csv` (accuracy per batch size) and `confusion_<method>.csv`.
/// Returns the written paths.
pub fn emit_report(
    report: &ResultsReport,
    dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if formats.contains(&ReportFormat::Json) {
        let p = dir.join("report.json");
        write_text(&p, &report_json(report)?)?;
        written.push(p);
    }
    if formats.contains(&ReportFormat::Csv) {
        let p = dir.join("table1.csv");
        write_text(&p, &table1(report))?;
        written.push(p);
        let p = dir.join("table2.csv");
        write_text(&p, &table2(report))?;
        written.push(p);
        for m in &report.methods {
            let p = dir.join(format!("confusion_{}.csv", m.method));
            write_text(&p, &confusion_csv(m))?;
            written.push(p);
        }
    }
    Ok(written)
}
