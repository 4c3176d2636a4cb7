use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::report::ResultsReport;
use super::{DatasetSource, ExperimentConfig};
use crate::error::Result;
use crate::signal::{ClassLabel, CycleId, IndividualId};
use crate::storage::{Dataset, ManifestEntry, Sidecar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditVerdict {
    pub passed: bool,
    /// Names of the checks that ran.
    pub checks: Vec<String>,
    /// One line per violation, naming the offending ids.
    pub offending: Vec<String>,
}

impl AuditVerdict {
    fn new() -> AuditVerdict {
        AuditVerdict {
            passed: true,
            checks: Vec::new(),
            offending: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, violations: Vec<String>) {
        self.checks.push(name.to_string());
        if !violations.is_empty() {
            self.passed = false;
            self.offending
                .extend(violations.into_iter().map(|v| format!("{name}: {v}")));
        }
    }

    fn merge(&mut self, other: AuditVerdict) {
        self.passed &= other.passed;
        self.checks.extend(other.checks);
        self.offending.extend(other.offending);
    }
}

fn ids_where<'a>(
    ids: impl IntoIterator<Item = &'a CycleId>,
    bad: impl Fn(&CycleId) -> bool,
) -> Vec<String> {
    ids.into_iter()
        .filter(|id| bad(id))
        .map(|id| id.to_string())
        .collect()
}

/// Checks the provenance a run recorded.
pub fn audit_report(report: &ResultsReport) -> AuditVerdict {
    let p = &report.provenance;
    let train = p.train_individual;
    let mut v = AuditVerdict::new();

    v.check(
        "train split from training individual",
        ids_where(&p.train_ids, |id| id.individual != train),
    );
    v.check(
        "holdout from training individual",
        ids_where(&p.holdout_ids, |id| id.individual != train),
    );
    let train_set: BTreeSet<&CycleId> = p.train_ids.iter().collect();
    v.check(
        "holdout disjoint from training split",
        ids_where(&p.holdout_ids, |id| train_set.contains(id)),
    );
    v.check(
        "different-individual cycles exclude training individual",
        ids_where(&p.different_ids, |id| id.individual == train),
    );
    v.check(
        "bank from training individual",
        ids_where(&p.bank_ids, |id| id.individual != train),
    );

    let holdout: BTreeSet<&CycleId> = p.holdout_ids.iter().collect();
    let mut foreign = Vec::new();
    let mut held = Vec::new();
    for (method, ids) in &p.model_training_ids {
        foreign.extend(
            ids_where(ids, |id| id.individual != train)
                .into_iter()
                .map(|id| format!("{method} {id}")),
        );
        held.extend(
            ids_where(ids, |id| holdout.contains(id))
                .into_iter()
                .map(|id| format!("{method} {id}")),
        );
    }
    v.check("models trained on training individual only", foreign);
    v.check("models never saw held-out cycles", held);

    let evaluated: BTreeSet<&CycleId> = p
        .train_ids
        .iter()
        .chain(&p.holdout_ids)
        .chain(&p.different_ids)
        .collect();
    let mut bad_refs = Vec::new();
    for use_ in &p.references {
        for r in &use_.refs {
            let pool_ok = p
                .pools
                .get(&use_.target.individual)
                .is_some_and(|pool| pool.contains(r));
            if r.individual != use_.target.individual || r.class != ClassLabel::NF || !pool_ok {
                bad_refs.push(format!("{} referenced {}", use_.target, r));
            } else if evaluated.contains(r) {
                bad_refs.push(format!("{} referenced evaluated cycle {}", use_.target, r));
            }
        }
    }
    v.check(
        "references from the evaluated individual's own NF pool",
        bad_refs,
    );
    v
}

/// Checks a manifest against the true provenance in the sidecars.
///
/// A recording whose sidecar disagrees with its manifest entry would put
/// one individual's cycles under another's name.
pub fn audit_manifest(actual: &[(ManifestEntry, Sidecar)], train: IndividualId) -> AuditVerdict {
    let mut v = AuditVerdict::new();
    let mut mixed = Vec::new();
    for (entry, sidecar) in actual {
        if entry.individual != sidecar.individual || entry.class != sidecar.class {
            let role = if entry.individual == train {
                "training"
            } else if sidecar.individual == train {
                "different-individual evaluation"
            } else {
                "test"
            };
            mixed.push(format!(
                "{} listed as {}/{} for {role} but holds {}/{}",
                entry.samples.display(),
                entry.class,
                entry.individual,
                sidecar.class,
                sidecar.individual
            ));
        }
    }
    v.check("manifest entries match recording provenance", mixed);
    v
}

fn dataset_sidecars(dataset: &Dataset) -> Vec<(ManifestEntry, Sidecar)> {
    dataset
        .recordings
        .iter()
        .map(|r| {
            (
                r.entry.clone(),
                Sidecar {
                    class: r.recording.class,
                    individual: r.recording.individual,
                    sample_rate: r.recording.sample_rate,
                    duration: r.recording.duration,
                },
            )
        })
        .collect()
}

/// Audits the dataset a config points at and, if given, a finished run.
pub fn audit_no_leakage(
    cfg: &ExperimentConfig,
    report: Option<&ResultsReport>,
) -> Result<AuditVerdict> {
    let (manifest, sidecars) = match &cfg.dataset {
        DatasetSource::Manifest { path } => Dataset::load_sidecars(path)?,
        source @ DatasetSource::Generate { .. } => {
            let dataset = super::resolve_dataset(source)?;
            let sidecars = dataset_sidecars(&dataset);
            (dataset.manifest, sidecars)
        }
    };
    let train = cfg.train_individual.unwrap_or(manifest.train_individual);
    let mut verdict = audit_manifest(&sidecars, train);
    if let Some(report) = report {
        verdict.merge(audit_report(report));
    }
    Ok(verdict)
}
