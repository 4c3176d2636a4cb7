use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{
    BatchAccuracy, MethodResult, Provenance, ReferenceUse, ResultsReport, REPORT_VERSION,
};
use super::{DatasetSource, ExperimentConfig, Method};
use crate::classify::{
    aggregate, fit_length, svm_model, train_1nn, BatchMode, Exemplar, ModelConfig, ModelVariant,
    Prediction, Query, TrainedModel,
};
use crate::error::{Error, Result};
use crate::pairwise::{
    build_pd_vector, build_reference_bank, PairwiseFeatureVector, ReferenceBank,
};
use crate::relative::{delta_amp_ts, DeltaConfig, FeatureKind, RefPolicy, RelativeFeature};
use crate::seed::{derive_seed, rng_for};
use crate::signal::{
    estimate_impact_frequency, normalize_cycle, segment_recording, ClassLabel, Cycle, CycleId,
    IndividualId, NormStats,
};
use crate::storage::Dataset;
use crate::synth::{benchmark_dataset, GeneratorConfig};

const TAG_SPLIT: u64 = 1;
const TAG_REF: u64 = 2;
const TAG_BANK: u64 = 3;
const TAG_SVM: u64 = 4;

/// Name of the relative-frequency extra in pairwise vectors.
const FREQUENCY_EXTRA: &str = "f";

pub fn resolve_dataset(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Manifest { path } => Dataset::load(path),
        DatasetSource::Generate {
            config,
            seed,
            cycles_per_case,
        } => {
            let cfg = match config {
                Some(path) => GeneratorConfig::from_toml(
                    &std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
                )?,
                None => GeneratorConfig::stock(),
            };
            Ok(benchmark_dataset(&cfg, *cycles_per_case, *seed)?.0)
        }
    }
}

/// Normalized cycles of one individual.
#[derive(Debug, Clone)]
pub struct IndividualCycles {
    pub stats: NormStats,
    /// Leading NF cycles reserved as references.
    pub pool: Vec<Cycle>,
    pub pool_frequency: f64,
    /// Balanced evaluation cycles per class, in temporal order.
    pub targets: BTreeMap<ClassLabel, Vec<Cycle>>,
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train_individual: IndividualId,
    pub test_individuals: Vec<IndividualId>,
    pub cycles_per_case: usize,
    pub sample_rate: f64,
    pub individuals: BTreeMap<IndividualId, IndividualCycles>,
    /// Training split of the training individual, class then temporal order.
    pub train: Vec<Cycle>,
    pub holdout: Vec<Cycle>,
}

impl PreparedData {
    /// All cycles of the test individuals, grouped by (individual, class).
    pub fn different(&self) -> Vec<Cycle> {
        self.test_individuals
            .iter()
            .flat_map(|i| self.individuals[i].targets.values().flatten().cloned())
            .collect()
    }
}

/// Segments, balances, normalizes and splits a dataset.
pub fn prepare(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<PreparedData> {
    cfg.validate()?;
    let manifest = &dataset.manifest;
    manifest.validate()?;
    let train_individual = cfg.train_individual.unwrap_or(manifest.train_individual);
    if !manifest.individuals.contains(&train_individual) {
        return Err(Error::ManifestInvalid(format!(
            "train individual {train_individual} is not in the manifest"
        )));
    }
    let test_individuals: Vec<IndividualId> = if cfg.train_individual.is_some() {
        manifest
            .individuals
            .iter()
            .copied()
            .filter(|&i| i != train_individual)
            .collect()
    } else {
        manifest.test_individuals.clone()
    };

    let segmented = dataset
        .recordings
        .par_iter()
        .map(|r| {
            let cycles = segment_recording(&r.recording, &cfg.segmentation)?;
            Ok(((r.entry.individual, r.entry.class), cycles))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by_case: BTreeMap<(IndividualId, ClassLabel), Vec<Cycle>> =
        segmented.into_iter().collect();

    let mut pools = BTreeMap::new();
    for &ind in &manifest.individuals {
        let nf = by_case
            .get_mut(&(ind, ClassLabel::NF))
            .expect("validated manifest lists every case");
        if nf.len() <= cfg.ref_pool_size {
            return Err(Error::ClassImbalanceUnfixable(format!(
                "individual {ind} has {} NF cycles; {} are needed for the reference pool plus targets",
                nf.len(),
                cfg.ref_pool_size + 1
            )));
        }
        let targets = nf.split_off(cfg.ref_pool_size);
        pools.insert(ind, std::mem::replace(nf, targets));
    }

    let requested = cfg.cycles_per_case.unwrap_or(manifest.cycles_per_case);
    let available = by_case.values().map(Vec::len).min().unwrap_or(0);
    let per_case = requested.min(available);
    let n_holdout = ((per_case as f64) * cfg.holdout_fraction).round() as usize;
    let n_train = per_case.saturating_sub(n_holdout);
    if n_holdout == 0 || n_train <= cfg.n_refs {
        return Err(Error::ClassImbalanceUnfixable(format!(
            "{per_case} cycles per case leave {n_train} training and {n_holdout} held-out cycles per class; \
             need more than {} training and at least 1 held out",
            cfg.n_refs
        )));
    }

    let mut individuals = BTreeMap::new();
    for (ind, pool) in pools {
        let stats = NormStats::from_cycles(&pool)?;
        let pool = pool
            .iter()
            .map(|c| normalize_cycle(c, &stats))
            .collect::<Result<Vec<_>>>()?;
        let pool_frequency = estimate_impact_frequency(&pool)?;
        let mut targets = BTreeMap::new();
        for class in ClassLabel::ALL {
            let cycles = &by_case[&(ind, class)][..per_case];
            let normalized = cycles
                .iter()
                .map(|c| normalize_cycle(c, &stats))
                .collect::<Result<Vec<_>>>()?;
            targets.insert(class, normalized);
        }
        individuals.insert(
            ind,
            IndividualCycles {
                stats,
                pool,
                pool_frequency,
                targets,
            },
        );
    }

    let mut train = Vec::new();
    let mut holdout = Vec::new();
    for (class, cycles) in &individuals[&train_individual].targets {
        let mut order: Vec<usize> = (0..cycles.len()).collect();
        order.shuffle(&mut rng_for(cfg.seed, &[TAG_SPLIT, class.index() as u64]));
        let (held, kept) = order.split_at(n_holdout);
        let (mut held, mut kept) = (held.to_vec(), kept.to_vec());
        held.sort_unstable();
        kept.sort_unstable();
        holdout.extend(held.iter().map(|&i| cycles[i].clone()));
        train.extend(kept.iter().map(|&i| cycles[i].clone()));
    }

    Ok(PreparedData {
        train_individual,
        test_individuals,
        cycles_per_case: per_case,
        sample_rate: manifest.sample_rate,
        individuals,
        train,
        holdout,
    })
}

/// Relative features of one cycle against each of its references.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleFeatures {
    pub id: CycleId,
    pub label: ClassLabel,
    pub refs: Vec<CycleId>,
    pub amp: Vec<RelativeFeature>,
    pub ts: Vec<RelativeFeature>,
    /// Cycle rate relative to the individual's reference pool.
    pub frequency_ratio: f64,
}

fn cycle_features(
    cycle: &Cycle,
    individual: IndividualId,
    data: &IndividualCycles,
    cfg: &ExperimentConfig,
) -> Result<CycleFeatures> {
    let mut rng = rng_for(
        cfg.seed,
        &[
            TAG_REF,
            individual.0 as u64,
            cycle.class.index() as u64,
            cycle.cycle_index as u64,
        ],
    );
    let picks = rand::seq::index::sample(&mut rng, data.pool.len(), cfg.refs_per_cycle);
    let delta = DeltaConfig {
        band: cfg.band,
        window: None,
        policy: RefPolicy::Strict,
    };
    let mut out = CycleFeatures {
        id: cycle.id(),
        label: cycle.class,
        refs: Vec::with_capacity(picks.len()),
        amp: Vec::with_capacity(picks.len()),
        ts: Vec::with_capacity(picks.len()),
        frequency_ratio: (cycle.sample_rate / cycle.len() as f64) / data.pool_frequency,
    };
    for i in picks.iter() {
        let reference = &data.pool[i];
        let (amp, ts) = delta_amp_ts(reference, cycle, &delta)?;
        out.refs.push(reference.id());
        out.amp.push(amp);
        out.ts.push(ts);
    }
    Ok(out)
}

fn features_of(
    cycles: &[Cycle],
    individual_of: impl Fn(&Cycle) -> IndividualId + Sync,
    prepared: &PreparedData,
    cfg: &ExperimentConfig,
) -> Result<Vec<CycleFeatures>> {
    cycles
        .par_iter()
        .map(|c| {
            let ind = individual_of(c);
            cycle_features(c, ind, &prepared.individuals[&ind], cfg)
        })
        .collect()
}

/// Pairwise vectors for every reference of every cycle.
fn pd_vectors(
    feats: &[CycleFeatures],
    bank: &ReferenceBank,
    cfg: &ExperimentConfig,
) -> Result<Vec<Vec<PairwiseFeatureVector>>> {
    feats
        .par_iter()
        .map(|f| {
            let extras = [(FREQUENCY_EXTRA.to_string(), f.frequency_ratio)];
            f.amp
                .iter()
                .zip(&f.ts)
                .map(|(a, t)| {
                    build_pd_vector(
                        bank,
                        &[a.clone(), t.clone()],
                        &extras,
                        cfg.aggregation,
                        cfg.band,
                    )
                })
                .collect()
        })
        .collect()
}

/// Which evaluation cycles a prediction set covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EvalSet {
    Holdout,
    Different,
}

/// Features and pairwise vectors computed once and shared by the methods.
struct Workspace<'a> {
    cfg: &'a ExperimentConfig,
    prepared: &'a PreparedData,
    different: Vec<Cycle>,
    train_feats: Vec<CycleFeatures>,
    holdout_feats: Vec<CycleFeatures>,
    different_feats: Vec<CycleFeatures>,
    bank: Option<ReferenceBank>,
    /// Training cycles left after removing bank members, with their
    /// pairwise vectors.
    svm_train: Vec<CycleFeatures>,
    svm_train_pd: Vec<Vec<PairwiseFeatureVector>>,
    holdout_pd: Vec<Vec<PairwiseFeatureVector>>,
    different_pd: Vec<Vec<PairwiseFeatureVector>>,
}

impl<'a> Workspace<'a> {
    fn build(
        cfg: &'a ExperimentConfig,
        prepared: &'a PreparedData,
        methods: &[Method],
        evaluate: bool,
    ) -> Result<Workspace<'a>> {
        let relative = methods.iter().any(|m| m.is_relative());
        let pairwise = methods.iter().any(|m| m.uses_pairwise());
        let train_ind = prepared.train_individual;
        let mut ws = Workspace {
            cfg,
            prepared,
            different: if evaluate {
                prepared.different()
            } else {
                Vec::new()
            },
            train_feats: Vec::new(),
            holdout_feats: Vec::new(),
            different_feats: Vec::new(),
            bank: None,
            svm_train: Vec::new(),
            svm_train_pd: Vec::new(),
            holdout_pd: Vec::new(),
            different_pd: Vec::new(),
        };
        if !relative {
            return Ok(ws);
        }
        ws.train_feats = features_of(&prepared.train, |_| train_ind, prepared, cfg)?;
        if evaluate {
            ws.holdout_feats = features_of(&prepared.holdout, |_| train_ind, prepared, cfg)?;
            ws.different_feats = features_of(&ws.different, |c| c.individual, prepared, cfg)?;
        }
        if pairwise {
            let banked: Vec<RelativeFeature> = ws
                .train_feats
                .iter()
                .flat_map(|f| [f.amp[0].clone(), f.ts[0].clone()])
                .collect();
            let bank = build_reference_bank(
                &banked,
                train_ind,
                &[FeatureKind::Amp, FeatureKind::Ts],
                cfg.n_refs,
                derive_seed(cfg.seed, &[TAG_BANK]),
            )?;
            let members = bank.member_ids();
            ws.svm_train = ws
                .train_feats
                .iter()
                .filter(|f| !members.contains(&f.id))
                .cloned()
                .collect();
            ws.svm_train_pd = pd_vectors(&ws.svm_train, &bank, cfg)?;
            if evaluate {
                ws.holdout_pd = pd_vectors(&ws.holdout_feats, &bank, cfg)?;
                ws.different_pd = pd_vectors(&ws.different_feats, &bank, cfg)?;
            }
            ws.bank = Some(bank);
        }
        Ok(ws)
    }

    fn model_config(&self) -> ModelConfig {
        ModelConfig {
            band: self.cfg.band,
            n_refs: self.cfg.n_refs,
            aggregation: self.cfg.aggregation,
            seed: self.cfg.seed,
        }
    }

    fn train(&self, method: Method) -> Result<TrainedModel> {
        let ind = self.prepared.train_individual;
        let cfg = self.model_config();
        let from_feature = |f: &CycleFeatures, values: Vec<f64>| Exemplar {
            id: f.id,
            label: f.label,
            values,
        };
        match method {
            Method::OneNnRaw => {
                let ex = self
                    .prepared
                    .train
                    .iter()
                    .map(|c| Exemplar {
                        id: c.id(),
                        label: c.class,
                        values: c.samples.clone(),
                    })
                    .collect();
                train_1nn(ModelVariant::OneNnRaw, ind, ex, cfg)
            }
            Method::SvmRaw => {
                let mut lengths: Vec<usize> = self.prepared.train.iter().map(Cycle::len).collect();
                lengths.sort_unstable();
                let len = lengths[lengths.len() / 2];
                let ex: Vec<Exemplar> = self
                    .prepared
                    .train
                    .iter()
                    .map(|c| Exemplar {
                        id: c.id(),
                        label: c.class,
                        values: fit_length(&c.samples, len),
                    })
                    .collect();
                svm_model(
                    ModelVariant::SvmRaw,
                    ind,
                    &ex,
                    Vec::new(),
                    self.svm_hyper(method),
                    cfg,
                    None,
                )
            }
            Method::OneNnAmp => {
                let ex = self
                    .train_feats
                    .iter()
                    .map(|f| from_feature(f, f.amp[0].values.clone()))
                    .collect();
                train_1nn(ModelVariant::OneNnAmp, ind, ex, cfg)
            }
            Method::OneNnTs => {
                let ex = self
                    .train_feats
                    .iter()
                    .map(|f| from_feature(f, f.ts[0].values.clone()))
                    .collect();
                train_1nn(ModelVariant::OneNnTs, ind, ex, cfg)
            }
            _ => {
                let bank = self.bank.clone().expect("bank built for pairwise methods");
                let mut layout = Vec::new();
                let ex: Vec<Exemplar> = self
                    .svm_train
                    .iter()
                    .zip(&self.svm_train_pd)
                    .map(|(f, pd)| {
                        let v = pd[0].select(|name| method.keeps_column(name));
                        layout = v.layout.clone();
                        from_feature(f, v.values)
                    })
                    .collect();
                svm_model(
                    ModelVariant::SvmPd,
                    ind,
                    &ex,
                    layout,
                    self.svm_hyper(method),
                    cfg,
                    Some(bank),
                )
            }
        }
    }

    fn svm_hyper(&self, method: Method) -> crate::classify::SvmHyper {
        let mut hyper = self.cfg.svm;
        hyper.seed = derive_seed(self.cfg.seed, &[TAG_SVM, method as u64]);
        hyper
    }

    fn eval_cycles(&self, set: EvalSet) -> &[Cycle] {
        match set {
            EvalSet::Holdout => &self.prepared.holdout,
            EvalSet::Different => &self.different,
        }
    }

    /// One prediction per evaluation cycle, averaged over its references.
    fn predict(
        &self,
        model: &TrainedModel,
        method: Method,
        set: EvalSet,
    ) -> Result<Vec<Prediction>> {
        let cycles = self.eval_cycles(set);
        let (feats, pds) = match set {
            EvalSet::Holdout => (&self.holdout_feats, &self.holdout_pd),
            EvalSet::Different => (&self.different_feats, &self.different_pd),
        };
        (0..cycles.len())
            .into_par_iter()
            .map(|i| {
                let per_ref: Vec<Prediction> = match method {
                    Method::OneNnRaw | Method::SvmRaw => {
                        vec![model.predict(&Query::Raw(&cycles[i].samples))?]
                    }
                    Method::OneNnAmp => feats[i]
                        .amp
                        .iter()
                        .map(|f| model.predict(&Query::Relative(f)))
                        .collect::<Result<_>>()?,
                    Method::OneNnTs => feats[i]
                        .ts
                        .iter()
                        .map(|f| model.predict(&Query::Relative(f)))
                        .collect::<Result<_>>()?,
                    _ => pds[i]
                        .iter()
                        .map(|v| model.predict(&Query::Pairwise(v)))
                        .collect::<Result<_>>()?,
                };
                aggregate(&per_ref, BatchMode::MeanScores)
            })
            .collect()
    }

    fn references(&self) -> Vec<ReferenceUse> {
        self.train_feats
            .iter()
            .chain(&self.holdout_feats)
            .chain(&self.different_feats)
            .map(|f| ReferenceUse {
                target: f.id,
                refs: f.refs.clone(),
            })
            .collect()
    }
}

/// Fraction of cycles whose batch prediction is correct.
///
/// Cycles are grouped into runs of the same individual and class. Each
/// cycle is classified together with the following cycles of its run
/// (shifted back at the end of the run) so every cycle is scored once.
fn batch_accuracy(
    cycles: &[Cycle],
    preds: &[Prediction],
    batch: usize,
    mode: BatchMode,
) -> Result<f64> {
    if cycles.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    let mut start = 0;
    while start < cycles.len() {
        let key = (cycles[start].individual, cycles[start].class);
        let mut end = start;
        while end < cycles.len() && (cycles[end].individual, cycles[end].class) == key {
            end += 1;
        }
        let run = &preds[start..end];
        let width = batch.min(run.len());
        for j in 0..run.len() {
            let from = j.min(run.len() - width);
            if aggregate(&run[from..from + width], mode)?.label == key.1 {
                correct += 1;
            }
        }
        start = end;
    }
    Ok(correct as f64 / cycles.len() as f64)
}

fn confusion(cycles: &[Cycle], preds: &[Prediction]) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; ClassLabel::COUNT]; ClassLabel::COUNT];
    for (c, p) in cycles.iter().zip(preds) {
        m[c.class.index()][p.label.index()] += 1;
    }
    m
}

fn evaluate_method(ws: &Workspace<'_>, method: Method) -> Result<(MethodResult, Vec<CycleId>)> {
    let started = Instant::now();
    let model = ws.train(method)?;
    let same = ws.predict(&model, method, EvalSet::Holdout)?;
    let diff = ws.predict(&model, method, EvalSet::Different)?;
    let mode = ws.cfg.batch_mode;

    let mut sizes = ws.cfg.batch_sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let by_batch = sizes
        .iter()
        .map(|&b| {
            Ok(BatchAccuracy {
                batch_size: b,
                same: batch_accuracy(&ws.prepared.holdout, &same, b, mode)?,
                different: batch_accuracy(&ws.different, &diff, b, mode)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let single = by_batch
        .iter()
        .find(|b| b.batch_size == 1)
        .expect("batch size 1 is required");

    let mut by_individual = BTreeMap::new();
    for &ind in &ws.prepared.test_individuals {
        let (cycles, preds): (Vec<Cycle>, Vec<Prediction>) = ws
            .different
            .iter()
            .zip(&diff)
            .filter(|(c, _)| c.individual == ind)
            .map(|(c, p)| (c.clone(), p.clone()))
            .unzip();
        by_individual.insert(ind, batch_accuracy(&cycles, &preds, 1, mode)?);
    }

    let layout = match &model.body {
        crate::classify::ModelBody::Svm(svm) => svm.layout.clone(),
        _ => Vec::new(),
    };
    let result = MethodResult {
        method,
        accuracy_same: single.same,
        accuracy_different: single.different,
        accuracy_by_batch_size: by_batch.clone(),
        accuracy_by_individual: by_individual,
        confusion: confusion(&ws.different, &diff),
        training_examples: model.training_ids().len(),
        input_layout: layout,
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    Ok((result, model.training_ids()))
}

/// Runs every configured method on a loaded dataset.
pub fn run_on_dataset(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<ResultsReport> {
    let started = Instant::now();
    let prepared = prepare(cfg, dataset)?;
    let ws = Workspace::build(cfg, &prepared, &cfg.methods, true)?;

    let mut methods = Vec::with_capacity(cfg.methods.len());
    let mut model_training_ids = BTreeMap::new();
    for &method in &cfg.methods {
        let (result, ids) = evaluate_method(&ws, method)?;
        methods.push(result);
        model_training_ids.insert(method.name().to_string(), ids);
    }

    let provenance = Provenance {
        train_individual: prepared.train_individual,
        test_individuals: prepared.test_individuals.clone(),
        train_ids: prepared.train.iter().map(Cycle::id).collect(),
        holdout_ids: prepared.holdout.iter().map(Cycle::id).collect(),
        different_ids: ws.different.iter().map(Cycle::id).collect(),
        pools: prepared
            .individuals
            .iter()
            .map(|(i, d)| (*i, d.pool.iter().map(Cycle::id).collect()))
            .collect(),
        references: ws.references(),
        bank_ids: ws
            .bank
            .as_ref()
            .map(|b| b.member_ids().into_iter().collect())
            .unwrap_or_default(),
        model_training_ids,
    };
    Ok(ResultsReport {
        version: REPORT_VERSION,
        config: cfg.clone(),
        aggregation: cfg.aggregation.name().to_string(),
        cycles_per_case: prepared.cycles_per_case,
        sample_rate: prepared.sample_rate,
        methods,
        provenance,
        wall_clock_s: started.elapsed().as_secs_f64(),
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsReport> {
    cfg.validate()?;
    let dataset = resolve_dataset(&cfg.dataset)?;
    run_on_dataset(cfg, &dataset)
}

/// Trains one method on the training split without evaluating it.
pub fn train_method(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    method: Method,
) -> Result<TrainedModel> {
    let prepared = prepare(cfg, dataset)?;
    let ws = Workspace::build(cfg, &prepared, &[method], false)?;
    ws.train(method)
}

/// Relative features and pairwise vectors of every evaluated cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    /// Amplitude then time-shift feature for each reference of each cycle:
    /// training split, held-out split, then the test individuals.
    pub features: Vec<RelativeFeature>,
    /// One vector per reference of each cycle. Bank members are omitted.
    pub pairwise: Vec<(CycleId, PairwiseFeatureVector)>,
}

/// Computes the features every relative method consumes.
pub fn extract_features(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<FeatureSet> {
    let prepared = prepare(cfg, dataset)?;
    let ws = Workspace::build(cfg, &prepared, &[Method::SvmAmpTsF], true)?;
    let all = || {
        ws.train_feats
            .iter()
            .chain(&ws.holdout_feats)
            .chain(&ws.different_feats)
    };
    let features = all()
        .flat_map(|f| {
            f.amp
                .iter()
                .zip(&f.ts)
                .flat_map(|(a, t)| [a.clone(), t.clone()])
        })
        .collect();
    let pairwise = ws
        .svm_train
        .iter()
        .zip(&ws.svm_train_pd)
        .chain(ws.holdout_feats.iter().zip(&ws.holdout_pd))
        .chain(ws.different_feats.iter().zip(&ws.different_pd))
        .flat_map(|(f, vs)| vs.iter().map(move |v| (f.id, v.clone())))
        .collect();
    Ok(FeatureSet { features, pairwise })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub train_individual: IndividualId,
    pub accuracy_same: BTreeMap<Method, f64>,
    pub accuracy_different: BTreeMap<Method, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Results of re-running with every individual as the trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSweep {
    pub runs: Vec<SweepRun>,
    /// Spread of accuracy_different across trainers.
    pub spread: BTreeMap<Method, Spread>,
}

pub fn sweep_reference(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<ReferenceSweep> {
    let mut runs = Vec::new();
    for &ind in &dataset.manifest.individuals {
        let mut c = cfg.clone();
        c.train_individual = Some(ind);
        let report = run_on_dataset(&c, dataset)?;
        runs.push(SweepRun {
            train_individual: ind,
            accuracy_same: report
                .methods
                .iter()
                .map(|m| (m.method, m.accuracy_same))
                .collect(),
            accuracy_different: report
                .methods
                .iter()
                .map(|m| (m.method, m.accuracy_different))
                .collect(),
        });
    }
    let methods: BTreeSet<Method> = runs
        .iter()
        .flat_map(|r| r.accuracy_different.keys().copied())
        .collect();
    let spread = methods
        .into_iter()
        .map(|m| {
            let v: Vec<f64> = runs.iter().map(|r| r.accuracy_different[&m]).collect();
            let s = Spread {
                min: v.iter().copied().fold(f64::INFINITY, f64::min),
                max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean: v.iter().sum::<f64>() / v.len() as f64,
            };
            (m, s)
        })
        .collect();
    Ok(ReferenceSweep { runs, spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::IndividualId;

    fn cycle(class: ClassLabel, individual: u32, k: usize) -> Cycle {
        Cycle::new(vec![0.0], class, IndividualId(individual), k, 1.0).unwrap()
    }

    fn pred(class: ClassLabel) -> Prediction {
        let mut s = vec![0.0; ClassLabel::COUNT];
        s[class.index()] = 1.0;
        Prediction::from_scores(s)
    }

    #[test]
    fn batch_one_is_single_cycle_accuracy() {
        let cycles: Vec<Cycle> = (0..4).map(|k| cycle(ClassLabel::A, 1, k)).collect();
        let preds = vec![
            pred(ClassLabel::A),
            pred(ClassLabel::B),
            pred(ClassLabel::A),
            pred(ClassLabel::A),
        ];
        assert_eq!(
            batch_accuracy(&cycles, &preds, 1, BatchMode::MeanScores).unwrap(),
            0.75
        );
        assert_eq!(
            batch_accuracy(&cycles, &preds, 4, BatchMode::MeanScores).unwrap(),
            1.0
        );
        assert_eq!(
            batch_accuracy(&cycles, &preds, 50, BatchMode::MeanScores).unwrap(),
            1.0
        );
    }

    #[test]
    fn batches_do_not_cross_runs() {
        let mut cycles: Vec<Cycle> = (0..3).map(|k| cycle(ClassLabel::A, 1, k)).collect();
        cycles.extend((0..3).map(|k| cycle(ClassLabel::B, 1, k)));
        let mut preds = vec![pred(ClassLabel::A); 3];
        preds.extend(vec![pred(ClassLabel::B); 3]);
        assert_eq!(
            batch_accuracy(&cycles, &preds, 5, BatchMode::MeanScores).unwrap(),
            1.0
        );
    }

    #[test]
    fn confusion_rows_sum_to_counts() {
        let cycles = vec![
            cycle(ClassLabel::NF, 1, 0),
            cycle(ClassLabel::NF, 1, 1),
            cycle(ClassLabel::R, 1, 0),
        ];
        let preds = vec![
            pred(ClassLabel::NF),
            pred(ClassLabel::R),
            pred(ClassLabel::NF),
        ];
        let m = confusion(&cycles, &preds);
        assert_eq!(m[0].iter().sum::<usize>(), 2);
        assert_eq!(m[ClassLabel::R.index()][0], 1);
    }
}
