//! Classifiers over raw cycles, relative features and pairwise vectors.

mod batch;
mod knn;
mod svm;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use batch::{aggregate, predict_batch, BatchMode};
pub use knn::{train_1nn, NearestNeighbor};
pub use svm::{fit_length, svm_model, train_svm, LinearSvm, SvmHyper};

use crate::error::{Error, Result};
use crate::pairwise::{Aggregation, PairwiseFeatureVector, ReferenceBank};
use crate::relative::{FeatureKind, RelativeFeature};
use crate::signal::{ClassLabel, CycleId, IndividualId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    #[serde(rename = "1nn_raw")]
    OneNnRaw,
    #[serde(rename = "1nn_amp")]
    OneNnAmp,
    #[serde(rename = "1nn_ts")]
    OneNnTs,
    #[serde(rename = "svm_pd")]
    SvmPd,
    #[serde(rename = "svm_raw")]
    SvmRaw,
}

impl ModelVariant {
    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::OneNnRaw => "1nn_raw",
            ModelVariant::OneNnAmp => "1nn_amp",
            ModelVariant::OneNnTs => "1nn_ts",
            ModelVariant::SvmPd => "svm_pd",
            ModelVariant::SvmRaw => "svm_raw",
        }
    }

    /// The kind of input a model of this variant consumes.
    fn expects(self) -> &'static str {
        match self {
            ModelVariant::OneNnRaw | ModelVariant::SvmRaw => "raw",
            ModelVariant::OneNnAmp => "amp",
            ModelVariant::OneNnTs => "ts",
            ModelVariant::SvmPd => "pd",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A stored training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub id: CycleId,
    pub label: ClassLabel,
    pub values: Vec<f64>,
}

/// What a model is asked to classify.
#[derive(Debug, Clone, Copy)]
pub enum Query<'a> {
    Raw(&'a [f64]),
    Relative(&'a RelativeFeature),
    Pairwise(&'a PairwiseFeatureVector),
}

impl Query<'_> {
    fn kind(&self) -> &'static str {
        match self {
            Query::Raw(_) => "raw",
            Query::Relative(f) => match f.kind {
                FeatureKind::Amp => "amp",
                FeatureKind::Ts => "ts",
                FeatureKind::Euclidean => "euclidean",
                FeatureKind::Pdrop => "pdrop",
            },
            Query::Pairwise(_) => "pd",
        }
    }
}

/// Predicted class plus one score per class in [`ClassLabel::ALL`] order.
///
/// Scores are "higher is better": negative nearest distances for 1NN,
/// decision values for the SVM. Classes a model never saw score `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: ClassLabel,
    pub scores: Vec<f64>,
}

impl Prediction {
    /// Picks the best score; ties go to the class listed first.
    pub fn from_scores(scores: Vec<f64>) -> Prediction {
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        Prediction {
            label: ClassLabel::from_index(best).expect("one score per class"),
            scores,
        }
    }
}

/// Settings echoed into every model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub band: Option<usize>,
    pub n_refs: usize,
    pub aggregation: Aggregation,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelBody {
    NearestNeighbor(NearestNeighbor),
    Svm(LinearSvm),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub variant: ModelVariant,
    pub individual: IndividualId,
    pub config: ModelConfig,
    pub body: ModelBody,
    /// Reference bank used to build pairwise vectors, for `svm_pd`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bank: Option<ReferenceBank>,
}

impl TrainedModel {
    pub fn predict(&self, query: &Query<'_>) -> Result<Prediction> {
        if query.kind() != self.variant.expects() {
            return Err(Error::KindMismatch {
                expected: self.variant.expects(),
                got: query.kind(),
            });
        }
        match (&self.body, query) {
            (ModelBody::NearestNeighbor(nn), Query::Raw(x)) => nn.predict(x),
            (ModelBody::NearestNeighbor(nn), Query::Relative(f)) => nn.predict(&f.values),
            (ModelBody::Svm(svm), Query::Raw(x)) => svm.predict(&fit_length(x, svm.input_len())),
            (ModelBody::Svm(svm), Query::Pairwise(v)) => svm.predict_pd(v),
            _ => Err(Error::KindMismatch {
                expected: self.variant.expects(),
                got: query.kind(),
            }),
        }
    }

    /// Ids of every stored exemplar or training vector.
    pub fn training_ids(&self) -> Vec<CycleId> {
        let mut ids: Vec<CycleId> = match &self.body {
            ModelBody::NearestNeighbor(nn) => nn.exemplars.iter().map(|e| e.id).collect(),
            ModelBody::Svm(svm) => svm.train_ids.clone(),
        };
        if let Some(bank) = &self.bank {
            ids.extend(bank.member_ids());
        }
        ids
    }

    /// Training ids that do not belong to the model's individual.
    pub fn foreign_ids(&self) -> Vec<CycleId> {
        self.training_ids()
            .into_iter()
            .filter(|id| id.individual != self.individual)
            .collect()
    }
}
