//! One-vs-rest linear max-margin classifier.
//!
//! Each class gets a linear separator trained by stochastic subgradient
//! descent on the L2-regularized hinge loss (Pegasos step schedule with
//! projection), with the bias carried as an extra constant input. The
//! reported weights are the average of the iterates over the second half of
//! training. Inputs are standardized with training statistics that are
//! stored in the model.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Exemplar, ModelBody, ModelConfig, ModelVariant, Prediction, TrainedModel};
use crate::error::{Error, Result};
use crate::pairwise::{PairwiseFeatureVector, ReferenceBank};
use crate::seed::rng_for;
use crate::signal::{ClassLabel, CycleId, IndividualId};

/// Columns with a standard deviation below this are dropped.
const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyper {
    /// L2 regularization strength.
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Reweight the hinge loss so both sides of each split count equally.
    pub balanced: bool,
}

impl Default for SvmHyper {
    fn default() -> Self {
        SvmHyper {
            lambda: 1e-3,
            epochs: 60,
            seed: 0,
            balanced: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    /// Classes seen in training, in canonical order.
    pub classes: Vec<ClassLabel>,
    /// Per class: one weight per active column, then the bias.
    pub weights: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Input columns used by the model.
    pub active: Vec<usize>,
    /// Zero-variance input columns excluded from the model.
    pub dropped: Vec<usize>,
    /// Names of the input columns; empty for raw inputs.
    pub layout: Vec<String>,
    pub hyper: SvmHyper,
    pub train_ids: Vec<CycleId>,
}

impl LinearSvm {
    pub fn input_len(&self) -> usize {
        self.mean.len()
    }

    /// Standardized active columns of a raw input vector.
    pub fn standardize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_len() {
            return Err(Error::LayoutMismatch {
                expected: self.input_len(),
                got: x.len(),
            });
        }
        Ok(self
            .active
            .iter()
            .map(|&c| (x[c] - self.mean[c]) / self.std[c])
            .collect())
    }

    /// Decision values of the trained classes for an already standardized
    /// input.
    pub fn decision_values_standardized(&self, z: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| {
                let (bias, w) = w.split_last().expect("bias present");
                w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + bias
            })
            .collect()
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.decision_values_standardized(&self.standardize(x)?))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let values = self.decision_values(x)?;
        let mut scores = vec![f64::NEG_INFINITY; ClassLabel::COUNT];
        for (class, v) in self.classes.iter().zip(values) {
            scores[class.index()] = v;
        }
        Ok(Prediction::from_scores(scores))
    }

    /// Predicts from a pairwise vector, picking the columns named in the
    /// model's layout.
    pub fn predict_pd(&self, v: &PairwiseFeatureVector) -> Result<Prediction> {
        if v.layout == self.layout {
            return self.predict(&v.values);
        }
        let x = self
            .layout
            .iter()
            .map(|name| {
                v.layout
                    .iter()
                    .position(|n| n == name)
                    .map(|i| v.values[i])
                    .ok_or(Error::LayoutMismatch {
                        expected: self.layout.len(),
                        got: v.layout.len(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        self.predict(&x)
    }
}

/// Center-crops or edge-pads `x` to exactly `len` samples.
pub fn fit_length(x: &[f64], len: usize) -> Vec<f64> {
    if x.is_empty() {
        return vec![0.0; len];
    }
    if x.len() >= len {
        let start = (x.len() - len) / 2;
        return x[start..start + len].to_vec();
    }
    let left = (len - x.len()) / 2;
    let right = len - x.len() - left;
    let mut out = Vec::with_capacity(len);
    out.extend(std::iter::repeat_n(x[0], left));
    out.extend_from_slice(x);
    out.extend(std::iter::repeat_n(x[x.len() - 1], right));
    out
}

fn column_stats(rows: &[&[f64]], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    (mean, var.into_iter().map(|v| (v / n).sqrt()).collect())
}

fn train_binary(z: &[Vec<f64>], y: &[f64], hyper: &SvmHyper, class: ClassLabel) -> Vec<f64> {
    let dim = z[0].len() + 1;
    let n = z.len();
    let n_pos = y.iter().filter(|&&v| v > 0.0).count().max(1) as f64;
    let n_neg = (n as f64 - n_pos).max(1.0);
    let weight = |label: f64| {
        if !hyper.balanced {
            1.0
        } else if label > 0.0 {
            n as f64 / (2.0 * n_pos)
        } else {
            n as f64 / (2.0 * n_neg)
        }
    };
    let radius = 1.0 / hyper.lambda.sqrt();

    let mut w = vec![0.0; dim];
    let mut avg = vec![0.0; dim];
    let mut averaged = 0usize;
    let mut t = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..hyper.epochs {
        let mut rng = rng_for(hyper.seed, &[class.index() as u64, epoch as u64]);
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (hyper.lambda * t as f64);
            let x = &z[i];
            let score = w[..dim - 1].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[dim - 1];
            let shrink = 1.0 - eta * hyper.lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if y[i] * score < 1.0 {
                let step = eta * weight(y[i]) * y[i];
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += step * xj;
                }
                w[dim - 1] += step;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
            if 2 * epoch >= hyper.epochs {
                averaged += 1;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += v;
                }
            }
        }
    }
    if averaged == 0 {
        return w;
    }
    avg.iter_mut().for_each(|a| *a /= averaged as f64);
    avg
}

/// Fits one separator per class present in `examples`.
pub fn train_svm(examples: &[Exemplar], layout: Vec<String>, hyper: SvmHyper) -> Result<LinearSvm> {
    let dim = examples
        .first()
        .map(|e| e.values.len())
        .ok_or(Error::EmptyInput)?;
    if !layout.is_empty() && layout.len() != dim {
        return Err(Error::LayoutMismatch {
            expected: layout.len(),
            got: dim,
        });
    }
    if let Some(e) = examples.iter().find(|e| e.values.len() != dim) {
        return Err(Error::LayoutMismatch {
            expected: dim,
            got: e.values.len(),
        });
    }
    let classes: Vec<ClassLabel> = ClassLabel::ALL
        .into_iter()
        .filter(|c| examples.iter().any(|e| e.label == *c))
        .collect();
    if classes.len() < 2 {
        let missing = ClassLabel::ALL
            .into_iter()
            .find(|c| !classes.contains(c))
            .expect("fewer than 2 of 11 present");
        return Err(Error::MissingClass(missing));
    }

    let rows: Vec<&[f64]> = examples.iter().map(|e| e.values.as_slice()).collect();
    let (mean, mut std) = column_stats(&rows, dim);
    let (active, dropped): (Vec<usize>, Vec<usize>) = (0..dim).partition(|&c| std[c] > MIN_STD);
    for &c in &dropped {
        std[c] = 1.0;
    }
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| active.iter().map(|&c| (r[c] - mean[c]) / std[c]).collect())
        .collect();

    let weights = classes
        .iter()
        .map(|&class| {
            let y: Vec<f64> = examples
                .iter()
                .map(|e| if e.label == class { 1.0 } else { -1.0 })
                .collect();
            train_binary(&z, &y, &hyper, class)
        })
        .collect();

    Ok(LinearSvm {
        classes,
        weights,
        mean,
        std,
        active,
        dropped,
        layout,
        hyper,
        train_ids: examples.iter().map(|e| e.id).collect(),
    })
}

/// Trains an SVM and wraps it as a model of the given variant.
pub fn svm_model(
    variant: ModelVariant,
    individual: IndividualId,
    examples: &[Exemplar],
    layout: Vec<String>,
    hyper: SvmHyper,
    config: ModelConfig,
    bank: Option<ReferenceBank>,
) -> Result<TrainedModel> {
    if let Some(e) = examples.iter().find(|e| e.id.individual != individual) {
        return Err(Error::MixedIndividuals {
            expected: individual.0,
            found: e.id.individual.0,
            id: e.id.to_string(),
        });
    }
    let svm = train_svm(examples, layout, hyper)?;
    Ok(TrainedModel {
        variant,
        individual,
        config,
        body: ModelBody::Svm(svm),
        bank,
    })
}
