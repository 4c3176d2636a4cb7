use serde::{Deserialize, Serialize};

use super::{Exemplar, ModelBody, ModelConfig, ModelVariant, Prediction, TrainedModel};
use crate::dtw::dtw_distance_bounded;
use crate::error::{Error, Result};
use crate::signal::{ClassLabel, IndividualId};

/// One-nearest-neighbour classifier under DTW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestNeighbor {
    pub exemplars: Vec<Exemplar>,
    pub band: Option<usize>,
}

impl NearestNeighbor {
    /// Minimum DTW distance to each class's exemplars.
    ///
    /// Each class keeps its own running minimum, and a DTW evaluation is
    /// abandoned as soon as it cannot beat it, so the minima are exact.
    /// Exemplars are visited closest-first by a coarse euclidean proxy so
    /// the minima tighten early.
    pub fn class_distances(&self, query: &[f64]) -> Result<Vec<f64>> {
        let sketch = coarse(query);
        let mut order: Vec<(f64, usize)> = self
            .exemplars
            .iter()
            .enumerate()
            .map(|(k, ex)| {
                let c = coarse(&ex.values);
                let d: f64 = sketch.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, k)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut best = vec![f64::INFINITY; ClassLabel::COUNT];
        for (_, k) in order {
            let ex = &self.exemplars[k];
            let slot = &mut best[ex.label.index()];
            if let Some(d) = dtw_distance_bounded(query, &ex.values, self.band, *slot)? {
                if d < *slot {
                    *slot = d;
                }
            }
        }
        Ok(best)
    }

    pub fn predict(&self, query: &[f64]) -> Result<Prediction> {
        let scores = self
            .class_distances(query)?
            .into_iter()
            .map(|d| -d)
            .collect();
        Ok(Prediction::from_scores(scores))
    }
}

const SKETCH_LEN: usize = 32;

/// Fixed-length sketch of a series by sampling at evenly spaced positions.
fn coarse(x: &[f64]) -> [f64; SKETCH_LEN] {
    let mut out = [0.0; SKETCH_LEN];
    if x.is_empty() {
        return out;
    }
    let last = (x.len() - 1) as f64;
    for (k, o) in out.iter_mut().enumerate() {
        *o = x[(k as f64 * last / (SKETCH_LEN - 1) as f64).round() as usize];
    }
    out
}

/// Stores the exemplars verbatim.
pub fn train_1nn(
    variant: ModelVariant,
    individual: IndividualId,
    exemplars: Vec<Exemplar>,
    config: ModelConfig,
) -> Result<TrainedModel> {
    if let Some(class) = ClassLabel::ALL
        .into_iter()
        .find(|c| !exemplars.iter().any(|e| e.label == *c))
    {
        return Err(Error::MissingClass(class));
    }
    if let Some(e) = exemplars.iter().find(|e| e.id.individual != individual) {
        return Err(Error::MixedIndividuals {
            expected: individual.0,
            found: e.id.individual.0,
            id: e.id.to_string(),
        });
    }
    Ok(TrainedModel {
        variant,
        individual,
        body: ModelBody::NearestNeighbor(NearestNeighbor {
            exemplars,
            band: config.band,
        }),
        config,
        bank: None,
    })
}
