use serde::{Deserialize, Serialize};

use super::{Prediction, Query, TrainedModel};
use crate::error::{Error, Result};
use crate::signal::ClassLabel;

/// How per-cycle predictions over consecutive cycles are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    #[default]
    MeanScores,
    MajorityVote,
}

impl std::str::FromStr for BatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_scores" | "mean" => Ok(BatchMode::MeanScores),
            "majority_vote" | "majority" => Ok(BatchMode::MajorityVote),
            _ => Err(Error::Parse {
                what: "batch mode",
                value: s.to_string(),
            }),
        }
    }
}

pub fn aggregate(preds: &[Prediction], mode: BatchMode) -> Result<Prediction> {
    if preds.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if preds.len() == 1 {
        return Ok(preds[0].clone());
    }
    let n = preds.len() as f64;
    let mut scores = vec![0.0; ClassLabel::COUNT];
    match mode {
        BatchMode::MeanScores => {
            for p in preds {
                for (s, v) in scores.iter_mut().zip(&p.scores) {
                    *s += v;
                }
            }
        }
        BatchMode::MajorityVote => {
            for p in preds {
                scores[p.label.index()] += 1.0;
            }
        }
    }
    scores.iter_mut().for_each(|s| *s /= n);
    Ok(Prediction::from_scores(scores))
}

/// Classifies a run of consecutive cycles from one recording as a whole.
pub fn predict_batch(
    model: &TrainedModel,
    queries: &[Query<'_>],
    mode: BatchMode,
) -> Result<Prediction> {
    let preds = queries
        .iter()
        .map(|q| model.predict(q))
        .collect::<Result<Vec<_>>>()?;
    aggregate(&preds, mode)
}
