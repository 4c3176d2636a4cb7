//! Fixed-length pairwise-distance vectors built from relative features.
//!
//! For every class and feature kind a small bank of reference features is
//! drawn from the training individual. A target cycle's feature is compared
//! by DTW to each banked vector of a class; the per-class distances are
//! aggregated into one entry. Entries are laid out class-major within each
//! kind, followed by named scalar extras.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dtw::dtw_distance_only;
use crate::error::{Error, Result};
use crate::relative::{FeatureKind, RelativeFeature};
use crate::seed::rng_for;
use crate::signal::{ClassLabel, CycleId, IndividualId};

/// How the n distances to one class's references collapse into one entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// `sqrt(sum of distances) / n`.
    #[default]
    RootSum,
    /// `sum of distances / n`.
    Mean,
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::RootSum => "root_sum",
            Aggregation::Mean => "mean",
        }
    }

    pub fn apply(self, distances: &[f64]) -> f64 {
        let n = distances.len() as f64;
        let sum: f64 = distances.iter().sum();
        match self {
            Aggregation::RootSum => sum.sqrt() / n,
            Aggregation::Mean => sum / n,
        }
    }
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "root_sum" => Ok(Aggregation::RootSum),
            "mean" => Ok(Aggregation::Mean),
            _ => Err(Error::Parse {
                what: "aggregation",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankSlot {
    pub class: ClassLabel,
    pub kind: FeatureKind,
    pub features: Vec<RelativeFeature>,
}

/// Reference features per (class, kind), all from one individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBank {
    pub individual: IndividualId,
    pub n: usize,
    pub kinds: Vec<FeatureKind>,
    /// Ordered by class, then by kind.
    pub slots: Vec<BankSlot>,
}

impl ReferenceBank {
    pub fn slot(&self, class: ClassLabel, kind: FeatureKind) -> Option<&BankSlot> {
        let k = self.kinds.iter().position(|&x| x == kind)?;
        self.slots.get(class.index() * self.kinds.len() + k)
    }

    /// Target ids of every banked feature.
    pub fn member_ids(&self) -> BTreeSet<CycleId> {
        self.slots
            .iter()
            .flat_map(|s| s.features.iter().map(|f| f.target_id))
            .collect()
    }
}

/// Draws `n` reference features per (class, kind) from the training
/// individual's features. Selection depends only on `seed` and the set of
/// candidates, not on their order.
pub fn build_reference_bank(
    train_features: &[RelativeFeature],
    individual: IndividualId,
    kinds: &[FeatureKind],
    n: usize,
    seed: u64,
) -> Result<ReferenceBank> {
    if let Some(f) = train_features
        .iter()
        .find(|f| f.target_id.individual != individual)
    {
        return Err(Error::MixedIndividuals {
            expected: individual.0,
            found: f.target_id.individual.0,
            id: f.target_id.to_string(),
        });
    }
    let mut slots = Vec::with_capacity(ClassLabel::COUNT * kinds.len());
    for class in ClassLabel::ALL {
        for &kind in kinds {
            let mut candidates: Vec<&RelativeFeature> = train_features
                .iter()
                .filter(|f| f.kind == kind && f.target_id.class == class)
                .collect();
            if candidates.len() < n || n == 0 {
                return Err(Error::InsufficientReferences {
                    class,
                    kind: kind.name(),
                    have: candidates.len(),
                    need: n.max(1),
                });
            }
            candidates.sort_by_key(|f| (f.target_id, f.ref_id));
            let mut rng = rng_for(seed, &[class.index() as u64, kind as u64]);
            candidates.shuffle(&mut rng);
            slots.push(BankSlot {
                class,
                kind,
                features: candidates.into_iter().take(n).cloned().collect(),
            });
        }
    }
    Ok(ReferenceBank {
        individual,
        n,
        kinds: kinds.to_vec(),
        slots,
    })
}

/// Aggregated DTW distance from `feat` to the banked features of one class.
pub fn pairwise_entry(
    bank: &ReferenceBank,
    class: ClassLabel,
    kind: FeatureKind,
    feat: &RelativeFeature,
    aggregation: Aggregation,
    band: Option<usize>,
) -> Result<f64> {
    if feat.kind != kind {
        return Err(Error::KindMismatch {
            expected: kind.name(),
            got: feat.kind.name(),
        });
    }
    let slot = bank
        .slot(class, kind)
        .ok_or(Error::MissingKind(kind.name()))?;
    let distances = slot
        .features
        .iter()
        .map(|r| dtw_distance_only(&r.values, &feat.values, band))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregation.apply(&distances))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseFeatureVector {
    pub values: Vec<f64>,
    pub layout: Vec<String>,
}

impl PairwiseFeatureVector {
    pub fn layout_string(&self) -> String {
        self.layout.join(",")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entries whose layout name passes `keep`, in layout order.
    pub fn select(&self, keep: impl Fn(&str) -> bool) -> PairwiseFeatureVector {
        let (layout, values) = self
            .layout
            .iter()
            .zip(&self.values)
            .filter(|(name, _)| keep(name))
            .map(|(name, v)| (name.clone(), *v))
            .unzip();
        PairwiseFeatureVector { values, layout }
    }
}

pub fn entry_name(kind: FeatureKind, class: ClassLabel) -> String {
    format!("p_{}_{}", kind.name(), class.code())
}

/// Layout for a bank's kinds plus the given extras.
pub fn pd_layout(kinds: &[FeatureKind], extras: &[&str]) -> Vec<String> {
    kinds
        .iter()
        .flat_map(|&k| ClassLabel::ALL.iter().map(move |&c| entry_name(k, c)))
        .chain(extras.iter().map(|e| e.to_string()))
        .collect()
}

/// Builds the pairwise-distance vector for one target cycle.
///
/// `features` must contain one feature for each of the bank's kinds; their
/// order does not matter.
pub fn build_pd_vector(
    bank: &ReferenceBank,
    features: &[RelativeFeature],
    extras: &[(String, f64)],
    aggregation: Aggregation,
    band: Option<usize>,
) -> Result<PairwiseFeatureVector> {
    let mut values = Vec::with_capacity(bank.kinds.len() * ClassLabel::COUNT + extras.len());
    for &kind in &bank.kinds {
        let feat = features
            .iter()
            .find(|f| f.kind == kind)
            .ok_or(Error::MissingKind(kind.name()))?;
        for class in ClassLabel::ALL {
            values.push(pairwise_entry(bank, class, kind, feat, aggregation, band)?);
        }
    }
    values.extend(extras.iter().map(|(_, v)| *v));
    let names: Vec<&str> = extras.iter().map(|(n, _)| n.as_str()).collect();
    Ok(PairwiseFeatureVector {
        values,
        layout: pd_layout(&bank.kinds, &names),
    })
}
