//! Reference-relative representations of a cycle.
//!
//! Each feature describes how a target cycle differs from a no-fault
//! reference cycle of the same individual, so that individual-specific
//! structure shared by both cancels out.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dtw::{dtw, euclidean, WarpingPath};
use crate::error::{Error, Result};
use crate::signal::{compute_p_drop, ClassLabel, Cycle, CycleId, PhaseWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Euclidean,
    Amp,
    Ts,
    Pdrop,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Euclidean => "euclidean",
            FeatureKind::Amp => "amp",
            FeatureKind::Ts => "ts",
            FeatureKind::Pdrop => "pdrop",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(FeatureKind::Euclidean),
            "amp" => Ok(FeatureKind::Amp),
            "ts" => Ok(FeatureKind::Ts),
            "pdrop" => Ok(FeatureKind::Pdrop),
            _ => Err(Error::Parse {
                what: "feature kind",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeFeature {
    pub kind: FeatureKind,
    pub values: Vec<f64>,
    pub ref_id: CycleId,
    pub target_id: CycleId,
}

/// How strictly the reference cycle is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefPolicy {
    /// Reference must be NF and from the target's individual.
    #[default]
    Strict,
    /// Only self-comparison is rejected. Provenance is left to the audit.
    AllowAny,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeltaConfig {
    pub band: Option<usize>,
    /// Restrict both cycles to this phase before aligning them.
    pub window: Option<PhaseWindow>,
    pub policy: RefPolicy,
}

fn check_reference(reference: &Cycle, target: &Cycle, policy: RefPolicy) -> Result<()> {
    if reference.id() == target.id() {
        return Err(Error::SelfComparison(target.id().to_string()));
    }
    if policy == RefPolicy::Strict {
        let reason = if reference.class != ClassLabel::NF {
            Some("reference must be a no-fault cycle")
        } else if reference.individual != target.individual {
            Some("reference must come from the same individual")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(Error::InvalidReference {
                reference: reference.id().to_string(),
                target: target.id().to_string(),
                reason,
            });
        }
    }
    Ok(())
}

fn windowed(c: &Cycle, window: Option<PhaseWindow>) -> Result<&[f64]> {
    match window {
        None => Ok(&c.samples),
        Some(w) => {
            let (a, b) = w.indices(c.len())?;
            Ok(&c.samples[a..=b])
        }
    }
}

/// `|ref[t] - target[t]|`; only defined for equal lengths.
pub fn delta_euclidean(reference: &Cycle, target: &Cycle) -> Result<RelativeFeature> {
    euclidean(&reference.samples, &target.samples)?;
    Ok(RelativeFeature {
        kind: FeatureKind::Euclidean,
        values: reference
            .samples
            .iter()
            .zip(&target.samples)
            .map(|(a, b)| (a - b).abs())
            .collect(),
        ref_id: reference.id(),
        target_id: target.id(),
    })
}

fn amp_values(x: &[f64], y: &[f64], path: &WarpingPath) -> Vec<f64> {
    path.pairs
        .iter()
        .map(|&(p, q)| (x[p] - y[q]).abs())
        .collect()
}

fn ts_values(path: &WarpingPath) -> Vec<f64> {
    path.pairs
        .iter()
        .map(|&(p, q)| p as f64 - q as f64)
        .collect()
}

/// Amplitude and time-shift features from a single alignment of
/// `reference` (first DTW argument) against `target`.
pub fn delta_amp_ts(
    reference: &Cycle,
    target: &Cycle,
    cfg: &DeltaConfig,
) -> Result<(RelativeFeature, RelativeFeature)> {
    check_reference(reference, target, cfg.policy)?;
    let x = windowed(reference, cfg.window)?;
    let y = windowed(target, cfg.window)?;
    let aligned = dtw(x, y, cfg.band)?;
    let make = |kind, values| RelativeFeature {
        kind,
        values,
        ref_id: reference.id(),
        target_id: target.id(),
    };
    Ok((
        make(FeatureKind::Amp, amp_values(x, y, &aligned.path)),
        make(FeatureKind::Ts, ts_values(&aligned.path)),
    ))
}

/// Absolute aligned differences along the optimal warping path.
pub fn delta_amp(
    reference: &Cycle,
    target: &Cycle,
    band: Option<usize>,
) -> Result<RelativeFeature> {
    let cfg = DeltaConfig {
        band,
        ..DeltaConfig::default()
    };
    delta_amp_ts(reference, target, &cfg).map(|(amp, _)| amp)
}

/// Signed index offsets `p - q` along the optimal warping path.
pub fn delta_ts(reference: &Cycle, target: &Cycle, band: Option<usize>) -> Result<RelativeFeature> {
    let cfg = DeltaConfig {
        band,
        ..DeltaConfig::default()
    };
    delta_amp_ts(reference, target, &cfg).map(|(_, ts)| ts)
}

/// Bias-compensated pressure drop: `P_drop(target) - P_drop(reference)`.
pub fn delta_pdrop(
    reference: &Cycle,
    target: &Cycle,
    phase: &PhaseWindow,
) -> Result<RelativeFeature> {
    delta_pdrop_with(reference, target, phase, RefPolicy::Strict)
}

pub fn delta_pdrop_with(
    reference: &Cycle,
    target: &Cycle,
    phase: &PhaseWindow,
    policy: RefPolicy,
) -> Result<RelativeFeature> {
    check_reference(reference, target, policy)?;
    let value = compute_p_drop(target, phase)? - compute_p_drop(reference, phase)?;
    Ok(RelativeFeature {
        kind: FeatureKind::Pdrop,
        values: vec![value],
        ref_id: reference.id(),
        target_id: target.id(),
    })
}
