//! Cycles, recordings and the scalar cycle features.
//!
//! A recording is a long pressure trace from one (class, individual) case.
//! [`segment_recording`] cuts it into impact cycles at detected onsets;
//! cycles keep their natural length since cycle period varies with both
//! faults and individuals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fault class. `NF` is the no-fault reference class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ClassLabel {
    NF,
    S,
    D,
    R,
    V,
    Q,
    C,
    A,
    B,
    T,
    O,
}

impl ClassLabel {
    /// Canonical class order; also the tie-break order for predictions.
    pub const ALL: [ClassLabel; 11] = [
        ClassLabel::NF,
        ClassLabel::S,
        ClassLabel::D,
        ClassLabel::R,
        ClassLabel::V,
        ClassLabel::Q,
        ClassLabel::C,
        ClassLabel::A,
        ClassLabel::B,
        ClassLabel::T,
        ClassLabel::O,
    ];

    pub const COUNT: usize = 11;

    pub fn code(self) -> &'static str {
        match self {
            ClassLabel::NF => "NF",
            ClassLabel::S => "S",
            ClassLabel::D => "D",
            ClassLabel::R => "R",
            ClassLabel::V => "V",
            ClassLabel::Q => "Q",
            ClassLabel::C => "C",
            ClassLabel::A => "A",
            ClassLabel::B => "B",
            ClassLabel::T => "T",
            ClassLabel::O => "O",
        }
    }

    /// Position in [`ClassLabel::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<ClassLabel> {
        Self::ALL.get(i).copied()
    }

    pub fn is_reference(self) -> bool {
        self == ClassLabel::NF
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.code() == s)
            .ok_or_else(|| Error::Parse {
                what: "class",
                value: s.to_string(),
            })
    }
}

impl From<ClassLabel> for String {
    fn from(c: ClassLabel) -> String {
        c.code().to_string()
    }
}

impl TryFrom<String> for ClassLabel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// One physical (or pseudo) individual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndividualId(pub u32);

impl fmt::Display for IndividualId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Identity of a cycle within a dataset. Written as `class/individual/index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct CycleId {
    pub class: ClassLabel,
    pub individual: IndividualId,
    pub cycle_index: usize,
}

impl fmt::Display for CycleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.class, self.individual, self.cycle_index)
    }
}

impl std::str::FromStr for CycleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = || Error::Parse {
            what: "cycle id",
            value: s.to_string(),
        };
        let mut parts = s.split('/');
        let (Some(c), Some(i), Some(k), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(parse_err());
        };
        Ok(CycleId {
            class: c.parse()?,
            individual: IndividualId(i.parse().map_err(|_| parse_err())?),
            cycle_index: k.parse().map_err(|_| parse_err())?,
        })
    }
}

impl From<CycleId> for String {
    fn from(id: CycleId) -> String {
        id.to_string()
    }
}

impl TryFrom<String> for CycleId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// One impact cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub samples: Vec<f64>,
    pub class: ClassLabel,
    pub individual: IndividualId,
    pub cycle_index: usize,
    pub sample_rate: f64,
    /// Offset of the first sample within the source recording.
    #[serde(default)]
    pub start: usize,
}

impl Cycle {
    pub fn new(
        samples: Vec<f64>,
        class: ClassLabel,
        individual: IndividualId,
        cycle_index: usize,
        sample_rate: f64,
    ) -> Result<Self> {
        check_samples(&samples)?;
        Ok(Cycle {
            samples,
            class,
            individual,
            cycle_index,
            sample_rate,
            start: 0,
        })
    }

    pub fn id(&self) -> CycleId {
        CycleId {
            class: self.class,
            individual: self.individual,
            cycle_index: self.cycle_index,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub(crate) fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// A long pressure trace for one (class, individual) case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub class: ClassLabel,
    pub individual: IndividualId,
    /// Seconds; always `samples.len() / sample_rate`.
    pub duration: f64,
}

impl Recording {
    pub fn new(
        samples: Vec<f64>,
        sample_rate: f64,
        class: ClassLabel,
        individual: IndividualId,
    ) -> Self {
        let duration = samples.len() as f64 / sample_rate;
        Recording {
            samples,
            sample_rate,
            class,
            individual,
            duration,
        }
    }
}

/// Per-recording scalar metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleMeta {
    pub impact_frequency: f64,
    pub p_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    /// Width of the centered moving-average smoother, in milliseconds.
    pub smooth_ms: f64,
    /// Onset threshold on the smoothed derivative: median + k_mad * MAD.
    pub k_mad: f64,
    /// Cycles shorter than this fraction of the median length are dropped.
    pub min_len_ratio: f64,
    /// Cycles longer than this multiple of the median length are dropped.
    pub max_len_ratio: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            smooth_ms: 1.0,
            k_mad: 5.0,
            min_len_ratio: 0.5,
            max_len_ratio: 2.0,
        }
    }
}

/// Centered moving average with the window truncated at the edges.
fn smooth(samples: &[f64], window: usize) -> Vec<f64> {
    let n = samples.len();
    let half = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in samples {
        acc += v;
        prefix.push(acc);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let upper = *m;
    if v.len() % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Sample indices where cycles start.
pub fn detect_onsets(
    samples: &[f64],
    sample_rate: f64,
    cfg: &SegmentationConfig,
) -> (Vec<usize>, f64) {
    if samples.len() < 3 {
        return (Vec::new(), f64::NAN);
    }
    let window = ((cfg.smooth_ms * 1e-3 * sample_rate).round() as usize).max(1);
    let smoothed = smooth(samples, window);
    let deriv: Vec<f64> = smoothed.windows(2).map(|w| w[1] - w[0]).collect();
    let med = median(&deriv);
    let dev: Vec<f64> = deriv.iter().map(|d| (d - med).abs()).collect();
    let mad = median(&dev);
    let threshold = med + cfg.k_mad * mad.max(f64::EPSILON);
    let rearm = med + 0.5 * cfg.k_mad * mad;

    let mut onsets = Vec::new();
    let mut armed = deriv[0] < threshold;
    for i in 1..deriv.len() {
        if armed {
            if deriv[i - 1] < threshold && deriv[i] >= threshold {
                onsets.push(i);
                armed = false;
            }
        } else if deriv[i] < rearm {
            armed = true;
        }
    }
    (onsets, threshold)
}

/// Cuts a recording into impact cycles at detected onsets.
///
/// Onsets are upward crossings of `median + k_mad * MAD` by the derivative
/// of the smoothed signal. Cycles whose length falls outside the configured
/// bounds around the median length are dropped; the survivors are
/// re-indexed consecutively.
pub fn segment_recording(rec: &Recording, cfg: &SegmentationConfig) -> Result<Vec<Cycle>> {
    check_samples(&rec.samples)?;
    let (onsets, threshold) = detect_onsets(&rec.samples, rec.sample_rate, cfg);
    if onsets.len() < 2 {
        return Err(Error::NoCyclesDetected {
            onsets: onsets.len(),
            threshold,
        });
    }
    let lengths: Vec<f64> = onsets.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let med = median(&lengths);
    let (lo, hi) = (cfg.min_len_ratio * med, cfg.max_len_ratio * med);

    let cycles = onsets
        .windows(2)
        .filter(|w| {
            let len = (w[1] - w[0]) as f64;
            len >= lo && len <= hi
        })
        .enumerate()
        .map(|(k, w)| Cycle {
            samples: rec.samples[w[0]..w[1]].to_vec(),
            class: rec.class,
            individual: rec.individual,
            cycle_index: k,
            sample_rate: rec.sample_rate,
            start: w[0],
        })
        .collect();
    Ok(cycles)
}

/// Affine normalization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub offset: f64,
    pub scale: f64,
}

impl NormStats {
    pub const IDENTITY: NormStats = NormStats {
        offset: 0.0,
        scale: 1.0,
    };

    /// Mean and population standard deviation of all pooled samples.
    pub fn from_cycles(cycles: &[Cycle]) -> Result<NormStats> {
        let count: usize = cycles.iter().map(Cycle::len).sum();
        if count == 0 {
            return Err(Error::EmptyInput);
        }
        let n = count as f64;
        let mean = cycles.iter().flat_map(|c| &c.samples).sum::<f64>() / n;
        let var = cycles
            .iter()
            .flat_map(|c| &c.samples)
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n;
        let stats = NormStats {
            offset: mean,
            scale: var.sqrt(),
        };
        stats.validate()?;
        Ok(stats)
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() || !self.offset.is_finite() {
            return Err(Error::DegenerateStats {
                offset: self.offset,
                scale: self.scale,
            });
        }
        Ok(())
    }
}

/// `(x - offset) / scale`, sample by sample.
pub fn normalize_cycle(c: &Cycle, stats: &NormStats) -> Result<Cycle> {
    stats.validate()?;
    Ok(Cycle {
        samples: c
            .samples
            .iter()
            .map(|v| (v - stats.offset) / stats.scale)
            .collect(),
        ..c.clone()
    })
}

/// Inverse of [`normalize_cycle`].
pub fn denormalize_cycle(c: &Cycle, stats: &NormStats) -> Result<Cycle> {
    stats.validate()?;
    Ok(Cycle {
        samples: c
            .samples
            .iter()
            .map(|v| v * stats.scale + stats.offset)
            .collect(),
        ..c.clone()
    })
}

/// A phase given as fractions of the cycle length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseWindow {
    pub start: f64,
    pub end: f64,
}

impl PhaseWindow {
    /// Forward-acceleration phase.
    pub const FORWARD_ACCELERATION: PhaseWindow = PhaseWindow {
        start: 0.55,
        end: 0.95,
    };

    /// Sample indices of the window endpoints for a cycle of `len` samples.
    pub fn indices(&self, len: usize) -> Result<(usize, usize)> {
        let err = || Error::WindowOutOfRange {
            start: self.start,
            end: self.end,
            len,
        };
        if !(0.0..=1.0).contains(&self.start) || !(0.0..=1.0).contains(&self.end) || len < 2 {
            return Err(err());
        }
        let last = (len - 1) as f64;
        let (a, b) = (
            (self.start * last).round() as usize,
            (self.end * last).round() as usize,
        );
        if a >= b {
            return Err(err());
        }
        Ok((a, b))
    }
}

impl Default for PhaseWindow {
    fn default() -> Self {
        Self::FORWARD_ACCELERATION
    }
}

/// Pressure at the end of the phase minus pressure at its start.
pub fn compute_p_drop(c: &Cycle, phase: &PhaseWindow) -> Result<f64> {
    let (a, b) = phase.indices(c.len())?;
    Ok(c.samples[b] - c.samples[a])
}

/// Sample rate over the mean cycle length.
pub fn estimate_impact_frequency(cycles: &[Cycle]) -> Result<f64> {
    if cycles.len() < 2 {
        return Err(Error::InsufficientCycles {
            have: cycles.len(),
            need: 2,
        });
    }
    let mean_len = cycles.iter().map(|c| c.len() as f64).sum::<f64>() / cycles.len() as f64;
    Ok(cycles[0].sample_rate / mean_len)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyc(samples: Vec<f64>) -> Cycle {
        Cycle::new(samples, ClassLabel::NF, IndividualId(0), 0, 50_000.0).unwrap()
    }

    #[test]
    fn cycle_id_text_round_trip() {
        let id = CycleId {
            class: ClassLabel::NF,
            individual: IndividualId(3),
            cycle_index: 17,
        };
        assert_eq!(id.to_string().parse::<CycleId>().unwrap(), id);
        assert_eq!(serde_json::to_string(&id).unwrap(), "\"NF/3/17\"");
        assert!("NF/3".parse::<CycleId>().is_err());
        assert!("X/3/1".parse::<CycleId>().is_err());
    }

    #[test]
    fn class_codes_round_trip() {
        assert_eq!(ClassLabel::ALL.len(), ClassLabel::COUNT);
        for (i, c) in ClassLabel::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(c.code().parse::<ClassLabel>().unwrap(), *c);
        }
        assert!("X".parse::<ClassLabel>().is_err());
        assert!(ClassLabel::NF.is_reference());
        let json = serde_json::to_string(&ClassLabel::Q).unwrap();
        assert_eq!(json, "\"Q\"");
    }

    #[test]
    fn normalize_by_hand() {
        let c = cyc(vec![2.0, 4.0, 6.0]);
        let s = NormStats {
            offset: 2.0,
            scale: 2.0,
        };
        assert_eq!(
            normalize_cycle(&c, &s).unwrap().samples,
            vec![0.0, 1.0, 2.0]
        );
        assert_eq!(normalize_cycle(&c, &NormStats::IDENTITY).unwrap(), c);
    }

    #[test]
    fn degenerate_stats_rejected() {
        let c = cyc(vec![1.0]);
        for scale in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            let s = NormStats { offset: 0.0, scale };
            assert!(matches!(
                normalize_cycle(&c, &s),
                Err(Error::DegenerateStats { .. })
            ));
        }
        let flat = vec![cyc(vec![3.0; 10])];
        assert!(NormStats::from_cycles(&flat).is_err());
    }

    #[test]
    fn self_normalized_mean_is_zero() {
        let cycles: Vec<Cycle> = (0..5)
            .map(|k| {
                cyc((0..97 + k)
                    .map(|i| (i as f64 * 0.37).sin() * 3.0 + 7.5)
                    .collect())
            })
            .collect();
        let stats = NormStats::from_cycles(&cycles).unwrap();
        let normed: Vec<Cycle> = cycles
            .iter()
            .map(|c| normalize_cycle(c, &stats).unwrap())
            .collect();
        // Kahan summation as an independent route.
        let (mut sum, mut comp, mut n) = (0.0f64, 0.0f64, 0usize);
        for v in normed.iter().flat_map(|c| &c.samples) {
            let y = v - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            n += 1;
        }
        assert!((sum / n as f64).abs() < 1e-9);
    }

    #[test]
    fn p_drop_cases() {
        let w = PhaseWindow::FORWARD_ACCELERATION;
        assert_eq!(compute_p_drop(&cyc(vec![4.2; 101]), &w).unwrap(), 0.0);

        // 101 samples: window indices 55 and 95 exactly.
        let ramp: Vec<f64> = (0..101)
            .map(|i| {
                let i = i as f64;
                if i <= 55.0 {
                    1.0
                } else if i >= 95.0 {
                    0.3
                } else {
                    1.0 - 0.7 * (i - 55.0) / 40.0
                }
            })
            .collect();
        let p = compute_p_drop(&cyc(ramp.clone()), &w).unwrap();
        assert!((p + 0.7).abs() < 1e-12);

        let shifted: Vec<f64> = ramp.iter().map(|v| v + 12.5).collect();
        let q = compute_p_drop(&cyc(shifted), &w).unwrap();
        assert!((p - q).abs() < 1e-12);

        let bad = PhaseWindow {
            start: 0.5,
            end: 1.2,
        };
        assert!(matches!(
            compute_p_drop(&cyc(vec![0.0; 10]), &bad),
            Err(Error::WindowOutOfRange { .. })
        ));
        assert!(compute_p_drop(&cyc(vec![0.0]), &w).is_err());
    }

    #[test]
    fn impact_frequency_arithmetic() {
        let c = |n| cyc(vec![0.0; n]);
        assert_eq!(
            estimate_impact_frequency(&[c(1000), c(1000)]).unwrap(),
            50.0
        );
        assert_eq!(estimate_impact_frequency(&[c(900), c(1100)]).unwrap(), 50.0);
        assert!(matches!(
            estimate_impact_frequency(&[c(10)]),
            Err(Error::InsufficientCycles { .. })
        ));
    }

    fn sawtooth(period: usize, periods: usize, lead: usize) -> Vec<f64> {
        // Slow decline then a sharp rise at each onset.
        (0..lead + period * periods + period / 2)
            .map(|i| {
                let phase = (i + period - lead) % period;
                if phase < period / 20 {
                    phase as f64 / (period / 20) as f64
                } else {
                    1.0 - (phase - period / 20) as f64 / (period - period / 20) as f64
                }
            })
            .collect()
    }

    #[test]
    fn segments_clean_sawtooth() {
        let rec = Recording::new(
            sawtooth(500, 12, 170),
            50_000.0,
            ClassLabel::A,
            IndividualId(2),
        );
        let cycles = segment_recording(&rec, &SegmentationConfig::default()).unwrap();
        assert_eq!(cycles.len(), 12);
        for (k, c) in cycles.iter().enumerate() {
            assert_eq!(c.cycle_index, k);
            assert_eq!(c.len(), 500);
            assert_eq!(c.class, ClassLabel::A);
        }
        for w in cycles.windows(2) {
            assert_eq!(w[0].start + w[0].len(), w[1].start);
        }
        let again = segment_recording(&rec, &SegmentationConfig::default()).unwrap();
        assert_eq!(cycles, again);
    }

    #[test]
    fn single_onset_is_an_error() {
        let mut s = vec![0.0; 2000];
        for (i, v) in s.iter_mut().enumerate().skip(1000) {
            *v = ((i - 1000) as f64 / 20.0).min(1.0);
        }
        let rec = Recording::new(s, 50_000.0, ClassLabel::NF, IndividualId(0));
        match segment_recording(&rec, &SegmentationConfig::default()) {
            Err(Error::NoCyclesDetected { onsets, .. }) => assert_eq!(onsets, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn recording_duration_matches_length() {
        let r = Recording::new(vec![0.0; 12_345], 10_000.0, ClassLabel::NF, IndividualId(0));
        assert!((r.duration * r.sample_rate - 12_345.0).abs() < 1.0);
    }
}
