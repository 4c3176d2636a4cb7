//! Phenomenological percussion-pressure generator.
//!
//! Every impact cycle is a slow supply/demand trend (recovery rise,
//! buildup, gradual drop) plus four event-triggered damped sinusoids, each
//! followed by one delayed echo. Individuals change the cycle rate, the
//! oscillation periods, the echo delay and strength, the oscillation gain,
//! the trend shape and a pressure bias. Fault classes shift event times and
//! rescale event amplitudes, damping, echo strength, trend drop and period.
//!
//! Generation is deterministic given the seed; the returned
//! [`GeneratorLog`] records the ground truth for every emitted cycle.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_for;
use crate::signal::{ClassLabel, IndividualId, Recording};
use crate::storage::{
    quantize, write_json, write_recording, Dataset, LoadedRecording, Manifest, ManifestEntry,
    MANIFEST_VERSION,
};

pub const EVENT_COUNT: usize = 4;
pub const CONFIG_VERSION: u32 = 1;

const STOCK_TOML: &str = include_str!("../config/stock.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualParams {
    pub id: IndividualId,
    /// Cycle rate in Hz.
    pub fundamental_freq: f64,
    /// Multiplies every oscillation period (hose-length analog).
    pub oscillation_period_scale: f64,
    /// Seconds between an event and its echo.
    pub reflection_delay: f64,
    /// Multiplies every event's echo coefficient.
    pub reflection_coeff: f64,
    /// Multiplies every oscillation amplitude.
    pub amplitude_gain: f64,
    /// Added to the whole signal.
    pub pressure_bias: f64,
    /// Trend fall over the drop phase.
    pub drop_depth: f64,
    /// Trend rise over the buildup phase.
    pub buildup: f64,
    /// Supply overshoot above nominal at the end of the recovery rise.
    #[serde(default)]
    pub overshoot: f64,
    pub seed: u64,
}

/// Per-class modification of the signal. The NF row is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultParams {
    /// Seconds added to each event's time.
    pub event_time_shifts: [f64; EVENT_COUNT],
    pub event_amplitude_scales: [f64; EVENT_COUNT],
    /// Multiplies every event's decay time.
    pub damping_scale: f64,
    /// Multiplies the trend drop.
    pub trend_drop_scale: f64,
    /// Multiplies every echo coefficient.
    #[serde(default = "one")]
    pub echo_scale: f64,
    /// Multiplies the cycle period.
    #[serde(default = "one")]
    pub period_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl FaultParams {
    pub const IDENTITY: FaultParams = FaultParams {
        event_time_shifts: [0.0; EVENT_COUNT],
        event_amplitude_scales: [1.0; EVENT_COUNT],
        damping_scale: 1.0,
        trend_drop_scale: 1.0,
        echo_scale: 1.0,
        period_scale: 1.0,
    };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }
}

/// One flow-change event within the cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventShape {
    pub name: String,
    /// Position within the cycle as a fraction of the period.
    pub phase: f64,
    pub freq_hz: f64,
    /// Exponential decay time in seconds.
    pub decay: f64,
    pub amplitude: f64,
    /// Echo coefficient before individual and fault scaling.
    pub echo: f64,
}

/// Phase boundaries of the slow trend, as fractions of the period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendShape {
    pub rise_end: f64,
    pub buildup_start: f64,
    pub drop_start: f64,
    pub drop_exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Relative standard deviation of each cycle's period.
    pub period_jitter: f64,
    /// Standard deviation of event times, seconds.
    pub event_jitter: f64,
    /// Relative standard deviation of event amplitudes.
    pub amplitude_jitter: f64,
    /// Standard deviation of additive white noise.
    pub white: f64,
}

impl NoiseConfig {
    pub const ZERO: NoiseConfig = NoiseConfig {
        period_jitter: 0.0,
        event_jitter: 0.0,
        amplitude_jitter: 0.0,
        white: 0.0,
    };
}

/// Everything the generator needs besides the individual, class and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub version: u32,
    pub sample_rate: f64,
    /// Seconds per recording.
    pub duration: f64,
    /// Fraction of a period recorded before the first onset.
    pub lead_in: f64,
    pub trend: TrendShape,
    pub events: Vec<EventShape>,
    pub noise: NoiseConfig,
    pub individuals: Vec<IndividualParams>,
    /// Keyed by class code.
    pub faults: BTreeMap<ClassLabel, FaultParams>,
    /// Individual used for training unless overridden.
    pub train_individual: IndividualId,
}

impl GeneratorConfig {
    /// The frozen stock configuration shipped with the crate.
    pub fn stock() -> GeneratorConfig {
        Self::from_toml(STOCK_TOML).expect("stock config is valid")
    }

    pub fn from_toml(text: &str) -> Result<GeneratorConfig> {
        let cfg: GeneratorConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn individual(&self, id: IndividualId) -> Option<&IndividualParams> {
        self.individuals.iter().find(|i| i.id == id)
    }

    pub fn fault(&self, class: ClassLabel) -> &FaultParams {
        self.faults.get(&class).unwrap_or(&FaultParams::IDENTITY)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {}", self.version));
        }
        if !(self.sample_rate > 0.0) || !(self.duration > 0.0) {
            return bad("sample_rate and duration must be positive".into());
        }
        if !(0.0..1.0).contains(&self.lead_in) {
            return bad("lead_in must be in [0, 1)".into());
        }
        let t = &self.trend;
        if !(0.0 < t.rise_end
            && t.rise_end < t.buildup_start
            && t.buildup_start < t.drop_start
            && t.drop_start < 1.0)
            || !(t.drop_exponent > 0.0)
        {
            return bad(
                "trend phases must satisfy 0 < rise_end < buildup_start < drop_start < 1".into(),
            );
        }
        if self.events.len() != EVENT_COUNT {
            return bad(format!(
                "expected {EVENT_COUNT} events, got {}",
                self.events.len()
            ));
        }
        for e in &self.events {
            if !(0.0..1.0).contains(&e.phase) || !(e.freq_hz > 0.0) || !(e.decay > 0.0) {
                return bad(format!("event {} has an invalid shape", e.name));
            }
        }
        let n = &self.noise;
        if [n.period_jitter, n.event_jitter, n.amplitude_jitter, n.white]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return bad("noise parameters must be finite and non-negative".into());
        }
        if self.individuals.is_empty() {
            return bad("no individuals".into());
        }
        for ind in &self.individuals {
            ind.validate()?;
            if ind.drop_depth <= ind.buildup {
                return bad(format!(
                    "individual {}: drop_depth must exceed buildup so cycles start with a rise",
                    ind.id
                ));
            }
            let max_freq = self
                .events
                .iter()
                .map(|e| e.freq_hz / ind.oscillation_period_scale)
                .fold(0.0, f64::max);
            if self.sample_rate < 10.0 * max_freq {
                return bad(format!(
                    "sample rate {} is below 10x the highest oscillation frequency {max_freq:.1} Hz of individual {}",
                    self.sample_rate, ind.id
                ));
            }
            if self.duration * ind.fundamental_freq < 3.0 {
                return bad(format!(
                    "duration holds fewer than 3 cycles for individual {}",
                    ind.id
                ));
            }
        }
        if self.individual(self.train_individual).is_none() {
            return bad(format!(
                "train individual {} not configured",
                self.train_individual
            ));
        }
        if let Some(nf) = self.faults.get(&ClassLabel::NF) {
            if !nf.is_identity() {
                return bad("the NF fault row must be the identity".into());
            }
        }
        for (class, f) in &self.faults {
            let scales_ok = f.event_amplitude_scales.iter().all(|s| s.is_finite())
                && f.event_time_shifts.iter().all(|s| s.is_finite())
                && f.damping_scale > 0.0
                && f.trend_drop_scale > 0.0
                && f.period_scale > 0.0
                && f.echo_scale.is_finite();
            if !scales_ok {
                return bad(format!("fault {class} has invalid parameters"));
            }
        }
        Ok(())
    }
}

impl IndividualParams {
    fn validate(&self) -> Result<()> {
        let positive = [
            self.fundamental_freq,
            self.oscillation_period_scale,
            self.reflection_delay,
            self.amplitude_gain,
            self.drop_depth,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite()))
            || !self.pressure_bias.is_finite()
            || !(self.reflection_coeff.is_finite())
            || !(self.buildup >= 0.0)
            || !(self.overshoot >= 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "individual {} has non-positive or non-finite parameters",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleLog {
    /// Onset time in seconds from the start of the recording.
    pub onset: f64,
    pub period: f64,
    /// Times of the four events, seconds from the start of the recording.
    pub event_times: [f64; EVENT_COUNT],
}

/// Ground truth for one generated recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorLog {
    pub class: ClassLabel,
    pub individual: IndividualId,
    pub seed: u64,
    pub sample_rate: f64,
    pub n_samples: usize,
    /// One entry per onset inside the recording.
    pub cycles: Vec<CycleLog>,
    pub individual_params: IndividualParams,
    pub fault_params: FaultParams,
    pub noise: NoiseConfig,
}

impl GeneratorLog {
    pub fn onsets(&self) -> Vec<f64> {
        self.cycles.iter().map(|c| c.onset).collect()
    }

    /// Cycles bounded by two recorded onsets.
    pub fn complete_cycles(&self) -> usize {
        self.cycles.len().saturating_sub(1)
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Slow trend at cycle phase `u` in `[0, 1)`.
fn trend(u: f64, shape: &TrendShape, buildup: f64, drop: f64, overshoot: f64) -> f64 {
    let low = buildup - drop;
    if u < shape.rise_end {
        low + (overshoot - low) * smoothstep(u / shape.rise_end)
    } else if u < shape.buildup_start {
        overshoot
            * (1.0 - smoothstep((u - shape.rise_end) / (shape.buildup_start - shape.rise_end)))
    } else if u < shape.drop_start {
        buildup * smoothstep((u - shape.buildup_start) / (shape.drop_start - shape.buildup_start))
    } else {
        let x = (u - shape.drop_start) / (1.0 - shape.drop_start);
        buildup - drop * x.powf(shape.drop_exponent)
    }
}

struct Ringing {
    start: f64,
    amplitude: f64,
    freq: f64,
    decay: f64,
}

fn add_ringing(samples: &mut [f64], fs: f64, r: &Ringing) {
    let first = (r.start * fs).ceil().max(0.0) as usize;
    let last = (((r.start + 8.0 * r.decay) * fs).ceil() as usize).min(samples.len());
    let omega = 2.0 * PI * r.freq;
    for (i, s) in samples.iter_mut().enumerate().take(last).skip(first) {
        let dt = i as f64 / fs - r.start;
        *s += r.amplitude * (-dt / r.decay).exp() * (omega * dt).sin();
    }
}

/// Generates one recording of `class` on individual `ind`.
pub fn generate_recording(
    ind: &IndividualParams,
    class: ClassLabel,
    cfg: &GeneratorConfig,
    noise: &NoiseConfig,
    seed: u64,
) -> Result<(Recording, GeneratorLog)> {
    cfg.validate()?;
    ind.validate()?;
    let fault = cfg.fault(class).clone();
    let fs = cfg.sample_rate;
    let mut rng = rng_for(seed, &[ind.seed, ind.id.0 as u64, class.index() as u64]);
    let mut gauss = move || -> f64 { rng.sample(StandardNormal) };

    let nominal = fault.period_scale / ind.fundamental_freq;
    let drop = ind.drop_depth * fault.trend_drop_scale;

    // Cycle starts, including one cycle before the first recorded onset.
    let mut starts = vec![(cfg.lead_in - 1.0) * nominal];
    let mut periods = vec![nominal];
    let mut t = cfg.lead_in * nominal;
    while t < cfg.duration {
        let period = nominal * (1.0 + noise.period_jitter * gauss()).max(0.5);
        starts.push(t);
        periods.push(period);
        t += period;
    }
    let mut n_samples = (cfg.duration * fs).round() as usize;
    // An onset too close to the end would be cut mid-rise; end the recording
    // just before it instead.
    if let Some(&last) = starts.last() {
        let tail = cfg.duration - last;
        if starts.len() > 1 && tail < 0.25 * periods[periods.len() - 1] {
            n_samples = (last * fs).floor() as usize;
            starts.pop();
            periods.pop();
        }
    }

    let mut samples = vec![0.0; n_samples];
    let mut k = 0;
    for (i, s) in samples.iter_mut().enumerate() {
        let time = i as f64 / fs;
        while k + 1 < starts.len() && time >= starts[k + 1] {
            k += 1;
        }
        let u = ((time - starts[k]) / periods[k]).clamp(0.0, 1.0);
        *s = trend(u, &cfg.trend, ind.buildup, drop, ind.overshoot);
    }

    let mut cycles = Vec::with_capacity(starts.len());
    for (k, (&start, &period)) in starts.iter().zip(&periods).enumerate() {
        let mut event_times = [0.0; EVENT_COUNT];
        for (e, shape) in cfg.events.iter().enumerate() {
            let time = start
                + shape.phase * period
                + fault.event_time_shifts[e]
                + noise.event_jitter * gauss();
            event_times[e] = time;
            let amplitude = shape.amplitude
                * ind.amplitude_gain
                * fault.event_amplitude_scales[e]
                * (1.0 + noise.amplitude_jitter * gauss());
            let ringing = Ringing {
                start: time,
                amplitude,
                freq: shape.freq_hz / ind.oscillation_period_scale,
                decay: shape.decay * fault.damping_scale,
            };
            add_ringing(&mut samples, fs, &ringing);
            let echo = shape.echo * ind.reflection_coeff * fault.echo_scale;
            if echo != 0.0 {
                add_ringing(
                    &mut samples,
                    fs,
                    &Ringing {
                        start: time + ind.reflection_delay,
                        amplitude: amplitude * echo,
                        ..ringing
                    },
                );
            }
        }
        if k > 0 {
            cycles.push(CycleLog {
                onset: start,
                period,
                event_times,
            });
        }
    }

    for s in samples.iter_mut() {
        *s += ind.pressure_bias;
        if noise.white > 0.0 {
            *s += noise.white * gauss();
        }
    }

    let recording = Recording::new(samples, fs, class, ind.id);
    let log = GeneratorLog {
        class,
        individual: ind.id,
        seed,
        sample_rate: fs,
        n_samples,
        cycles,
        individual_params: ind.clone(),
        fault_params: fault,
        noise: *noise,
    };
    Ok((recording, log))
}

/// One generated case of a benchmark.
#[derive(Debug, Clone)]
pub struct GeneratedCase {
    pub recording: Recording,
    pub log: GeneratorLog,
}

/// All 11 classes on every configured individual, in (individual, class)
/// order. Each recording gets its own seed stream derived from `seed`.
pub fn generate_benchmark(cfg: &GeneratorConfig, seed: u64) -> Result<Vec<GeneratedCase>> {
    use rayon::prelude::*;

    cfg.validate()?;
    let jobs: Vec<(&IndividualParams, ClassLabel)> = cfg
        .individuals
        .iter()
        .flat_map(|ind| ClassLabel::ALL.into_iter().map(move |c| (ind, c)))
        .collect();
    jobs.par_iter()
        .map(|&(ind, class)| {
            generate_recording(ind, class, cfg, &cfg.noise, seed)
                .map(|(recording, log)| GeneratedCase { recording, log })
        })
        .collect()
}

fn case_stem(individual: IndividualId, class: ClassLabel) -> String {
    format!("ind{}_{}", individual.0, class.code())
}

fn benchmark_manifest(cfg: &GeneratorConfig, cycles_per_case: usize, seed: u64) -> Manifest {
    let individuals: Vec<IndividualId> = cfg.individuals.iter().map(|i| i.id).collect();
    let recordings = individuals
        .iter()
        .flat_map(|&ind| {
            ClassLabel::ALL.into_iter().map(move |class| {
                let stem = case_stem(ind, class);
                ManifestEntry {
                    class,
                    individual: ind,
                    samples: format!("{stem}.f32").into(),
                    sidecar: format!("{stem}.json").into(),
                    log: Some(format!("{stem}.log.json").into()),
                }
            })
        })
        .collect();
    Manifest {
        version: MANIFEST_VERSION,
        sample_rate: cfg.sample_rate,
        seed: Some(seed),
        cycles_per_case,
        test_individuals: individuals
            .iter()
            .copied()
            .filter(|&i| i != cfg.train_individual)
            .collect(),
        individuals,
        train_individual: cfg.train_individual,
        recordings,
    }
}

/// The benchmark held in memory, with samples rounded through `f32` exactly
/// as [`make_benchmark`] stores them.
pub fn benchmark_dataset(
    cfg: &GeneratorConfig,
    cycles_per_case: usize,
    seed: u64,
) -> Result<(Dataset, Vec<GeneratorLog>)> {
    let manifest = benchmark_manifest(cfg, cycles_per_case, seed);
    let cases = generate_benchmark(cfg, seed)?;
    let mut recordings = Vec::with_capacity(cases.len());
    let mut logs = Vec::with_capacity(cases.len());
    for mut case in cases {
        quantize(&mut case.recording);
        let entry = manifest
            .entry(case.log.individual, case.log.class)
            .expect("manifest lists every generated case")
            .clone();
        recordings.push(LoadedRecording {
            entry,
            recording: case.recording,
        });
        logs.push(case.log);
    }
    manifest.validate()?;
    Ok((
        Dataset {
            manifest,
            recordings,
        },
        logs,
    ))
}

/// Generates every case and writes samples, sidecars, logs and
/// `manifest.json` into `out_dir`.
pub fn make_benchmark(
    cfg: &GeneratorConfig,
    cycles_per_case: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<Manifest> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let manifest = benchmark_manifest(cfg, cycles_per_case, seed);
    manifest.validate()?;
    for case in generate_benchmark(cfg, seed)? {
        let entry = manifest
            .entry(case.log.individual, case.log.class)
            .expect("manifest lists every generated case");
        write_recording(
            &out_dir.join(&entry.samples),
            &out_dir.join(&entry.sidecar),
            &case.recording,
        )?;
        if let Some(log) = &entry.log {
            write_json(&out_dir.join(log), &case.log)?;
        }
    }
    fs::write(out_dir.join("generator.toml"), cfg.to_toml()).map_err(|e| Error::io(out_dir, e))?;
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stock_config_is_valid_and_complete() {
        let cfg = GeneratorConfig::stock();
        assert_eq!(cfg.individuals.len(), 6);
        assert_eq!(cfg.events.len(), EVENT_COUNT);
        assert!(cfg.fault(ClassLabel::NF).is_identity());
        for class in ClassLabel::ALL.into_iter().skip(1) {
            assert!(cfg.faults.contains_key(&class), "missing fault row {class}");
        }
        let back = GeneratorConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = GeneratorConfig::stock();
        cfg.sample_rate = 1000.0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));

        let mut cfg = GeneratorConfig::stock();
        cfg.faults.get_mut(&ClassLabel::NF).unwrap().damping_scale = 2.0;
        assert!(cfg.validate().is_err());

        let mut cfg = GeneratorConfig::stock();
        cfg.individuals[0].fundamental_freq = -1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = GeneratorConfig::stock();
        cfg.events.pop();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn deterministic_without_noise() {
        let cfg = GeneratorConfig::stock();
        let ind = &cfg.individuals[1];
        let (a, la) = generate_recording(ind, ClassLabel::NF, &cfg, &NoiseConfig::ZERO, 9).unwrap();
        let (b, lb) = generate_recording(ind, ClassLabel::NF, &cfg, &NoiseConfig::ZERO, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        let (c, _) = generate_recording(ind, ClassLabel::NF, &cfg, &cfg.noise, 9).unwrap();
        let (d, _) = generate_recording(ind, ClassLabel::NF, &cfg, &cfg.noise, 10).unwrap();
        assert_ne!(c.samples, d.samples);
    }

    #[test]
    fn nf_matches_identity_row() {
        let mut cfg = GeneratorConfig::stock();
        cfg.faults.remove(&ClassLabel::NF);
        let ind = cfg.individuals[2].clone();
        let (a, _) = generate_recording(&ind, ClassLabel::NF, &cfg, &cfg.noise, 4).unwrap();
        let stock = GeneratorConfig::stock();
        let (b, _) = generate_recording(&ind, ClassLabel::NF, &stock, &stock.noise, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn log_is_complete() {
        let cfg = GeneratorConfig::stock();
        let ind = &cfg.individuals[0];
        let (rec, log) = generate_recording(ind, ClassLabel::A, &cfg, &cfg.noise, 1).unwrap();
        assert_eq!(log.n_samples, rec.samples.len());
        assert!(log.cycles.windows(2).all(|w| w[0].onset < w[1].onset));
        assert!(log
            .cycles
            .iter()
            .all(|c| c.onset >= 0.0 && c.onset < rec.duration));
        let expected = cfg.duration * ind.fundamental_freq / cfg.fault(ClassLabel::A).period_scale;
        assert!((log.cycles.len() as f64 - expected).abs() <= 2.0);
        assert!((rec.duration * rec.sample_rate - rec.samples.len() as f64).abs() < 1.0);
    }

    #[test]
    fn trend_is_continuous_across_cycles() {
        let shape = GeneratorConfig::stock().trend;
        let (b, d, o) = (0.4, 1.5, 0.8);
        assert!((trend(0.0, &shape, b, d, o) - trend(1.0, &shape, b, d, o)).abs() < 1e-12);
        for edge in [shape.rise_end, shape.buildup_start, shape.drop_start] {
            let eps = 1e-9;
            assert!(
                (trend(edge - eps, &shape, b, d, o) - trend(edge + eps, &shape, b, d, o)).abs()
                    < 1e-6
            );
        }
    }
}
