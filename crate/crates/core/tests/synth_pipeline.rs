use wavefault::bench::{extract_features, DatasetSource, ExperimentConfig};
use wavefault::dtw::dtw_distance_only;
use wavefault::relative::{delta_ts, DeltaConfig, FeatureKind};
use wavefault::signal::{
    compute_p_drop, denormalize_cycle, estimate_impact_frequency, normalize_cycle,
    segment_recording, ClassLabel, Cycle, IndividualId, NormStats, PhaseWindow, SegmentationConfig,
};
use wavefault::synth::{
    generate_recording, make_benchmark, GeneratorConfig, GeneratorLog, NoiseConfig,
};

fn segment(
    cfg: &GeneratorConfig,
    ind: usize,
    class: ClassLabel,
    noise: &NoiseConfig,
    seed: u64,
) -> (Vec<Cycle>, GeneratorLog) {
    let (rec, log) = generate_recording(&cfg.individuals[ind], class, cfg, noise, seed).unwrap();
    (
        segment_recording(&rec, &SegmentationConfig::default()).unwrap(),
        log,
    )
}

/// Ten seconds at 50 kHz on one individual with the given fundamental.
fn long_config(fundamental: f64) -> GeneratorConfig {
    let mut cfg = GeneratorConfig::stock();
    cfg.sample_rate = 50_000.0;
    cfg.duration = 10.0;
    cfg.individuals.truncate(1);
    cfg.individuals[0].fundamental_freq = fundamental;
    cfg
}

#[test]
fn noiseless_segmentation_recovers_every_logged_cycle() {
    let cfg = GeneratorConfig::stock();
    for ind in 0..cfg.individuals.len() {
        for class in ClassLabel::ALL {
            let (cycles, log) = segment(&cfg, ind, class, &NoiseConfig::ZERO, 3);
            assert_eq!(cycles.len(), log.complete_cycles(), "ind {ind} {class}");
            // Each cut lands within a millisecond of a logged onset.
            let slack = 0.001 * log.sample_rate;
            for (c, logged) in cycles.iter().zip(log.onsets()) {
                let at = logged * log.sample_rate;
                assert!(
                    (c.start as f64 - at).abs() <= slack,
                    "ind {ind} {class}: {} vs {at}",
                    c.start
                );
            }
        }
    }
}

#[test]
fn noisy_segmentation_is_within_one_cycle() {
    let cfg = GeneratorConfig::stock();
    for ind in 0..cfg.individuals.len() {
        for class in ClassLabel::ALL {
            let (cycles, log) = segment(&cfg, ind, class, &cfg.noise, 8);
            assert!(
                cycles.len().abs_diff(log.complete_cycles()) <= 1,
                "ind {ind} {class}"
            );
        }
    }
}

#[test]
fn segments_are_ordered_disjoint_and_repeatable() {
    let cfg = GeneratorConfig::stock();
    let (rec, _) =
        generate_recording(&cfg.individuals[2], ClassLabel::O, &cfg, &cfg.noise, 4).unwrap();
    let seg = SegmentationConfig::default();
    let a = segment_recording(&rec, &seg).unwrap();
    assert_eq!(a, segment_recording(&rec, &seg).unwrap());
    for (k, w) in a.windows(2).enumerate() {
        assert!(w[0].start + w[0].len() <= w[1].start);
        assert_eq!(w[0].cycle_index, k);
    }
    let last = a.last().unwrap();
    assert!(last.start + last.len() <= rec.samples.len());
}

#[test]
fn sixty_hertz_at_fifty_kilohertz() {
    let cfg = long_config(60.0);
    let (cycles, log) = segment(&cfg, 0, ClassLabel::NF, &NoiseConfig::ZERO, 1);
    assert_eq!(cycles.len(), log.complete_cycles());
    assert!((595..=600).contains(&cycles.len()), "{}", cycles.len());
    let mean_len = cycles.iter().map(|c| c.len() as f64).sum::<f64>() / cycles.len() as f64;
    assert!((mean_len - 50_000.0 / 60.0).abs() < 2.0, "{mean_len}");
    let f = estimate_impact_frequency(&cycles).unwrap();
    assert!((f - 60.0).abs() <= 0.6, "{f}");
}

#[test]
fn eighty_hertz_gives_about_eight_hundred_cycles() {
    let cfg = long_config(80.0);
    let (cycles, log) = segment(&cfg, 0, ClassLabel::NF, &cfg.noise, 1);
    assert!(cycles.len().abs_diff(log.complete_cycles()) <= 1);
    assert!((790..=800).contains(&cycles.len()), "{}", cycles.len());
}

#[test]
fn normalization_round_trips() {
    let cfg = GeneratorConfig::stock();
    let (cycles, _) = segment(&cfg, 4, ClassLabel::NF, &cfg.noise, 2);
    let stats = NormStats::from_cycles(&cycles).unwrap();
    for c in &cycles {
        let back = denormalize_cycle(&normalize_cycle(c, &stats).unwrap(), &stats).unwrap();
        let worst = c
            .samples
            .iter()
            .zip(&back.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }
}

#[test]
fn slower_drop_lowers_p_drop_on_every_individual() {
    let cfg = GeneratorConfig::stock();
    let phase = PhaseWindow::default();
    let mean_p_drop = |cycles: &[Cycle], stats: &NormStats| {
        cycles
            .iter()
            .map(|c| compute_p_drop(&normalize_cycle(c, stats).unwrap(), &phase).unwrap())
            .sum::<f64>()
            / cycles.len() as f64
    };
    for ind in 0..cfg.individuals.len() {
        let (nf, _) = segment(&cfg, ind, ClassLabel::NF, &cfg.noise, 1);
        let (c, _) = segment(&cfg, ind, ClassLabel::C, &cfg.noise, 1);
        let stats = NormStats::from_cycles(&nf).unwrap();
        let gap = mean_p_drop(&c, &stats) - mean_p_drop(&nf, &stats);
        assert!(gap <= -0.7, "individual {ind}: {gap}");
    }
}

#[test]
fn delayed_valve_close_shows_up_as_a_time_shift_plateau() {
    let cfg = GeneratorConfig::stock();
    let ind = &cfg.individuals[0];
    let (nf, nf_log) =
        generate_recording(ind, ClassLabel::NF, &cfg, &NoiseConfig::ZERO, 1).unwrap();
    let (a, log) = generate_recording(ind, ClassLabel::A, &cfg, &NoiseConfig::ZERO, 1).unwrap();
    let fs = log.sample_rate;
    let shift = (log.fault_params.event_time_shifts[0] * fs).round();
    assert_eq!(shift, 4.0);
    // Valve closing sits right before the next impact, so the delayed event
    // straddles the cycle cut. Compare equal windows centred on it instead.
    let half = 80;
    for k in [2, 10, 20] {
        let centre = (log.cycles[k].event_times[0] * fs).round() as usize;
        let from = centre - half;
        let window = |rec: &wavefault::signal::Recording, class| {
            Cycle::new(
                rec.samples[from..centre + half].to_vec(),
                class,
                IndividualId(0),
                k,
                fs,
            )
            .unwrap()
        };
        let reference = window(&nf, ClassLabel::NF);
        let target = window(&a, ClassLabel::A);
        let ts = delta_ts(&reference, &target, None).unwrap();
        let path = wavefault::dtw::dtw(&reference.samples, &target.samples, None)
            .unwrap()
            .path;
        let on_path: Vec<(usize, f64)> = path
            .pairs
            .iter()
            .map(|&(_, q)| q)
            .zip(ts.values.iter().copied())
            .collect();
        let onset = on_path
            .iter()
            .find(|(_, v)| v.abs() >= shift)
            .map(|&(q, _)| q as f64)
            .expect("plateau present");
        // The shifted region runs from the reference's event to the target's.
        let ref_event = nf_log.cycles[k].event_times[0] * fs - from as f64;
        let target_event = log.cycles[k].event_times[0] * fs - from as f64;
        assert!(
            (onset - ref_event).abs() <= 5.0,
            "cycle {k}: plateau at {onset}, event at {ref_event:.1}"
        );
        assert!(onset <= target_event);
        assert!(on_path
            .iter()
            .filter(|(q, _)| (*q as f64) < ref_event - 5.0)
            .all(|(_, v)| v.abs() <= 1.0));
    }
}

/// Mean of `f` over all unordered pairs drawn from `groups` that satisfy `keep`.
fn mean_pairs<T>(
    items: &[(usize, ClassLabel, T)],
    keep: impl Fn(&(usize, ClassLabel, T), &(usize, ClassLabel, T)) -> bool,
    f: impl Fn(&T, &T) -> f64,
) -> f64 {
    let mut total = 0.0;
    let mut n = 0;
    for (i, a) in items.iter().enumerate() {
        for b in &items[i + 1..] {
            if keep(a, b) {
                total += f(&a.2, &b.2);
                n += 1;
            }
        }
    }
    total / n as f64
}

#[test]
fn raw_cycles_group_by_individual_not_by_class() {
    let cfg = GeneratorConfig::stock();
    let mut items = Vec::new();
    for ind in 0..cfg.individuals.len() {
        for class in ClassLabel::ALL {
            let (cycles, _) = segment(&cfg, ind, class, &cfg.noise, 1);
            for c in cycles.into_iter().skip(5).take(2) {
                items.push((ind, class, c.samples));
            }
        }
    }
    let d = |x: &Vec<f64>, y: &Vec<f64>| dtw_distance_only(x, y, None).unwrap();
    let same_class = mean_pairs(&items, |a, b| a.1 == b.1 && a.0 != b.0, d);
    let same_individual = mean_pairs(&items, |a, b| a.1 != b.1 && a.0 == b.0, d);
    assert!(
        same_class > same_individual,
        "{same_class} vs {same_individual}"
    );
}

#[test]
fn time_shift_features_group_by_class() {
    let cfg = GeneratorConfig::stock();
    let mut items = Vec::new();
    for ind in 0..cfg.individuals.len() {
        let (nf, _) = segment(&cfg, ind, ClassLabel::NF, &cfg.noise, 1);
        let stats = NormStats::from_cycles(&nf[..10]).unwrap();
        let reference = normalize_cycle(&nf[0], &stats).unwrap();
        for class in ClassLabel::ALL {
            let (cycles, _) = segment(&cfg, ind, class, &cfg.noise, 1);
            for c in cycles.iter().skip(12).take(2) {
                let target = normalize_cycle(c, &stats).unwrap();
                let ts = delta_ts(&reference, &target, DeltaConfig::default().band).unwrap();
                items.push((ind, class, ts.values));
            }
        }
    }
    let d = |x: &Vec<f64>, y: &Vec<f64>| dtw_distance_only(x, y, None).unwrap();
    let same_class = mean_pairs(&items, |a, b| a.1 == b.1 && a.0 != b.0, d);
    let same_individual = mean_pairs(&items, |a, b| a.1 != b.1 && a.0 == b.0, d);
    assert!(
        same_class < same_individual,
        "{same_class} vs {same_individual}"
    );
}

#[test]
fn benchmark_layout_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GeneratorConfig::stock();
    let manifest = make_benchmark(&cfg, 12, 21, dir.path()).unwrap();
    assert_eq!(manifest.recordings.len(), 66);
    assert_eq!(manifest.train_individual, IndividualId(0));
    assert_eq!(manifest.test_individuals.len(), 5);
    assert!(!manifest
        .test_individuals
        .contains(&manifest.train_individual));

    // Equal durations at one fundamental give cycle counts within one.
    let counts: Vec<usize> = ClassLabel::ALL
        .into_iter()
        .filter(|c| cfg.fault(*c).period_scale == 1.0)
        .map(|c| segment(&cfg, 0, c, &cfg.noise, 21).0.len())
        .collect();
    let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
    assert!(hi - lo <= 1, "{counts:?}");
    // About duration times fundamental.
    let expect = cfg.duration * cfg.individuals[0].fundamental_freq;
    assert!((*hi as f64 - expect).abs() <= 2.0, "{hi} vs {expect}");
}

#[test]
fn seeds_change_values_but_not_structure() {
    let cfg = GeneratorConfig::stock();
    let (a, la) =
        generate_recording(&cfg.individuals[1], ClassLabel::Q, &cfg, &cfg.noise, 1).unwrap();
    let (b, lb) =
        generate_recording(&cfg.individuals[1], ClassLabel::Q, &cfg, &cfg.noise, 2).unwrap();
    assert_ne!(a.samples, b.samples);
    assert_eq!(
        (a.class, a.individual, a.sample_rate),
        (b.class, b.individual, b.sample_rate)
    );
    assert!(a.samples.len().abs_diff(b.samples.len()) <= (0.01 * cfg.sample_rate) as usize);
    assert!(la.cycles.len().abs_diff(lb.cycles.len()) <= 1);
}

#[test]
fn own_class_entries_are_usually_the_row_minimum() {
    let mut cfg = ExperimentConfig::stock(1);
    cfg.dataset = DatasetSource::Generate {
        config: None,
        seed: 1,
        cycles_per_case: 20,
    };
    let dataset = wavefault::bench::resolve_dataset(&cfg.dataset).unwrap();
    let features = extract_features(&cfg, &dataset).unwrap();
    let train = features
        .pairwise
        .iter()
        .filter(|(id, _)| id.class == ClassLabel::A && id.individual == IndividualId(0));
    let (mut hits, mut total) = (0, 0);
    for (_, v) in train {
        let row_min = |kind: FeatureKind| {
            let prefix = format!("p_{}_", kind.name());
            let row: Vec<(&String, f64)> = v
                .layout
                .iter()
                .zip(&v.values)
                .filter(|(name, _)| name.starts_with(&prefix))
                .map(|(n, &x)| (n, x))
                .collect();
            let best = row.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
            row.iter()
                .any(|(n, x)| *n == &format!("{prefix}A") && *x == best)
        };
        total += 1;
        if row_min(FeatureKind::Amp) && row_min(FeatureKind::Ts) {
            hits += 1;
        }
    }
    assert!(total > 0);
    assert!(hits as f64 >= 0.8 * total as f64, "{hits}/{total}");
}
