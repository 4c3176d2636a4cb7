use proptest::prelude::*;
use wavefault::dtw::dtw;
use wavefault::relative::{delta_amp, delta_amp_ts, delta_pdrop, delta_ts, DeltaConfig};
use wavefault::signal::{ClassLabel, Cycle, IndividualId, PhaseWindow};

fn reference(samples: Vec<f64>) -> Cycle {
    Cycle::new(samples, ClassLabel::NF, IndividualId(2), 0, 10_000.0).unwrap()
}

fn target(samples: Vec<f64>) -> Cycle {
    Cycle::new(samples, ClassLabel::A, IndividualId(2), 0, 10_000.0).unwrap()
}

fn series(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1..=max)
}

/// Multiples of 1/16 stay exact under addition of another such value.
fn dyadic(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-64i32..=64).prop_map(|v| f64::from(v) / 16.0), 1..=max)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn amp_of_a_raised_peak() {
    let amp = delta_amp(
        &reference(vec![0.0, 1.0, 0.0]),
        &target(vec![0.0, 2.0, 0.0]),
        None,
    )
    .unwrap();
    assert_eq!(amp.values, vec![0.0, 1.0, 0.0]);
}

#[test]
fn delayed_event_gives_a_time_shift_plateau() {
    let (len, at, width, delay) = (120, 40, 20, 6);
    let bump = |start: usize| -> Vec<f64> {
        (0..len)
            .map(|i| {
                if (start..start + width).contains(&i) {
                    (std::f64::consts::PI * (i - start) as f64 / width as f64).sin() * 3.0
                } else {
                    0.0
                }
            })
            .collect()
    };
    let ts = delta_ts(&reference(bump(at)), &target(bump(at + delay)), None).unwrap();
    let path = dtw(&bump(at), &bump(at + delay), None).unwrap().path;
    // Over the event the reference index leads the target by the delay.
    let on_event: Vec<f64> = path
        .pairs
        .iter()
        .zip(&ts.values)
        .filter(|((_, q), _)| (at + delay + 1..at + delay + width - 1).contains(q))
        .map(|(_, &v)| v)
        .collect();
    assert!(!on_event.is_empty());
    assert!(
        on_event.iter().all(|&v| v == -(delay as f64)),
        "{on_event:?}"
    );
    assert_eq!(ts.values[0], 0.0);
    assert_eq!(*ts.values.last().unwrap(), 0.0);
}

#[test]
fn pdrop_ignores_a_constant_offset() {
    let base: Vec<f64> = (0..100)
        .map(|i| (i as f64 * 0.13).sin() + 0.01 * i as f64)
        .collect();
    let shifted: Vec<f64> = base.iter().map(|v| v + 4.25).collect();
    let d = delta_pdrop(&reference(base), &target(shifted), &PhaseWindow::default()).unwrap();
    assert!(d.values[0].abs() < 1e-12);
}

proptest! {
    #[test]
    fn feature_lengths_follow_the_path(x in series(40), y in series(40)) {
        let (amp, ts) = delta_amp_ts(&reference(x.clone()), &target(y.clone()), &DeltaConfig::default()).unwrap();
        let k = dtw(&x, &y, None).unwrap().path.len();
        prop_assert_eq!(amp.values.len(), k);
        prop_assert_eq!(ts.values.len(), k);
        prop_assert!(k >= x.len().max(y.len()) && k < x.len() + y.len());
    }

    #[test]
    fn time_shift_boundary_values(x in series(40), y in series(40)) {
        let ts = delta_ts(&reference(x.clone()), &target(y.clone()), None).unwrap();
        prop_assert_eq!(ts.values[0], 0.0);
        prop_assert_eq!(*ts.values.last().unwrap(), x.len() as f64 - y.len() as f64);
    }

    #[test]
    fn amplitude_energy_is_the_squared_distance(x in series(40), y in series(40)) {
        let amp = delta_amp(&reference(x.clone()), &target(y.clone()), None).unwrap();
        prop_assert!(amp.values.iter().all(|&v| v >= 0.0));
        let energy: f64 = amp.values.iter().map(|v| v * v).sum();
        let d = dtw(&x, &y, None).unwrap().distance;
        prop_assert!((energy - d * d).abs() <= 1e-9);
    }

    #[test]
    fn swapping_arguments_mirrors_the_features(x in series(30), y in series(30)) {
        let forward = dtw(&x, &y, None).unwrap();
        let backward = dtw(&y, &x, None).unwrap();
        // Continuous random values make optimal-path ties vanishingly rare.
        prop_assume!(backward.path == forward.path.transposed());
        let a = delta_amp(&reference(x.clone()), &target(y.clone()), None).unwrap();
        let b = delta_amp(&reference(y.clone()), &target(x.clone()), None).unwrap();
        prop_assert_eq!(sorted(a.values), sorted(b.values));
        let ts_f = delta_ts(&reference(x.clone()), &target(y.clone()), None).unwrap();
        let ts_b = delta_ts(&reference(y), &target(x), None).unwrap();
        let negated: Vec<f64> = ts_b.values.iter().map(|v| -v).collect();
        prop_assert_eq!(ts_f.values, negated);
    }

    #[test]
    fn adding_a_constant_changes_nothing(x in dyadic(30), y in dyadic(30), c in (-256i32..=256).prop_map(|v| f64::from(v) / 16.0)) {
        let shift = |v: &[f64]| v.iter().map(|s| s + c).collect::<Vec<f64>>();
        let cfg = DeltaConfig::default();
        let (amp0, ts0) = delta_amp_ts(&reference(x.clone()), &target(y.clone()), &cfg).unwrap();
        let (amp1, ts1) = delta_amp_ts(&reference(shift(&x)), &target(shift(&y)), &cfg).unwrap();
        prop_assert_eq!(dtw(&x, &y, None).unwrap().path, dtw(&shift(&x), &shift(&y), None).unwrap().path);
        prop_assert_eq!(amp0.values, amp1.values);
        prop_assert_eq!(ts0.values, ts1.values);
    }

    #[test]
    fn pdrop_offset_invariance(x in prop::collection::vec(-5.0f64..5.0, 10..60), c in -100.0f64..100.0) {
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let other: Vec<f64> = x.iter().rev().copied().collect();
        let w = PhaseWindow::default();
        let a = delta_pdrop(&reference(other.clone()), &target(x), &w).unwrap().values[0];
        let b = delta_pdrop(&reference(other.iter().map(|v| v + c).collect()), &target(shifted), &w).unwrap().values[0];
        prop_assert!((a - b).abs() <= 1e-9);
    }
}
