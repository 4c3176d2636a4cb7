use proptest::prelude::*;
use proptest::strategy::ValueTree;
use wavefault::dtw::{dtw, dtw_distance_bounded, dtw_distance_only, euclidean};

/// Minimum squared cost over every monotone path from (0,0) to (i,j).
fn enumerate_paths(x: &[f64], y: &[f64], i: usize, j: usize) -> f64 {
    let d = x[i] - y[j];
    let here = d * d;
    if i == 0 && j == 0 {
        return here;
    }
    let mut best = f64::INFINITY;
    if i > 0 && j > 0 {
        best = best.min(enumerate_paths(x, y, i - 1, j - 1));
    }
    if i > 0 {
        best = best.min(enumerate_paths(x, y, i - 1, j));
    }
    if j > 0 {
        best = best.min(enumerate_paths(x, y, i, j - 1));
    }
    here + best
}

fn brute_force(x: &[f64], y: &[f64]) -> f64 {
    enumerate_paths(x, y, x.len() - 1, y.len() - 1).sqrt()
}

fn small_ints() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0..=3i32).prop_map(f64::from), 1..=7)
}

fn series(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..=max)
}

#[test]
fn worked_examples_match_enumeration() {
    let r = dtw(&[1.0, 2.0, 3.0], &[1.0, 3.0], None).unwrap();
    assert_eq!(r.distance, brute_force(&[1.0, 2.0, 3.0], &[1.0, 3.0]));
    assert!((r.distance - 1.0).abs() < 1e-12);

    let r = dtw(&[0.0], &[3.0], None).unwrap();
    assert_eq!(r.distance, 3.0);
    assert_eq!(r.path.pairs, vec![(0, 0)]);
}

#[test]
fn distance_only_is_bit_identical_on_random_pairs() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let pair = (
        prop::collection::vec(-3.0f64..3.0, 5..=50),
        prop::collection::vec(-3.0f64..3.0, 5..=50),
    );
    for _ in 0..100 {
        let (x, y) = pair.new_tree(&mut runner).unwrap().current();
        let full = dtw(&x, &y, None).unwrap().distance;
        let fast = dtw_distance_only(&x, &y, None).unwrap();
        assert_eq!(full.to_bits(), fast.to_bits());
    }
}

proptest! {
    #[test]
    fn matches_brute_force(x in small_ints(), y in small_ints()) {
        let got = dtw(&x, &y, None).unwrap().distance;
        prop_assert!((got - brute_force(&x, &y)).abs() <= 1e-9);
    }

    #[test]
    fn symmetric(x in series(30), y in series(30)) {
        let a = dtw(&x, &y, None).unwrap().distance;
        let b = dtw(&y, &x, None).unwrap().distance;
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn self_distance_is_zero_along_the_diagonal(x in series(40)) {
        let r = dtw(&x, &x, None).unwrap();
        prop_assert_eq!(r.distance, 0.0);
        let diagonal: Vec<(usize, usize)> = (0..x.len()).map(|i| (i, i)).collect();
        prop_assert_eq!(r.path.pairs, diagonal);
        prop_assert_eq!(dtw_distance_only(&x, &x, None).unwrap(), 0.0);
    }

    #[test]
    fn path_is_valid_and_reproduces_distance(x in series(40), y in series(40)) {
        let r = dtw(&x, &y, None).unwrap();
        prop_assert!(r.path.is_valid());
        prop_assert!(r.distance >= 0.0);
        let k = r.path.len();
        prop_assert!(k >= x.len().max(y.len()) && k < x.len() + y.len());
        prop_assert!((r.path.cost(&x, &y) - r.distance).abs() <= 1e-9);
    }

    #[test]
    fn zero_only_for_value_matching_alignments(x in small_ints()) {
        // Repeating samples stretches the series without changing its values.
        let stretched: Vec<f64> = x.iter().flat_map(|&v| [v, v]).collect();
        prop_assert_eq!(dtw(&x, &stretched, None).unwrap().distance, 0.0);
        let mut bumped = x.clone();
        bumped[0] += 1.0;
        prop_assert!(dtw(&x, &bumped, None).unwrap().distance > 0.0);
    }

    #[test]
    fn widening_the_band_never_increases_distance(x in series(30), y in series(30), extra in 0usize..10) {
        let diff = x.len().abs_diff(y.len());
        let narrow = dtw_distance_only(&x, &y, Some(diff)).unwrap();
        let wider = dtw_distance_only(&x, &y, Some(diff + extra)).unwrap();
        let free = dtw_distance_only(&x, &y, None).unwrap();
        prop_assert!(wider <= narrow + 1e-12);
        prop_assert!(free <= wider + 1e-12);
        let banded = dtw(&x, &y, Some(diff + extra)).unwrap();
        prop_assert!(banded.path.is_valid());
        prop_assert!(banded.path.pairs.iter().all(|&(i, j)| i.abs_diff(j) <= diff + extra));
        prop_assert_eq!(banded.distance.to_bits(), wider.to_bits());
    }

    #[test]
    fn bounded_agrees_with_unbounded(x in series(30), y in series(30), cutoff in 0.0f64..40.0) {
        let exact = dtw_distance_only(&x, &y, None).unwrap();
        match dtw_distance_bounded(&x, &y, None, cutoff).unwrap() {
            Some(d) => {
                prop_assert_eq!(d.to_bits(), exact.to_bits());
                prop_assert!(d <= cutoff);
            }
            None => prop_assert!(exact > cutoff),
        }
    }

    #[test]
    fn never_worse_than_euclidean(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..40)) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert!(dtw_distance_only(&x, &y, None).unwrap() <= euclidean(&x, &y).unwrap() + 1e-12);
    }
}

#[test]
fn rejects_bad_inputs() {
    assert!(dtw(&[], &[1.0], None).is_err());
    assert!(dtw(&[f64::NAN], &[1.0], None).is_err());
    assert!(dtw_distance_only(&[1.0; 10], &[1.0; 4], Some(5)).is_err());
}
