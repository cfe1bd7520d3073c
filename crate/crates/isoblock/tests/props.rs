//! Randomized invariants across the library surface.

use proptest::prelude::*;

use isoblock::design::Dataset;
use isoblock::estimator::{fit_grid, max_min_estimate};
use isoblock::experiments::ks_distance;
use isoblock::rates::{self, AlphaExp};

fn lattice_from(sides: &[usize], responses: Vec<f64>) -> Dataset {
    let d = sides.len();
    let mut points = Vec::with_capacity(responses.len() * d);
    let mut idx = vec![0usize; d];
    'outer: loop {
        for k in 0..d {
            points.push(idx[k] as f64 / sides[k] as f64 + 0.01);
        }
        for k in (0..d).rev() {
            if idx[k] + 1 < sides[k] {
                idx[k] += 1;
                idx[k + 1..].fill(0);
                continue 'outer;
            }
        }
        break;
    }
    Dataset::from_points(d, points, responses).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fitted_grids_stay_isotonic_and_in_range(
        sides in prop::collection::vec(2usize..5, 1..=2),
        seed in any::<u64>(),
    ) {
        let n: usize = sides.iter().product();
        let mut rng = isoblock::rng::stream(seed, 0);
        use rand::Rng;
        let responses: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 20.0 - 10.0).collect();
        let lo = responses.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = responses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ds = lattice_from(&sides, responses);
        let fitted = fit_grid(&ds).unwrap();
        let dims = fitted.view.dims.clone();
        let mut strides = vec![1usize; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        for flat in 0..fitted.values.len() {
            prop_assert!(fitted.values[flat] >= lo && fitted.values[flat] <= hi);
            for k in 0..dims.len() {
                if flat / strides[k] % dims[k] + 1 < dims[k] {
                    prop_assert!(fitted.values[flat + strides[k]] >= fitted.values[flat]);
                }
            }
        }
    }

    #[test]
    fn increasing_an_effective_exponent_never_slows_the_rate(
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = isoblock::rng::stream(seed, 1);
        let d = rng.gen_range(1..=4usize);
        let s = rng.gen_range(1..=d);
        let mut alpha: Vec<AlphaExp> = (0..d)
            .map(|k| {
                if k < s {
                    AlphaExp::Finite(2 * rng.gen_range(0..=3u32) + 1)
                } else {
                    AlphaExp::Infinite
                }
            })
            .collect();
        let mut beta: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() + 0.05).collect();
        let total: f64 = beta.iter().sum();
        beta.iter_mut().for_each(|b| *b /= total);
        let before = rates::kappa_star_argmax(&alpha, &beta).unwrap();
        prop_assert!(before.rate_exponent > 0.0 && before.rate_exponent <= 0.5);
        // The lattice rate is never slower than the random-design rate.
        let random = rates::rate_report_random(&alpha).unwrap();
        prop_assert!(before.rate_exponent >= random.rate_exponent - 1e-12);
        // Bump one smooth exponent that is effective.
        let effective: Vec<usize> = before.permutation[before.kappa_star - 1..]
            .iter()
            .copied()
            .filter(|&k| alpha[k].is_finite())
            .collect();
        prop_assume!(!effective.is_empty());
        let k = effective[rng.gen_range(0..effective.len())];
        if let AlphaExp::Finite(a) = alpha[k] {
            alpha[k] = AlphaExp::Finite(a + 2);
        }
        let after = rates::kappa_star_argmax(&alpha, &beta).unwrap();
        prop_assert!(after.rate_exponent >= before.rate_exponent - 1e-12,
            "rate dropped: {} -> {}", before.rate_exponent, after.rate_exponent);
    }

    #[test]
    fn rate_exponent_is_invariant_to_dimension_relabeling(
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = isoblock::rng::stream(seed, 2);
        let d = rng.gen_range(2..=4usize);
        let s = rng.gen_range(1..=d);
        let alpha: Vec<AlphaExp> = (0..d)
            .map(|k| {
                if k < s {
                    AlphaExp::Finite(2 * rng.gen_range(0..=3u32) + 1)
                } else {
                    AlphaExp::Infinite
                }
            })
            .collect();
        let mut beta: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() + 0.05).collect();
        let total: f64 = beta.iter().sum();
        beta.iter_mut().for_each(|b| *b /= total);
        let base = rates::kappa_star_argmax(&alpha, &beta).unwrap();
        // Random relabeling of the dimensions.
        let mut perm: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let alpha_p: Vec<AlphaExp> = perm.iter().map(|&k| alpha[k]).collect();
        let beta_p: Vec<f64> = perm.iter().map(|&k| beta[k]).collect();
        let relabeled = rates::kappa_star_argmax(&alpha_p, &beta_p).unwrap();
        prop_assert!((base.rate_exponent - relabeled.rate_exponent).abs() <= 1e-12);
        prop_assert_eq!(base.kappa_star, relabeled.kappa_star);
    }

    #[test]
    fn ks_distance_is_a_symmetric_pseudometric_bounded_by_one(
        a in prop::collection::vec(-100.0f64..100.0, 1..40),
        b in prop::collection::vec(-100.0f64..100.0, 1..40),
    ) {
        let d = ks_distance(&a, &b);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - ks_distance(&b, &a)).abs() < 1e-15);
        prop_assert_eq!(ks_distance(&a, &a), 0.0);
    }
}

/// The estimator takes the max first and the min second; whether the
/// swapped order agrees over rectangle classes is not settled, so any
/// observed discrepancy is logged rather than asserted.
#[test]
fn max_min_vs_min_max_discrepancies_are_logged_not_asserted() {
    use rand::Rng;
    let mut rng = isoblock::rng::stream(99, 0);
    let mut seen = 0usize;
    for trial in 0..50 {
        let sides = [3usize, 3];
        let n: usize = sides.iter().product();
        let responses: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let ds = lattice_from(&sides, responses);
        let x0 = [0.34, 0.34];
        let max_min = max_min_estimate(&ds, &x0).unwrap().value;
        let min_max = min_max_oracle(&ds, &x0);
        if (max_min - min_max).abs() > 1e-12 {
            seen += 1;
            eprintln!(
                "note: max-min {max_min} differs from min-max {min_max} on trial {trial}"
            );
        }
    }
    eprintln!("note: {seen}/50 planar trials had max-min != min-max");
}

fn min_max_oracle(ds: &Dataset, x0: &[f64]) -> f64 {
    let d = ds.dim;
    let n = ds.n();
    let mut lower_cand: Vec<Vec<f64>> = Vec::new();
    let mut upper_cand: Vec<Vec<f64>> = Vec::new();
    for k in 0..d {
        let mut vals: Vec<f64> = (0..n).map(|i| ds.point(i)[k]).collect();
        vals.push(x0[k]);
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        lower_cand.push(vals.iter().copied().filter(|v| *v <= x0[k]).collect());
        upper_cand.push(vals.iter().copied().filter(|v| *v >= x0[k]).collect());
    }
    let mut outer: Option<f64> = None;
    let mut ui = vec![0usize; d];
    'upper: loop {
        let upper: Vec<f64> = (0..d).map(|k| upper_cand[k][ui[k]]).collect();
        let mut inner: Option<f64> = None;
        let mut li = vec![0usize; d];
        'lower: loop {
            let lower: Vec<f64> = (0..d).map(|k| lower_cand[k][li[k]]).collect();
            let mut sum = 0.0;
            let mut count = 0usize;
            for i in 0..n {
                let p = ds.point(i);
                if (0..d).all(|k| lower[k] <= p[k] && p[k] <= upper[k]) {
                    sum += ds.responses[i];
                    count += 1;
                }
            }
            if count > 0 {
                let mean = sum / count as f64;
                if inner.is_none_or(|m| mean > m) {
                    inner = Some(mean);
                }
            }
            for k in (0..d).rev() {
                if li[k] + 1 < lower_cand[k].len() {
                    li[k] += 1;
                    li[k + 1..].fill(0);
                    continue 'lower;
                }
            }
            break;
        }
        if let Some(mean) = inner {
            if outer.is_none_or(|m| mean < m) {
                outer = Some(mean);
            }
        }
        for k in (0..d).rev() {
            if ui[k] + 1 < upper_cand[k].len() {
                ui[k] += 1;
                ui[k + 1..].fill(0);
                continue 'upper;
            }
        }
        break;
    }
    outer.unwrap()
}
