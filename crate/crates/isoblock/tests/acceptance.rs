//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its runtime (run with `--nocapture` to see them).
//!
//! Criteria:
//! 1. univariate fits equal the pool-adjacent-violators oracle;
//! 2. the corner-restricted search equals exhaustive corner enumeration;
//! 3. isotonicity, shift/scale equivariance, and range containment;
//! 4. the two characterizations of the effective dimension agree;
//! 5. the planar exp/linear pair yields near-identical scaled error
//!    distributions at desk scale;
//! 6. log-log rate recovery matches the theoretical exponents;
//! 7. the simulated limit field has the right covariance and the
//!    univariate sup-inf law matches the convex-minorant sampler;
//! 8. minimax perturbation certificates hold along a sample-size ladder.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{StandardNormal, StudentT};

use isoblock::design::Dataset;
use isoblock::error::Error;
use isoblock::estimator::{fit_grid, max_min_estimate, pava};
use isoblock::experiments::{ks_distance, rate_fit_from_rows, run_cdf_experiment, ExperimentConfig};
use isoblock::limit;
use isoblock::minimax;
use isoblock::rates::{self, AlphaExp};
use isoblock::rng;
use isoblock::testfn;

const SEED: u64 = 20240811;

fn finish(criterion: u32, start: Instant, budget: Duration, detail: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed < budget,
        "criterion {criterion} exceeded its runtime budget: {elapsed:?} >= {budget:?}"
    );
    println!("PASS criterion {criterion} ({elapsed:.2?}): {detail}");
}

// ---------------------------------------------------------------- 1 --

#[test]
fn criterion_1_univariate_pava_equivalence() {
    let start = Instant::now();
    let mut rng = rng::stream(SEED, 1);
    let t2 = StudentT::new(2.0).unwrap();
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let n = rng.gen_range(2..=50usize);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let noise: f64 = if trial % 2 == 0 {
                    rng.sample::<f64, _>(StandardNormal)
                } else {
                    rng.sample::<f64, _>(t2)
                };
                2.0 * x + 0.7 * noise
            })
            .collect();
        let ds = Dataset::from_points(1, xs, ys).unwrap();
        let fitted = fit_grid(&ds).unwrap();
        let reference = pava(&fitted.view.responses, &vec![1.0; fitted.values.len()]);
        for (a, b) in fitted.values.iter().zip(&reference) {
            worst = worst.max((a - b).abs());
            assert!((a - b).abs() <= 1e-9, "fit {a} vs pava {b}");
        }
    }
    finish(
        1,
        start,
        Duration::from_secs(10),
        &format!("200 univariate datasets, max |fit - pava| = {worst:.2e}"),
    );
}

// ---------------------------------------------------------------- 2 --

/// Exhaustive oracle: every corner pair from the observed-coordinate
/// product grid (augmented with the query point), means by direct scan.
fn oracle_max_min(ds: &Dataset, x0: &[f64]) -> Option<f64> {
    let d = ds.dim;
    let n = ds.n();
    let mut lower_cand: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut upper_cand: Vec<Vec<f64>> = Vec::with_capacity(d);
    for k in 0..d {
        let mut vals: Vec<f64> = (0..n).map(|i| ds.point(i)[k]).collect();
        vals.push(x0[k]);
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        lower_cand.push(vals.iter().copied().filter(|v| *v <= x0[k]).collect());
        upper_cand.push(vals.iter().copied().filter(|v| *v >= x0[k]).collect());
    }
    if lower_cand.iter().any(|v| v.is_empty()) || upper_cand.iter().any(|v| v.is_empty()) {
        return None;
    }
    let mut best: Option<f64> = None;
    let mut li = vec![0usize; d];
    loop {
        let lower: Vec<f64> = (0..d).map(|k| lower_cand[k][li[k]]).collect();
        let mut inner: Option<f64> = None;
        let mut ui = vec![0usize; d];
        loop {
            let upper: Vec<f64> = (0..d).map(|k| upper_cand[k][ui[k]]).collect();
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
                if inner.is_none_or(|m| mean < m) {
                    inner = Some(mean);
                }
            }
            if !advance_mixed(&mut ui, &upper_cand) {
                break;
            }
        }
        if let Some(mean) = inner {
            if best.is_none_or(|m| mean > m) {
                best = Some(mean);
            }
        }
        if !advance_mixed(&mut li, &lower_cand) {
            break;
        }
    }
    best
}

fn advance_mixed(idx: &mut [usize], cand: &[Vec<f64>]) -> bool {
    for k in (0..idx.len()).rev() {
        if idx[k] + 1 < cand[k].len() {
            idx[k] += 1;
            for j in k + 1..idx.len() {
                idx[j] = 0;
            }
            return true;
        }
    }
    false
}

fn lattice_with_responses(sides: &[usize], responses: Vec<f64>) -> Dataset {
    let d = sides.len();
    let mut points = Vec::with_capacity(responses.len() * d);
    let mut idx = vec![0usize; d];
    loop {
        for k in 0..d {
            points.push(idx[k] as f64 / (sides[k] - 1) as f64);
        }
        let mut k = d;
        let mut done = true;
        while k > 0 {
            k -= 1;
            if idx[k] + 1 < sides[k] {
                idx[k] += 1;
                for j in k + 1..d {
                    idx[j] = 0;
                }
                done = false;
                break;
            }
        }
        if done {
            break;
        }
    }
    Dataset::from_points(d, points, responses).unwrap()
}

#[test]
fn criterion_2_brute_force_equivalence() {
    let start = Instant::now();
    let mut rng = rng::stream(SEED, 2);
    let mut checked = 0usize;

    // All 2^4 quadrant sign patterns on a 4x4 lattice.
    for mask in 0..16u32 {
        let responses: Vec<f64> = (0..16)
            .map(|cell| {
                let (i, j) = (cell / 4, cell % 4);
                let quadrant = (i / 2) * 2 + j / 2;
                if mask >> quadrant & 1 == 1 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let ds = lattice_with_responses(&[4, 4], responses);
        for i in 0..4 {
            for j in 0..4 {
                let x0 = [i as f64 / 3.0, j as f64 / 3.0];
                let fit = max_min_estimate(&ds, &x0).unwrap();
                let oracle = oracle_max_min(&ds, &x0).unwrap();
                assert_eq!(fit.value, oracle, "mask {mask} node ({i},{j})");
                checked += 1;
            }
        }
    }

    // Random lattices with dyadic responses, so both summation orders
    // are exact and equality is literal.
    for (sides, trials) in [(vec![6usize, 6], 50usize), (vec![4usize, 4, 4], 50usize)] {
        let n: usize = sides.iter().product();
        for _ in 0..trials {
            let responses: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(-1_000_000i64..=1_000_000) as f64 / 1024.0)
                .collect();
            let ds = lattice_with_responses(&sides, responses);
            // Every node plus two off-grid queries.
            let mut queries: Vec<Vec<f64>> = Vec::new();
            let mut idx = vec![0usize; sides.len()];
            loop {
                queries.push(
                    idx.iter()
                        .zip(&sides)
                        .map(|(&i, &m)| i as f64 / (m - 1) as f64)
                        .collect(),
                );
                if !advance_sides(&mut idx, &sides) {
                    break;
                }
            }
            queries.push(vec![0.37; sides.len()]);
            queries.push(vec![0.81; sides.len()]);
            for x0 in &queries {
                let fit = max_min_estimate(&ds, x0).unwrap();
                let oracle = oracle_max_min(&ds, x0).unwrap();
                assert_eq!(fit.value, oracle, "sides {sides:?} x0 {x0:?}");
                checked += 1;
            }
        }
    }
    finish(
        2,
        start,
        Duration::from_secs(30),
        &format!("{checked} query points matched the exhaustive oracle exactly"),
    );
}

fn advance_sides(idx: &mut [usize], sides: &[usize]) -> bool {
    for k in (0..idx.len()).rev() {
        if idx[k] + 1 < sides[k] {
            idx[k] += 1;
            for j in k + 1..idx.len() {
                idx[j] = 0;
            }
            return true;
        }
    }
    false
}

// ---------------------------------------------------------------- 3 --

#[test]
fn criterion_3_monotonicity_and_equivariance() {
    let start = Instant::now();
    let mut rng = rng::stream(SEED, 3);

    // Isotonic fitted grids: 1000 random small lattices.
    for _ in 0..1000 {
        let d = rng.gen_range(1..=3usize);
        let sides: Vec<usize> = (0..d).map(|_| rng.gen_range(2..=4usize)).collect();
        let n: usize = sides.iter().product();
        let responses: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 10.0 - 5.0).collect();
        let ds = lattice_with_responses(&sides, responses);
        let fitted = fit_grid(&ds).unwrap();
        let dims = fitted.view.dims.clone();
        let strides = strides_of(&dims);
        for flat in 0..fitted.values.len() {
            for k in 0..dims.len() {
                let coord = flat / strides[k] % dims[k];
                if coord + 1 < dims[k] {
                    assert!(
                        fitted.values[flat + strides[k]] >= fitted.values[flat],
                        "monotonicity violated on {sides:?}"
                    );
                }
            }
        }
    }

    // Exact shift and positive-scale equivariance plus range containment.
    // Responses are integers inside one binade and shifts are integers,
    // so the floating-point rounding grid commutes with the shift and
    // equality is exact; scales are powers of two, which are always
    // exact.
    for _ in 0..1000 {
        let d = rng.gen_range(1..=2usize);
        let sides: Vec<usize> = (0..d).map(|_| rng.gen_range(2..=5usize)).collect();
        let n: usize = sides.iter().product();
        let responses: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(532_480i64..=1_040_384) as f64)
            .collect();
        let ds = lattice_with_responses(&sides, responses.clone());
        let x0: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let base = max_min_estimate(&ds, &x0).unwrap().value;

        let c = loop {
            let c = rng.gen_range(-2048i64..=2048);
            if c != 0 {
                break c as f64;
            }
        };
        let shifted = lattice_with_responses(&sides, responses.iter().map(|y| y + c).collect());
        let shifted_fit = max_min_estimate(&shifted, &x0).unwrap().value;
        assert_eq!(shifted_fit, base + c, "shift equivariance");

        let a = 2.0f64.powi(rng.gen_range(-8i32..=8));
        let scaled = lattice_with_responses(&sides, responses.iter().map(|y| a * y).collect());
        let scaled_fit = max_min_estimate(&scaled, &x0).unwrap().value;
        assert_eq!(scaled_fit, a * base, "scale equivariance");

        let lo = responses.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = responses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(base >= lo && base <= hi, "range containment");
    }

    finish(
        3,
        start,
        Duration::from_secs(60),
        "1000 isotonic grids; 1000 exact shift/scale/range trials",
    );
}

fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

// ---------------------------------------------------------------- 4 --

#[test]
fn criterion_4_effective_dimension_consistency() {
    let start = Instant::now();

    // Worked examples.
    let r = rates::kappa_star_argmax(
        &[AlphaExp::Finite(1), AlphaExp::Finite(1)],
        &[0.5, 0.5],
    )
    .unwrap();
    assert_eq!((r.kappa_star, r.unique), (1, true));
    assert!((r.rate_exponent - 0.25).abs() < 1e-15);

    let r = rates::kappa_star_argmax(
        &[
            AlphaExp::Finite(1),
            AlphaExp::Infinite,
            AlphaExp::Infinite,
            AlphaExp::Infinite,
        ],
        &[0.25; 4],
    )
    .unwrap();
    assert_eq!((r.kappa_star, r.unique), (2, true));
    assert!((r.rate_exponent - 0.375).abs() < 1e-15);
    assert!((r.n_star_exponent - 0.75).abs() < 1e-12);

    let third = rates::parse_rational("1/3").unwrap();
    let tie = rates::kappa_star_argmax_exact(
        &[AlphaExp::Finite(1), AlphaExp::Infinite, AlphaExp::Infinite],
        &[third, third, third],
    )
    .unwrap();
    assert!(!tie.unique);
    assert!((tie.rate_exponent - 1.0 / 3.0).abs() < 1e-15);

    // 1000 random non-degenerate instances, cross-validated against an
    // in-test evaluation of the rate objective.
    let mut rng = rng::stream(SEED, 4);
    let mut kept = 0usize;
    while kept < 1000 {
        let d = rng.gen_range(1..=5usize);
        let s = rng.gen_range(0..=d);
        let mut pairs: Vec<(AlphaExp, f64)> = (0..d)
            .map(|k| {
                let a = if k < s {
                    AlphaExp::Finite(2 * rng.gen_range(0..=4u32) + 1)
                } else {
                    AlphaExp::Infinite
                };
                (a, -rng.gen::<f64>().ln() + 0.05)
            })
            .collect();
        let total: f64 = pairs.iter().map(|(_, b)| b).sum();
        for (_, b) in pairs.iter_mut() {
            *b /= total;
        }
        // Canonical order for the in-test objective.
        pairs.sort_by(|x, y| {
            let px = x.0.finite().map_or(f64::INFINITY, |a| a as f64 * x.1);
            let py = y.0.finite().map_or(f64::INFINITY, |a| a as f64 * y.1);
            px.partial_cmp(&py).unwrap()
        });
        let alpha: Vec<AlphaExp> = pairs.iter().map(|(a, _)| *a).collect();
        let beta: Vec<f64> = pairs.iter().map(|(_, b)| *b).collect();
        let phi: Vec<f64> = (1..=d)
            .map(|ell| {
                let num: f64 = beta[ell - 1..].iter().sum();
                let den: f64 =
                    2.0 + alpha[ell - 1..].iter().map(|a| a.inv()).sum::<f64>();
                num / den
            })
            .collect();
        let mut best = 0usize;
        for i in 1..d {
            if phi[i] > phi[best] {
                best = i;
            }
        }
        let gap = (0..d)
            .filter(|&i| i != best)
            .map(|i| phi[best] - phi[i])
            .fold(f64::INFINITY, f64::min);
        if !(gap > 1e-9) {
            continue;
        }
        let fixed = match rates::kappa_star_fixed_point(&alpha, &beta) {
            Ok(k) => k,
            Err(Error::DegenerateBoundary(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        let report = rates::kappa_star_argmax(&alpha, &beta).unwrap();
        assert!(report.unique, "non-degenerate instance reported a tie");
        assert_eq!(report.kappa_star, best + 1, "argmax vs in-test objective");
        assert_eq!(fixed, best + 1, "fixed point vs in-test objective");
        kept += 1;
    }

    finish(
        4,
        start,
        Duration::from_secs(5),
        "worked examples reproduced; 1000 random instances agree",
    );
}

// ---------------------------------------------------------------- 5 --

#[test]
fn criterion_5_planar_pair_distributional_agreement() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        functions: vec!["f1".into(), "f2".into()],
        x0: vec![0.5, 0.5],
        lattice_sides: vec![30],
        replications: 300,
        sigma: 1.0,
        seed: SEED,
        rate_exponent: 0.25,
    };
    let rows = run_cdf_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 2 * 300);
    assert!(rows.iter().all(|r| r.statistic.is_finite()));

    let stats = |id: &str| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.function == id)
            .map(|r| r.statistic)
            .collect()
    };
    let (a, b) = (stats("f1"), stats("f2"));
    assert_eq!(a.len(), 300);

    // The empirical CDF support: sorted and nondecreasing by construction.
    let mut ecdf = a.clone();
    ecdf.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert!(ecdf.windows(2).all(|w| w[0] <= w[1]));

    // Exercise the long-form output end of the pipeline.
    let dir = tempfile::tempdir().unwrap();
    isoblock::experiments::write_outputs(dir.path(), &cfg, &rows, None).unwrap();
    assert!(dir.path().join("cdf.csv").exists());
    assert!(dir.path().join("qq.csv").exists());

    let d = ks_distance(&a, &b);
    assert!(d <= 0.2, "KS distance between the pair: {d}");
    finish(
        5,
        start,
        Duration::from_secs(300),
        &format!("30x30, B=300: KS(f1, f2) = {d:.4}"),
    );
}

// ---------------------------------------------------------------- 6 --

#[test]
fn criterion_6_rate_recovery() {
    let start = Instant::now();

    let planar = ExperimentConfig {
        functions: vec!["f1".into()],
        x0: vec![0.5, 0.5],
        lattice_sides: vec![15, 30, 60],
        replications: 200,
        sigma: 1.0,
        seed: SEED + 6,
        rate_exponent: 0.25,
    };
    let rows = run_cdf_experiment(&planar).unwrap();
    let fit = &rate_fit_from_rows(&planar, &rows).unwrap()[0];
    assert!(
        (-0.35..=-0.15).contains(&fit.slope),
        "planar slope {} outside [-0.35, -0.15]",
        fit.slope
    );

    let univariate = ExperimentConfig {
        functions: vec!["linear1d".into()],
        x0: vec![0.5],
        lattice_sides: vec![100, 400, 1600],
        replications: 200,
        sigma: 1.0,
        seed: SEED + 7,
        rate_exponent: 1.0 / 3.0,
    };
    let rows = run_cdf_experiment(&univariate).unwrap();
    let fit1 = &rate_fit_from_rows(&univariate, &rows).unwrap()[0];
    assert!(
        (-0.42..=-0.25).contains(&fit1.slope),
        "univariate slope {} outside [-0.42, -0.25]",
        fit1.slope
    );

    finish(
        6,
        start,
        Duration::from_secs(600),
        &format!(
            "planar slope {:.3} (theory -0.25); univariate slope {:.3} (theory -1/3)",
            fit.slope, fit1.slope
        ),
    );
}

// ---------------------------------------------------------------- 7 --

#[test]
fn criterion_7_limit_process_correctness() {
    let start = Instant::now();

    // Empirical covariance at 5 preregistered knot pairs (two effective
    // dimensions), M = 5000, within three Monte Carlo standard errors of
    // the closed form.
    let axes = vec![vec![0.3, 0.7, 1.2], vec![0.3, 0.7, 1.2]];
    let grid = limit::SheetGrid::new(axes.clone(), axes.clone()).unwrap();
    type Knot = ([usize; 2], [usize; 2]);
    let pairs: [(Knot, Knot); 5] = [
        (([0, 0], [0, 0]), ([0, 0], [0, 0])),
        (([2, 1], [0, 2]), ([1, 1], [1, 1])),
        (([0, 2], [2, 0]), ([2, 0], [0, 2])),
        (([1, 0], [1, 0]), ([2, 2], [0, 0])),
        (([2, 2], [2, 2]), ([0, 0], [0, 0])),
    ];
    let m = 5000usize;
    let mut xs = vec![Vec::with_capacity(m); 5];
    let mut ys = vec![Vec::with_capacity(m); 5];
    for r in 0..m {
        let field = limit::sample_sheet_stream(&grid, SEED + 70, r as u64).unwrap();
        for (p, ((i1, i2), (j1, j2))) in pairs.iter().enumerate() {
            xs[p].push(field.value(i1, i2));
            ys[p].push(field.value(j1, j2));
        }
    }
    let knot = |idx: [usize; 2]| -> [f64; 2] { [axes[0][idx[0]], axes[1][idx[1]]] };
    for (p, ((i1, i2), (j1, j2))) in pairs.iter().enumerate() {
        let closed = limit::field_covariance(&knot(*i1), &knot(*i2), &knot(*j1), &knot(*j2));
        let mx = xs[p].iter().sum::<f64>() / m as f64;
        let my = ys[p].iter().sum::<f64>() / m as f64;
        let vx = xs[p].iter().map(|x| (x - mx).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        let vy = ys[p].iter().map(|y| (y - my).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        let emp = xs[p]
            .iter()
            .zip(&ys[p])
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / (m as f64 - 1.0);
        let se = ((vx * vy + closed * closed) / m as f64).sqrt();
        assert!(
            (emp - closed).abs() <= 3.0 * se,
            "pair {p}: empirical {emp:.4} vs closed {closed:.4} (se {se:.4})"
        );
    }

    // Exact self-similarity of the covariance formula.
    let h1 = [0.6, 1.4];
    let h2 = [0.9, 0.2];
    for gamma in [[0.5, 4.0], [2.0, 0.125], [3.0, 3.0]] {
        let scale: f64 = gamma.iter().product();
        let s = |v: &[f64; 2]| [v[0] * gamma[0], v[1] * gamma[1]];
        let lhs = limit::field_variance(&s(&h1), &s(&h2));
        let rhs = scale * limit::field_variance(&h1, &h2);
        assert!((lhs - rhs).abs() <= 1e-14 * rhs.abs());
    }

    // Univariate first-order sup-inf law vs the convex-minorant slope.
    let cfg = limit::SupInfConfig::marginal(vec![1], vec![]);
    let sup_inf = limit::sample_sup_inf(&cfg, 2000, SEED + 71).unwrap();
    let chernoff = limit::chernoff_sample(2000, 8.0, 0.05, SEED + 72).unwrap();
    let d = ks_distance(&sup_inf, &chernoff);
    assert!(d <= 0.1, "KS(sup-inf, convex minorant) = {d}");

    finish(
        7,
        start,
        Duration::from_secs(300),
        &format!("5 covariance pairs within 3 SE; cross-sampler KS = {d:.4}"),
    );
}

// ---------------------------------------------------------------- 8 --

#[test]
fn criterion_8_minimax_certificates() {
    let start = Instant::now();
    let f = testfn::by_id("linear1d").unwrap();
    let profile = f.profile.clone();
    let report = rates::kappa_star_argmax(&profile.alpha, &[1.0]).unwrap();

    // Isotonicity and containment of the perturbed function.
    let n = 10_000usize;
    let pert = minimax::build_perturbation(&profile, &f, &report, n, 1.0, 0.05).unwrap();
    let mut rng = rng::stream(SEED, 8);
    for _ in 0..1000 {
        let a = rng.gen::<f64>();
        let b = rng.gen::<f64>();
        let (lo, hi) = (a.min(b), a.max(b));
        assert!(pert.value(&[lo]) <= pert.value(&[hi]) + 1e-12);
        if lo < pert.support_lower[0] || lo > pert.x0[0] {
            assert_eq!(pert.value(&[lo]), pert.base_value(&[lo]));
        }
    }

    // Likelihood budget at n = 10^4.
    let spec = isoblock::design::build_lattice(n, &[1.0], &[0.5]).unwrap();
    let budget = n as f64 * minimax::l2_squared_lattice(&pert, &spec).unwrap();
    assert!(budget <= 2.5, "n * l2^2 = {budget} exceeds 2.5 sigma^2");

    // Normalized lower-bound constants along the ladder.
    let rep = minimax::certify_rate_optimality(
        &profile,
        &f,
        &[1.0],
        &[1_000, 10_000, 100_000],
        1.0,
        0.05,
        SEED,
    )
    .unwrap();
    let vals: Vec<f64> = rep.rows.iter().map(|r| r.normalized).collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(
        hi / lo < 2.0,
        "normalized constants spread by more than a factor 2: {vals:?}"
    );

    finish(
        8,
        start,
        Duration::from_secs(30),
        &format!(
            "budget {budget:.3} <= 2.5; normalized constants in [{lo:.4}, {hi:.4}]"
        ),
    );
}
