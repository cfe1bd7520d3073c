//! Monte Carlo samplers for the pointwise limit distributions.
//!
//! The driving noise is a centered Gaussian field `G(h1, h2)` over pairs
//! of bandwidth vectors with covariance
//! `Π_k (min((h1)_k,(h1')_k) + min((h2)_k,(h2')_k))` across the
//! effective dimensions, realized exactly on a knot grid as a sum of
//! `2^{d*}` independent Brownian sheets evaluated at mixed corners. The
//! limit statistic is the sup over `h1` of the inf over `h2` of
//! `G/Π_k (h1+h2)_k` plus a polynomial drift, truncated to a compact
//! grid away from zero. In one dimension with first-order smoothness
//! the same law arises as the slope at zero of the greatest convex
//! minorant of Brownian motion plus a parabola, which provides an
//! independent cross-check sampler.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{self, NdArray};
use crate::rates::{factorial, RateReport, SmoothnessProfile};
use crate::rng;

/// Drift of the sup-inf statistic.
#[derive(Clone, Debug)]
pub enum Drift {
    /// Unit-coefficient marginal drift `Σ_k ((h2)_k^{α_k+1} − (h1)_k^{α_k+1})/((h1)_k+(h2)_k)`;
    /// the pivotal statistic, rescaled by the local constant afterwards.
    Marginal,
    /// Critical-order Taylor drift with coefficients `∂^j f(x0)/(j+1)!`,
    /// needed when cross derivatives survive in the limit.
    Full(Vec<DriftTerm>),
}

#[derive(Clone, Debug)]
pub struct DriftTerm {
    /// Multi-index over the smooth effective axes.
    pub j: Vec<u32>,
    pub coeff: f64,
}

/// Truncated-grid configuration of the sup-inf statistic.
///
/// Smooth axes carry the drift exponents; inactive axes are capped by
/// the distance from the query point to the domain boundary. Knots are
/// geometric on `[c^{-γ*}, c]` (caps permitting) because the optimizing
/// bandwidths concentrate on a compact set away from zero.
#[derive(Clone, Debug)]
pub struct SupInfConfig {
    pub smooth_alphas: Vec<u32>,
    /// Per inactive axis: cap for `h1` (distance to the lower boundary)
    /// and cap for `h2` (distance to the upper boundary).
    pub inactive_caps: Vec<(f64, f64)>,
    pub c: f64,
    pub gamma_star: f64,
    pub m: usize,
    pub drift: Drift,
}

impl SupInfConfig {
    /// Marginal-drift configuration with the default grid (c = 8,
    /// γ* = 2, 48 knots per axis).
    pub fn marginal(smooth_alphas: Vec<u32>, inactive_caps: Vec<(f64, f64)>) -> SupInfConfig {
        SupInfConfig {
            smooth_alphas,
            inactive_caps,
            c: 8.0,
            gamma_star: 2.0,
            m: 48,
            drift: Drift::Marginal,
        }
    }

    pub fn d_star(&self) -> usize {
        self.smooth_alphas.len() + self.inactive_caps.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_star() == 0 {
            return Err(Error::InvalidConfig("no effective dimensions".into()));
        }
        if !(self.c > 1.0) || !self.c.is_finite() {
            return Err(Error::InvalidConfig("truncation radius c must exceed 1".into()));
        }
        if !(self.gamma_star > 0.0) {
            return Err(Error::InvalidConfig("gamma_star must be positive".into()));
        }
        if self.m < 8 {
            return Err(Error::InvalidConfig("need at least 8 knots per axis".into()));
        }
        if self.smooth_alphas.iter().any(|&a| a == 0 || a % 2 == 0) {
            return Err(Error::InvalidConfig(
                "smooth exponents must be odd positive integers".into(),
            ));
        }
        let cutoff = self.c.powf(-self.gamma_star);
        for &(c1, c2) in &self.inactive_caps {
            if !(c1 > cutoff && c2 > cutoff) {
                return Err(Error::InvalidConfig(format!(
                    "boundary caps ({c1}, {c2}) must exceed the inner cutoff {cutoff}"
                )));
            }
        }
        if let Drift::Full(terms) = &self.drift {
            for t in terms {
                if t.j.len() != self.smooth_alphas.len() || !t.coeff.is_finite() {
                    return Err(Error::InvalidConfig("malformed drift term".into()));
                }
            }
        }
        Ok(())
    }

    /// Knot vectors for the `h1` and `h2` axes.
    pub fn grids(&self) -> Result<SheetGrid> {
        self.validate()?;
        let cutoff = self.c.powf(-self.gamma_star);
        let mut h1_axes = Vec::with_capacity(self.d_star());
        let mut h2_axes = Vec::with_capacity(self.d_star());
        for _ in &self.smooth_alphas {
            h1_axes.push(geometric_knots(cutoff, self.c, self.m));
            h2_axes.push(geometric_knots(cutoff, self.c, self.m));
        }
        for &(c1, c2) in &self.inactive_caps {
            h1_axes.push(geometric_knots(cutoff, self.c.min(c1), self.m));
            h2_axes.push(geometric_knots(cutoff, self.c.min(c2), self.m));
        }
        SheetGrid::new(h1_axes, h2_axes)
    }
}

fn geometric_knots(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let ratio = hi / lo;
    (0..m)
        .map(|j| lo * ratio.powf(j as f64 / (m - 1) as f64))
        .collect()
}

/// Knot vectors (one per effective axis) for the two bandwidth arguments.
#[derive(Clone, Debug, PartialEq)]
pub struct SheetGrid {
    pub h1_axes: Vec<Vec<f64>>,
    pub h2_axes: Vec<Vec<f64>>,
}

impl SheetGrid {
    pub fn new(h1_axes: Vec<Vec<f64>>, h2_axes: Vec<Vec<f64>>) -> Result<SheetGrid> {
        if h1_axes.len() != h2_axes.len() || h1_axes.is_empty() {
            return Err(Error::InvalidConfig("axis counts differ or are empty".into()));
        }
        for axis in h1_axes.iter().chain(&h2_axes) {
            if axis.is_empty() {
                return Err(Error::InvalidConfig("empty knot vector".into()));
            }
            if axis[0] < 0.0 {
                return Err(Error::InvalidConfig("knots must be nonnegative".into()));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig("knots must be strictly increasing".into()));
            }
        }
        Ok(SheetGrid { h1_axes, h2_axes })
    }

    pub fn d_star(&self) -> usize {
        self.h1_axes.len()
    }
}

/// One realization of the Gaussian field `G` on a knot grid, stored as
/// the `2^{d*}` independent Brownian sheets it decomposes into.
pub struct SheetField {
    pub grid: SheetGrid,
    sheets: Vec<NdArray>,
    pub seed: u64,
}

impl SheetField {
    /// `G(h1, h2)` at the grid point with per-axis knot indices `i1`, `i2`.
    pub fn value(&self, i1: &[usize], i2: &[usize]) -> f64 {
        let d = self.grid.d_star();
        let mut idx = vec![0usize; d];
        let mut total = 0.0;
        for (mask, sheet) in self.sheets.iter().enumerate() {
            for k in 0..d {
                idx[k] = if mask >> k & 1 == 1 { i2[k] } else { i1[k] };
            }
            total += sheet.get(&idx);
        }
        total
    }

    pub fn d_star(&self) -> usize {
        self.grid.d_star()
    }
}

/// Closed-form covariance of the field across the effective dimensions:
/// `Π_k (min((h1)_k,(h1')_k) + min((h2)_k,(h2')_k))`.
pub fn field_covariance(h1: &[f64], h2: &[f64], h1p: &[f64], h2p: &[f64]) -> f64 {
    h1.iter()
        .zip(h2)
        .zip(h1p.iter().zip(h2p))
        .map(|((a, b), (ap, bp))| a.min(*ap) + b.min(*bp))
        .product()
}

pub fn field_variance(h1: &[f64], h2: &[f64]) -> f64 {
    field_covariance(h1, h2, h1, h2)
}

fn sample_one_sheet<R: Rng>(axes: &[&[f64]], rng: &mut R) -> NdArray {
    let dims: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let widths: Vec<Vec<f64>> = axes
        .iter()
        .map(|a| {
            a.iter()
                .enumerate()
                .map(|(j, &t)| if j == 0 { t } else { t - a[j - 1] })
                .collect()
        })
        .collect();
    let mut sheet = NdArray::zeros(&dims);
    let total = grid::total(&dims);
    for flat in 0..total {
        let idx = grid::unflatten(flat, &dims);
        let vol: f64 = idx.iter().zip(&widths).map(|(&j, w)| w[j]).product();
        let z: f64 = rng.sample(StandardNormal);
        sheet.data[flat] = vol.sqrt() * z;
    }
    for k in 0..dims.len() {
        sheet.cumsum_axis(k);
    }
    sheet
}

/// Draw the field on the grid: independent Gaussian cell increments
/// with variance equal to cell volume, accumulated into sheets, one
/// sheet per corner assignment. Exact covariance on the knots.
pub fn sample_sheet(grid_spec: &SheetGrid, seed: u64) -> Result<SheetField> {
    sample_sheet_stream(grid_spec, seed, 0)
}

/// Stream variant for replicated draws: stream `r` yields replication `r`.
pub fn sample_sheet_stream(grid_spec: &SheetGrid, seed: u64, stream_id: u64) -> Result<SheetField> {
    let d = grid_spec.d_star();
    let mut rng = rng::stream(seed, stream_id);
    let mut sheets = Vec::with_capacity(1 << d);
    for mask in 0..(1usize << d) {
        let axes: Vec<&[f64]> = (0..d)
            .map(|k| {
                if mask >> k & 1 == 1 {
                    grid_spec.h2_axes[k].as_slice()
                } else {
                    grid_spec.h1_axes[k].as_slice()
                }
            })
            .collect();
        sheets.push(sample_one_sheet(&axes, &mut rng));
    }
    Ok(SheetField {
        grid: grid_spec.clone(),
        sheets,
        seed,
    })
}

/// All-zero field on the grid (deterministic saddle checks).
pub fn zero_field(grid_spec: &SheetGrid) -> SheetField {
    let d = grid_spec.d_star();
    let sheets = (0..(1usize << d))
        .map(|mask| {
            let dims: Vec<usize> = (0..d)
                .map(|k| {
                    if mask >> k & 1 == 1 {
                        grid_spec.h2_axes[k].len()
                    } else {
                        grid_spec.h1_axes[k].len()
                    }
                })
                .collect();
            NdArray::zeros(&dims)
        })
        .collect();
    SheetField {
        grid: grid_spec.clone(),
        sheets,
        seed: 0,
    }
}

/// `((h2)^{j+1} − (−h1)^{j+1}) / (h1 + h2)`, the per-axis drift factor.
/// At `j = 0` this is exactly 1.
fn drift_factor(h1: f64, h2: f64, j: u32) -> f64 {
    (h2.powi(j as i32 + 1) - (-h1).powi(j as i32 + 1)) / (h1 + h2)
}

struct Evaluator {
    d_star: usize,
    dims1: Vec<usize>,
    dims2: Vec<usize>,
    /// sums[m][a * dims2[m] + b] = h1_axes[m][a] + h2_axes[m][b]
    sums: Vec<Vec<f64>>,
    drift: DriftTables,
    grid: SheetGrid,
}

enum DriftTables {
    Marginal(Vec<Vec<f64>>),
    Full(Vec<(f64, Vec<Option<Vec<f64>>>)>),
}

impl Evaluator {
    fn new(cfg: &SupInfConfig) -> Result<Evaluator> {
        let grid_spec = cfg.grids()?;
        let d = grid_spec.d_star();
        let dims1: Vec<usize> = grid_spec.h1_axes.iter().map(|a| a.len()).collect();
        let dims2: Vec<usize> = grid_spec.h2_axes.iter().map(|a| a.len()).collect();
        let mut sums = Vec::with_capacity(d);
        for m in 0..d {
            let mut tab = Vec::with_capacity(dims1[m] * dims2[m]);
            for &a in &grid_spec.h1_axes[m] {
                for &b in &grid_spec.h2_axes[m] {
                    tab.push(a + b);
                }
            }
            sums.push(tab);
        }
        let table_for = |m: usize, j: u32| -> Vec<f64> {
            let mut tab = Vec::with_capacity(dims1[m] * dims2[m]);
            for &a in &grid_spec.h1_axes[m] {
                for &b in &grid_spec.h2_axes[m] {
                    tab.push(drift_factor(a, b, j));
                }
            }
            tab
        };
        let drift = match &cfg.drift {
            Drift::Marginal => DriftTables::Marginal(
                cfg.smooth_alphas
                    .iter()
                    .enumerate()
                    .map(|(m, &a)| table_for(m, a))
                    .collect(),
            ),
            Drift::Full(terms) => DriftTables::Full(
                terms
                    .iter()
                    .map(|t| {
                        let tabs = t
                            .j
                            .iter()
                            .enumerate()
                            .map(|(m, &j)| if j == 0 { None } else { Some(table_for(m, j)) })
                            .collect();
                        (t.coeff, tabs)
                    })
                    .collect(),
            ),
        };
        Ok(Evaluator {
            d_star: d,
            dims1,
            dims2,
            sums,
            drift,
            grid: grid_spec,
        })
    }

    fn statistic(&self, field: &SheetField) -> Result<f64> {
        if field.grid != self.grid {
            return Err(Error::InvalidConfig("field grid does not match the config".into()));
        }
        let d = self.d_star;
        let zeros = vec![0usize; d];
        let his1: Vec<usize> = self.dims1.iter().map(|&m| m - 1).collect();
        let his2: Vec<usize> = self.dims2.iter().map(|&m| m - 1).collect();

        let mut sup = f64::NEG_INFINITY;
        let mut a = zeros.clone();
        loop {
            let mut inf = f64::INFINITY;
            let mut b = zeros.clone();
            loop {
                let g = field.value(&a, &b);
                let mut denom = 1.0;
                for m in 0..d {
                    denom *= self.sums[m][a[m] * self.dims2[m] + b[m]];
                }
                let drift = match &self.drift {
                    DriftTables::Marginal(tabs) => {
                        let mut acc = 0.0;
                        for (m, tab) in tabs.iter().enumerate() {
                            acc += tab[a[m] * self.dims2[m] + b[m]];
                        }
                        acc
                    }
                    DriftTables::Full(terms) => {
                        let mut acc = 0.0;
                        for (coeff, tabs) in terms {
                            let mut prod = *coeff;
                            for (m, tab) in tabs.iter().enumerate() {
                                if let Some(tab) = tab {
                                    prod *= tab[a[m] * self.dims2[m] + b[m]];
                                }
                            }
                            acc += prod;
                        }
                        acc
                    }
                };
                let u = g / denom + drift;
                if !u.is_finite() {
                    return Err(Error::NonFiniteField);
                }
                if u < inf {
                    inf = u;
                }
                if !grid::advance(&mut b, &zeros, &his2) {
                    break;
                }
            }
            if inf > sup {
                sup = inf;
            }
            if !grid::advance(&mut a, &zeros, &his1) {
                break;
            }
        }
        Ok(sup)
    }
}

/// Sup over `h1` knots of the inf over `h2` knots of
/// `G/Π(h1+h2) + drift`, exactly in that order.
pub fn sup_inf_statistic(field: &SheetField, cfg: &SupInfConfig) -> Result<f64> {
    Evaluator::new(cfg)?.statistic(field)
}

/// `draws` i.i.d. sup-inf statistics; replication `r` uses stream `r`
/// of `seed`, so the output is independent of the worker count.
pub fn sample_sup_inf(cfg: &SupInfConfig, draws: usize, seed: u64) -> Result<Vec<f64>> {
    if draws == 0 {
        return Err(Error::InvalidConfig("need at least one draw".into()));
    }
    let eval = Evaluator::new(cfg)?;
    (0..draws)
        .into_par_iter()
        .map(|r| {
            let field = sample_sheet_stream(&eval.grid, seed, r as u64)?;
            eval.statistic(&field)
        })
        .collect()
}

/// Grid settings for the profile-driven sampler.
#[derive(Clone, Copy, Debug)]
pub struct SupInfSettings {
    pub c: f64,
    pub gamma_star: f64,
    pub m: usize,
}

impl Default for SupInfSettings {
    fn default() -> Self {
        SupInfSettings {
            c: 8.0,
            gamma_star: 2.0,
            m: 48,
        }
    }
}

/// Sample the limit distribution of the normalized estimation error at
/// the profile's query point.
///
/// When every critical cross derivative that survives in the limit
/// vanishes, the statistic factors: the pivotal marginal-drift law is
/// drawn and scaled by the local constant. Otherwise the full drift
/// with the profile's Taylor coefficients is used directly.
pub fn sample_limit_distribution(
    profile: &SmoothnessProfile,
    report: &RateReport,
    draws: usize,
    settings: SupInfSettings,
    seed: u64,
) -> Result<Vec<f64>> {
    profile.validate()?;
    let d = profile.dim();
    let kappa = report.kappa_star;
    if report.permutation.len() != d || kappa < 1 || kappa > d {
        return Err(Error::InvalidProfile("report does not match the profile".into()));
    }
    // Assemble the effective axes in canonical order.
    let mut smooth_alphas = Vec::new();
    let mut smooth_orig = Vec::new();
    let mut inactive_caps = Vec::new();
    for &orig in &report.permutation[kappa - 1..] {
        match profile.alpha[orig].finite() {
            Some(a) => {
                smooth_alphas.push(a);
                smooth_orig.push(orig);
            }
            None => inactive_caps.push((profile.x0[orig], 1.0 - profile.x0[orig])),
        }
    }
    let use_full = profile.has_nonzero_mixed()
        && profile.mixed_derivs.iter().any(|md| {
            md.value != 0.0
                && md
                    .j
                    .iter()
                    .enumerate()
                    .all(|(k, &jk)| jk == 0 || smooth_orig.contains(&k))
        });
    let mut cfg = SupInfConfig::marginal(smooth_alphas.clone(), inactive_caps);
    cfg.c = settings.c;
    cfg.gamma_star = settings.gamma_star;
    cfg.m = settings.m;
    if use_full {
        let mut terms = Vec::new();
        for (m, (&a, &orig)) in smooth_alphas.iter().zip(&smooth_orig).enumerate() {
            let mut j = vec![0u32; smooth_alphas.len()];
            j[m] = a;
            terms.push(DriftTerm {
                j,
                coeff: profile.marginal_derivs[orig] / factorial(a + 1),
            });
        }
        for md in &profile.mixed_derivs {
            if md.value == 0.0 {
                continue;
            }
            if md
                .j
                .iter()
                .enumerate()
                .any(|(k, &jk)| jk != 0 && !smooth_orig.contains(&k))
            {
                continue; // does not survive in the limit drift
            }
            let j: Vec<u32> = smooth_orig.iter().map(|&k| md.j[k]).collect();
            let fact: f64 = j.iter().map(|&jk| factorial(jk + 1)).product();
            terms.push(DriftTerm {
                j,
                coeff: md.value / fact,
            });
        }
        cfg.drift = Drift::Full(terms);
        sample_sup_inf(&cfg, draws, seed)
    } else {
        // Scale the pivotal law by the local constant.
        let mut log_prod = 0.0;
        let mut inv_sum = 0.0;
        for (&a, &orig) in smooth_alphas.iter().zip(&smooth_orig) {
            log_prod += (profile.marginal_derivs[orig] / factorial(a + 1)).ln() / a as f64;
            inv_sum += 1.0 / a as f64;
        }
        let k_const = (log_prod / (2.0 + inv_sum)).exp();
        let base = sample_sup_inf(&cfg, draws, seed)?;
        Ok(base.into_iter().map(|v| k_const * v).collect())
    }
}

/// Indices of the lower convex hull of `(ts, zs)` (ts ascending).
fn lower_convex_hull(ts: &[f64], zs: &[f64]) -> Vec<usize> {
    let cross = |i: usize, j: usize, k: usize| -> f64 {
        (ts[j] - ts[i]) * (zs[k] - zs[i]) - (zs[j] - zs[i]) * (ts[k] - ts[i])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(ts.len());
    for p in 0..ts.len() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

/// Slope at zero of the greatest convex minorant of the path `(ts, zs)`.
/// When zero is itself a hull vertex the left and right slopes are
/// averaged, which keeps the statistic exactly zero for noiseless
/// symmetric paths and preserves reflection symmetry in law.
pub fn gcm_slope_at_zero(ts: &[f64], zs: &[f64]) -> f64 {
    assert!(ts.len() >= 3 && ts.len() == zs.len());
    debug_assert!(ts.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(ts[0] < 0.0 && *ts.last().unwrap() > 0.0);
    let hull = lower_convex_hull(ts, zs);
    let slope = |i: usize, j: usize| (zs[hull[j]] - zs[hull[i]]) / (ts[hull[j]] - ts[hull[i]]);
    let pos = hull.iter().position(|&i| ts[i] >= 0.0).expect("hull spans 0");
    if ts[hull[pos]] == 0.0 {
        0.5 * (slope(pos - 1, pos) + slope(pos, pos + 1))
    } else {
        slope(pos - 1, pos)
    }
}

/// `draws` samples of the slope at zero of the greatest convex minorant
/// of two-sided Brownian motion plus `t²` on `[-horizon, horizon]`.
pub fn chernoff_sample(draws: usize, horizon: f64, step: f64, seed: u64) -> Result<Vec<f64>> {
    if draws == 0 {
        return Err(Error::InvalidConfig("need at least one draw".into()));
    }
    if !(horizon >= 4.0) || !horizon.is_finite() {
        return Err(Error::InvalidConfig("horizon must be at least 4".into()));
    }
    if !(step > 0.0 && step <= 0.05) {
        return Err(Error::InvalidConfig("step must lie in (0, 0.05]".into()));
    }
    let n_side = (horizon / step).ceil() as usize;
    let ts: Vec<f64> = (-(n_side as i64)..=n_side as i64)
        .map(|i| i as f64 * step)
        .collect();
    let sqrt_step = step.sqrt();
    (0..draws)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, r as u64);
            let mut zs = vec![0.0f64; 2 * n_side + 1];
            let mut b = 0.0;
            for i in 1..=n_side {
                b += sqrt_step * rng.sample::<f64, _>(StandardNormal);
                zs[n_side + i] = b;
            }
            b = 0.0;
            for i in 1..=n_side {
                b += sqrt_step * rng.sample::<f64, _>(StandardNormal);
                zs[n_side - i] = b;
            }
            for (z, &t) in zs.iter_mut().zip(&ts) {
                *z += t * t;
            }
            Ok(gcm_slope_at_zero(&ts, &zs))
        })
        .collect()
}
