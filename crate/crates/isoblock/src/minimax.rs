//! Two-point minimax certificates.
//!
//! A local perturbation of the regression function — flattened at the
//! level `f0(x0 − h·r_n)` on the lower orthant of `x0` — stays isotone,
//! costs `n·ℓ₂² ≲ 2σ²` against the design, and separates the two
//! hypotheses at `x0` by a multiple of the local rate. Feeding it into
//! the two-point risk bound `(γ_n/8)·exp(−α/2σ²)` certifies that no
//! estimator beats the max-min block estimator's rate or its dependence
//! on the local derivatives.

use serde::Serialize;

use crate::design::{self, DesignKind, DesignSpec};
use crate::error::{Error, Result};
use crate::grid;
use crate::rates::{self, RateReport, SmoothnessProfile};
use crate::testfn::{Evaluator, TestFunction};

/// Minimax risk lower bound over a two-point hypothesis set separated
/// by `gamma_n` at the query point with likelihood budget
/// `n·ℓ₂² ≤ alpha_budget`: `(γ_n/8)·exp(−α/(2σ²))`.
pub fn two_point_bound(gamma_n: f64, alpha_budget: f64, sigma: f64) -> Result<f64> {
    if !(gamma_n > 0.0) || !gamma_n.is_finite() {
        return Err(Error::InvalidConfig("gamma_n must be positive".into()));
    }
    if !(alpha_budget >= 0.0) || !alpha_budget.is_finite() {
        return Err(Error::InvalidConfig("alpha budget must be nonnegative".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::ZeroNoise);
    }
    Ok(gamma_n / 8.0 * (-alpha_budget / (2.0 * sigma * sigma)).exp())
}

/// An isotone local perturbation `f_n` of a base function `f0`:
/// `f_n(x) = min(f0(x), f0(x0 − h·r_n))` on `{x ≤ x0}` and `f0`
/// elsewhere.
#[derive(Clone)]
pub struct Perturbation {
    pub x0: Vec<f64>,
    pub h: Vec<f64>,
    pub gamma: f64,
    pub n: usize,
    pub omega_n: f64,
    pub r_n: Vec<f64>,
    /// `f0(x0 − h·r_n)`, the flattening level.
    pub threshold: f64,
    /// Lower corner of the box outside which `f_n = f0` for large `n`.
    pub support_lower: Vec<f64>,
    base: Evaluator,
}

impl Perturbation {
    pub fn base_value(&self, x: &[f64]) -> f64 {
        (self.base)(x)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let below = x.iter().zip(&self.x0).all(|(a, b)| a <= b);
        let v = (self.base)(x);
        if below {
            v.min(self.threshold)
        } else {
            v
        }
    }

    /// Separation `|f_n(x0) − f0(x0)|` at the query point.
    pub fn gamma_n(&self) -> f64 {
        (self.base_value(&self.x0) - self.threshold).max(0.0)
    }
}

fn effective_smooth_range(profile: &SmoothnessProfile, kappa_star: usize) -> Result<(usize, usize)> {
    let s = profile.s();
    if kappa_star < 1 || kappa_star > s {
        return Err(Error::InvalidProfile(format!(
            "perturbation needs a smooth effective dimension; kappa_star {kappa_star} vs s = {s}"
        )));
    }
    Ok((kappa_star - 1, s))
}

/// Perturbation with an explicit flattening amplitude `gamma` (the
/// canonical builder chooses the amplitude that exhausts the likelihood
/// budget).
pub fn perturbation_with_gamma(
    profile: &SmoothnessProfile,
    f: &TestFunction,
    report: &RateReport,
    n: usize,
    gamma: f64,
    tau: f64,
) -> Result<Perturbation> {
    profile.validate()?;
    if profile.has_nonzero_mixed() {
        return Err(Error::MixedDerivativesPresent);
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidConfig("gamma must be positive".into()));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidConfig("tau must be positive".into()));
    }
    let (lo, s) = effective_smooth_range(profile, report.kappa_star)?;
    let d = profile.dim();
    let omega_n = report.omega_n(n as f64);
    let mut h = vec![0.0; d];
    let mut r_n = vec![0.0; d];
    for k in 0..d {
        match profile.alpha[k].finite() {
            Some(a) if k >= lo && k < s => {
                h[k] = (gamma * rates::factorial(a + 1) / profile.marginal_derivs[k])
                    .powf(1.0 / a as f64);
                r_n[k] = omega_n.powf(1.0 / a as f64);
            }
            Some(a) => {
                // Screened-out smooth dimension: no perturbation along it.
                let _ = a;
                h[k] = 0.0;
                r_n[k] = 0.0;
            }
            None => {
                h[k] = tau;
                r_n[k] = 1.0;
            }
        }
    }
    let amax = (lo..s)
        .map(|k| profile.alpha[k].finite().unwrap() as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut corner = Vec::with_capacity(d);
    let mut support_lower = Vec::with_capacity(d);
    for k in 0..d {
        let off = h[k] * r_n[k];
        let x = profile.x0[k] - off;
        if x < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "n = {n} is too small: the perturbation leaves the unit cube in dimension {}",
                k + 1
            )));
        }
        corner.push(x);
        support_lower.push(profile.x0[k] - 2.0 * d as f64 * amax * off);
    }
    let threshold = f.value(&corner);
    Ok(Perturbation {
        x0: profile.x0.clone(),
        h,
        gamma,
        n,
        omega_n,
        r_n,
        threshold,
        support_lower,
        base: f.evaluator(),
    })
}

/// Build the canonical perturbation whose amplitude is chosen so the
/// likelihood budget `n·ℓ₂²` stays below `2σ²` asymptotically.
pub fn build_perturbation(
    profile: &SmoothnessProfile,
    f: &TestFunction,
    report: &RateReport,
    n: usize,
    sigma: f64,
    tau: f64,
) -> Result<Perturbation> {
    if !(sigma > 0.0) {
        return Err(Error::ZeroNoise);
    }
    profile.validate()?;
    if profile.has_nonzero_mixed() {
        return Err(Error::MixedDerivativesPresent);
    }
    let (lo, s) = effective_smooth_range(profile, report.kappa_star)?;
    let d = profile.dim() as f64;
    let s_star = (s - lo) as f64;
    let amax: f64 = (lo..s)
        .map(|k| profile.alpha[k].finite().unwrap() as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum_ap1: f64 = (lo..s)
        .map(|k| profile.alpha[k].finite().unwrap() as f64 + 1.0)
        .sum();
    let mut log_prod = 0.0;
    let mut inv_sum = 0.0;
    for k in lo..s {
        let a = profile.alpha[k].finite().unwrap();
        log_prod += (profile.marginal_derivs[k] / rates::factorial(a + 1)).ln() / a as f64;
        inv_sum += 1.0 / a as f64;
    }
    let inner = (2.0 * sigma * sigma
        / (s_star * (2.0 * d * amax).powf(d + 2.0 * amax) * sum_ap1))
        .ln()
        + log_prod;
    let gamma = (inner / (2.0 + inv_sum)).exp();
    perturbation_with_gamma(profile, f, report, n, gamma, tau)
}

/// `ℓ₂²(f_n, f0) = n⁻¹ Σ_i (f_n(X_i) − f0(X_i))²`, summed exactly over
/// the lattice.
pub fn l2_squared_lattice(pert: &Perturbation, spec: &DesignSpec) -> Result<f64> {
    let axes = match &spec.kind {
        DesignKind::FixedLattice { axes, .. } => axes,
        DesignKind::Random { .. } => {
            return Err(Error::InvalidDesign("expected a lattice design".into()))
        }
    };
    let dims: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let zeros = vec![0usize; dims.len()];
    let his: Vec<usize> = dims.iter().map(|&m| m - 1).collect();
    let mut idx = zeros.clone();
    let mut point = vec![0.0; dims.len()];
    let mut sum = 0.0;
    loop {
        for (k, &j) in idx.iter().enumerate() {
            point[k] = axes[k][j];
        }
        let diff = pert.value(&point) - pert.base_value(&point);
        sum += diff * diff;
        if !grid::advance(&mut idx, &zeros, &his) {
            break;
        }
    }
    Ok(sum / spec.total_n as f64)
}

/// `ℓ₂²(f_n, f0) = ∫ (f_n − f0)² π` by quasi-Monte Carlo (Halton points
/// with a seeded Cranley–Patterson rotation).
pub fn l2_squared_density(
    pert: &Perturbation,
    density: &dyn Fn(&[f64]) -> f64,
    points: usize,
    seed: u64,
) -> f64 {
    let d = pert.x0.len();
    let shift: Vec<f64> = {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, 0);
        (0..d).map(|_| rng.gen::<f64>()).collect()
    };
    let mut sum = 0.0;
    let mut x = vec![0.0; d];
    for i in 0..points {
        for k in 0..d {
            let u = radical_inverse(i as u64 + 1, PRIMES[k % PRIMES.len()]);
            x[k] = (u + shift[k]).fract();
        }
        let diff = pert.value(&x) - pert.base_value(&x);
        sum += diff * diff * density(&x);
    }
    sum / points as f64
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 0.0;
    let mut frac = 1.0 / base as f64;
    while i > 0 {
        inv += (i % base) as f64 * frac;
        i /= base;
        frac /= base as f64;
    }
    inv
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyRow {
    pub n: usize,
    pub total_n: usize,
    pub gamma_n: f64,
    /// Likelihood budget `n·ℓ₂²(f_n, f0)`.
    pub l2_budget: f64,
    pub bound: f64,
    /// `bound · (n*/σ²)^{1/(2+Σ 1/α_k)}`: must stay bounded away from 0
    /// and ∞ along the sample-size ladder.
    pub normalized: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport {
    pub kappa_star: usize,
    pub rate_exponent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_constant: Option<f64>,
    pub sigma: f64,
    pub rows: Vec<CertifyRow>,
}

/// For each sample size: build the canonical perturbation against a
/// lattice design, evaluate the two-point bound at its separation, and
/// normalize by the theoretical rate. The normalized sequence is the
/// computable certificate of local rate optimality.
pub fn certify_rate_optimality(
    profile: &SmoothnessProfile,
    f: &TestFunction,
    beta: &[f64],
    n_list: &[usize],
    sigma: f64,
    tau: f64,
    _seed: u64,
) -> Result<CertifyReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("n_list must be strictly increasing".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::ZeroNoise);
    }
    let mut report = rates::kappa_star_argmax(&profile.alpha, beta)?;
    rates::attach_constant(&mut report, profile)?;
    let e_star = report.n_star_norm_exponent();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let spec = design::build_lattice(n, beta, &profile.x0)?;
        let pert = build_perturbation(profile, f, &report, spec.total_n, sigma, tau)?;
        let l2 = l2_squared_lattice(&pert, &spec)?;
        let budget = spec.total_n as f64 * l2;
        let gamma_n = pert.gamma_n();
        let bound = two_point_bound(gamma_n, budget, sigma)?;
        let normalized = bound * (report.n_star(spec.total_n as f64) / (sigma * sigma)).powf(e_star);
        rows.push(CertifyRow {
            n,
            total_n: spec.total_n,
            gamma_n,
            l2_budget: budget,
            bound,
            normalized,
        });
    }
    Ok(CertifyReport {
        kappa_star: report.kappa_star,
        rate_exponent: report.rate_exponent,
        k_constant: report.k_constant,
        sigma,
        rows,
    })
}
