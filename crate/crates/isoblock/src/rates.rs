//! Local rate calculus for the max-min block estimator.
//!
//! Given per-dimension smoothness exponents `α` (odd integers on the
//! active coordinates, `∞` elsewhere) and, for lattice designs, the
//! grid exponents `β`, this module computes the critical Taylor index
//! sets, the effective dimension `κ*`, the effective sample size
//! exponent, the local rate exponent, and the constant that multiplies
//! the pivotal limit distribution.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A per-dimension smoothness exponent: the order of the first
/// non-vanishing marginal derivative, or `Infinite` for coordinates the
/// function does not locally depend on. `1/∞` is interpreted as `0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlphaExp {
    Finite(u32),
    Infinite,
}

impl AlphaExp {
    pub fn is_finite(self) -> bool {
        matches!(self, AlphaExp::Finite(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            AlphaExp::Finite(a) => Some(a),
            AlphaExp::Infinite => None,
        }
    }

    pub fn inv(self) -> f64 {
        match self {
            AlphaExp::Finite(a) => 1.0 / a as f64,
            AlphaExp::Infinite => 0.0,
        }
    }

    /// `α·β`, the quantity the canonical dimension ordering sorts by.
    fn times(self, beta: f64) -> f64 {
        match self {
            AlphaExp::Finite(a) => a as f64 * beta,
            AlphaExp::Infinite => f64::INFINITY,
        }
    }
}

impl std::str::FromStr for AlphaExp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t == "∞" {
            return Ok(AlphaExp::Infinite);
        }
        t.parse::<u32>()
            .map(AlphaExp::Finite)
            .map_err(|_| Error::InvalidProfile(format!("bad smoothness exponent `{s}`")))
    }
}

impl std::fmt::Display for AlphaExp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlphaExp::Finite(a) => write!(f, "{a}"),
            AlphaExp::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for AlphaExp {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AlphaExp::Finite(a) => s.serialize_u32(*a),
            AlphaExp::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for AlphaExp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(a) => Ok(AlphaExp::Finite(a)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Parse a comma-separated exponent list such as `1,3,inf`.
pub fn parse_alpha(s: &str) -> Result<Vec<AlphaExp>> {
    s.split(',').map(|t| t.parse()).collect()
}

/// Exact fraction with i64 terms; arithmetic goes through i128 so the
/// knife-edge tie comparisons never see rounding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    num: i64,
    den: i64,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs().max(1)
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidConfig("zero denominator".into()));
        }
        let (mut n, mut d) = (num as i128, den as i128);
        if d < 0 {
            n = -n;
            d = -d;
        }
        let g = gcd(n, d);
        Ok(Rational {
            num: (n / g) as i64,
            den: (d / g) as i64,
        })
    }

    pub fn from_int(v: i64) -> Self {
        Rational { num: v, den: 1 }
    }

    pub fn add(self, o: Rational) -> Rational {
        let n = self.num as i128 * o.den as i128 + o.num as i128 * self.den as i128;
        let d = self.den as i128 * o.den as i128;
        let g = gcd(n, d);
        Rational {
            num: (n / g) as i64,
            den: (d / g) as i64,
        }
    }

    pub fn div(self, o: Rational) -> Rational {
        let mut n = self.num as i128 * o.den as i128;
        let mut d = self.den as i128 * o.num as i128;
        if d < 0 {
            n = -n;
            d = -d;
        }
        let g = gcd(n, d);
        Rational {
            num: (n / g) as i64,
            den: (d / g) as i64,
        }
    }

    pub fn cmp_exact(self, o: Rational) -> std::cmp::Ordering {
        (self.num as i128 * o.den as i128).cmp(&(o.num as i128 * self.den as i128))
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Parse `p/q` or a plain integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: i64 = p
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad rational `{s}`")))?;
        let q: i64 = q
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad rational `{s}`")))?;
        Rational::new(p, q)
    } else {
        let v: i64 = t
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad rational `{s}`")))?;
        Ok(Rational::from_int(v))
    }
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n as u64).map(|k| k as f64).product()
}

/// Entries must be odd positive integers or infinite; any order.
fn validate_alpha_entries(alpha: &[AlphaExp]) -> Result<usize> {
    if alpha.is_empty() {
        return Err(Error::InvalidProfile("alpha must be non-empty".into()));
    }
    for (k, a) in alpha.iter().enumerate() {
        if let AlphaExp::Finite(v) = a {
            if *v == 0 || *v % 2 == 0 {
                return Err(Error::InvalidProfile(format!(
                    "exponent {v} in dimension {} must be an odd positive integer",
                    k + 1
                )));
            }
        }
    }
    Ok(alpha.iter().filter(|a| a.is_finite()).count())
}

/// Profile form: additionally requires the active dimensions to come
/// first, because derivative tables are indexed by them.
fn validate_alpha(alpha: &[AlphaExp]) -> Result<usize> {
    let s = validate_alpha_entries(alpha)?;
    if alpha[..s].iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidProfile(
            "finite exponents must precede infinite ones".into(),
        ));
    }
    Ok(s)
}

/// Multi-index sets of critical Taylor orders over the active dimensions.
///
/// `j` collects all `j ≥ 0` with `0 < Σ_k j_k/α_k ≤ 1` (zero beyond the
/// intrinsic dimension), `j_star` the equality slice, and `j1` the
/// members of `j_star` touching at least two coordinates. Only `j_star`
/// can carry non-vanishing derivatives of an isotone function that is
/// locally `α`-smooth, and `j1` is empty exactly when the finite
/// exponents are pairwise relative primes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSets {
    pub j: Vec<Vec<u32>>,
    pub j_star: Vec<Vec<u32>>,
    pub j1: Vec<Vec<u32>>,
}

pub fn index_sets(alpha: &[AlphaExp], s: usize) -> Result<IndexSets> {
    let s_actual = validate_alpha(alpha)?;
    if s != s_actual {
        return Err(Error::InvalidProfile(format!(
            "declared intrinsic dimension {s} does not match {s_actual} finite exponents"
        )));
    }
    let mut sets = IndexSets {
        j: Vec::new(),
        j_star: Vec::new(),
        j1: Vec::new(),
    };
    if s == 0 {
        return Ok(sets);
    }
    let alphas: Vec<u32> = alpha[..s].iter().map(|a| a.finite().unwrap()).collect();
    // Common denominator: Σ j_k/α_k compared as Σ j_k·(D/α_k) against D.
    let denom: i128 = alphas.iter().map(|&a| a as i128).product();
    let weights: Vec<i128> = alphas.iter().map(|&a| denom / a as i128).collect();

    let mut j = vec![0u32; s];
    loop {
        let total: i128 = j
            .iter()
            .zip(&weights)
            .map(|(&jk, &w)| jk as i128 * w)
            .sum();
        if total > 0 && total <= denom {
            sets.j.push(j.clone());
            if total == denom {
                sets.j_star.push(j.clone());
                if j.iter().filter(|&&jk| jk > 0).count() > 1 {
                    sets.j1.push(j.clone());
                }
            }
        }
        // Odometer over 0 ≤ j_k ≤ α_k; larger entries always overshoot.
        let mut k = s;
        loop {
            if k == 0 {
                return Ok(sets);
            }
            k -= 1;
            if j[k] < alphas[k] {
                j[k] += 1;
                for jk in j.iter_mut().skip(k + 1) {
                    *jk = 0;
                }
                break;
            }
        }
    }
}

/// A critical-order cross derivative `∂^j f(x0)`, keyed over the active
/// dimensions.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MixedDeriv {
    pub j: Vec<u32>,
    pub value: f64,
}

fn default_density() -> f64 {
    1.0
}

/// Everything the limit theory needs to know about the regression
/// function at the query point: exponents, the non-vanishing marginal
/// derivatives, the critical mixed derivatives, and the design density
/// at the point (1 for lattices and uniform designs).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothnessProfile {
    pub x0: Vec<f64>,
    pub alpha: Vec<AlphaExp>,
    /// `∂_k^{α_k} f(x0)` for the active dimensions `k = 1..s`.
    pub marginal_derivs: Vec<f64>,
    #[serde(default)]
    pub mixed_derivs: Vec<MixedDeriv>,
    #[serde(default = "default_density")]
    pub density_at_x0: f64,
}

impl SmoothnessProfile {
    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn s(&self) -> usize {
        self.alpha.iter().filter(|a| a.is_finite()).count()
    }

    pub fn validate(&self) -> Result<()> {
        let s = validate_alpha(&self.alpha)?;
        let d = self.alpha.len();
        if self.x0.len() != d {
            return Err(Error::InvalidProfile("x0 and alpha dimensions differ".into()));
        }
        if self.x0.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::InvalidProfile("x0 must lie strictly inside (0,1)^d".into()));
        }
        if self.marginal_derivs.len() != s {
            return Err(Error::InvalidProfile(format!(
                "expected {s} marginal derivatives, got {}",
                self.marginal_derivs.len()
            )));
        }
        if self.marginal_derivs.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidProfile(
                "marginal derivatives must be strictly positive".into(),
            ));
        }
        if !(self.density_at_x0 > 0.0) || !self.density_at_x0.is_finite() {
            return Err(Error::InvalidProfile("density at x0 must be positive".into()));
        }
        let sets = index_sets(&self.alpha, s)?;
        for md in &self.mixed_derivs {
            let key = normalize_mixed_key(&md.j, s, d)?;
            if !sets.j1.contains(&key) {
                return Err(Error::InvalidProfile(format!(
                    "mixed derivative index {:?} is not a critical cross order",
                    md.j
                )));
            }
            if !md.value.is_finite() {
                return Err(Error::InvalidProfile("non-finite mixed derivative".into()));
            }
        }
        Ok(())
    }

    /// Mixed keys normalized to length `s`.
    fn mixed_normalized(&self) -> Vec<(Vec<u32>, f64)> {
        let s = self.s();
        let d = self.dim();
        self.mixed_derivs
            .iter()
            .map(|md| (normalize_mixed_key(&md.j, s, d).expect("validated"), md.value))
            .collect()
    }

    /// True if some critical cross derivative that survives in the limit
    /// drift (support inside dimensions `κ*..s`) is non-zero.
    pub fn has_nonzero_mixed_from(&self, kappa_star: usize) -> bool {
        self.mixed_normalized().iter().any(|(j, v)| {
            *v != 0.0 && j.iter().take(kappa_star.saturating_sub(1)).all(|&jk| jk == 0)
        })
    }

    pub fn has_nonzero_mixed(&self) -> bool {
        self.has_nonzero_mixed_from(1)
    }

    /// Drift coefficients `∂^j f(x0)/(j+1)!` for every critical order `j`
    /// with support in dimensions `κ*..s`, expressed over those
    /// dimensions. Marginal orders contribute alongside the cross terms.
    pub fn drift_terms(&self, kappa_star: usize) -> Result<Vec<(Vec<u32>, f64)>> {
        self.validate()?;
        let s = self.s();
        if kappa_star < 1 || kappa_star > s + 1 {
            return Err(Error::InvalidProfile(format!(
                "kappa_star {kappa_star} outside 1..={}",
                s + 1
            )));
        }
        let lo = kappa_star - 1; // 0-based first active dim in the limit
        let mut terms = Vec::new();
        for k in lo..s {
            let a = self.alpha[k].finite().unwrap();
            let mut j = vec![0u32; s - lo];
            j[k - lo] = a;
            terms.push((j, self.marginal_derivs[k] / factorial(a + 1)));
        }
        for (j, v) in self.mixed_normalized() {
            if v == 0.0 || j.iter().take(lo).any(|&jk| jk != 0) {
                continue;
            }
            let jj: Vec<u32> = j[lo..].to_vec();
            let fact: f64 = jj.iter().map(|&jk| factorial(jk + 1)).product();
            terms.push((jj, v / fact));
        }
        Ok(terms)
    }
}

fn normalize_mixed_key(j: &[u32], s: usize, d: usize) -> Result<Vec<u32>> {
    if j.len() == s {
        return Ok(j.to_vec());
    }
    if j.len() == d && j[s..].iter().all(|&jk| jk == 0) {
        return Ok(j[..s].to_vec());
    }
    Err(Error::InvalidProfile(format!(
        "mixed derivative index {j:?} must cover the {s} active dimensions"
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignClass {
    Lattice,
    Random,
}

/// Output of the rate calculus.
///
/// Dimensions are reported in the canonical order that sorts `α_k β_k`
/// increasingly; `permutation[p]` is the caller's 0-based dimension
/// sitting at canonical position `p`.
#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub design: DesignClass,
    /// Smallest canonical dimension that contributes to the asymptotics
    /// (1-based). Dimensions `kappa_star..=d` are the effective ones.
    pub kappa_star: usize,
    /// Whether the maximizer defining `kappa_star` is strict. The limit
    /// distribution is pinned down only in that case; otherwise only the
    /// stochastic-order rate stands.
    pub unique: bool,
    pub effective_dims: Vec<usize>,
    pub permutation: Vec<usize>,
    /// `n* = n^{n_star_exponent}` is the effective sample size.
    pub n_star_exponent: f64,
    /// `|f̂(x0) − f(x0)|` is of order `n^{-rate_exponent}`.
    pub rate_exponent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_constant: Option<f64>,
    /// For random designs with full intrinsic dimension, the constant
    /// with the design density at `x0` absorbed into it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_density_rescaled: Option<f64>,
}

impl RateReport {
    /// Local rate `ω_n = n^{-rate_exponent}` at sample size `n`.
    pub fn omega_n(&self, n: f64) -> f64 {
        n.powf(-self.rate_exponent)
    }

    pub fn n_star(&self, n: f64) -> f64 {
        n.powf(self.n_star_exponent)
    }

    /// Exponent applied to `n*/σ²` in the limit normalization,
    /// `1/(2 + Σ_{k=κ*}^s α_k^{-1})`.
    pub fn n_star_norm_exponent(&self) -> f64 {
        self.rate_exponent / self.n_star_exponent
    }
}

fn canonical_perm(alpha: &[AlphaExp], beta: &[f64]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..alpha.len()).collect();
    perm.sort_by(|&a, &b| {
        let pa = alpha[a].times(beta[a]);
        let pb = alpha[b].times(beta[b]);
        pa.partial_cmp(&pb)
            .unwrap()
            .then(alpha[a].inv().partial_cmp(&alpha[b].inv()).unwrap().reverse())
            .then(a.cmp(&b))
    });
    perm
}

fn validate_beta(beta: &[f64], d: usize) -> Result<()> {
    if beta.len() != d {
        return Err(Error::InvalidDesign("alpha and beta dimensions differ".into()));
    }
    if beta.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::InvalidDesign("beta entries must be positive".into()));
    }
    let sum: f64 = beta.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDesign(format!("beta must sum to 1, got {sum}")));
    }
    Ok(())
}

/// `κ*` for a lattice design as the maximizer of
/// `ℓ ↦ (Σ_{k≥ℓ} β_k)/(2 + Σ_{k=ℓ}^s α_k^{-1})`, together with the rate
/// and effective-sample-size exponents. Ties are reported through
/// `unique = false` (smallest maximizer returned).
pub fn kappa_star_argmax(alpha: &[AlphaExp], beta: &[f64]) -> Result<RateReport> {
    validate_alpha_entries(alpha)?;
    validate_beta(beta, alpha.len())?;
    let perm = canonical_perm(alpha, beta);
    let phi = |ell: usize| -> f64 {
        let num: f64 = perm[ell - 1..].iter().map(|&k| beta[k]).sum();
        let den: f64 = 2.0 + perm[ell - 1..].iter().map(|&k| alpha[k].inv()).sum::<f64>();
        num / den
    };
    let d = alpha.len();
    let values: Vec<f64> = (1..=d).map(phi).collect();
    finish_lattice_report(alpha, beta, perm, &values, |a, b| {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    })
}

/// Exact-rational variant of [`kappa_star_argmax`] for β supplied as
/// fractions; tie detection is exact.
pub fn kappa_star_argmax_exact(alpha: &[AlphaExp], beta: &[Rational]) -> Result<RateReport> {
    validate_alpha_entries(alpha)?;
    let bf: Vec<f64> = beta.iter().map(|r| r.as_f64()).collect();
    validate_beta(&bf, alpha.len())?;
    let perm = canonical_perm(alpha, &bf);
    let inv_alpha = |k: usize| -> Rational {
        match alpha[k] {
            AlphaExp::Finite(a) => Rational::new(1, a as i64).unwrap(),
            AlphaExp::Infinite => Rational::from_int(0),
        }
    };
    let d = alpha.len();
    let phi: Vec<Rational> = (1..=d)
        .map(|ell| {
            let num = perm[ell - 1..]
                .iter()
                .fold(Rational::from_int(0), |acc, &k| acc.add(beta[k]));
            let den = perm[ell - 1..]
                .iter()
                .fold(Rational::from_int(2), |acc, &k| acc.add(inv_alpha(k)));
            num.div(den)
        })
        .collect();
    let best = phi
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.cmp_exact(**b).then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .unwrap();
    let unique = phi
        .iter()
        .enumerate()
        .all(|(i, v)| i == best || v.cmp_exact(phi[best]) == std::cmp::Ordering::Less);
    let values: Vec<f64> = phi.iter().map(|r| r.as_f64()).collect();
    let mut report = finish_lattice_report(alpha, &bf, perm, &values, |_, _| false)?;
    report.kappa_star = best + 1;
    report.unique = unique;
    report.effective_dims = (best + 1..=d).collect();
    report.n_star_exponent = report.permutation[best..]
        .iter()
        .map(|&k| bf[k])
        .sum();
    report.rate_exponent = values[best];
    Ok(report)
}

fn finish_lattice_report(
    alpha: &[AlphaExp],
    beta: &[f64],
    perm: Vec<usize>,
    values: &[f64],
    tie: impl Fn(f64, f64) -> bool,
) -> Result<RateReport> {
    let d = alpha.len();
    let mut best = 0usize;
    for i in 1..d {
        if values[i] > values[best] && !tie(values[i], values[best]) {
            best = i;
        }
    }
    let unique = (0..d).all(|i| i == best || (values[i] < values[best] && !tie(values[i], values[best])));
    let n_star_exponent: f64 = perm[best..].iter().map(|&k| beta[k]).sum();
    Ok(RateReport {
        design: DesignClass::Lattice,
        kappa_star: best + 1,
        unique,
        effective_dims: (best + 1..=d).collect(),
        permutation: perm,
        n_star_exponent,
        rate_exponent: values[best],
        k_constant: None,
        k_density_rescaled: None,
    })
}

/// Rate report for an i.i.d. random design: every dimension is
/// effective, `κ* = 1` and `n* = n`.
pub fn rate_report_random(alpha: &[AlphaExp]) -> Result<RateReport> {
    validate_alpha_entries(alpha)?;
    let d = alpha.len();
    let inv_sum: f64 = alpha.iter().map(|a| a.inv()).sum();
    Ok(RateReport {
        design: DesignClass::Random,
        kappa_star: 1,
        unique: true,
        effective_dims: (1..=d).collect(),
        permutation: (0..d).collect(),
        n_star_exponent: 1.0,
        rate_exponent: 1.0 / (2.0 + inv_sum),
        k_constant: None,
        k_density_rescaled: None,
    })
}

/// `κ*` through the bias-variance fixed-point characterization: the
/// smallest `ℓ` with `α_ℓ^{-1}/(2+Σ_{k=ℓ}^s α_k^{-1}) < β_ℓ/Σ_{k=ℓ}^d β_k`.
/// Must agree with [`kappa_star_argmax`] whenever the maximizer is
/// strict; a boundary equality is reported as an error.
pub fn kappa_star_fixed_point(alpha: &[AlphaExp], beta: &[f64]) -> Result<usize> {
    validate_alpha_entries(alpha)?;
    validate_beta(beta, alpha.len())?;
    let perm = canonical_perm(alpha, beta);
    let d = alpha.len();
    for ell in 1..=d {
        let tail_inv: f64 = perm[ell - 1..].iter().map(|&k| alpha[k].inv()).sum();
        let lhs = alpha[perm[ell - 1]].inv() / (2.0 + tail_inv);
        let tail_beta: f64 = perm[ell - 1..].iter().map(|&k| beta[k]).sum();
        let rhs = beta[perm[ell - 1]] / tail_beta;
        if (lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()) {
            return Err(Error::DegenerateBoundary(ell));
        }
        if lhs < rhs {
            return Ok(ell);
        }
    }
    // ℓ = d always satisfies the strict inequality.
    unreachable!("fixed-point scan must terminate at d");
}

/// Exact-rational variant of [`kappa_star_fixed_point`].
pub fn kappa_star_fixed_point_exact(alpha: &[AlphaExp], beta: &[Rational]) -> Result<usize> {
    validate_alpha_entries(alpha)?;
    let bf: Vec<f64> = beta.iter().map(|r| r.as_f64()).collect();
    validate_beta(&bf, alpha.len())?;
    let perm = canonical_perm(alpha, &bf);
    let inv_alpha = |k: usize| -> Rational {
        match alpha[k] {
            AlphaExp::Finite(a) => Rational::new(1, a as i64).unwrap(),
            AlphaExp::Infinite => Rational::from_int(0),
        }
    };
    let d = alpha.len();
    for ell in 1..=d {
        let tail_inv = perm[ell - 1..]
            .iter()
            .fold(Rational::from_int(2), |acc, &k| acc.add(inv_alpha(k)));
        let lhs = inv_alpha(perm[ell - 1]).div(tail_inv);
        let tail_beta = perm[ell - 1..]
            .iter()
            .fold(Rational::from_int(0), |acc, &k| acc.add(beta[k]));
        let rhs = beta[perm[ell - 1]].div(tail_beta);
        match lhs.cmp_exact(rhs) {
            std::cmp::Ordering::Equal => return Err(Error::DegenerateBoundary(ell)),
            std::cmp::Ordering::Less => return Ok(ell),
            std::cmp::Ordering::Greater => {}
        }
    }
    unreachable!("fixed-point scan must terminate at d");
}

/// The constant multiplying the pivotal limit distribution,
/// `K = {Π_{k=κ*}^s (∂_k^{α_k} f(x0)/(α_k+1)!)^{1/α_k}}^{1/(2+Σ_{k=κ*}^s α_k^{-1})}`.
///
/// `kappa_star` indexes the profile's own dimension order, so the
/// profile must already be arranged canonically for the design in use
/// (the report builders handle permutations; all catalog profiles are
/// canonical for balanced designs). The factorization only exists when
/// the critical cross derivatives that survive in the limit vanish;
/// otherwise `MixedDerivativesPresent` is returned and the full sup-inf
/// sampler must be used.
pub fn k_constant(profile: &SmoothnessProfile, kappa_star: usize) -> Result<f64> {
    profile.validate()?;
    let s = profile.s();
    if kappa_star < 1 || kappa_star > s + 1 {
        return Err(Error::InvalidProfile(format!(
            "kappa_star {kappa_star} outside 1..={}",
            s + 1
        )));
    }
    if kappa_star > s {
        // Pure-noise regime: empty product.
        return Ok(1.0);
    }
    if profile.has_nonzero_mixed_from(kappa_star) {
        return Err(Error::MixedDerivativesPresent);
    }
    let mut log_prod = 0.0;
    let mut inv_sum = 0.0;
    for k in kappa_star - 1..s {
        let a = profile.alpha[k].finite().unwrap();
        log_prod += (profile.marginal_derivs[k] / factorial(a + 1)).ln() / a as f64;
        inv_sum += 1.0 / a as f64;
    }
    Ok((log_prod / (2.0 + inv_sum)).exp())
}

/// Attach `k_constant` (and the density-rescaled variant for random
/// designs with full intrinsic dimension) to a rate report, permuting
/// profile dimensions into the report's canonical order.
pub fn attach_constant(report: &mut RateReport, profile: &SmoothnessProfile) -> Result<()> {
    profile.validate()?;
    let s = profile.s();
    let kappa = report.kappa_star;
    // Effective active dims in the caller's labels.
    let active: Vec<usize> = report.permutation[kappa - 1..]
        .iter()
        .copied()
        .filter(|&k| profile.alpha[k].is_finite())
        .collect();
    if profile.mixed_normalized().iter().any(|(j, v)| {
        *v != 0.0
            && j.iter()
                .enumerate()
                .all(|(k, &jk)| jk == 0 || active.contains(&k))
    }) {
        return Err(Error::MixedDerivativesPresent);
    }
    let mut log_prod = 0.0;
    let mut inv_sum = 0.0;
    for &k in &active {
        let a = profile.alpha[k].finite().unwrap();
        log_prod += (profile.marginal_derivs[k] / factorial(a + 1)).ln() / a as f64;
        inv_sum += 1.0 / a as f64;
    }
    let k_const = (log_prod / (2.0 + inv_sum)).exp();
    report.k_constant = Some(k_const);
    if report.design == DesignClass::Random && s == profile.dim() {
        report.k_density_rescaled =
            Some(k_const * profile.density_at_x0.powf(-report.rate_exponent));
    }
    Ok(())
}
