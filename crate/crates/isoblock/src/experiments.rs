//! Replicated lattice experiments for the estimator's pointwise error.
//!
//! For each lattice size and replicate the harness draws one Gaussian
//! noise vector, shares it across all functions (common random numbers,
//! so cross-function QQ comparisons isolate the function effect), fits
//! the estimator at the query point, and records the scaled statistic
//! `n^{rate_exponent}·(f̂(x0) − f(x0))`. Long-form CSV output feeds
//! empirical-CDF, QQ, and log-log rate-fit plots.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocks::PrefixTable;
use crate::csvio::fmt17;
use crate::design;
use crate::error::{Error, Result};
use crate::estimator;
use crate::rng;
use crate::testfn::{self, TestFunction};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Catalog identifiers; all functions must share the dimension of `x0`.
    pub functions: Vec<String>,
    pub x0: Vec<f64>,
    /// Per-side lattice sizes (a size `m` means an `m^d` lattice).
    pub lattice_sides: Vec<usize>,
    /// Replicates per lattice size.
    pub replications: u32,
    pub sigma: f64,
    pub seed: u64,
    /// Scaling exponent of the recorded statistic, from the rate calculus.
    pub rate_exponent: f64,
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<Vec<TestFunction>> {
        if self.functions.is_empty() {
            return Err(Error::InvalidConfig("no functions requested".into()));
        }
        if self.replications < 2 {
            return Err(Error::InvalidConfig("need at least 2 replications".into()));
        }
        if self.lattice_sides.is_empty() || self.lattice_sides.iter().any(|&m| m < 4) {
            return Err(Error::InvalidConfig("lattice sides must be at least 4".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidConfig("sigma must be nonnegative".into()));
        }
        if !(self.rate_exponent > 0.0 && self.rate_exponent <= 0.5) {
            return Err(Error::InvalidConfig("rate exponent must lie in (0, 1/2]".into()));
        }
        if self.x0.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::InvalidConfig("x0 must lie strictly inside (0,1)^d".into()));
        }
        let fns: Vec<TestFunction> = self
            .functions
            .iter()
            .map(|id| testfn::by_id(id))
            .collect::<Result<_>>()?;
        for f in &fns {
            if f.dim != self.x0.len() {
                return Err(Error::InvalidConfig(format!(
                    "function {} has dimension {}, x0 has {}",
                    f.id,
                    f.dim,
                    self.x0.len()
                )));
            }
        }
        Ok(fns)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CdfRow {
    pub function: String,
    pub n: usize,
    pub replicate: u32,
    pub statistic: f64,
}

/// One scaled statistic per (function, lattice size, replicate), in
/// deterministic order. Replicates parallelize; the noise stream is
/// derived from (seed, size index, replicate) so the output does not
/// depend on the worker count.
pub fn run_cdf_experiment(cfg: &ExperimentConfig) -> Result<Vec<CdfRow>> {
    let fns = cfg.resolve()?;
    let d = cfg.x0.len();
    let mut rows = Vec::new();
    for (si, &side) in cfg.lattice_sides.iter().enumerate() {
        let spec = design::build_lattice_from_sizes(&vec![side; d], &cfg.x0)?;
        let axes = spec.axes().unwrap().to_vec();
        let dims: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        let n = spec.total_n;
        let scale = (n as f64).powf(cfg.rate_exponent);
        // Query-point node index (the lattice is built through x0).
        let node: Vec<usize> = axes
            .iter()
            .zip(&cfg.x0)
            .map(|(axis, x0k)| {
                axis.iter()
                    .position(|g| g == x0k)
                    .expect("lattice contains the query point")
            })
            .collect();
        // Function values on the grid, in row-major order.
        let mut fvals: Vec<Vec<f64>> = vec![Vec::with_capacity(n); fns.len()];
        {
            let zeros = vec![0usize; d];
            let his: Vec<usize> = dims.iter().map(|&m| m - 1).collect();
            let mut idx = zeros.clone();
            let mut point = vec![0.0; d];
            loop {
                for (k, &j) in idx.iter().enumerate() {
                    point[k] = axes[k][j];
                }
                for (fi, f) in fns.iter().enumerate() {
                    fvals[fi].push(f.value(&point));
                }
                if !crate::grid::advance(&mut idx, &zeros, &his) {
                    break;
                }
            }
        }
        let f_at_x0: Vec<f64> = fns.iter().map(|f| f.value(&cfg.x0)).collect();

        let mut size_rows: Vec<Vec<CdfRow>> = (0..cfg.replications)
            .into_par_iter()
            .map(|b| {
                let stream_id = ((si as u64) << 32) | b as u64;
                let mut rng = rng::stream(cfg.seed, stream_id);
                let noise: Vec<f64> = (0..n)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let mut out = Vec::with_capacity(fns.len());
                let mut responses = vec![0.0; n];
                for (fi, f) in fns.iter().enumerate() {
                    for i in 0..n {
                        responses[i] = fvals[fi][i] + cfg.sigma * noise[i];
                    }
                    let table = PrefixTable::build(&dims, &responses);
                    let fitted = estimator::max_min_at_node(&table, &node);
                    out.push(CdfRow {
                        function: f.id.clone(),
                        n,
                        replicate: b,
                        statistic: scale * (fitted - f_at_x0[fi]),
                    });
                }
                out
            })
            .collect();
        // Deterministic long-form order: function, then replicate.
        let mut flat: Vec<CdfRow> = size_rows.drain(..).flatten().collect();
        flat.sort_by(|a, b| {
            let fa = cfg.functions.iter().position(|f| *f == a.function).unwrap();
            let fb = cfg.functions.iter().position(|f| *f == b.function).unwrap();
            fa.cmp(&fb).then(a.replicate.cmp(&b.replicate))
        });
        rows.extend(flat);
    }
    Ok(rows)
}

/// Two-sample Kolmogorov–Smirnov distance between empirical CDFs.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "ks_distance needs nonempty samples");
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut dist: f64 = 0.0;
    while i < xs.len() || j < ys.len() {
        let t = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        dist = dist.max((i as f64 / n - j as f64 / m).abs());
    }
    dist
}

#[derive(Clone, Debug, Serialize)]
pub struct RateFit {
    pub function: String,
    pub slope: f64,
    pub std_err: f64,
    /// Per lattice size: (total n, median absolute error).
    pub medians: Vec<(usize, f64)>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Log-log regression of the median absolute error on the sample size.
pub fn rate_fit_from_rows(cfg: &ExperimentConfig, rows: &[CdfRow]) -> Result<Vec<RateFit>> {
    if cfg.lattice_sides.len() < 3 {
        return Err(Error::InvalidConfig("rate fits need at least 3 lattice sizes".into()));
    }
    let mut fits = Vec::new();
    for id in &cfg.functions {
        let mut medians = Vec::new();
        let mut ns: Vec<usize> = rows
            .iter()
            .filter(|r| r.function == *id)
            .map(|r| r.n)
            .collect();
        ns.sort_unstable();
        ns.dedup();
        for &n in &ns {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.function == *id && r.n == n)
                .map(|r| (r.statistic.abs()) * (n as f64).powf(-cfg.rate_exponent))
                .collect();
            let med = median(errs);
            if !(med > 0.0) || !med.is_finite() {
                return Err(Error::DegenerateFit(format!(
                    "median absolute error for {id} at n = {n} is {med}"
                )));
            }
            medians.push((n, med));
        }
        let xs: Vec<f64> = medians.iter().map(|(n, _)| (*n as f64).ln()).collect();
        let ys: Vec<f64> = medians.iter().map(|(_, m)| m.ln()).collect();
        let k = xs.len() as f64;
        let xbar = xs.iter().sum::<f64>() / k;
        let ybar = ys.iter().sum::<f64>() / k;
        let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::DegenerateFit("identical sample sizes".into()));
        }
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
        let slope = sxy / sxx;
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - ybar - slope * (x - xbar)).powi(2))
            .sum();
        let df = (xs.len().max(3) - 2) as f64;
        let std_err = (rss / df / sxx).sqrt();
        fits.push(RateFit {
            function: id.clone(),
            slope,
            std_err,
            medians,
        });
    }
    Ok(fits)
}

/// Run the experiment and fit the log-log rate in one go.
pub fn rate_fit(cfg: &ExperimentConfig) -> Result<Vec<RateFit>> {
    let rows = run_cdf_experiment(cfg)?;
    rate_fit_from_rows(cfg, &rows)
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    crate_version: &'a str,
    files: Vec<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_fits: Option<&'a [RateFit]>,
}

/// Write `cdf.csv`, `qq.csv`, `rates.csv`, and `manifest.json` into a
/// directory. Output is byte-for-byte reproducible for a fixed config.
pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    rows: &[CdfRow],
    fits: Option<&[RateFit]>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut cdf = String::from("function,n,replicate,statistic\n");
    for r in rows {
        cdf.push_str(&format!(
            "{},{},{},{}\n",
            r.function,
            r.n,
            r.replicate,
            fmt17(r.statistic)
        ));
    }
    std::fs::write(dir.join("cdf.csv"), cdf)?;

    // QQ pairs of the first two functions, per lattice size.
    let mut qq = String::from("n,rank,q_first,q_second\n");
    if cfg.functions.len() >= 2 {
        let (fa, fb) = (&cfg.functions[0], &cfg.functions[1]);
        let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
        ns.sort_unstable();
        ns.dedup();
        for n in ns {
            let mut qa: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n && r.function == *fa)
                .map(|r| r.statistic)
                .collect();
            let mut qb: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n && r.function == *fb)
                .map(|r| r.statistic)
                .collect();
            qa.sort_by(|x, y| x.partial_cmp(y).unwrap());
            qb.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (rank, (x, y)) in qa.iter().zip(&qb).enumerate() {
                qq.push_str(&format!("{n},{rank},{},{}\n", fmt17(*x), fmt17(*y)));
            }
        }
    }
    std::fs::write(dir.join("qq.csv"), qq)?;

    let mut rates = String::from("function,n,median_abs_error\n");
    if let Some(fits) = fits {
        for fit in fits {
            for (n, med) in &fit.medians {
                rates.push_str(&format!("{},{n},{}\n", fit.function, fmt17(*med)));
            }
        }
    }
    std::fs::write(dir.join("rates.csv"), rates)?;

    let manifest = Manifest {
        config: cfg,
        crate_version: env!("CARGO_PKG_VERSION"),
        files: vec!["cdf.csv", "qq.csv", "rates.csv"],
        rate_fits: fits,
    };
    let mut f = std::fs::File::create(dir.join("manifest.json"))?;
    f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}
