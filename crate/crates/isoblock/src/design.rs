//! Designs on `[0,1]^d` and seeded dataset generation.
//!
//! Lattice designs are full Cartesian grids with per-dimension sizes
//! `n_k = ⌊n^{β_k}⌋`, `Σβ_k = 1`, each axis equally spaced with gap
//! `1/n_k` and translated by the smallest shift that puts the query
//! point exactly on a grid node. Random designs draw i.i.d. points from
//! a user density via rejection sampling against the uniform proposal.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid;
use crate::rng;
use crate::testfn::TestFunction;

pub type Density = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DesignKind {
    FixedLattice {
        beta: Vec<f64>,
        sizes: Vec<usize>,
        axes: Vec<Vec<f64>>,
    },
    Random {
        density: Density,
        bound: f64,
    },
}

#[derive(Clone)]
pub struct DesignSpec {
    pub dim: usize,
    pub total_n: usize,
    pub kind: DesignKind,
}

impl std::fmt::Debug for DesignSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            DesignKind::FixedLattice { sizes, .. } => f
                .debug_struct("DesignSpec")
                .field("kind", &"lattice")
                .field("sizes", sizes)
                .field("total_n", &self.total_n)
                .finish(),
            DesignKind::Random { bound, .. } => f
                .debug_struct("DesignSpec")
                .field("kind", &"random")
                .field("bound", bound)
                .field("total_n", &self.total_n)
                .finish(),
        }
    }
}

impl DesignSpec {
    pub fn is_lattice(&self) -> bool {
        matches!(self.kind, DesignKind::FixedLattice { .. })
    }

    pub fn axes(&self) -> Option<&[Vec<f64>]> {
        match &self.kind {
            DesignKind::FixedLattice { axes, .. } => Some(axes),
            DesignKind::Random { .. } => None,
        }
    }

    pub fn sizes(&self) -> Option<&[usize]> {
        match &self.kind {
            DesignKind::FixedLattice { sizes, .. } => Some(sizes),
            DesignKind::Random { .. } => None,
        }
    }

    /// Random design with a pointwise-evaluable density bounded by `bound`.
    pub fn random(dim: usize, n: usize, density: Density, bound: f64) -> Result<DesignSpec> {
        if dim == 0 || n == 0 {
            return Err(Error::InvalidDesign("dimension and size must be positive".into()));
        }
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::InvalidDesign("density bound must be positive".into()));
        }
        Ok(DesignSpec {
            dim,
            total_n: n,
            kind: DesignKind::Random { density, bound },
        })
    }
}

/// `⌊n^b⌋` with a snap guard so that exactly-representable powers
/// (such as `4096^{1/4} = 8`) do not fall to the neighbor below.
fn floor_pow(n: usize, b: f64) -> usize {
    let t = (n as f64).powf(b);
    let r = t.round();
    if (t - r).abs() < 1e-9 {
        r as usize
    } else {
        t.floor() as usize
    }
}

/// One equally spaced axis of `m` points with gap `1/m`, translated so
/// that `x0k` is a node (bit-exactly) and the axis stays inside `[0,1]`.
fn lattice_axis(m: usize, x0k: f64) -> Vec<f64> {
    let t = x0k * m as f64;
    let jstar = (t.floor() as i64).clamp(0, m as i64 - 1);
    (0..m as i64)
        .map(|j| x0k + (j - jstar) as f64 / m as f64)
        .collect()
}

fn validate_x0_interior(x0: &[f64]) -> Result<()> {
    if x0.iter().any(|&x| !(x > 0.0 && x < 1.0) || !x.is_finite()) {
        return Err(Error::InvalidDesign(
            "query point must lie strictly inside (0,1)^d".into(),
        ));
    }
    Ok(())
}

/// Lattice from explicit per-dimension sizes; `beta` is recovered as
/// `log n_k / log n` so it sums to one.
pub fn build_lattice_from_sizes(sizes: &[usize], x0: &[f64]) -> Result<DesignSpec> {
    if sizes.is_empty() || sizes.len() != x0.len() {
        return Err(Error::InvalidDesign("sizes and x0 dimensions differ".into()));
    }
    validate_x0_interior(x0)?;
    if sizes.iter().any(|&m| m < 2) {
        return Err(Error::InvalidDesign("each lattice size must be at least 2".into()));
    }
    let total: usize = sizes.iter().product();
    let log_total = (total as f64).ln();
    let beta: Vec<f64> = sizes.iter().map(|&m| (m as f64).ln() / log_total).collect();
    let axes: Vec<Vec<f64>> = sizes
        .iter()
        .zip(x0)
        .map(|(&m, &x)| lattice_axis(m, x))
        .collect();
    Ok(DesignSpec {
        dim: sizes.len(),
        total_n: total,
        kind: DesignKind::FixedLattice {
            beta,
            sizes: sizes.to_vec(),
            axes,
        },
    })
}

/// Lattice design for a sample budget `n`: sizes `n_k = ⌊n^{β_k}⌋`.
/// The realized `total_n = Π n_k` recorded on the returned design is at
/// most `n`.
pub fn build_lattice(n: usize, beta: &[f64], x0: &[f64]) -> Result<DesignSpec> {
    if beta.is_empty() || beta.len() != x0.len() {
        return Err(Error::InvalidDesign("beta and x0 dimensions differ".into()));
    }
    if beta.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::InvalidDesign("beta entries must be positive".into()));
    }
    let sum: f64 = beta.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDesign(format!("beta must sum to 1, got {sum}")));
    }
    validate_x0_interior(x0)?;
    let sizes: Vec<usize> = beta.iter().map(|&b| floor_pow(n, b)).collect();
    if let Some((k, &m)) = sizes.iter().enumerate().find(|(_, &m)| m < 2) {
        return Err(Error::InvalidDesign(format!(
            "n = {n} gives lattice size {m} < 2 in dimension {}",
            k + 1
        )));
    }
    let mut spec = build_lattice_from_sizes(&sizes, x0)?;
    if let DesignKind::FixedLattice { beta: b, .. } = &mut spec.kind {
        *b = beta.to_vec();
    }
    Ok(spec)
}

/// `n` i.i.d. draws from `density` on `[0,1]^dim` by rejection sampling
/// against the uniform proposal, deterministic given the seed. A
/// 10^4-proposal calibration runs first: if the observed acceptance
/// rate falls below `1/(10·bound)` the declared bound is treated as
/// misstated and the call fails.
pub fn sample_random_design(
    n: usize,
    dim: usize,
    density: &Density,
    bound: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidDesign("n and dim must be positive".into()));
    }
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(Error::InvalidDesign("density bound must be positive".into()));
    }
    let eval = |point: &[f64]| -> Result<f64> {
        let p = density(point);
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDesign(format!(
                "density returned {p} at {point:?}"
            )));
        }
        if p > bound * (1.0 + 1e-9) {
            return Err(Error::InvalidDesign(format!(
                "density value {p} exceeds its declared bound {bound}"
            )));
        }
        Ok(p)
    };

    let calibration = 10_000usize;
    let mut cal = rng::stream(seed, 0);
    let mut accepted = 0usize;
    let mut point = vec![0.0; dim];
    for _ in 0..calibration {
        for x in point.iter_mut() {
            *x = cal.gen();
        }
        let p = eval(&point)?;
        if cal.gen::<f64>() * bound < p {
            accepted += 1;
        }
    }
    let rate = accepted as f64 / calibration as f64;
    let floor = 1.0 / (10.0 * bound);
    if rate < floor {
        return Err(Error::MisdeclaredDensityBound { bound, rate, floor });
    }

    let mut rng = rng::stream(seed, 1);
    let mut out = Vec::with_capacity(n * dim);
    let max_proposals = 1_000_000 + (200.0 * bound) as usize * n;
    let mut proposals = 0usize;
    while out.len() < n * dim {
        proposals += 1;
        if proposals > max_proposals {
            return Err(Error::InvalidDesign(
                "rejection sampler exceeded its proposal budget".into(),
            ));
        }
        for x in point.iter_mut() {
            *x = rng.gen();
        }
        let p = eval(&point)?;
        if rng.gen::<f64>() * bound < p {
            out.extend_from_slice(&point);
        }
    }
    Ok(out)
}

/// Design points plus responses `Y_i = f(X_i) + σ·ξ_i`.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub dim: usize,
    /// Flat `n × dim`, row per point.
    pub points: Vec<f64>,
    pub responses: Vec<f64>,
    pub sigma: Option<f64>,
    pub design: Option<DesignSpec>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.responses.len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn from_points(dim: usize, points: Vec<f64>, responses: Vec<f64>) -> Result<Dataset> {
        if dim == 0 || points.len() != responses.len() * dim {
            return Err(Error::InvalidDesign(
                "points/responses lengths are inconsistent with the dimension".into(),
            ));
        }
        if points.iter().chain(responses.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidDesign("non-finite coordinate or response".into()));
        }
        Ok(Dataset {
            dim,
            points,
            responses,
            sigma: None,
            design: None,
        })
    }
}

/// Generate a dataset from a design and a regression function, with
/// i.i.d. `N(0, σ²)` errors. Lattice points are enumerated row-major
/// (last dimension fastest).
pub fn generate_dataset(
    spec: &DesignSpec,
    f: &TestFunction,
    sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidDesign("sigma must be nonnegative".into()));
    }
    if f.dim != spec.dim {
        return Err(Error::InvalidDesign(format!(
            "function has dimension {}, design has {}",
            f.dim, spec.dim
        )));
    }
    let points: Vec<f64> = match &spec.kind {
        DesignKind::FixedLattice { axes, sizes, .. } => {
            let mut pts = Vec::with_capacity(spec.total_n * spec.dim);
            let mut idx = vec![0usize; spec.dim];
            let zeros = vec![0usize; spec.dim];
            let his: Vec<usize> = sizes.iter().map(|&m| m - 1).collect();
            loop {
                for (k, &j) in idx.iter().enumerate() {
                    pts.push(axes[k][j]);
                }
                if !grid::advance(&mut idx, &zeros, &his) {
                    break;
                }
            }
            pts
        }
        DesignKind::Random { density, bound } => {
            sample_random_design(spec.total_n, spec.dim, density, *bound, seed)?
        }
    };
    let mut noise_rng = rng::stream(seed, 2);
    let mut responses = Vec::with_capacity(spec.total_n);
    for i in 0..spec.total_n {
        let x = &points[i * spec.dim..(i + 1) * spec.dim];
        let noise: f64 = if sigma > 0.0 {
            sigma * noise_rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        responses.push(f.value(x) + noise);
    }
    Ok(Dataset {
        dim: spec.dim,
        points,
        responses,
        sigma: Some(sigma),
        design: Some(spec.clone()),
    })
}

/// Canonical row-major view of a dataset whose points form a full
/// Cartesian grid. The per-dimension value sets need not be equally
/// spaced, so one-dimensional datasets with distinct coordinates always
/// qualify after sorting.
#[derive(Clone, Debug)]
pub struct GridView {
    pub axes: Vec<Vec<f64>>,
    pub dims: Vec<usize>,
    /// Responses in row-major grid order.
    pub responses: Vec<f64>,
    /// Row-major cell -> dataset row.
    pub to_dataset: Vec<usize>,
}

impl GridView {
    pub fn try_from_dataset(ds: &Dataset) -> Result<GridView> {
        let d = ds.dim;
        let n = ds.n();
        if n == 0 {
            return Err(Error::InvalidDesign("empty dataset".into()));
        }
        let mut axes: Vec<Vec<f64>> = Vec::with_capacity(d);
        for k in 0..d {
            let mut vals: Vec<f64> = (0..n).map(|i| ds.point(i)[k]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            vals.dedup();
            axes.push(vals);
        }
        let dims: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        if grid::total(&dims) != n {
            return Err(Error::InvalidDesign(
                "dataset points do not form a full lattice".into(),
            ));
        }
        let strides = grid::strides(&dims);
        let mut responses = vec![f64::NAN; n];
        let mut to_dataset = vec![usize::MAX; n];
        for i in 0..n {
            let mut flat = 0usize;
            for k in 0..d {
                let x = ds.point(i)[k];
                let j = axes[k]
                    .binary_search_by(|g| g.partial_cmp(&x).unwrap())
                    .map_err(|_| Error::InvalidDesign("point off the lattice axes".into()))?;
                flat += j * strides[k];
            }
            if to_dataset[flat] != usize::MAX {
                return Err(Error::InvalidDesign("duplicate lattice cell".into()));
            }
            to_dataset[flat] = i;
            responses[flat] = ds.responses[i];
        }
        Ok(GridView {
            axes,
            dims,
            responses,
            to_dataset,
        })
    }

    /// Exact grid index of a point, if it is a node.
    pub fn node_index(&self, x: &[f64]) -> Option<Vec<usize>> {
        let mut idx = Vec::with_capacity(self.axes.len());
        for (axis, &xk) in self.axes.iter().zip(x) {
            match axis.binary_search_by(|g| g.partial_cmp(&xk).unwrap()) {
                Ok(j) => idx.push(j),
                Err(_) => return None,
            }
        }
        Some(idx)
    }

    pub fn node_point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.axes)
            .map(|(&j, axis)| axis[j])
            .collect()
    }
}
