//! The max-min block estimator.
//!
//! At a query point `x0` the estimate is the maximum over lower corners
//! `x_u ≤ x0` of the minimum over upper corners `x_v ≥ x0` (rectangles
//! meeting the data) of the response average over `[x_u, x_v]`. Because
//! the included sample is constant while a corner moves between
//! consecutive observed coordinate values, the search can be restricted
//! to the per-dimension observed values augmented with `x0`'s own
//! coordinates without changing the value. Ties are broken towards the
//! lexicographically smallest corner; the value itself is tie-invariant.

use rayon::prelude::*;

use crate::blocks::PrefixTable;
use crate::design::{Dataset, GridView};
use crate::error::{Error, Result};
use crate::grid;

/// One pointwise fit, with the optimizing corners kept for diagnostics.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub query: Vec<f64>,
    pub value: f64,
    pub argmax_lower: Vec<f64>,
    pub argmin_upper: Vec<f64>,
    pub candidates_scanned: u64,
}

/// Max-min scan over index space: lower corners start at `s ≤ smax`,
/// upper corners end at `e ≥ emin`, every such box is nonempty.
struct IndexScan {
    value: f64,
    start: Vec<usize>,
    end: Vec<usize>,
    scanned: u64,
}

fn scan_prefix(table: &PrefixTable, smax: &[usize], emin: &[usize]) -> IndexScan {
    let d = smax.len();
    let dims = table.dims();
    let his: Vec<usize> = dims.iter().map(|&m| m - 1).collect();
    let zeros = vec![0usize; d];

    let mut best_val = f64::NEG_INFINITY;
    let mut best_start = zeros.clone();
    let mut best_end = zeros.clone();
    let mut scanned = 0u64;

    let mut s = zeros.clone();
    loop {
        // Inner minimum over upper ends; ends below the start would give
        // an empty box, so they are clamped away.
        let lo: Vec<usize> = s.iter().zip(emin).map(|(&si, &ei)| si.max(ei)).collect();
        let mut e = lo.clone();
        let mut min_val = f64::INFINITY;
        let mut min_end = e.clone();
        loop {
            let (sum, count) = table.sum_count(&s, &e);
            let mean = sum / count as f64;
            scanned += 1;
            if mean < min_val {
                min_val = mean;
                min_end.copy_from_slice(&e);
            }
            if !grid::advance(&mut e, &lo, &his) {
                break;
            }
        }
        if min_val > best_val {
            best_val = min_val;
            best_start.copy_from_slice(&s);
            best_end = min_end;
        }
        if !grid::advance(&mut s, &zeros, smax) {
            break;
        }
    }
    IndexScan {
        value: best_val,
        start: best_start,
        end: best_end,
        scanned,
    }
}

/// Candidate index bounds on one axis for a query coordinate: start
/// indices run `0..=smax` (lower-corner thresholds at observed values
/// `≤ x0` plus `x0` itself) and end indices run `emin..=len-1`.
fn axis_bounds(axis: &[f64], x0k: f64) -> (usize, usize) {
    let below = axis.partition_point(|g| *g < x0k);
    let le = axis.partition_point(|g| *g <= x0k);
    let smax = below.min(axis.len() - 1);
    let emin = le.saturating_sub(1);
    (smax, emin)
}

fn corner_coords(
    axes: &[Vec<f64>],
    x0: &[f64],
    start: &[usize],
    end: &[usize],
) -> (Vec<f64>, Vec<f64>) {
    let lower: Vec<f64> = axes
        .iter()
        .zip(x0)
        .zip(start)
        .map(|((axis, &x), &s)| if axis[s] <= x { axis[s] } else { x })
        .collect();
    let upper: Vec<f64> = axes
        .iter()
        .zip(x0)
        .zip(end)
        .map(|((axis, &x), &e)| if axis[e] >= x { axis[e] } else { x })
        .collect();
    (lower, upper)
}

fn max_min_lattice(
    view: &GridView,
    table: &PrefixTable,
    x0: &[f64],
) -> Result<FitResult> {
    let d = view.axes.len();
    let mut smax = vec![0usize; d];
    let mut emin = vec![0usize; d];
    for k in 0..d {
        let (s, e) = axis_bounds(&view.axes[k], x0[k]);
        smax[k] = s;
        emin[k] = e;
    }
    let scan = scan_prefix(table, &smax, &emin);
    let (lower, upper) = corner_coords(&view.axes, x0, &scan.start, &scan.end);
    Ok(FitResult {
        query: x0.to_vec(),
        value: scan.value,
        argmax_lower: lower,
        argmin_upper: upper,
        candidates_scanned: scan.scanned,
    })
}

fn max_min_points(ds: &Dataset, x0: &[f64]) -> Result<FitResult> {
    let d = ds.dim;
    let n = ds.n();
    if n == 0 {
        return Err(Error::NoFeasibleBlock);
    }
    // Per-dimension candidate thresholds.
    let mut lows: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut ups: Vec<Vec<f64>> = Vec::with_capacity(d);
    for k in 0..d {
        let mut vals: Vec<f64> = (0..n).map(|i| ds.point(i)[k]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        let mut lo: Vec<f64> = vals.iter().copied().filter(|v| *v <= x0[k]).collect();
        if lo.last() != Some(&x0[k]) {
            lo.push(x0[k]);
        }
        let mut up: Vec<f64> = vals.iter().copied().filter(|v| *v >= x0[k]).collect();
        if up.first() != Some(&x0[k]) {
            up.insert(0, x0[k]);
        }
        lows.push(lo);
        ups.push(up);
    }

    let lo_dims: Vec<usize> = lows.iter().map(|v| v.len()).collect();
    let up_dims: Vec<usize> = ups.iter().map(|v| v.len()).collect();
    let zeros = vec![0usize; d];
    let lo_his: Vec<usize> = lo_dims.iter().map(|&m| m - 1).collect();
    let up_his: Vec<usize> = up_dims.iter().map(|&m| m - 1).collect();

    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut scanned = 0u64;
    let mut li = zeros.clone();
    let mut lower = vec![0.0f64; d];
    let mut upper = vec![0.0f64; d];
    loop {
        for k in 0..d {
            lower[k] = lows[k][li[k]];
        }
        let mut inner: Option<(f64, Vec<f64>)> = None;
        let mut ui = zeros.clone();
        loop {
            for k in 0..d {
                upper[k] = ups[k][ui[k]];
            }
            let mut sum = 0.0;
            let mut count = 0usize;
            for i in 0..n {
                let p = ds.point(i);
                if (0..d).all(|k| lower[k] <= p[k] && p[k] <= upper[k]) {
                    sum += ds.responses[i];
                    count += 1;
                }
            }
            scanned += 1;
            if count > 0 {
                let mean = sum / count as f64;
                if inner.as_ref().is_none_or(|(m, _)| mean < *m) {
                    inner = Some((mean, upper.clone()));
                }
            }
            if !grid::advance(&mut ui, &zeros, &up_his) {
                break;
            }
        }
        if let Some((mean, at)) = inner {
            if best.as_ref().is_none_or(|(m, _, _)| mean > *m) {
                best = Some((mean, lower.clone(), at));
            }
        }
        if !grid::advance(&mut li, &zeros, &lo_his) {
            break;
        }
    }
    let (value, argmax_lower, argmin_upper) = best.ok_or(Error::NoFeasibleBlock)?;
    Ok(FitResult {
        query: x0.to_vec(),
        value,
        argmax_lower,
        argmin_upper,
        candidates_scanned: scanned,
    })
}

/// Exact max-min block estimate at `x0`. Lattice datasets go through
/// the summed-area table; arbitrary point sets fall back to a linear
/// scan per candidate rectangle (at most O(n²) work per query point).
pub fn max_min_estimate(ds: &Dataset, x0: &[f64]) -> Result<FitResult> {
    if x0.len() != ds.dim {
        return Err(Error::InvalidDesign("query dimension mismatch".into()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDesign("query point must be finite".into()));
    }
    if ds.n() == 0 {
        return Err(Error::NoFeasibleBlock);
    }
    match GridView::try_from_dataset(ds) {
        Ok(view) => {
            let table = PrefixTable::from_view(&view);
            max_min_lattice(&view, &table, x0)
        }
        Err(_) => max_min_points(ds, x0),
    }
}

/// Max-min value at a grid node given by index (used by whole-grid fits
/// and replicated experiments where the table is rebuilt per replicate).
pub fn max_min_at_node(table: &PrefixTable, node: &[usize]) -> f64 {
    scan_prefix(table, node, node).value
}

/// A whole-grid fit in canonical row-major order.
#[derive(Clone, Debug)]
pub struct FittedGrid {
    pub view: GridView,
    pub values: Vec<f64>,
}

impl FittedGrid {
    /// Fitted values re-aligned with the dataset's own row order.
    pub fn values_in_dataset_order(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.values.len()];
        for (flat, &row) in self.view.to_dataset.iter().enumerate() {
            out[row] = self.values[flat];
        }
        out
    }
}

/// Fit the estimator at every grid node of a lattice dataset. The
/// output is coordinate-wise nondecreasing. Work parallelizes over
/// nodes; results are deterministic regardless of thread count.
pub fn fit_grid(ds: &Dataset) -> Result<FittedGrid> {
    let view = GridView::try_from_dataset(ds)?;
    let table = PrefixTable::from_view(&view);
    let total = view.responses.len();
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let node = grid::unflatten(flat, &view.dims);
            max_min_at_node(&table, &node)
        })
        .collect();
    Ok(FittedGrid { view, values })
}

/// Weighted least-squares isotonic fit by pool-adjacent-violators.
/// Returns the nondecreasing vector of fitted values; the weighted mean
/// is preserved.
pub fn pava(y: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), weights.len(), "pava inputs must have equal length");
    assert!(weights.iter().all(|&w| w > 0.0), "pava weights must be positive");
    // Stack of blocks (weight, mean, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(weights) {
        blocks.push((wi, yi, 1));
        while blocks.len() >= 2 {
            let (w2, m2, l2) = blocks[blocks.len() - 1];
            let (w1, m1, l1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            blocks.pop();
            let w = w1 + w2;
            blocks.push((w, (w1 * m1 + w2 * m2) / w, l1 + l2));
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (_, m, l) in blocks {
        out.extend(std::iter::repeat_n(m, l));
    }
    out
}
