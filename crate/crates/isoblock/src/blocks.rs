//! Exact rectangle sums, counts, and means over datasets.
//!
//! Two query paths exist and must agree: a linear scan over arbitrary
//! point sets, and a d-dimensional summed-area table for lattice data
//! answering any closed block through 2^d-corner inclusion–exclusion.
//! Blocks are closed: a design point on the boundary is included.

use crate::design::{Dataset, GridView};
use crate::error::{Error, Result};
use crate::grid;

/// Closed axis-aligned rectangle `[lower, upper]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Block {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Block> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidDesign("block corners must share a dimension".into()));
        }
        for (lo, up) in lower.iter().zip(&upper) {
            if !lo.is_finite() || !up.is_finite() || lo > up {
                return Err(Error::InvalidDesign(format!(
                    "block corner {lo} exceeds {up} or is not finite"
                )));
            }
        }
        Ok(Block { lower, upper })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, up))| lo <= x && x <= up)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockStat {
    pub mean: f64,
    pub count: usize,
}

/// Binary-counter cascade for running prefix sums: each pushed value is
/// combined pairwise, so a prefix of length n accumulates O(log n)
/// rounding steps instead of O(n).
struct Cascade {
    levels: Vec<Option<f64>>,
}

impl Cascade {
    fn new() -> Self {
        Cascade { levels: Vec::new() }
    }

    fn push(&mut self, x: f64) {
        let mut carry = x;
        for slot in self.levels.iter_mut() {
            match slot.take() {
                None => {
                    *slot = Some(carry);
                    return;
                }
                Some(v) => carry += v,
            }
        }
        self.levels.push(Some(carry));
    }

    fn total(&self) -> f64 {
        self.levels.iter().flatten().sum()
    }
}

/// d-dimensional summed-area table over a full lattice. Counts are
/// derived from index arithmetic rather than a second table.
#[derive(Clone, Debug)]
pub struct PrefixTable {
    dims: Vec<usize>,
    strides: Vec<usize>,
    cum: Vec<f64>,
    /// Raw responses: singleton queries bypass inclusion–exclusion so a
    /// one-point block mean is the response itself, bit-exactly.
    values: Vec<f64>,
}

impl PrefixTable {
    /// Build from row-major responses on a grid with the given sizes.
    pub fn build(dims: &[usize], responses: &[f64]) -> PrefixTable {
        assert_eq!(grid::total(dims), responses.len());
        let strides = grid::strides(dims);
        let mut cum = responses.to_vec();
        for (&stride, &len) in strides.iter().zip(dims) {
            if len == 1 {
                continue;
            }
            let n = cum.len();
            for base in 0..n {
                if (base / stride) % len == 0 {
                    let mut acc = Cascade::new();
                    for j in 0..len {
                        let pos = base + j * stride;
                        acc.push(cum[pos]);
                        cum[pos] = acc.total();
                    }
                }
            }
        }
        PrefixTable {
            dims: dims.to_vec(),
            strides,
            cum,
            values: responses.to_vec(),
        }
    }

    pub fn from_view(view: &GridView) -> PrefixTable {
        PrefixTable::build(&view.dims, &view.responses)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Sum and count over the inclusive index box `[lo, hi]`, by
    /// inclusion–exclusion over the 2^d corners of the cumulative table.
    pub fn sum_count(&self, lo: &[usize], hi: &[usize]) -> (f64, usize) {
        let d = self.dims.len();
        debug_assert!(lo.iter().zip(hi).all(|(a, b)| a <= b));
        if lo == hi {
            return (self.values[grid::flatten(lo, &self.strides)], 1);
        }
        let mut sum = 0.0;
        'corners: for mask in 0..(1u32 << d) {
            let mut offset = 0usize;
            let mut sign = 1.0;
            for k in 0..d {
                if mask >> k & 1 == 1 {
                    if lo[k] == 0 {
                        continue 'corners; // the cumulative term is zero
                    }
                    offset += (lo[k] - 1) * self.strides[k];
                    sign = -sign;
                } else {
                    offset += hi[k] * self.strides[k];
                }
            }
            sum += sign * self.cum[offset];
        }
        let count = lo.iter().zip(hi).map(|(a, b)| b - a + 1).product();
        (sum, count)
    }
}

/// Map a geometric block onto inclusive index ranges of the grid axes.
/// Returns `None` when the block traps no axis value in some dimension.
pub fn block_index_ranges(axes: &[Vec<f64>], block: &Block) -> Option<(Vec<usize>, Vec<usize>)> {
    let d = axes.len();
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    for k in 0..d {
        let axis = &axes[k];
        let a = axis.partition_point(|g| *g < block.lower[k]);
        let b = axis.partition_point(|g| *g <= block.upper[k]);
        if a >= b {
            return None;
        }
        lo.push(a);
        hi.push(b - 1);
    }
    Some((lo, hi))
}

/// Block mean over a lattice through its prefix table.
pub fn block_mean_prefix(
    table: &PrefixTable,
    axes: &[Vec<f64>],
    block: &Block,
) -> Result<BlockStat> {
    let (lo, hi) = block_index_ranges(axes, block).ok_or(Error::EmptyBlock)?;
    let (sum, count) = table.sum_count(&lo, &hi);
    Ok(BlockStat {
        mean: sum / count as f64,
        count,
    })
}

/// Block mean by a linear scan over an arbitrary point set.
pub fn block_mean_scan(ds: &Dataset, block: &Block) -> Result<BlockStat> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..ds.n() {
        if block.contains(ds.point(i)) {
            sum += ds.responses[i];
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyBlock);
    }
    Ok(BlockStat {
        mean: sum / count as f64,
        count,
    })
}

/// Build the canonical grid view and its prefix table for a lattice
/// dataset. Non-lattice datasets are rejected.
pub fn build_prefix(ds: &Dataset) -> Result<(GridView, PrefixTable)> {
    let view = GridView::try_from_dataset(ds)?;
    let table = PrefixTable::from_view(&view);
    Ok((view, table))
}
