//! Row-major index arithmetic for dense d-dimensional grids (last
//! dimension fastest).

/// Number of cells in a grid with the given per-dimension sizes.
pub fn total(dims: &[usize]) -> usize {
    dims.iter().product()
}

pub fn strides(dims: &[usize]) -> Vec<usize> {
    let d = dims.len();
    let mut s = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

pub fn flatten(idx: &[usize], strides: &[usize]) -> usize {
    idx.iter().zip(strides).map(|(i, s)| i * s).sum()
}

pub fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0usize; dims.len()];
    for k in (0..dims.len()).rev() {
        idx[k] = flat % dims[k];
        flat /= dims[k];
    }
    idx
}

/// Advance `idx` through the inclusive box `[lo, hi]` in lexicographic
/// order. Returns `false` once the last index has been visited.
pub fn advance(idx: &mut [usize], lo: &[usize], hi: &[usize]) -> bool {
    let d = idx.len();
    for k in (0..d).rev() {
        if idx[k] < hi[k] {
            idx[k] += 1;
            idx[k + 1..].copy_from_slice(&lo[k + 1..d]);
            return true;
        }
    }
    false
}

/// Dense row-major array of f64.
#[derive(Clone, Debug)]
pub struct NdArray {
    dims: Vec<usize>,
    strides: Vec<usize>,
    pub data: Vec<f64>,
}

impl NdArray {
    pub fn zeros(dims: &[usize]) -> Self {
        let strides = strides(dims);
        NdArray {
            dims: dims.to_vec(),
            strides,
            data: vec![0.0; total(dims)],
        }
    }

    pub fn from_data(dims: &[usize], data: Vec<f64>) -> Self {
        assert_eq!(total(dims), data.len());
        NdArray {
            dims: dims.to_vec(),
            strides: strides(dims),
            data,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        flatten(idx, &self.strides)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    /// In-place cumulative sum along one axis.
    pub fn cumsum_axis(&mut self, axis: usize) {
        let stride = self.strides[axis];
        let len = self.dims[axis];
        let n = self.data.len();
        for base in 0..n {
            if (base / stride).is_multiple_of(len) {
                for j in 1..len {
                    let pos = base + j * stride;
                    self.data[pos] += self.data[pos - stride];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_unflatten_round_trip() {
        let dims = [3usize, 4, 5];
        let st = strides(&dims);
        for flat in 0..total(&dims) {
            let idx = unflatten(flat, &dims);
            assert_eq!(flatten(&idx, &st), flat);
        }
    }

    #[test]
    fn advance_visits_every_cell_in_lex_order() {
        let lo = [1usize, 0];
        let hi = [2usize, 2];
        let mut idx = lo.to_vec();
        let mut seen = vec![idx.clone()];
        while advance(&mut idx, &lo, &hi) {
            seen.push(idx.clone());
        }
        assert_eq!(seen.len(), 2 * 3);
        let mut sorted = seen.clone();
        sorted.sort();
        assert_eq!(seen, sorted);
    }

    #[test]
    fn cumsum_axis_matches_manual_prefix() {
        let mut a = NdArray::from_data(&[2, 3], vec![1., 2., 3., 4., 5., 6.]);
        a.cumsum_axis(1);
        assert_eq!(a.data, vec![1., 3., 6., 4., 9., 15.]);
        a.cumsum_axis(0);
        assert_eq!(a.data, vec![1., 3., 6., 5., 12., 21.]);
    }
}
