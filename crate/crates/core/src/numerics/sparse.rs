use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from (row, col, value) triplets. Duplicate coordinates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, v) in &entries {
            if r >= rows || c >= cols {
                return Err(Error::dims("SparseMatrix::from_triplets", (r, c), (rows, cols)));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("SparseMatrix::from_triplets"));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));

        let mut row_ptr = vec![0; rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Permutation matrix with `perm[i]` giving the column of the single 1 in row `i`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        Self::from_triplets(n, n, perm.iter().enumerate().map(|(i, &j)| (i, j, 1.0)))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // Rows are visited in order, so each transposed row stays sorted.
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let dst = next[c];
                col_idx[dst] = r;
                values[dst] = v;
                next[c] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                d.set(r, c, v);
            }
        }
        d
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && *self == self.transpose()
    }
}

/// Sparse-times-dense product `s * x`.
pub fn spmm(s: &SparseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    if s.cols != x.rows() {
        return Err(Error::dims("spmm", (s.rows, s.cols), x.shape()));
    }
    let width = x.cols();
    let mut out = DenseMatrix::zeros(s.rows, width);
    for r in 0..s.rows {
        let (cols, vals) = s.row(r);
        let out_row = out.row_mut(r);
        for (&c, &v) in cols.iter().zip(vals) {
            for (o, &xv) in out_row.iter_mut().zip(x.row(c)) {
                *o += v * xv;
            }
        }
    }
    Ok(out)
}

/// Divides each row by its sum. Zero rows stay zero.
pub fn row_normalize(a: &SparseMatrix) -> Result<SparseMatrix> {
    if a.rows != a.cols {
        return Err(Error::dims("row_normalize", (a.rows, a.cols), (a.cols, a.rows)));
    }
    let mut out = a.clone();
    for r in 0..a.rows {
        let span = a.row_ptr[r]..a.row_ptr[r + 1];
        let mut sum = 0.0;
        for k in span.clone() {
            let v = a.values[k];
            if v < 0.0 {
                return Err(Error::NegativeEntry {
                    row: r,
                    col: a.col_idx[k],
                    value: v,
                });
            }
            sum += v;
        }
        if sum > 0.0 {
            for k in span {
                out.values[k] /= sum;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dense_matmul;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(n: usize, m: usize, density: f64, rng: &mut ChaCha8Rng) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..m {
                if rng.random_bool(density) {
                    t.push((i, j, rng.random_range(-2.0..2.0)));
                }
            }
        }
        SparseMatrix::from_triplets(n, m, t).unwrap()
    }

    #[test]
    fn zero_times_anything() {
        let x = DenseMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64);
        let y = spmm(&SparseMatrix::zeros(5, 4), &x).unwrap();
        assert_eq!(y, DenseMatrix::zeros(5, 3));
    }

    #[test]
    fn permutation_permutes_rows() {
        let x = DenseMatrix::from_fn(3, 2, |i, j| (10 * i + j) as f64);
        let p = SparseMatrix::permutation(&[2, 0, 1]).unwrap();
        let y = spmm(&p, &x).unwrap();
        assert_eq!(y.row(0), x.row(2));
        assert_eq!(y.row(1), x.row(0));
        assert_eq!(y.row(2), x.row(1));
    }

    #[test]
    fn matches_densified_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = random_sparse(20, 20, 0.1, &mut rng);
        let x = DenseMatrix::from_fn(20, 4, |_, _| rng.random_range(-1.0..1.0));
        let fast = spmm(&s, &x).unwrap();
        let slow = dense_matmul(&s.to_dense(), &x).unwrap();
        assert!(fast.max_abs_diff(&slow) <= 1e-12);
    }

    #[test]
    fn spmm_dimension_mismatch() {
        let s = SparseMatrix::zeros(2, 3);
        assert!(spmm(&s, &DenseMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn normalize_cases() {
        let cycle = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(row_normalize(&cycle).unwrap(), cycle);

        let star = SparseMatrix::from_triplets(
            3,
            3,
            [(0, 1, 1.0), (0, 2, 1.0), (1, 0, 1.0), (2, 0, 1.0)],
        )
        .unwrap();
        let p = row_normalize(&star).unwrap();
        assert_eq!(p.to_dense().row(0), &[0.0, 0.5, 0.5]);

        let with_zero_row = SparseMatrix::from_triplets(2, 2, [(0, 1, 3.0)]).unwrap();
        let p = row_normalize(&with_zero_row).unwrap();
        assert_eq!(p.to_dense().row(1), &[0.0, 0.0]);
        assert_eq!(p.get(0, 1), 1.0);
    }

    #[test]
    fn normalize_rejects_negative() {
        let a = SparseMatrix::from_triplets(2, 2, [(0, 1, -1.0)]).unwrap();
        assert!(matches!(row_normalize(&a), Err(Error::NegativeEntry { .. })));
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let a = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0), (0, 1, 2.0)]).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 1), 3.0);
    }

    proptest! {
        #[test]
        fn spmm_equals_dense(seed in any::<u64>(), n in 1usize..25, m in 1usize..25, w in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_sparse(n, m, 0.2, &mut rng);
            let x = DenseMatrix::from_fn(m, w, |_, _| rng.random_range(-1.0..1.0));
            let fast = spmm(&s, &x).unwrap();
            let slow = dense_matmul(&s.to_dense(), &x).unwrap();
            prop_assert!(fast.max_abs_diff(&slow) <= 1e-12);
        }

        #[test]
        fn normalized_rows_sum_to_one_or_zero(seed in any::<u64>(), n in 1usize..25) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if rng.random_bool(0.2) {
                        t.push((i, j, rng.random_range(0.0..3.0)));
                    }
                }
            }
            let a = SparseMatrix::from_triplets(n, n, t).unwrap();
            let p = row_normalize(&a).unwrap();
            for r in 0..n {
                let s = p.row_sum(r);
                prop_assert!((s - 1.0).abs() <= 1e-12 || s == 0.0);
            }
        }

        #[test]
        fn transpose_round_trip(seed in any::<u64>(), n in 1usize..15, m in 1usize..15) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_sparse(n, m, 0.3, &mut rng);
            prop_assert_eq!(s.transpose().transpose(), s.clone());
            prop_assert_eq!(s.transpose().to_dense(), s.to_dense().transpose());
        }
    }
}
