use std::fmt::Write as _;

/// Sparse matrix held twice: row-major for `A y` and column-major for `Aᵀ x`.
///
/// Products sum each row (column) in a fixed order, so results are
/// reproducible bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<f64>,
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    threads: usize,
}

/// Below this many output entries products always run on the calling thread.
const PARALLEL_MIN: usize = 2048;

impl SparseMatrix {
    /// Builds from coordinate triplets; duplicates are summed in input order.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            assert!(
                r < rows && c < cols,
                "triplet ({r}, {c}) outside {rows}x{cols}"
            );
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != 0.0);

        let mut row_ptr = vec![0; rows + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let row_cols = merged.iter().map(|t| t.1).collect();
        let row_vals = merged.iter().map(|t| t.2).collect();

        let mut by_col = merged.clone();
        by_col.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0; cols + 1];
        for &(_, c, _) in &by_col {
            col_ptr[c + 1] += 1;
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let col_rows = by_col.iter().map(|t| t.0).collect();
        let col_vals = by_col.iter().map(|t| t.2).collect();
        Self {
            rows,
            cols,
            row_ptr,
            row_cols,
            row_vals,
            col_ptr,
            col_rows,
            col_vals,
            threads: 1,
        }
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        let triplets: Vec<_> = dense
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &v)| (i, j, v)))
            .collect();
        Self::from_triplets(rows, cols, &triplets)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.row_vals.len()
    }

    /// Worker threads used by the products. Each output entry is summed in
    /// the same order regardless, so results do not depend on this setting.
    pub fn set_threads(&mut self, threads: usize) {
        self.threads = threads.max(1);
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// `A y`.
    pub fn mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.cols);
        self.product(self.rows, &self.row_ptr, &self.row_cols, &self.row_vals, y)
    }

    /// `Aᵀ x`.
    pub fn mul_t_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        self.product(self.cols, &self.col_ptr, &self.col_rows, &self.col_vals, x)
    }

    fn product(&self, n: usize, ptr: &[usize], idx: &[usize], vals: &[f64], v: &[f64]) -> Vec<f64> {
        let entry = |i: usize| -> f64 {
            let span = ptr[i]..ptr[i + 1];
            idx[span.clone()]
                .iter()
                .zip(&vals[span])
                .map(|(&j, &a)| a * v[j])
                .sum()
        };
        let mut out = vec![0.0; n];
        if self.threads <= 1 || n < PARALLEL_MIN {
            for (i, o) in out.iter_mut().enumerate() {
                *o = entry(i);
            }
            return out;
        }
        let chunk = n.div_ceil(self.threads);
        std::thread::scope(|scope| {
            for (c, block) in out.chunks_mut(chunk).enumerate() {
                let entry = &entry;
                scope.spawn(move || {
                    for (k, o) in block.iter_mut().enumerate() {
                        *o = entry(c * chunk + k);
                    }
                });
            }
        });
        out
    }

    /// Largest absolute entry: the operator norm from l1 to l∞.
    pub fn max_abs(&self) -> f64 {
        self.row_vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Nonzeros in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |k| (i, self.row_cols[k], self.row_vals[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.row_cols[span.clone()].binary_search(&j) {
            Ok(pos) => self.row_vals[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    /// CSV with header `row,col,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,value\n");
        for (i, j, v) in self.triplets() {
            let _ = writeln!(out, "{i},{j},{v:?}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_match_dense() {
        let dense = vec![vec![1.0, 0.0, -2.0], vec![0.0, 3.0, 0.5]];
        let a = SparseMatrix::from_dense(&dense);
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.mul_vec(&[1.0, 2.0, 3.0]), vec![-5.0, 7.5]);
        assert_eq!(a.mul_t_vec(&[1.0, -1.0]), vec![1.0, -3.0, -2.5]);
        assert_eq!(a.max_abs(), 3.0);
        assert_eq!(a.get(1, 2), 0.5);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.to_dense(), dense);
    }

    #[test]
    fn threaded_products_are_identical() {
        let n = 3000;
        let triplets: Vec<_> = (0..n)
            .flat_map(|i| {
                [
                    (i, (i * 7) % n, 0.1 * i as f64),
                    (i, (i * 13 + 5) % n, -1.0 / (i + 1) as f64),
                ]
            })
            .collect();
        let mut a = SparseMatrix::from_triplets(n, n, &triplets);
        let v: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (r1, t1) = (a.mul_vec(&v), a.mul_t_vec(&v));
        a.set_threads(4);
        assert_eq!(a.mul_vec(&v), r1);
        assert_eq!(a.mul_t_vec(&v), t1);
    }

    #[test]
    fn duplicates_accumulate() {
        let a = SparseMatrix::from_triplets(1, 1, &[(0, 0, 0.25), (0, 0, 0.5)]);
        assert_eq!(a.get(0, 0), 0.75);
        assert_eq!(a.to_csv(), "row,col,value\n0,0,0.75\n");
    }
}
