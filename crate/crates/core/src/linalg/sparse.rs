//! Compressed sparse row storage.

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Square matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        CsrMatrix::from_triplets(self.n, &t)
    }

    /// `diag(left) · A · diag(right)`.
    pub fn scale(&self, left: &[f64], right: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                out.values[k] *= left[i] * right[out.col_idx[k]];
            }
        }
        out
    }

    /// `A + s·I`.
    pub fn shifted(&self, s: f64) -> Self {
        let mut t = self.triplets();
        t.extend((0..self.n).map(|i| (i, i, s)));
        CsrMatrix::from_triplets(self.n, &t)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Replaces row `i` by the unit row `e_iᵀ`.
    pub fn with_unit_row(&self, i: usize) -> Self {
        let mut t: Vec<_> = self.triplets().into_iter().filter(|&(r, _, _)| r != i).collect();
        t.push((i, i, 1.0));
        CsrMatrix::from_triplets(self.n, &t)
    }

    /// `P A Pᵀ` where `order[p]` is the original index placed at position `p`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut position = vec![0; self.n];
        for (p, &orig) in order.iter().enumerate() {
            position[orig] = p;
        }
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (position[i], position[j], v)).collect();
        CsrMatrix::from_triplets(self.n, &t)
    }

    /// Lower and upper bandwidth.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut lower = 0;
        let mut upper = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    lower = lower.max(i - j);
                } else {
                    upper = upper.max(j - i);
                }
            }
        }
        (lower, upper)
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, -1.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn transpose_and_permute() {
        let m = CsrMatrix::from_triplets(3, &[(0, 1, 2.0), (2, 0, 5.0)]);
        let t = m.transpose();
        assert_eq!(t.get(1, 0), 2.0);
        assert_eq!(t.get(0, 2), 5.0);
        let p = m.permuted(&[2, 0, 1]);
        // original (2,0) lands at (0,1), (0,1) at (1,2)
        assert_eq!(p.get(0, 1), 5.0);
        assert_eq!(p.get(1, 2), 2.0);
        assert_eq!(m.bandwidth(), (2, 1));
    }
}
