//! Banded LU factorization with partial pivoting.
//!
//! Rows are stored with width `2·kl + ku + 1` so that row interchanges never
//! push entries outside the band: entry `(i, j)` lives at `i·w + (j + kl - i)`.

use super::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot {
    pub column: usize,
    pub value: f64,
}

impl BandedLu {
    /// Number of stored entries a factorization of `a` would need.
    pub fn storage(a: &CsrMatrix) -> usize {
        let (kl, ku) = a.bandwidth();
        a.n() * (2 * kl + ku + 1)
    }

    pub fn factor(a: &CsrMatrix) -> Result<Self, SingularPivot> {
        let n = a.n();
        let (kl, ku) = a.bandwidth();
        let width = 2 * kl + ku + 1;
        let mut data = vec![0.0; n * width];
        for i in 0..n {
            for (j, v) in a.row(i) {
                data[i * width + j + kl - i] = v;
            }
        }
        let scale = a.norm_inf().max(f64::MIN_POSITIVE);
        let mut lu = BandedLu { n, kl, ku, width, data, pivots: vec![0; n] };
        lu.eliminate(scale)?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + j + self.kl - i
    }

    fn eliminate(&mut self, scale: f64) -> Result<(), SingularPivot> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for j in 0..n {
            let last_row = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.data[self.at(j, j)].abs();
            for i in j + 1..=last_row {
                let v = self.data[self.at(i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.pivots[j] = p;
            if best <= 1e-14 * scale {
                return Err(SingularPivot { column: j, value: best });
            }
            let last_col = (j + kl + ku).min(n - 1);
            if p != j {
                for c in j..=last_col {
                    let (a, b) = (self.at(j, c), self.at(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.at(j, j)];
            for i in j + 1..=last_row {
                let idx = self.at(i, j);
                let l = self.data[idx] / pivot;
                self.data[idx] = l;
                if l == 0.0 {
                    continue;
                }
                for c in j + 1..=last_col {
                    let u = self.data[self.at(j, c)];
                    let t = self.at(i, c);
                    self.data[t] -= l * u;
                }
            }
        }
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != 0.0 {
                for i in j + 1..=(j + kl).min(n - 1) {
                    b[i] -= self.data[self.at(i, j)] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let mut s = b[j];
            for c in j + 1..=(j + kl + ku).min(n - 1) {
                s -= self.data[self.at(j, c)] * b[c];
            }
            b[j] = s / self.data[self.at(j, j)];
        }
    }
}
