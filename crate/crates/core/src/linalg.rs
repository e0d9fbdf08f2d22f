//! Small dense square matrices and LU inversion with partial pivoting.

use std::fmt;
use std::ops::{Index, IndexMut};

#[derive(Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = self.data.chunks(self.n.max(1)).collect();
        f.debug_list().entries(rows).finish()
    }
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows must form a square");
        Self::from_fn(n, |i, j| rows[i][j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &SquareMatrix) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn sub(&self, other: &SquareMatrix) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_of_product(&self, other: &SquareMatrix) -> f64 {
        let n = self.n;
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                t += self[(i, j)] * other[(j, i)];
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Assemble from a 2x2 grid of equally sized blocks.
    pub fn from_blocks(tl: &SquareMatrix, tr: &SquareMatrix, bl: &SquareMatrix, br: &SquareMatrix) -> Self {
        let m = tl.n;
        Self::from_fn(2 * m, |i, j| match (i < m, j < m) {
            (true, true) => tl[(i, j)],
            (true, false) => tr[(i, j - m)],
            (false, true) => bl[(i - m, j)],
            (false, false) => br[(i - m, j - m)],
        })
    }

    /// Block `(bi, bj)` of a matrix split into four `n/2` square blocks.
    pub fn block(&self, bi: usize, bj: usize) -> Self {
        let m = self.n / 2;
        Self::from_fn(m, |i, j| self[(bi * m + i, bj * m + j)])
    }

    pub fn lu(&self) -> Lu {
        Lu::factor(self)
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// LU factorization `P A = L U` with partial pivoting.
pub struct Lu {
    lu: SquareMatrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    fn factor(a: &SquareMatrix) -> Lu {
        let n = a.n;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| lu[(r, col)].abs().total_cmp(&lu[(s, col)].abs()))
                .unwrap_or(col);
            if lu[(pivot, col)] == 0.0 {
                singular = true;
                continue;
            }
            if pivot != col {
                for j in 0..n {
                    lu.data.swap(pivot * n + j, col * n + j);
                }
                perm.swap(pivot, col);
                sign = -sign;
            }
            let p = lu[(col, col)];
            for r in col + 1..n {
                let factor = lu[(r, col)] / p;
                lu[(r, col)] = factor;
                if factor != 0.0 {
                    for j in col + 1..n {
                        let v = lu[(col, j)];
                        lu[(r, j)] -= factor * v;
                    }
                }
            }
        }
        Lu {
            lu,
            perm,
            sign,
            singular,
        }
    }

    pub fn determinant(&self) -> f64 {
        if self.singular {
            return 0.0;
        }
        (0..self.lu.n).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }

    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        if self.singular {
            return None;
        }
        let n = self.lu.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= self.lu[(i, j)] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= self.lu[(i, j)] * y[j];
            }
            y[i] /= self.lu[(i, i)];
        }
        Some(y)
    }

    pub fn inverse(&self) -> Option<SquareMatrix> {
        let n = self.lu.n;
        let mut inv = SquareMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Some(inv)
    }
}
