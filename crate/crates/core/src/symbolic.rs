//! Expression-level inverse metric and Christoffel symbols, used to assemble
//! lifted metrics in induced bundle coordinates.

use std::collections::HashMap;

use crate::expr::Expr;
use crate::metric::ChartedMetric;

/// Determinant expansion visits `(dim + 1)·2^dim` minors.
pub const MAX_SYMBOLIC_DIM: usize = 10;

pub struct SymbolicGeometry {
    n: usize,
    pub det: Expr,
    g_inv: Vec<Expr>,
    christoffel: Vec<Expr>,
}

struct Minors<'a> {
    n: usize,
    g: &'a dyn Fn(usize, usize) -> Expr,
    memo: HashMap<(Option<usize>, u32), Expr>,
}

impl Minors<'_> {
    /// Determinant of the submatrix on the last `popcount(cols)` rows other
    /// than `excluded`, restricted to columns in `cols`.
    fn det(&mut self, excluded: Option<usize>, cols: u32) -> Expr {
        if cols == 0 {
            return Expr::constant(1.0);
        }
        if let Some(d) = self.memo.get(&(excluded, cols)) {
            return d.clone();
        }
        let rows: Vec<usize> = (0..self.n).filter(|&r| Some(r) != excluded).collect();
        let remaining = cols.count_ones() as usize;
        let row = rows[rows.len() - remaining];
        let mut acc = Expr::constant(0.0);
        let mut position = 0;
        for c in 0..self.n {
            if cols & (1 << c) == 0 {
                continue;
            }
            let entry = (self.g)(row, c);
            if !entry.is_zero() {
                let sub = self.det(excluded, cols & !(1 << c));
                let term = Expr::mul(&entry, &sub);
                acc = if position % 2 == 0 {
                    Expr::add(&acc, &term)
                } else {
                    Expr::sub(&acc, &term)
                };
            }
            position += 1;
        }
        self.memo.insert((excluded, cols), acc.clone());
        acc
    }
}

impl SymbolicGeometry {
    pub fn new(metric: &ChartedMetric) -> Self {
        let n = metric.dim();
        assert!(
            n <= MAX_SYMBOLIC_DIM,
            "symbolic expansion limited to dimension {}",
            MAX_SYMBOLIC_DIM
        );
        let entry = |i: usize, j: usize| metric.component(i, j).clone();
        let mut minors = Minors {
            n,
            g: &entry,
            memo: HashMap::new(),
        };
        let all = (1u32 << n) - 1;
        let det = minors.det(None, all);
        let mut g_inv = vec![Expr::constant(0.0); n * n];
        for i in 0..n {
            for j in i..n {
                // inverse = adjugate / det, adjugate_ij = cofactor_ji
                let minor = minors.det(Some(j), all & !(1 << i));
                let cof = if (i + j) % 2 == 0 { minor } else { Expr::neg(&minor) };
                let v = Expr::div(&cof, &det);
                g_inv[i * n + j] = v.clone();
                g_inv[j * n + i] = v;
            }
        }

        let dg: Vec<Expr> = (0..n)
            .flat_map(|k| (0..n).flat_map(move |i| (0..n).map(move |j| (k, i, j))))
            .map(|(k, i, j)| metric.component(i, j).derivative(k))
            .collect();
        let d = |k: usize, i: usize, j: usize| &dg[(k * n + i) * n + j];
        let mut first = vec![Expr::constant(0.0); n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let s = Expr::sub(&Expr::add(d(i, j, l), d(j, i, l)), d(l, i, j));
                    let v = Expr::mul(&Expr::constant(0.5), &s);
                    first[(l * n + i) * n + j] = v.clone();
                    first[(l * n + j) * n + i] = v;
                }
            }
        }
        let mut christoffel = vec![Expr::constant(0.0); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let terms: Vec<Expr> = (0..n)
                        .map(|l| Expr::mul(&g_inv[k * n + l], &first[(l * n + i) * n + j]))
                        .collect();
                    let v = Expr::sum(&terms);
                    christoffel[(k * n + i) * n + j] = v.clone();
                    christoffel[(k * n + j) * n + i] = v;
                }
            }
        }
        SymbolicGeometry {
            n,
            det,
            g_inv,
            christoffel,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn g_inv(&self, i: usize, j: usize) -> &Expr {
        &self.g_inv[i * self.n + j]
    }

    /// `Γ^k_{ij}` as an expression.
    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.christoffel[(k * self.n + i) * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Interval;

    #[test]
    fn agrees_with_numeric_geometry() {
        let coords: Vec<String> = (1..=4).map(|i| format!("x{}", i)).collect();
        let rows: Vec<Vec<String>> = [
            ["1", "0", "x2", "0"],
            ["0", "-1", "0", "0"],
            ["x2", "0", "x2^2 - cosh(x2)^2", "0"],
            ["0", "0", "0", "-1"],
        ]
        .iter()
        .map(|r| r.iter().map(|s| s.to_string()).collect())
        .collect();
        let g = ChartedMetric::parse(coords, &rows, vec![Interval::new(-1.0, 1.0); 4]).unwrap();
        let sym = SymbolicGeometry::new(&g);
        let x = [0.3, 0.6, -0.2, 0.1];
        let inv = g.inverse_metric_at(&x).unwrap();
        let gam = g.christoffel_at(&x).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((sym.g_inv(i, j).eval(&x).unwrap() - inv[(i, j)]).abs() < 1e-13);
                for k in 0..4 {
                    let v = sym.christoffel(k, i, j).eval(&x).unwrap();
                    assert!((v - gam.get(k, i, j)).abs() < 1e-12, "Γ^{}_{}{}", k, i, j);
                }
            }
        }
        let det = g.metric_at(&x).unwrap().lu().determinant();
        assert!((sym.det.eval(&x).unwrap() - det).abs() < 1e-13);
    }
}
