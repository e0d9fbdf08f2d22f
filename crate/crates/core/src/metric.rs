//! Charted pseudo-Riemannian metrics and their pointwise Levi-Civita data.
//!
//! Indices are 0-based throughout this module; reports and the expression
//! language use the 1-based coordinate names.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_expression, EvalError, Expr, Jet2, ParseError};
use crate::linalg::SquareMatrix;

/// |det g| at or below this value is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("component ({row},{col}): {source}")]
    Parse {
        row: usize,
        col: usize,
        #[source]
        source: ParseError,
    },
    #[error("evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("metric is degenerate at {point:?} (det = {det:e})")]
    Degenerate { point: Vec<f64>, det: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("components ({row},{col}) and ({col},{row}) differ")]
    NotSymmetric { row: usize, col: usize },
    #[error("invalid domain: {0}")]
    Domain(String),
}

/// Closed sampling interval of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn lerp(&self, t: f64) -> f64 {
        self.lo + t * (self.hi - self.lo)
    }
}

#[derive(Debug, Clone)]
pub struct ChartedMetric {
    coords: Vec<Arc<str>>,
    /// Row-major; entries (i,j) and (j,i) hold the same tree.
    components: Vec<Expr>,
    domain: Vec<Interval>,
}

impl ChartedMetric {
    /// Build from a full component matrix. Mirror entries must be
    /// structurally identical; the upper triangle is kept.
    pub fn new(coords: Vec<String>, components: Vec<Vec<Expr>>, domain: Vec<Interval>) -> Result<Self, MetricError> {
        let n = coords.len();
        if n == 0 {
            return Err(MetricError::DimensionMismatch { expected: 1, found: 0 });
        }
        if components.len() != n {
            return Err(MetricError::DimensionMismatch {
                expected: n,
                found: components.len(),
            });
        }
        if let Some(row) = components.iter().find(|r| r.len() != n) {
            return Err(MetricError::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        for i in 0..n {
            for j in i + 1..n {
                if !components[i][j].same_structure(&components[j][i]) {
                    return Err(MetricError::NotSymmetric { row: i + 1, col: j + 1 });
                }
            }
        }
        let mut flat = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                flat.push(components[a][b].clone());
            }
        }
        Self::from_parts(coords.into_iter().map(Arc::from).collect(), flat, domain)
    }

    pub(crate) fn from_parts(
        coords: Vec<Arc<str>>,
        components: Vec<Expr>,
        domain: Vec<Interval>,
    ) -> Result<Self, MetricError> {
        let n = coords.len();
        if domain.len() != n {
            return Err(MetricError::Domain(format!(
                "{} intervals for {} coordinates",
                domain.len(),
                n
            )));
        }
        if let Some(iv) = domain
            .iter()
            .find(|iv| !(iv.lo <= iv.hi) || !iv.lo.is_finite() || !iv.hi.is_finite())
        {
            return Err(MetricError::Domain(format!(
                "[{}, {}] is not a finite interval",
                iv.lo, iv.hi
            )));
        }
        if let Some(bad) = components.iter().filter_map(|c| c.max_var_index()).find(|&k| k >= n) {
            return Err(MetricError::DimensionMismatch {
                expected: n,
                found: bad + 1,
            });
        }
        Ok(ChartedMetric {
            coords,
            components,
            domain,
        })
    }

    /// Parse a component matrix of expression strings over `coords`.
    pub fn parse(coords: Vec<String>, components: &[Vec<String>], domain: Vec<Interval>) -> Result<Self, MetricError> {
        let n = coords.len();
        if components.len() != n {
            return Err(MetricError::DimensionMismatch {
                expected: n,
                found: components.len(),
            });
        }
        let mut rows = Vec::with_capacity(n);
        for (i, row) in components.iter().enumerate() {
            if row.len() != n {
                return Err(MetricError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            let mut parsed = Vec::with_capacity(n);
            for (j, src) in row.iter().enumerate() {
                let e = parse_expression(src, &coords).map_err(|source| MetricError::Parse {
                    row: i + 1,
                    col: j + 1,
                    source,
                })?;
                parsed.push(e);
            }
            rows.push(parsed);
        }
        Self::new(coords, rows, domain)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Arc<str>] {
        &self.coords
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[i * self.dim() + j]
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn with_domain(&self, domain: Vec<Interval>) -> Result<Self, MetricError> {
        Self::from_parts(self.coords.clone(), self.components.clone(), domain)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.domain.iter().zip(x).all(|(iv, v)| iv.contains(*v))
    }

    fn check_point(&self, x: &[f64]) -> Result<(), MetricError> {
        if x.len() != self.dim() {
            return Err(MetricError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Component values at `x`.
    pub fn metric_at(&self, x: &[f64]) -> Result<SquareMatrix, MetricError> {
        self.check_point(x)?;
        let n = self.dim();
        let mut g = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = self.component(i, j).eval(x).map_err(|source| MetricError::Eval {
                    point: x.to_vec(),
                    source,
                })?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    pub fn inverse_metric_at(&self, x: &[f64]) -> Result<SquareMatrix, MetricError> {
        let g = self.metric_at(x)?;
        invert_metric(&g, x).map(|(inv, _)| inv)
    }

    pub fn christoffel_at(&self, x: &[f64]) -> Result<ChristoffelSet, MetricError> {
        Ok(LocalGeometry::first_order(self, x)?.christoffel)
    }

    pub fn curvature_at(&self, x: &[f64]) -> Result<CurvatureField, MetricError> {
        Ok(LocalGeometry::second_order(self, x)?.curvature())
    }
}

/// Inverse and determinant; errors when |det| is at the degeneracy threshold.
pub fn invert_metric(g: &SquareMatrix, x: &[f64]) -> Result<(SquareMatrix, f64), MetricError> {
    let lu = g.lu();
    let det = lu.determinant();
    let degenerate = || MetricError::Degenerate { point: x.to_vec(), det };
    if !(det.abs() > DEGENERACY_THRESHOLD) {
        return Err(degenerate());
    }
    let mut inv = lu.inverse().ok_or_else(degenerate)?;
    // symmetrize away rounding so the inverse is symmetric as a matrix
    let n = g.dim();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = v;
            inv[(j, i)] = v;
        }
    }
    Ok((inv, det))
}

/// Christoffel symbols of the second kind at a point, `Γ^k_{ij}` stored as
/// `[k][i][j]`. Symmetric in `i, j` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelSet {
    n: usize,
    data: Vec<f64>,
}

impl ChristoffelSet {
    pub fn zeros(n: usize) -> Self {
        ChristoffelSet {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    fn set_sym(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let n = self.n;
        self.data[(k * n + i) * n + j] = v;
        self.data[(k * n + j) * n + i] = v;
    }

    /// The matrix `(Γ^k_{ij})_{ij}`.
    pub fn matrix(&self, k: usize) -> SquareMatrix {
        SquareMatrix::from_fn(self.n, |i, j| self.get(k, i, j))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Curvature components `R^k_{ijh}` with `R(∂_i, ∂_j)∂_h = R^k_{ijh} ∂_k`,
/// stored as `[k][i][j][h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    n: usize,
    data: Vec<f64>,
}

impl CurvatureField {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize, h: usize) -> f64 {
        let n = self.n;
        self.data[((k * n + i) * n + j) * n + h]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, h: usize, v: f64) {
        let n = self.n;
        self.data[((k * n + i) * n + j) * n + h] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Metric jets and derived Levi-Civita data at one point.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub point: Vec<f64>,
    pub g: SquareMatrix,
    pub g_inv: SquareMatrix,
    pub det: f64,
    /// `∂_k g_ij` as `[k][i][j]`.
    pub dg: Vec<f64>,
    pub christoffel: ChristoffelSet,
    /// `∂_l Γ^k_{ij}` as `[l][k][i][j]`; present for second-order geometry.
    pub dchristoffel: Option<Vec<f64>>,
}

impl LocalGeometry {
    pub fn first_order(metric: &ChartedMetric, x: &[f64]) -> Result<Self, MetricError> {
        Self::compute(metric, x, false)
    }

    pub fn second_order(metric: &ChartedMetric, x: &[f64]) -> Result<Self, MetricError> {
        Self::compute(metric, x, true)
    }

    fn compute(metric: &ChartedMetric, x: &[f64], second: bool) -> Result<Self, MetricError> {
        metric.check_point(x)?;
        let n = metric.dim();
        let mut jets: Vec<Option<Jet2>> = vec![None; n * n];
        for i in 0..n {
            for j in i..n {
                let jet = metric
                    .component(i, j)
                    .eval_jet2(x)
                    .map_err(|source| MetricError::Eval {
                        point: x.to_vec(),
                        source,
                    })?;
                jets[j * n + i] = Some(jet.clone());
                jets[i * n + j] = Some(jet);
            }
        }
        let jet = |i: usize, j: usize| jets[i * n + j].as_ref().expect("filled");
        let g = SquareMatrix::from_fn(n, |i, j| jet(i, j).value);
        let (g_inv, det) = invert_metric(&g, x)?;

        let mut dg = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    dg[(k * n + i) * n + j] = jet(i, j).d(k);
                }
            }
        }
        let dgk = |k: usize, i: usize, j: usize| dg[(k * n + i) * n + j];

        // first kind: c[l][i][j] = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let mut first = vec![0.0; n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = 0.5 * (dgk(i, j, l) + dgk(j, i, l) - dgk(l, i, j));
                    first[(l * n + i) * n + j] = v;
                    first[(l * n + j) * n + i] = v;
                }
            }
        }
        let mut christoffel = ChristoffelSet::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v: f64 = (0..n).map(|l| g_inv[(k, l)] * first[(l * n + i) * n + j]).sum();
                    christoffel.set_sym(k, i, j, v);
                }
            }
        }

        let dchristoffel = second.then(|| {
            // ∂_h Γ^k_ij = g^{kl} (∂_h c_lij − ∂_h g_lb Γ^b_ij)
            let mut out = vec![0.0; n * n * n * n];
            for h in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let inner: Vec<f64> = (0..n)
                            .map(|l| {
                                let dc = 0.5 * (jet(j, l).hess(h, i) + jet(i, l).hess(h, j) - jet(i, j).hess(h, l));
                                let corr: f64 = (0..n).map(|b| dgk(h, l, b) * christoffel.get(b, i, j)).sum();
                                dc - corr
                            })
                            .collect();
                        for k in 0..n {
                            let v: f64 = (0..n).map(|l| g_inv[(k, l)] * inner[l]).sum();
                            out[((h * n + k) * n + i) * n + j] = v;
                            out[((h * n + k) * n + j) * n + i] = v;
                        }
                    }
                }
            }
            out
        });

        Ok(LocalGeometry {
            point: x.to_vec(),
            g,
            g_inv,
            det,
            dg,
            christoffel,
            dchristoffel,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn dg(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim();
        self.dg[(k * n + i) * n + j]
    }

    /// `∂_l Γ^k_{ij}`; panics on first-order geometry.
    pub fn dchristoffel(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim();
        self.dchristoffel.as_ref().expect("second-order geometry required")[((l * n + k) * n + i) * n + j]
    }

    /// `R^k_{ijh} = ∂_iΓ^k_{jh} − ∂_jΓ^k_{ih} + Γ^k_{il}Γ^l_{jh} − Γ^k_{jl}Γ^l_{ih}`,
    /// computed for `i < j` and completed by antisymmetry.
    pub fn curvature(&self) -> CurvatureField {
        let n = self.dim();
        let gam = &self.christoffel;
        let mut r = CurvatureField {
            n,
            data: vec![0.0; n * n * n * n],
        };
        for k in 0..n {
            for i in 0..n {
                for j in i + 1..n {
                    for h in 0..n {
                        let mut v = self.dchristoffel(i, k, j, h) - self.dchristoffel(j, k, i, h);
                        for l in 0..n {
                            v += gam.get(k, i, l) * gam.get(l, j, h) - gam.get(k, j, l) * gam.get(l, i, h);
                        }
                        r.set(k, i, j, h, v);
                        r.set(k, j, i, h, -v);
                    }
                }
            }
        }
        r
    }

    /// `∂_k g^{ij} = −g^{ia} ∂_k g_ab g^{bj}` as a matrix for fixed `k`.
    pub fn d_inverse(&self, k: usize) -> SquareMatrix {
        let n = self.dim();
        let dgk = SquareMatrix::from_fn(n, |a, b| self.dg(k, a, b));
        let prod = self.g_inv.mul(&dgk).mul(&self.g_inv);
        SquareMatrix::from_fn(n, |i, j| -prod[(i, j)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{}", i)).collect()
    }

    fn parse(rows: &[&[&str]]) -> ChartedMetric {
        let n = rows.len();
        let comps: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
        ChartedMetric::parse(coords(n), &comps, vec![Interval::new(-1.0, 1.0); n]).unwrap()
    }

    fn egorov3() -> ChartedMetric {
        parse(&[&["exp(x3)", "0", "0"], &["0", "0", "1"], &["0", "1", "0"]])
    }

    #[test]
    fn egorov_metric_and_inverse_at_origin() {
        let g = egorov3();
        let expected = SquareMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]);
        assert_eq!(g.metric_at(&[0.0; 3]).unwrap(), expected);
        assert_eq!(g.inverse_metric_at(&[0.0; 3]).unwrap(), expected);
    }

    #[test]
    fn flat_metrics() {
        let id = parse(&[&["1", "0"], &["0", "1"]]);
        assert_eq!(id.metric_at(&[0.3, 0.9]).unwrap(), SquareMatrix::identity(2));
        assert_eq!(id.inverse_metric_at(&[0.3, 0.9]).unwrap(), SquareMatrix::identity(2));
        let scaled = parse(&[&["4", "0"], &["0", "4"]]);
        let inv = scaled.inverse_metric_at(&[0.0, 0.0]).unwrap();
        assert_eq!(inv, SquareMatrix::from_fn(2, |i, j| if i == j { 0.25 } else { 0.0 }));
        assert_eq!(scaled.christoffel_at(&[0.1, 0.2]).unwrap().max_abs(), 0.0);
        assert_eq!(scaled.curvature_at(&[0.1, 0.2]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn egorov_christoffels_at_origin() {
        let gam = egorov3().christoffel_at(&[0.0; 3]).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let expected = match (k, i, j) {
                        (1, 0, 0) => -0.5,
                        (0, 0, 2) | (0, 2, 0) => 0.5,
                        _ => 0.0,
                    };
                    assert_eq!(gam.get(k, i, j), expected, "Γ^{}_{}{}", k + 1, i + 1, j + 1);
                }
            }
        }
    }

    #[test]
    fn degenerate_metric_reports_point_and_det() {
        let g = parse(&[&["x1", "0"], &["0", "1"]]);
        match g.inverse_metric_at(&[0.0, 0.5]) {
            Err(MetricError::Degenerate { point, det }) => {
                assert_eq!(point, vec![0.0, 0.5]);
                assert_eq!(det, 0.0);
            }
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn asymmetric_components_rejected() {
        let comps = vec![vec!["1".to_string(), "x1".into()], vec!["x2".into(), "1".into()]];
        let err = ChartedMetric::parse(coords(2), &comps, vec![Interval::new(0.0, 1.0); 2]).unwrap_err();
        assert_eq!(err, MetricError::NotSymmetric { row: 1, col: 2 });
    }

    #[test]
    fn shape_errors() {
        let comps = vec![vec!["1".to_string(), "0".into()], vec!["0".into(), "1".into()]];
        assert!(matches!(
            ChartedMetric::parse(coords(3), &comps, vec![Interval::new(0.0, 1.0); 3]),
            Err(MetricError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            ChartedMetric::parse(coords(2), &comps, vec![Interval::new(1.0, 0.0); 2]),
            Err(MetricError::Domain(_))
        ));
        let bad = vec![vec!["1".to_string(), "0".into()], vec!["0".into(), "y".into()]];
        assert!(matches!(
            ChartedMetric::parse(coords(2), &bad, vec![Interval::new(0.0, 1.0); 2]),
            Err(MetricError::Parse { row: 2, col: 2, .. })
        ));
    }

    #[test]
    fn curvature_diagonal_vanishes() {
        let g = parse(&[&["exp(x2)", "x1"], &["x1", "-cosh(x2)"]]);
        let r = g.curvature_at(&[0.2, 0.4]).unwrap();
        for k in 0..2 {
            for i in 0..2 {
                for h in 0..2 {
                    assert_eq!(r.get(k, i, i, h), 0.0);
                }
            }
        }
    }
}
