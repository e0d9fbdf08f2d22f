//! Tension fields of the identity map between two metrics and of general
//! coordinate maps, plus sampled harmonicity verdicts.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{parse_expression, Expr, Jet2, ParseError};
use crate::metric::{ChartedMetric, Interval, LocalGeometry, MetricError};
use crate::par;
use crate::sampling::Lattice;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 64;
pub const DEFAULT_SEED: u64 = 42;
/// Candidate points examined per requested sample before giving up on a
/// domain that keeps hitting degenerate metrics.
pub const MAX_OVERSAMPLING: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarmonicError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("coordinate names differ: {left:?} vs {right:?}")]
    CoordinateMismatch { left: Vec<String>, right: Vec<String> },
    #[error("image {image:?} of {point:?} lies outside the target domain")]
    ImageOutsideDomain { point: Vec<f64>, image: Vec<f64> },
    #[error("sampling domains do not overlap")]
    EmptyDomain,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("only {found} of {requested} samples were nondegenerate after {candidates} candidates")]
    TooManyDegenerate {
        requested: usize,
        found: usize,
        candidates: usize,
    },
    #[error("component {index}: {source}")]
    MapParse {
        index: usize,
        #[source]
        source: ParseError,
    },
    #[error("map evaluation failed at {point:?}: {message}")]
    MapEval { point: Vec<f64>, message: String },
}

/// Tension components indexed by target coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensionVector(pub Vec<f64>);

impl TensionVector {
    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn same_chart(g: &ChartedMetric, h: &ChartedMetric) -> Result<(), HarmonicError> {
    if g.dim() != h.dim() {
        return Err(HarmonicError::DimensionMismatch(format!(
            "metrics of dimension {} and {}",
            g.dim(),
            h.dim()
        )));
    }
    if g.coords() != h.coords() {
        let names = |m: &ChartedMetric| m.coords().iter().map(|c| c.to_string()).collect();
        return Err(HarmonicError::CoordinateMismatch {
            left: names(g),
            right: names(h),
        });
    }
    Ok(())
}

/// `τ^k = g^{ij} (Γ̂^k_{ij} − Γ^k_{ij})` from precomputed local data.
pub fn identity_tension(base: &LocalGeometry, hat: &LocalGeometry) -> TensionVector {
    let n = base.dim();
    let tau = (0..n)
        .map(|k| {
            let mut t = 0.0;
            for i in 0..n {
                for j in 0..n {
                    t += base.g_inv[(i, j)] * (hat.christoffel.get(k, i, j) - base.christoffel.get(k, i, j));
                }
            }
            t
        })
        .collect();
    TensionVector(tau)
}

/// Tension of the identity map `(M, g) → (M, ĝ)` at `x`.
pub fn tension_identity_at(
    g: &ChartedMetric,
    g_hat: &ChartedMetric,
    x: &[f64],
) -> Result<TensionVector, HarmonicError> {
    same_chart(g, g_hat)?;
    let base = LocalGeometry::first_order(g, x)?;
    let hat = LocalGeometry::first_order(g_hat, x)?;
    Ok(identity_tension(&base, &hat))
}

/// A smooth map given in coordinates, `y^α = φ^α(x^1..x^m)`.
#[derive(Debug, Clone)]
pub struct CoordinateMap {
    source_coords: Vec<Arc<str>>,
    components: Vec<Expr>,
}

impl CoordinateMap {
    pub fn parse<S: AsRef<str>>(source_coords: &[String], components: &[S]) -> Result<Self, HarmonicError> {
        let exprs = components
            .iter()
            .enumerate()
            .map(|(i, s)| {
                parse_expression(s.as_ref(), source_coords)
                    .map_err(|source| HarmonicError::MapParse { index: i + 1, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CoordinateMap {
            source_coords: source_coords.iter().map(|s| Arc::from(s.as_str())).collect(),
            components: exprs,
        })
    }

    pub fn identity(coords: &[String]) -> Self {
        let components = coords
            .iter()
            .enumerate()
            .map(|(i, c)| Expr::var(i, c.as_str()))
            .collect();
        CoordinateMap {
            source_coords: coords.iter().map(|s| Arc::from(s.as_str())).collect(),
            components,
        }
    }

    pub fn source_dim(&self) -> usize {
        self.source_coords.len()
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }
}

/// `τ^γ = g^{ij} (∂²φ^γ/∂x^i∂x^j − Γ^k_{ij} ∂φ^γ/∂x^k + ᴺΓ^γ_{αβ}(φ) ∂φ^α/∂x^i ∂φ^β/∂x^j)`.
pub fn tension_map_at(
    map: &CoordinateMap,
    g: &ChartedMetric,
    h: &ChartedMetric,
    x: &[f64],
) -> Result<TensionVector, HarmonicError> {
    let m = g.dim();
    let n = h.dim();
    if map.source_dim() != m || map.target_dim() != n {
        return Err(HarmonicError::DimensionMismatch(format!(
            "map is {}→{}, metrics are {}→{}",
            map.source_dim(),
            map.target_dim(),
            m,
            n
        )));
    }
    let jets: Vec<Jet2> = map
        .components
        .iter()
        .map(|e| {
            e.eval_jet2(x).map_err(|err| HarmonicError::MapEval {
                point: x.to_vec(),
                message: err.to_string(),
            })
        })
        .collect::<Result<_, _>>()?;
    let image: Vec<f64> = jets.iter().map(|j| j.value).collect();
    if !h.contains(&image) {
        return Err(HarmonicError::ImageOutsideDomain {
            point: x.to_vec(),
            image,
        });
    }
    let source = LocalGeometry::first_order(g, x)?;
    let target = LocalGeometry::first_order(h, &image)?;
    let tau = (0..n)
        .map(|c| {
            let mut t = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let mut hess = jets[c].hess(i, j);
                    for k in 0..m {
                        hess -= source.christoffel.get(k, i, j) * jets[c].d(k);
                    }
                    for a in 0..n {
                        for b in 0..n {
                            hess += target.christoffel.get(c, a, b) * jets[a].d(i) * jets[b].d(j);
                        }
                    }
                    t += source.g_inv[(i, j)] * hess;
                }
            }
            t
        })
        .collect();
    Ok(TensionVector(tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "harmonic-on-samples")]
    HarmonicOnSamples,
    #[serde(rename = "not-harmonic")]
    NotHarmonic,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::HarmonicOnSamples => "harmonic-on-samples",
            Verdict::NotHarmonic => "not-harmonic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicityReport {
    pub verdict: Verdict,
    pub max_abs_residual: f64,
    pub worst_point: Vec<f64>,
    pub per_component_max: Vec<f64>,
    pub samples_used: usize,
    pub rejected_samples: usize,
    pub tolerance: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Execution {
    /// Uses the rayon pool when the `parallel` feature is enabled.
    Default,
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            samples: DEFAULT_SAMPLES,
            tolerance: DEFAULT_TOLERANCE,
            seed: DEFAULT_SEED,
            execution: Execution::Default,
        }
    }
}

impl CheckOptions {
    pub fn new(samples: usize, tolerance: f64, seed: u64) -> Self {
        CheckOptions {
            samples,
            tolerance,
            seed,
            execution: Execution::Default,
        }
    }
}

/// Sample `residual` over `domain` and reduce into a report.
///
/// `residual` returns `Ok(None)` for points to reject (near-degenerate
/// metrics). Rejected points are replaced by later lattice points, up to
/// [`MAX_OVERSAMPLING`] candidates per requested sample.
pub fn sample_residuals<F>(
    domain: &[Interval],
    opts: &CheckOptions,
    residual: F,
) -> Result<HarmonicityReport, HarmonicError>
where
    F: Fn(&[f64]) -> Result<Option<Vec<f64>>, HarmonicError> + Sync + Send,
{
    if opts.samples == 0 {
        return Err(HarmonicError::InvalidArgument("samples must be at least 1".into()));
    }
    if !(opts.tolerance > 0.0) {
        return Err(HarmonicError::InvalidArgument("tolerance must be positive".into()));
    }
    let lattice = Lattice::new(domain, opts.seed);
    let budget = opts.samples * MAX_OVERSAMPLING;
    let mut accepted: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(opts.samples);
    let mut next = 0;
    let mut rejected = 0;
    while accepted.len() < opts.samples && next < budget {
        let batch = (opts.samples - accepted.len()).min(budget - next);
        let points = lattice.points(next..next + batch);
        next += batch;
        let eval = |p: &Vec<f64>| residual(p);
        let results = match opts.execution {
            Execution::Default => par::map_ordered(&points, eval),
            Execution::Sequential => par::map_sequential(&points, eval),
        };
        for (point, result) in points.into_iter().zip(results) {
            match result? {
                Some(r) => accepted.push((point, r)),
                None => rejected += 1,
            }
        }
    }
    if accepted.len() < opts.samples {
        return Err(HarmonicError::TooManyDegenerate {
            requested: opts.samples,
            found: accepted.len(),
            candidates: next,
        });
    }

    let width = accepted[0].1.len();
    let mut per_component_max = vec![0.0_f64; width];
    let mut max_abs_residual = 0.0_f64;
    let mut worst = 0;
    for (idx, (_, r)) in accepted.iter().enumerate() {
        for (slot, v) in per_component_max.iter_mut().zip(r) {
            if !v.is_finite() {
                return Err(HarmonicError::InvalidArgument(format!(
                    "non-finite residual at {:?}",
                    accepted[idx].0
                )));
            }
            *slot = slot.max(v.abs());
            if v.abs() > max_abs_residual {
                max_abs_residual = v.abs();
                worst = idx;
            }
        }
    }
    let verdict = if max_abs_residual > opts.tolerance {
        Verdict::NotHarmonic
    } else {
        Verdict::HarmonicOnSamples
    };
    Ok(HarmonicityReport {
        verdict,
        max_abs_residual,
        worst_point: accepted[worst].0.clone(),
        per_component_max,
        samples_used: accepted.len(),
        rejected_samples: rejected,
        tolerance: opts.tolerance,
        seed: opts.seed,
    })
}

fn shared_domain(g: &ChartedMetric, h: &ChartedMetric) -> Result<Vec<Interval>, HarmonicError> {
    g.domain()
        .iter()
        .zip(h.domain())
        .map(|(a, b)| a.intersect(b).ok_or(HarmonicError::EmptyDomain))
        .collect()
}

/// Tension at `x`, or `None` when either metric is near-degenerate there.
fn identity_residual(g: &ChartedMetric, g_hat: &ChartedMetric, x: &[f64]) -> Result<Option<Vec<f64>>, HarmonicError> {
    let geometry = |m: &ChartedMetric| match LocalGeometry::first_order(m, x) {
        Ok(geo) => Ok(Some(geo)),
        Err(MetricError::Degenerate { .. }) => Ok(None),
        Err(e) => Err(HarmonicError::from(e)),
    };
    let (Some(base), Some(hat)) = (geometry(g)?, geometry(g_hat)?) else {
        return Ok(None);
    };
    Ok(Some(identity_tension(&base, &hat).0))
}

/// Decide on `samples` lattice points of the shared domain whether `ĝ` is
/// harmonic with respect to `g`. The pair is ordered.
pub fn check_harmonic(
    g: &ChartedMetric,
    g_hat: &ChartedMetric,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<HarmonicityReport, HarmonicError> {
    check_harmonic_with(g, g_hat, &CheckOptions::new(samples, tol, seed))
}

pub fn check_harmonic_with(
    g: &ChartedMetric,
    g_hat: &ChartedMetric,
    opts: &CheckOptions,
) -> Result<HarmonicityReport, HarmonicError> {
    same_chart(g, g_hat)?;
    let domain = shared_domain(g, g_hat)?;
    sample_residuals(&domain, opts, |x| identity_residual(g, g_hat, x))
}
