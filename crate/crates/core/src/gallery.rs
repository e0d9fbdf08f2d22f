//! Built-in metric families: Egorov spaces, four-dimensional Walker metrics
//! of neutral signature, and Gödel-type spacetimes, with the closed-form
//! harmonicity predicates known for them.
//!
//! All families use the coordinates `x1..xm`.

use thiserror::Error;

use crate::expr::{parse_expression, Expr};
use crate::harmonic::tension_identity_at;
use crate::metric::{ChartedMetric, Interval, MetricError};
use crate::sampling::Lattice;

/// Sample count for the positivity / nonvanishing checks on a parameter.
const PARAMETER_CHECK_SAMPLES: usize = 257;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GalleryError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{family}: {message}")]
    Invalid { family: &'static str, message: String },
    #[error("{family}: parameter `{name}` may depend only on {allowed}, found {found}")]
    Dependence {
        family: &'static str,
        name: &'static str,
        allowed: String,
        found: String,
    },
    #[error("{family}: {name} = {value} at {coord} = {at}")]
    BadValue {
        family: &'static str,
        name: &'static str,
        coord: String,
        at: f64,
        value: f64,
    },
}

pub fn coordinate_names(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("x{}", i)).collect()
}

fn parse_in(
    family: &'static str,
    name: &'static str,
    src: &str,
    coords: &[String],
    allowed: &[usize],
) -> Result<Expr, GalleryError> {
    let e = parse_expression(src, coords).map_err(|e| GalleryError::Invalid {
        family,
        message: format!("parameter `{}`: {}", name, e),
    })?;
    if let Some(bad) = e.variables().into_iter().find(|v| !allowed.contains(v)) {
        return Err(GalleryError::Dependence {
            family,
            name,
            allowed: allowed
                .iter()
                .map(|&i| coords[i].clone())
                .collect::<Vec<_>>()
                .join(", "),
            found: coords[bad].clone(),
        });
    }
    Ok(e)
}

fn single_var_values(
    e: &Expr,
    dim: usize,
    var: usize,
    iv: Interval,
) -> impl Iterator<Item = (f64, Result<f64, String>)> + '_ {
    (0..PARAMETER_CHECK_SAMPLES).map(move |s| {
        let t = iv.lerp(s as f64 / (PARAMETER_CHECK_SAMPLES - 1) as f64);
        let mut x = vec![0.0; dim];
        x[var] = t;
        (t, e.eval(&x).map_err(|err| err.to_string()))
    })
}

fn matrix(m: usize, entries: &[((usize, usize), Expr)]) -> Vec<Vec<Expr>> {
    let mut rows = vec![vec![Expr::constant(0.0); m]; m];
    for ((i, j), e) in entries {
        rows[*i][*j] = e.clone();
        rows[*j][*i] = e.clone();
    }
    rows
}

// ---- Egorov ----------------------------------------------------------------

/// `g_f = f(x^m) Σ_{i≤m−2} (dx^i)² + 2 dx^{m−1} dx^m` with `f > 0`.
#[derive(Debug, Clone)]
pub struct EgorovSpec {
    pub m: usize,
    pub f: Expr,
    pub domain: Vec<Interval>,
}

impl EgorovSpec {
    pub fn new(m: usize, f: &str) -> Result<Self, GalleryError> {
        Self::with_domain(m, f, vec![Interval::new(-1.0, 1.0); m])
    }

    pub fn with_domain(m: usize, f: &str, domain: Vec<Interval>) -> Result<Self, GalleryError> {
        if m < 3 {
            return Err(GalleryError::Invalid {
                family: "egorov",
                message: format!("dimension must be at least 3, got {}", m),
            });
        }
        if domain.len() != m {
            return Err(GalleryError::Invalid {
                family: "egorov",
                message: format!("{} intervals for dimension {}", domain.len(), m),
            });
        }
        let f = Self::parse_function(m, f)?;
        let spec = EgorovSpec { m, f, domain };
        spec.check_positive(&spec.f, "f")?;
        Ok(spec)
    }

    /// Parse an expression in `x^m` alone.
    pub fn parse_function(m: usize, src: &str) -> Result<Expr, GalleryError> {
        parse_in("egorov", "f", src, &coordinate_names(m), &[m - 1])
    }

    fn check_positive(&self, f: &Expr, name: &'static str) -> Result<(), GalleryError> {
        for (t, v) in single_var_values(f, self.m, self.m - 1, self.domain[self.m - 1]) {
            match v {
                Ok(v) if v > 0.0 => {}
                Ok(value) => {
                    return Err(GalleryError::BadValue {
                        family: "egorov",
                        name,
                        coord: format!("x{}", self.m),
                        at: t,
                        value,
                    })
                }
                Err(message) => {
                    return Err(GalleryError::Invalid {
                        family: "egorov",
                        message,
                    })
                }
            }
        }
        Ok(())
    }

    /// Same dimension and domain, different `f`.
    pub fn with_function(&self, f: &str) -> Result<Self, GalleryError> {
        Self::with_domain(self.m, f, self.domain.clone())
    }
}

pub fn egorov_metric(spec: &EgorovSpec) -> Result<ChartedMetric, GalleryError> {
    let m = spec.m;
    let mut entries: Vec<((usize, usize), Expr)> = (0..m - 2).map(|i| ((i, i), spec.f.clone())).collect();
    entries.push(((m - 2, m - 1), Expr::constant(1.0)));
    Ok(ChartedMetric::new(
        coordinate_names(m),
        matrix(m, &entries),
        spec.domain.clone(),
    )?)
}

/// `(m−2)(f′ − f̂′)/(2f)` at `x`: the only possibly nonzero tension
/// component, index `m−1`, of the identity map `g_f → g_f̂`.
pub fn egorov_residual_closed_form(spec: &EgorovSpec, f_hat: &Expr, x: &[f64]) -> Result<f64, GalleryError> {
    let m = spec.m;
    let t = m - 1;
    let eval = |e: &Expr| {
        e.eval_jet2(x).map_err(|err| GalleryError::Invalid {
            family: "egorov",
            message: err.to_string(),
        })
    };
    let f = eval(&spec.f)?;
    let fh = eval(f_hat)?;
    if !(f.value > 0.0) || !(fh.value > 0.0) {
        return Err(GalleryError::BadValue {
            family: "egorov",
            name: if f.value > 0.0 { "f_hat" } else { "f" },
            coord: format!("x{}", m),
            at: x[t],
            value: f.value.min(fh.value),
        });
    }
    Ok((m as f64 - 2.0) * (f.d(t) - fh.d(t)) / (2.0 * f.value))
}

// ---- Walker ----------------------------------------------------------------

/// `2dx¹dx⁴ + 2dx²dx³ + a(dx³)² + b(dx⁴)² + 2c dx³dx⁴`, signature (2,2).
#[derive(Debug, Clone)]
pub struct WalkerSpec {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
    pub domain: Vec<Interval>,
}

impl WalkerSpec {
    pub fn new(a: &str, b: &str, c: &str) -> Result<Self, GalleryError> {
        Self::with_domain(a, b, c, vec![Interval::new(-1.0, 1.0); 4])
    }

    pub fn with_domain(a: &str, b: &str, c: &str, domain: Vec<Interval>) -> Result<Self, GalleryError> {
        if domain.len() != 4 {
            return Err(GalleryError::Invalid {
                family: "walker",
                message: format!("{} intervals for dimension 4", domain.len()),
            });
        }
        let coords = coordinate_names(4);
        let all = [0, 1, 2, 3];
        Ok(WalkerSpec {
            a: parse_in("walker", "a", a, &coords, &all)?,
            b: parse_in("walker", "b", b, &coords, &all)?,
            c: parse_in("walker", "c", c, &coords, &all)?,
            domain,
        })
    }
}

pub fn walker_metric(spec: &WalkerSpec) -> Result<ChartedMetric, GalleryError> {
    let one = Expr::constant(1.0);
    let entries = [
        ((0, 3), one.clone()),
        ((1, 2), one),
        ((2, 2), spec.a.clone()),
        ((3, 3), spec.b.clone()),
        ((2, 3), spec.c.clone()),
    ];
    Ok(ChartedMetric::new(
        coordinate_names(4),
        matrix(4, &entries),
        spec.domain.clone(),
    )?)
}

/// Which tension components of a Walker pair respond to each parameter
/// derivative, found by perturbing the hat parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerTensionStructure {
    /// Tension components (0-based) that are nonzero for some perturbation.
    pub active_components: Vec<usize>,
    /// Rank of the map from perturbation coefficients to sampled tension
    /// values; the number of independent scalar constraints detected.
    pub rank: usize,
    /// `sensitivity[k][p][j]`: component `k` responds to `∂_j` of hat
    /// parameter `p` (0 = a, 1 = b, 2 = c).
    pub sensitivity: Vec<[[bool; 4]; 3]>,
}

/// Probe the tension of `(a, b, c) → (a + ε·δ, …)` for linear perturbations
/// `δ = x^j` of each hat parameter separately, plus the combined map over
/// several base points for the rank.
pub fn walker_tension_structure(
    spec: &WalkerSpec,
    points: usize,
    seed: u64,
) -> Result<WalkerTensionStructure, GalleryError> {
    let g = walker_metric(spec)?;
    let lattice = Lattice::new(&spec.domain, seed);
    let xs = lattice.points(0..points);
    let base = |p: usize| match p {
        0 => &spec.a,
        1 => &spec.b,
        _ => &spec.c,
    };
    let coords = coordinate_names(4);
    let threshold = 1e-9;
    let mut sensitivity = vec![[[false; 4]; 3]; 4];
    // columns: one per (parameter, direction); rows: (point, component)
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for p in 0..3 {
        for j in 0..4 {
            let delta = Expr::var(j, coords[j].as_str());
            let perturbed = Expr::add(base(p), &delta);
            let mut hat = spec.clone();
            match p {
                0 => hat.a = perturbed,
                1 => hat.b = perturbed,
                _ => hat.c = perturbed,
            }
            let gh = walker_metric(&hat)?;
            let mut col = Vec::with_capacity(points * 4);
            for x in &xs {
                let tau = tension_identity_at(&g, &gh, x).map_err(|e| GalleryError::Invalid {
                    family: "walker",
                    message: e.to_string(),
                })?;
                for (k, v) in tau.0.iter().enumerate() {
                    if v.abs() > threshold {
                        sensitivity[k][p][j] = true;
                    }
                }
                col.extend_from_slice(&tau.0);
            }
            columns.push(col);
        }
    }
    let active_components = (0..4)
        .filter(|&k| sensitivity[k].iter().any(|row| row.iter().any(|&b| b)))
        .collect();
    Ok(WalkerTensionStructure {
        active_components,
        rank: numerical_rank(&columns, 1e-8),
        sensitivity,
    })
}

/// Rank of a column set by Gram–Schmidt with relative cutoff.
fn numerical_rank(columns: &[Vec<f64>], rel: f64) -> usize {
    let scale = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for c in columns {
        let mut v = c.clone();
        for _ in 0..2 {
            for b in &basis {
                let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > rel * scale {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis.len()
}

// ---- Gödel-type --------------------------------------------------------------

/// `[dx¹ + H(x²)dx³]² − (dx²)² − P²(x²)(dx³)² − (dx⁴)²` with `P ≠ 0`.
#[derive(Debug, Clone)]
pub struct GodelSpec {
    pub h: Expr,
    pub p: Expr,
    pub domain: Vec<Interval>,
}

impl GodelSpec {
    /// Default domain: `x2 ∈ [0.1, 1]`, other coordinates in `[−1, 1]`.
    pub fn new(h: &str, p: &str) -> Result<Self, GalleryError> {
        let mut domain = vec![Interval::new(-1.0, 1.0); 4];
        domain[1] = Interval::new(0.1, 1.0);
        Self::with_domain(h, p, domain)
    }

    pub fn with_domain(h: &str, p: &str, domain: Vec<Interval>) -> Result<Self, GalleryError> {
        if domain.len() != 4 {
            return Err(GalleryError::Invalid {
                family: "godel",
                message: format!("{} intervals for dimension 4", domain.len()),
            });
        }
        let coords = coordinate_names(4);
        let spec = GodelSpec {
            h: parse_in("godel", "H", h, &coords, &[1])?,
            p: parse_in("godel", "P", p, &coords, &[1])?,
            domain,
        };
        spec.check_nonvanishing()?;
        Ok(spec)
    }

    /// `P` must be nonzero at every sample and keep one sign between them.
    fn check_nonvanishing(&self) -> Result<(), GalleryError> {
        let mut sign = 0.0;
        for (t, v) in single_var_values(&self.p, 4, 1, self.domain[1]) {
            let v = v.map_err(|message| GalleryError::Invalid {
                family: "godel",
                message,
            })?;
            if v == 0.0 || (sign != 0.0 && v.signum() != sign) {
                return Err(GalleryError::BadValue {
                    family: "godel",
                    name: "P",
                    coord: "x2".into(),
                    at: t,
                    value: v,
                });
            }
            sign = v.signum();
        }
        Ok(())
    }
}

pub fn godel_metric(spec: &GodelSpec) -> Result<ChartedMetric, GalleryError> {
    let two = Expr::constant(2.0);
    let g33 = Expr::sub(&Expr::pow(&spec.h, &two), &Expr::pow(&spec.p, &two));
    let minus_one = Expr::constant(-1.0);
    let entries = [
        ((0, 0), Expr::constant(1.0)),
        ((0, 2), spec.h.clone()),
        ((1, 1), minus_one.clone()),
        ((2, 2), g33),
        ((3, 3), minus_one),
    ];
    Ok(ChartedMetric::new(
        coordinate_names(4),
        matrix(4, &entries),
        spec.domain.clone(),
    )?)
}

/// `Ĥ′(Ĥ − H) − P̂P̂′ + PP′` at `x2`; zero exactly where the pair is
/// harmonic.
pub fn godel_condition(spec: &GodelSpec, hat: &GodelSpec, x2: f64) -> Result<f64, GalleryError> {
    let x = [0.0, x2, 0.0, 0.0];
    let eval = |e: &Expr| {
        e.eval_jet2(&x).map_err(|err| GalleryError::Invalid {
            family: "godel",
            message: err.to_string(),
        })
    };
    let (h, p, hh, ph) = (eval(&spec.h)?, eval(&spec.p)?, eval(&hat.h)?, eval(&hat.p)?);
    Ok(hh.d(1) * (hh.value - h.value) - ph.value * ph.d(1) + p.value * p.d(1))
}

// ---- catalogue --------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum Family {
    Egorov { base: EgorovSpec, hat: EgorovSpec },
    Walker { base: WalkerSpec, hat: WalkerSpec },
    Godel { base: GodelSpec, hat: GodelSpec },
}

/// A named `(g, ĝ)` pair with the expected verdict.
#[derive(Debug, Clone)]
pub struct GalleryPair {
    pub name: String,
    pub family: Family,
    pub g: ChartedMetric,
    pub g_hat: ChartedMetric,
    pub harmonic: bool,
}

fn egorov_pair(m: usize, f: &str, fh: &str, harmonic: bool) -> GalleryPair {
    let base = EgorovSpec::new(m, f).expect("gallery egorov spec");
    let hat = base.with_function(fh).expect("gallery egorov hat");
    GalleryPair {
        name: format!("egorov m={} f={} f_hat={}", m, f, fh),
        g: egorov_metric(&base).expect("egorov metric"),
        g_hat: egorov_metric(&hat).expect("egorov metric"),
        family: Family::Egorov { base, hat },
        harmonic,
    }
}

fn walker_pair(base: (&str, &str, &str), hat: (&str, &str, &str), harmonic: bool) -> GalleryPair {
    let b = WalkerSpec::new(base.0, base.1, base.2).expect("gallery walker spec");
    let h = WalkerSpec::new(hat.0, hat.1, hat.2).expect("gallery walker hat");
    GalleryPair {
        name: format!(
            "walker ({}, {}, {}) -> ({}, {}, {})",
            base.0, base.1, base.2, hat.0, hat.1, hat.2
        ),
        g: walker_metric(&b).expect("walker metric"),
        g_hat: walker_metric(&h).expect("walker metric"),
        family: Family::Walker { base: b, hat: h },
        harmonic,
    }
}

fn godel_pair(base: (&str, &str), hat: (&str, &str), harmonic: bool) -> GalleryPair {
    let b = GodelSpec::new(base.0, base.1).expect("gallery godel spec");
    let h = GodelSpec::new(hat.0, hat.1).expect("gallery godel hat");
    GalleryPair {
        name: format!("godel H={} P={} -> H={} P={}", base.0, base.1, hat.0, hat.1),
        g: godel_metric(&b).expect("godel metric"),
        g_hat: godel_metric(&h).expect("godel metric"),
        family: Family::Godel { base: b, hat: h },
        harmonic,
    }
}

/// Twelve pairs over the three families, six harmonic and six not.
pub fn gallery_pairs() -> Vec<GalleryPair> {
    vec![
        egorov_pair(3, "exp(x3)", "exp(x3) + 1", true),
        egorov_pair(3, "exp(x3)", "2*exp(x3)", false),
        egorov_pair(4, "x4^2 + 2", "x4^2 + 2.5", true),
        egorov_pair(4, "cosh(x4)", "exp(x4)", false),
        egorov_pair(5, "cosh(x5)", "cosh(x5) + 2", true),
        egorov_pair(5, "x5^2 + 2", "cosh(x5)", false),
        godel_pair(("x2", "cosh(x2)"), ("x2", "sqrt(cosh(x2)^2 + 1)"), true),
        godel_pair(("x2^2", "exp(x2)"), ("x2^2", "sqrt(exp(2*x2) + 3)"), true),
        godel_pair(("x2", "cosh(x2)"), ("2*x2", "cosh(x2)"), false),
        godel_pair(("x2", "cosh(x2)"), ("x2", "2*cosh(x2)"), false),
        walker_pair(
            ("x2*x4", "sin(x1)", "x3"),
            ("x2*x4 + 1", "sin(x1) - 2", "x3 + 0.5"),
            true,
        ),
        walker_pair(("x1^2", "x2", "0"), ("x1^2 + x2*x3", "x2", "0"), false),
    ]
}
