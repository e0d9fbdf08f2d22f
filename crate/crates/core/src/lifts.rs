//! Sasaki, horizontal and complete lifts of a metric to the tangent bundle,
//! and the Sasaki lift to the cotangent bundle.
//!
//! Two presentations are provided:
//!
//! * [`lift_blocks_at`] gives the 2×2 block matrices of the lifted metric,
//!   its inverse and its connection coefficients, written in the adapted
//!   frame `{δ_i, ∂_ī}` (tangent Sasaki/horizontal, cotangent Sasaki) or in
//!   induced coordinates (complete lift).
//! * [`lift_to_chart`] builds the lifted metric as an ordinary
//!   [`ChartedMetric`] on the `2m` induced coordinates `(x, fiber)`, so the
//!   generic machinery in [`crate::metric`] and [`crate::harmonic`] applies
//!   to it unchanged.
//!
//! Fiber coordinates are tangent components `u^i` for the tangent lifts and
//! covector components `p_i` for the cotangent lift. Base index `i` maps to
//! position `i` and fiber index `ī` to position `m + i`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;
use crate::harmonic::TensionVector;
use crate::linalg::SquareMatrix;
use crate::metric::{invert_metric, ChartedMetric, Interval, LocalGeometry, MetricError};
use crate::symbolic::{SymbolicGeometry, MAX_SYMBOLIC_DIM};

/// Default sampling box for each fiber coordinate.
pub const FIBER_BOX: Interval = Interval { lo: -1.0, hi: 1.0 };

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("fiber point has base length {base} and fiber length {fiber} for a metric of dimension {dim}")]
    FiberShape { base: usize, fiber: usize, dim: usize },
    #[error("metrics do not share a chart")]
    ChartMismatch,
    #[error("symbolic lift supports base dimension up to {max}, got {dim}")]
    TooLarge { dim: usize, max: usize },
    #[error("unknown lift kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LiftKind {
    #[serde(rename = "sasaki-tm")]
    SasakiTM,
    #[serde(rename = "horizontal-tm")]
    HorizontalTM,
    #[serde(rename = "complete-tm")]
    CompleteTM,
    #[serde(rename = "sasaki-ctm")]
    SasakiCTM,
}

impl LiftKind {
    pub const ALL: [LiftKind; 4] = [
        LiftKind::SasakiTM,
        LiftKind::HorizontalTM,
        LiftKind::CompleteTM,
        LiftKind::SasakiCTM,
    ];
    pub const TANGENT: [LiftKind; 3] = [LiftKind::SasakiTM, LiftKind::HorizontalTM, LiftKind::CompleteTM];

    pub fn as_str(self) -> &'static str {
        match self {
            LiftKind::SasakiTM => "sasaki-tm",
            LiftKind::HorizontalTM => "horizontal-tm",
            LiftKind::CompleteTM => "complete-tm",
            LiftKind::SasakiCTM => "sasaki-ctm",
        }
    }

    pub fn frame(self) -> Frame {
        match self {
            LiftKind::CompleteTM => Frame::Induced,
            _ => Frame::Adapted,
        }
    }

    pub fn is_cotangent(self) -> bool {
        self == LiftKind::SasakiCTM
    }
}

impl fmt::Display for LiftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LiftKind {
    type Err = LiftError;
    fn from_str(s: &str) -> Result<Self, LiftError> {
        LiftKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| LiftError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Frame {
    #[serde(rename = "adapted")]
    Adapted,
    #[serde(rename = "induced")]
    Induced,
}

/// A point of `TM` or `T*M` in induced coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberPoint {
    pub base: Vec<f64>,
    pub fiber: Vec<f64>,
}

impl FiberPoint {
    pub fn new(base: Vec<f64>, fiber: Vec<f64>) -> Self {
        FiberPoint { base, fiber }
    }

    /// Split a `2m` coordinate vector.
    pub fn from_coords(coords: &[f64]) -> Self {
        let m = coords.len() / 2;
        FiberPoint {
            base: coords[..m].to_vec(),
            fiber: coords[m..].to_vec(),
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        self.base.iter().chain(&self.fiber).copied().collect()
    }

    fn check(&self, dim: usize) -> Result<(), LiftError> {
        if self.base.len() != dim || self.fiber.len() != dim {
            return Err(LiftError::FiberShape {
                base: self.base.len(),
                fiber: self.fiber.len(),
                dim,
            });
        }
        Ok(())
    }
}

/// Block presentation of a lifted metric at one bundle point.
#[derive(Debug, Clone)]
pub struct LiftBlocks {
    pub kind: LiftKind,
    pub frame: Frame,
    /// `2m × 2m` metric matrix in `frame`.
    pub metric: SquareMatrix,
    /// Inverse as given by the block formula.
    pub inverse: SquareMatrix,
    /// `^LΓ^k` for `k = 0..m`; entry `(B, C)` is the coefficient for the
    /// pair of frame vectors `(E_B, E_C)`.
    pub unbarred: Vec<SquareMatrix>,
    /// `^LΓ^{k̄}` for `k = 0..m`.
    pub barred: Vec<SquareMatrix>,
}

fn zero(m: usize) -> SquareMatrix {
    SquareMatrix::zeros(m)
}

/// Block matrices of the lift of `g` at `q`.
pub fn lift_blocks_at(g: &ChartedMetric, kind: LiftKind, q: &FiberPoint) -> Result<LiftBlocks, LiftError> {
    let m = g.dim();
    q.check(m)?;
    let geo = LocalGeometry::second_order(g, &q.base)?;
    Ok(blocks_from_geometry(&geo, kind, &q.fiber))
}

pub fn blocks_from_geometry(geo: &LocalGeometry, kind: LiftKind, fiber: &[f64]) -> LiftBlocks {
    let m = geo.dim();
    let g = &geo.g;
    let gi = &geo.g_inv;
    let gam = |k: usize| geo.christoffel.matrix(k);
    let u = fiber;
    let (metric, inverse) = match kind {
        LiftKind::SasakiTM => (
            SquareMatrix::from_blocks(g, &zero(m), &zero(m), g),
            SquareMatrix::from_blocks(gi, &zero(m), &zero(m), gi),
        ),
        LiftKind::HorizontalTM => (
            SquareMatrix::from_blocks(&zero(m), g, g, &zero(m)),
            SquareMatrix::from_blocks(&zero(m), gi, gi, &zero(m)),
        ),
        LiftKind::CompleteTM => {
            // x^{k̄} ∂_k g_ij and x^{k̄} ∂_k g^{ij}
            let mut dg_u = zero(m);
            let mut dgi_u = zero(m);
            for (k, &uk) in u.iter().enumerate() {
                let dgi = geo.d_inverse(k);
                for i in 0..m {
                    for j in 0..m {
                        dg_u[(i, j)] += uk * geo.dg(k, i, j);
                        dgi_u[(i, j)] += uk * dgi[(i, j)];
                    }
                }
            }
            (
                SquareMatrix::from_blocks(&dg_u, g, g, &zero(m)),
                SquareMatrix::from_blocks(&zero(m), gi, gi, &dgi_u),
            )
        }
        LiftKind::SasakiCTM => (
            SquareMatrix::from_blocks(g, &zero(m), &zero(m), gi),
            SquareMatrix::from_blocks(gi, &zero(m), &zero(m), g),
        ),
    };

    let needs_curvature = matches!(kind, LiftKind::SasakiTM | LiftKind::SasakiCTM);
    let r = needs_curvature.then(|| geo.curvature());
    let mut unbarred = Vec::with_capacity(m);
    let mut barred = Vec::with_capacity(m);
    for k in 0..m {
        let gk = gam(k);
        let (ub, b) = match kind {
            LiftKind::SasakiTM => {
                let r = r.as_ref().expect("curvature");
                // ½ R^k_{hji} u^h and ½ R^k_{hij} u^h
                let tr = SquareMatrix::from_fn(m, |i, j| 0.5 * (0..m).map(|h| r.get(k, h, j, i) * u[h]).sum::<f64>());
                let bl = SquareMatrix::from_fn(m, |i, j| 0.5 * (0..m).map(|h| r.get(k, h, i, j) * u[h]).sum::<f64>());
                // −½ R^k_{ijh} u^h
                let tl = SquareMatrix::from_fn(m, |i, j| -0.5 * (0..m).map(|h| r.get(k, i, j, h) * u[h]).sum::<f64>());
                (
                    SquareMatrix::from_blocks(&gk, &tr, &bl, &zero(m)),
                    SquareMatrix::from_blocks(&tl, &gk, &gk, &zero(m)),
                )
            }
            LiftKind::HorizontalTM => (
                SquareMatrix::from_blocks(&gk, &gk, &gk, &zero(m)),
                SquareMatrix::zeros(2 * m),
            ),
            LiftKind::CompleteTM => {
                let tl = SquareMatrix::from_fn(m, |i, j| {
                    (0..m).map(|l| u[l] * geo.dchristoffel(l, k, i, j)).sum::<f64>()
                });
                (
                    SquareMatrix::from_blocks(&gk, &zero(m), &zero(m), &zero(m)),
                    SquareMatrix::from_blocks(&tl, &gk, &gk, &zero(m)),
                )
            }
            LiftKind::SasakiCTM => {
                let r = r.as_ref().expect("curvature");
                let p = u;
                // (R^k_{.i.})^{jm} = g^{kt} g^{js} R^m_{tis}, contracted with p_m
                let raised = |i: usize, j: usize| -> f64 {
                    let mut v = 0.0;
                    for (mm, &pm) in p.iter().enumerate() {
                        for t in 0..m {
                            for s in 0..m {
                                v += pm * gi[(k, t)] * gi[(j, s)] * r.get(mm, t, i, s);
                            }
                        }
                    }
                    v
                };
                let tr = SquareMatrix::from_fn(m, |i, j| 0.5 * raised(i, j));
                let bl = SquareMatrix::from_fn(m, |i, j| 0.5 * raised(j, i));
                // ½ p_m R^m_{ijk}
                let tl =
                    SquareMatrix::from_fn(m, |i, j| 0.5 * (0..m).map(|mm| p[mm] * r.get(mm, i, j, k)).sum::<f64>());
                // −Γ^j_{ik} and −Γ^i_{jk}
                let tr_b = SquareMatrix::from_fn(m, |i, j| -geo.christoffel.get(j, i, k));
                let bl_b = SquareMatrix::from_fn(m, |i, j| -geo.christoffel.get(i, j, k));
                (
                    SquareMatrix::from_blocks(&gk, &tr, &bl, &zero(m)),
                    SquareMatrix::from_blocks(&tl, &tr_b, &bl_b, &zero(m)),
                )
            }
        };
        unbarred.push(ub);
        barred.push(b);
    }
    LiftBlocks {
        kind,
        frame: kind.frame(),
        metric,
        inverse,
        unbarred,
        barred,
    }
}

/// Block-form tension of the lifted identity map.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedTension {
    /// `tr(C · (^LΓ̂^k − ^LΓ^k))` for `k = 0..m`.
    pub unbarred: TensionVector,
    /// `tr(C · (^LΓ̂^{k̄} − ^LΓ^{k̄}))`.
    pub barred: TensionVector,
    /// For the horizontal lift, the same traces contracted with the
    /// horizontal lift's own inverse instead of the Sasaki inverse.
    pub own_inverse: Option<(TensionVector, TensionVector)>,
}

/// Contracting inverse used by the block tension: the Sasaki inverse for
/// both tangent Sasaki and horizontal lifts, and the lift's own inverse
/// otherwise.
fn contracting_inverse(kind: LiftKind, geo: &LocalGeometry, blocks: &LiftBlocks) -> SquareMatrix {
    match kind {
        LiftKind::HorizontalTM => {
            let m = geo.dim();
            SquareMatrix::from_blocks(&geo.g_inv, &zero(m), &zero(m), &geo.g_inv)
        }
        _ => blocks.inverse.clone(),
    }
}

fn traces(inv: &SquareMatrix, hat: &[SquareMatrix], base: &[SquareMatrix]) -> TensionVector {
    TensionVector(
        hat.iter()
            .zip(base)
            .map(|(h, b)| inv.trace_of_product(&h.sub(b)))
            .collect(),
    )
}

/// Block-form tension of the lifted identity map `(g^L) → (ĝ^L)` at `q`.
pub fn lifted_tension_at(
    g: &ChartedMetric,
    g_hat: &ChartedMetric,
    kind: LiftKind,
    q: &FiberPoint,
) -> Result<LiftedTension, LiftError> {
    if g.dim() != g_hat.dim() || g.coords() != g_hat.coords() {
        return Err(LiftError::ChartMismatch);
    }
    q.check(g.dim())?;
    let geo = LocalGeometry::second_order(g, &q.base)?;
    let geo_hat = LocalGeometry::second_order(g_hat, &q.base)?;
    Ok(lifted_tension_from_geometry(&geo, &geo_hat, kind, &q.fiber))
}

pub fn lifted_tension_from_geometry(
    geo: &LocalGeometry,
    geo_hat: &LocalGeometry,
    kind: LiftKind,
    fiber: &[f64],
) -> LiftedTension {
    let base = blocks_from_geometry(geo, kind, fiber);
    let hat = blocks_from_geometry(geo_hat, kind, fiber);
    let inv = contracting_inverse(kind, geo, &base);
    let own_inverse = (kind == LiftKind::HorizontalTM).then(|| {
        (
            traces(&base.inverse, &hat.unbarred, &base.unbarred),
            traces(&base.inverse, &hat.barred, &base.barred),
        )
    });
    LiftedTension {
        unbarred: traces(&inv, &hat.unbarred, &base.unbarred),
        barred: traces(&inv, &hat.barred, &base.barred),
        own_inverse,
    }
}

/// Names for fiber coordinates: `x{m+i}` unless that collides with a base
/// name, in which case a `_f` suffix is appended until unique.
pub fn fiber_names(base: &[Arc<str>]) -> Vec<String> {
    let m = base.len();
    (0..m)
        .map(|i| {
            let mut name = format!("x{}", m + i + 1);
            while base.iter().any(|b| **b == *name) {
                name.push_str("_f");
            }
            name
        })
        .collect()
}

/// The lift of `g` as a metric on the `2m` induced coordinates.
///
/// Components are assembled at the expression level from the base
/// components, their derivatives and the Christoffel symbols. The fiber
/// domain is [`FIBER_BOX`].
pub fn lift_to_chart(g: &ChartedMetric, kind: LiftKind) -> Result<ChartedMetric, LiftError> {
    let m = g.dim();
    if m > MAX_SYMBOLIC_DIM {
        return Err(LiftError::TooLarge {
            dim: m,
            max: MAX_SYMBOLIC_DIM,
        });
    }
    let fiber_names = fiber_names(g.coords());
    let fiber: Vec<Expr> = fiber_names
        .iter()
        .enumerate()
        .map(|(i, n)| Expr::var(m + i, n.as_str()))
        .collect();
    let gij = |i: usize, j: usize| g.component(i, j).clone();
    let n = 2 * m;
    let mut comp = vec![Expr::constant(0.0); n * n];
    let mut set = |a: usize, b: usize, e: Expr| {
        comp[a * n + b] = e.clone();
        comp[b * n + a] = e;
    };

    match kind {
        LiftKind::SasakiTM | LiftKind::HorizontalTM => {
            let sym = SymbolicGeometry::new(g);
            // N^k_j = u^h Γ^k_{hj}, so ∂*_{x^k̄} = dx^k̄ + N^k_j dx^j
            let nl: Vec<Expr> = (0..m)
                .flat_map(|k| (0..m).map(move |j| (k, j)))
                .map(|(k, j)| {
                    let terms: Vec<Expr> = (0..m).map(|h| Expr::mul(&fiber[h], sym.christoffel(k, h, j))).collect();
                    Expr::sum(&terms)
                })
                .collect();
            let nlk = |k: usize, j: usize| &nl[k * m + j];
            // (g N)_{ab} = g_{ak} N^k_b
            let gn: Vec<Expr> = (0..m)
                .flat_map(|a| (0..m).map(move |b| (a, b)))
                .map(|(a, b)| {
                    let terms: Vec<Expr> = (0..m).map(|k| Expr::mul(&gij(a, k), nlk(k, b))).collect();
                    Expr::sum(&terms)
                })
                .collect();
            let gnk = |a: usize, b: usize| &gn[a * m + b];
            if kind == LiftKind::SasakiTM {
                for a in 0..m {
                    for b in a..m {
                        // g_ab + g_ij N^i_a N^j_b = g_ab + N^i_a (gN)_ib
                        let terms: Vec<Expr> = (0..m).map(|i| Expr::mul(nlk(i, a), gnk(i, b))).collect();
                        set(a, b, Expr::add(&gij(a, b), &Expr::sum(&terms)));
                        set(m + a, m + b, gij(a, b));
                    }
                    for b in 0..m {
                        // g_ij N^i_a δ^j_b
                        set(a, m + b, gnk(b, a).clone());
                    }
                }
            } else {
                for a in 0..m {
                    for b in a..m {
                        set(a, b, Expr::add(gnk(a, b), gnk(b, a)));
                    }
                    for b in 0..m {
                        set(a, m + b, gij(a, b));
                    }
                }
            }
        }
        LiftKind::CompleteTM => {
            for a in 0..m {
                for b in a..m {
                    let terms: Vec<Expr> = (0..m)
                        .map(|k| Expr::mul(&fiber[k], &g.component(a, b).derivative(k)))
                        .collect();
                    set(a, b, Expr::sum(&terms));
                }
                for b in 0..m {
                    set(a, m + b, gij(a, b));
                }
            }
        }
        LiftKind::SasakiCTM => {
            let sym = SymbolicGeometry::new(g);
            // K_{ih} = p_a Γ^a_{hi}, so ∂*_{x^ĩ} = dx^ĩ − K_{ih} dx^h
            let kl: Vec<Expr> = (0..m)
                .flat_map(|i| (0..m).map(move |h| (i, h)))
                .map(|(i, h)| {
                    let terms: Vec<Expr> = (0..m).map(|a| Expr::mul(&fiber[a], sym.christoffel(a, h, i))).collect();
                    Expr::sum(&terms)
                })
                .collect();
            let klk = |i: usize, h: usize| &kl[i * m + h];
            // (g^{-1} K)_{jb} = g^{ji} K_{ib}
            let gik: Vec<Expr> = (0..m)
                .flat_map(|j| (0..m).map(move |b| (j, b)))
                .map(|(j, b)| {
                    let terms: Vec<Expr> = (0..m).map(|i| Expr::mul(sym.g_inv(j, i), klk(i, b))).collect();
                    Expr::sum(&terms)
                })
                .collect();
            let gikk = |j: usize, b: usize| &gik[j * m + b];
            for a in 0..m {
                for b in a..m {
                    let terms: Vec<Expr> = (0..m).map(|j| Expr::mul(klk(j, a), gikk(j, b))).collect();
                    set(a, b, Expr::add(&gij(a, b), &Expr::sum(&terms)));
                    set(m + a, m + b, sym.g_inv(a, b).clone());
                }
                for b in 0..m {
                    // −g^{ib} K_{ia}
                    set(a, m + b, Expr::neg(gikk(b, a)));
                }
            }
        }
    }

    let coords: Vec<Arc<str>> = g
        .coords()
        .iter()
        .cloned()
        .chain(fiber_names.iter().map(|s| Arc::from(s.as_str())))
        .collect();
    let domain: Vec<Interval> = g
        .domain()
        .iter()
        .copied()
        .chain(std::iter::repeat_n(FIBER_BOX, m))
        .collect();
    Ok(ChartedMetric::from_parts(coords, comp, domain)?)
}

/// Columns are the adapted frame vectors of `g`'s lift at the bundle point,
/// written in induced coordinates. Identity for the complete lift.
pub fn frame_matrix(geo: &LocalGeometry, kind: LiftKind, fiber: &[f64]) -> SquareMatrix {
    let m = geo.dim();
    let mut p = SquareMatrix::identity(2 * m);
    match kind {
        LiftKind::CompleteTM => {}
        LiftKind::SasakiTM | LiftKind::HorizontalTM => {
            // δ_i = ∂_i − u^h Γ^k_{hi} ∂_k̄
            for i in 0..m {
                for k in 0..m {
                    p[(m + k, i)] = -(0..m).map(|h| fiber[h] * geo.christoffel.get(k, h, i)).sum::<f64>();
                }
            }
        }
        LiftKind::SasakiCTM => {
            // δ̃_i = ∂_i + p_a Γ^a_{ik} ∂_k̃
            for i in 0..m {
                for k in 0..m {
                    p[(m + k, i)] = (0..m).map(|a| fiber[a] * geo.christoffel.get(a, i, k)).sum::<f64>();
                }
            }
        }
    }
    p
}

/// Derivative of [`frame_matrix`] along induced coordinate `c`.
pub fn frame_matrix_derivative(geo: &LocalGeometry, kind: LiftKind, fiber: &[f64], c: usize) -> SquareMatrix {
    let m = geo.dim();
    let mut dp = SquareMatrix::zeros(2 * m);
    let sign = match kind {
        LiftKind::CompleteTM => return dp,
        LiftKind::SasakiTM | LiftKind::HorizontalTM => -1.0,
        LiftKind::SasakiCTM => 1.0,
    };
    for i in 0..m {
        for k in 0..m {
            let v: f64 = if c < m {
                (0..m)
                    .map(|h| {
                        fiber[h]
                            * match kind {
                                LiftKind::SasakiCTM => geo.dchristoffel(c, h, i, k),
                                _ => geo.dchristoffel(c, k, h, i),
                            }
                    })
                    .sum()
            } else {
                let h = c - m;
                match kind {
                    LiftKind::SasakiCTM => geo.christoffel.get(h, i, k),
                    _ => geo.christoffel.get(k, h, i),
                }
            };
            dp[(m + k, i)] = sign * v;
        }
    }
    dp
}

/// Metric matrix of a chart metric re-expressed in a frame: `Pᵀ G P`.
pub fn metric_in_frame(g: &SquareMatrix, p: &SquareMatrix) -> SquareMatrix {
    p.transpose().mul(g).mul(p)
}

/// Connection coefficients of a chart metric in the frame `E_B = P^b_B ∂_b`:
/// entry `(B, C)` of matrix `A` is the `E_A` component of `∇_{E_B} E_C`.
pub fn connection_in_frame(chart: &LocalGeometry, p: &SquareMatrix, dp: &[SquareMatrix]) -> Vec<SquareMatrix> {
    let n = p.dim();
    let p_inv = p.lu().inverse().expect("frame matrix is unipotent");
    // w[c][B][C] = P^b_B ∂_b P^c_C + P^b_B P^d_C Γ^c_{bd}
    let mut out = vec![SquareMatrix::zeros(n); n];
    let mut w = vec![SquareMatrix::zeros(n); n];
    for (c, wc) in w.iter_mut().enumerate() {
        for bb in 0..n {
            for cc in 0..n {
                let mut v = 0.0;
                for b in 0..n {
                    let pb = p[(b, bb)];
                    if pb == 0.0 {
                        continue;
                    }
                    v += pb * dp[b][(c, cc)];
                    for d in 0..n {
                        v += pb * p[(d, cc)] * chart.christoffel.get(c, b, d);
                    }
                }
                wc[(bb, cc)] = v;
            }
        }
    }
    for (a, oa) in out.iter_mut().enumerate() {
        for bb in 0..n {
            for cc in 0..n {
                oa[(bb, cc)] = (0..n).map(|c| p_inv[(a, c)] * w[c][(bb, cc)]).sum();
            }
        }
    }
    out
}

/// Nondegeneracy check of the assembled lift at a bundle point.
pub fn check_lift_nondegenerate(chart: &ChartedMetric, q: &FiberPoint) -> Result<f64, LiftError> {
    let coords = q.coords();
    let g = chart.metric_at(&coords)?;
    let (_, det) = invert_metric(&g, &coords)?;
    Ok(det)
}
