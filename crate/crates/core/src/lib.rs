//! Harmonicity of pseudo-Riemannian metrics and of their tangent and
//! cotangent bundle lifts, decided by exact-derivative evaluation at sample
//! points.

pub mod cli_io;
pub mod expr;
pub mod gallery;
pub mod harmonic;
pub mod lifts;
pub mod linalg;
pub mod metric;
pub mod par;
pub mod sampling;
pub mod symbolic;
