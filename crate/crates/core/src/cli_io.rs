//! JSON manifests in, JSON reports out. The command functions are pure:
//! they take manifest bytes and flag overrides and return the exit code and
//! the text for standard output and standard error.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::gallery::{
    coordinate_names, egorov_metric, godel_metric, walker_metric, EgorovSpec, GalleryError, GodelSpec, WalkerSpec,
};
use crate::harmonic::{
    check_harmonic_with, CheckOptions, HarmonicError, Verdict, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOLERANCE,
};
use crate::lifts::{lift_to_chart, LiftError, LiftKind};
use crate::metric::{ChartedMetric, Interval, MetricError};

pub const EXIT_HARMONIC: i32 = 0;
pub const EXIT_NOT_HARMONIC: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;

/// Values below this magnitude are left out of the Christoffel listing.
pub const NONZERO_THRESHOLD: f64 = 1e-14;

pub const TOOL_NAME: &str = "hmetric";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    Egorov {
        f: String,
    },
    Walker {
        a: String,
        b: String,
        c: String,
    },
    Godel {
        #[serde(rename = "H")]
        h: String,
        #[serde(rename = "P")]
        p: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hat_metric: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hat_family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Command-line values that take precedence over the manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub lift: Option<String>,
}

/// An input problem, located by a JSON path into the manifest and, for
/// expression errors, a byte offset into the expression string.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub path: String,
    pub offset: Option<usize>,
    pub message: String,
}

impl InputError {
    fn new(path: impl Into<String>, message: impl ToString) -> Self {
        InputError {
            path: path.into(),
            offset: None,
            message: message.to_string(),
        }
    }
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)?;
        } else {
            write!(f, "{}: {}", self.path, self.message)?;
        }
        if let Some(o) = self.offset {
            write!(f, " (byte {})", o)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: i32, stdout: String) -> Self {
        Outcome {
            code,
            stdout,
            stderr: String::new(),
        }
    }

    fn input_error(source: &str, e: &InputError) -> Self {
        Outcome {
            code: EXIT_INPUT_ERROR,
            stdout: String::new(),
            stderr: format!("error: {}: {}\n", source, e),
        }
    }
}

pub fn parse_manifest(bytes: &[u8]) -> Result<Manifest, InputError> {
    let text = std::str::from_utf8(bytes).map_err(|e| InputError::new("", format!("manifest is not UTF-8: {}", e)))?;
    serde_json::from_str(text).map_err(|e| InputError {
        path: String::new(),
        offset: None,
        message: format!(
            "invalid manifest JSON at line {} column {}: {}",
            e.line(),
            e.column(),
            e
        ),
    })
}

fn metric_error(field: &str, e: MetricError) -> InputError {
    match e {
        MetricError::Parse { row, col, source } => InputError {
            path: format!("{}[{}][{}]", field, row - 1, col - 1),
            offset: source.offset(),
            message: source.to_string(),
        },
        MetricError::NotSymmetric { row, col } => InputError::new(
            format!("{}[{}][{}]", field, row - 1, col - 1),
            "entry differs from its transpose",
        ),
        other => InputError::new(field, other),
    }
}

fn gallery_error(field: &str, e: GalleryError) -> InputError {
    InputError::new(field, e)
}

impl Manifest {
    pub fn coordinates(&self) -> Vec<String> {
        self.coordinates
            .clone()
            .unwrap_or_else(|| coordinate_names(self.dimension))
    }

    fn check_shape(&self) -> Result<(), InputError> {
        if self.dimension == 0 {
            return Err(InputError::new("dimension", "must be positive"));
        }
        let coords = self.coordinates();
        if coords.len() != self.dimension {
            return Err(InputError::new(
                "coordinates",
                format!("{} names for dimension {}", coords.len(), self.dimension),
            ));
        }
        if let Some(d) = &self.domain {
            if d.len() != self.dimension {
                return Err(InputError::new(
                    "domain",
                    format!("{} intervals for dimension {}", d.len(), self.dimension),
                ));
            }
            for (i, [lo, hi]) in d.iter().enumerate() {
                if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(InputError::new(
                        format!("domain[{}]", i),
                        format!("[{}, {}] is not a finite interval", lo, hi),
                    ));
                }
            }
        }
        for (field, m) in [("metric", &self.metric), ("hat_metric", &self.hat_metric)] {
            if let Some(rows) = m {
                if rows.len() != self.dimension {
                    return Err(InputError::new(
                        field,
                        format!("{} rows for dimension {}", rows.len(), self.dimension),
                    ));
                }
                if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != self.dimension) {
                    return Err(InputError::new(
                        format!("{}[{}]", field, i),
                        format!("{} entries for dimension {}", r.len(), self.dimension),
                    ));
                }
            }
        }
        Ok(())
    }

    fn explicit_domain(&self) -> Option<Vec<Interval>> {
        self.domain
            .as_ref()
            .map(|d| d.iter().map(|&[lo, hi]| Interval::new(lo, hi)).collect())
    }

    fn build(
        &self,
        metric_field: &str,
        rows: &Option<Vec<Vec<String>>>,
        family_field: &str,
        family: &Option<FamilySpec>,
    ) -> Result<ChartedMetric, InputError> {
        match (rows, family) {
            (Some(_), Some(_)) => Err(InputError::new(
                metric_field,
                format!("give exactly one of `{}` and `{}`", metric_field, family_field),
            )),
            (None, None) => Err(InputError::new(
                metric_field,
                format!("one of `{}` and `{}` is required", metric_field, family_field),
            )),
            (Some(rows), None) => {
                let domain = self
                    .explicit_domain()
                    .unwrap_or_else(|| vec![Interval::new(-1.0, 1.0); self.dimension]);
                ChartedMetric::parse(self.coordinates(), rows, domain).map_err(|e| metric_error(metric_field, e))
            }
            (None, Some(fam)) => self.build_family(family_field, fam),
        }
    }

    fn build_family(&self, field: &str, fam: &FamilySpec) -> Result<ChartedMetric, InputError> {
        let m = self.dimension;
        if self.coordinates() != coordinate_names(m) {
            return Err(InputError::new("coordinates", "families use the coordinates x1..xm"));
        }
        let dom = self.explicit_domain();
        let four = |name: &str| {
            if m == 4 {
                Ok(())
            } else {
                Err(InputError::new(
                    "dimension",
                    format!("{} family has dimension 4, manifest says {}", name, m),
                ))
            }
        };
        let err = |e| gallery_error(field, e);
        match fam {
            FamilySpec::Egorov { f } => {
                let spec = match dom {
                    Some(d) => EgorovSpec::with_domain(m, f, d),
                    None => EgorovSpec::new(m, f),
                }
                .map_err(err)?;
                egorov_metric(&spec).map_err(err)
            }
            FamilySpec::Walker { a, b, c } => {
                four("walker")?;
                let spec = match dom {
                    Some(d) => WalkerSpec::with_domain(a, b, c, d),
                    None => WalkerSpec::new(a, b, c),
                }
                .map_err(err)?;
                walker_metric(&spec).map_err(err)
            }
            FamilySpec::Godel { h, p } => {
                four("godel")?;
                let spec = match dom {
                    Some(d) => GodelSpec::with_domain(h, p, d),
                    None => GodelSpec::new(h, p),
                }
                .map_err(err)?;
                godel_metric(&spec).map_err(err)
            }
        }
    }

    pub fn base_metric(&self) -> Result<ChartedMetric, InputError> {
        self.check_shape()?;
        self.build("metric", &self.metric, "family", &self.family)
    }

    pub fn hat_metric(&self) -> Result<ChartedMetric, InputError> {
        self.check_shape()?;
        self.build("hat_metric", &self.hat_metric, "hat_family", &self.hat_family)
    }

    pub fn has_hat(&self) -> bool {
        self.hat_metric.is_some() || self.hat_family.is_some()
    }
}

/// `None` for the base metric itself.
pub fn parse_lift(s: &str) -> Result<Option<LiftKind>, InputError> {
    if s == "none" {
        return Ok(None);
    }
    s.parse::<LiftKind>().map(Some).map_err(|e| InputError::new("lift", e))
}

fn resolve_lift(m: &Manifest, o: &Overrides) -> Result<Option<LiftKind>, InputError> {
    match o.lift.as_deref().or(m.lift.as_deref()) {
        Some(s) => parse_lift(s),
        None => Ok(None),
    }
}

fn lift_error(field: &str, e: LiftError) -> InputError {
    match e {
        LiftError::Metric(me) => metric_error(field, me),
        other => InputError::new(field, other),
    }
}

fn apply_lift(g: ChartedMetric, kind: Option<LiftKind>, field: &str) -> Result<ChartedMetric, InputError> {
    match kind {
        None => Ok(g),
        Some(k) => lift_to_chart(&g, k).map_err(|e| lift_error(field, e)),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{:02x}", b);
            s
        })
}

/// The check report. Field order here is the key order on output.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub tool: &'static str,
    pub version: &'static str,
    pub manifest_sha256: String,
    pub lift: String,
    pub coordinates: Vec<String>,
    pub verdict: Verdict,
    pub max_abs_residual: f64,
    pub worst_point: Vec<f64>,
    /// Keyed by coordinate name, in coordinate order.
    pub per_component_max: Map<String, Value>,
    pub samples_used: usize,
    pub rejected_samples: usize,
    pub tolerance: f64,
    pub seed: u64,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// Harmonicity check of the manifest's pair, optionally lifted.
pub fn cmd_check(manifest_bytes: &[u8], overrides: &Overrides, source: &str) -> Outcome {
    match check_report(manifest_bytes, overrides) {
        Ok(report) => {
            let code = match report.verdict {
                Verdict::HarmonicOnSamples => EXIT_HARMONIC,
                Verdict::NotHarmonic => EXIT_NOT_HARMONIC,
            };
            Outcome::ok(code, to_json(&report))
        }
        Err(e) => Outcome::input_error(source, &e),
    }
}

pub fn check_report(manifest_bytes: &[u8], overrides: &Overrides) -> Result<ReportDocument, InputError> {
    let manifest = parse_manifest(manifest_bytes)?;
    if !manifest.has_hat() {
        return Err(InputError::new(
            "hat_metric",
            "check needs `hat_metric` or `hat_family`",
        ));
    }
    let kind = resolve_lift(&manifest, overrides)?;
    let g = apply_lift(manifest.base_metric()?, kind, "metric")?;
    let g_hat = apply_lift(manifest.hat_metric()?, kind, "hat_metric")?;
    let opts = CheckOptions::new(
        overrides.samples.or(manifest.samples).unwrap_or(DEFAULT_SAMPLES),
        overrides.tol.or(manifest.tol).unwrap_or(DEFAULT_TOLERANCE),
        overrides.seed.or(manifest.seed).unwrap_or(DEFAULT_SEED),
    );
    let report = check_harmonic_with(&g, &g_hat, &opts).map_err(|e| match e {
        HarmonicError::Metric(me) => metric_error("metric", me),
        HarmonicError::InvalidArgument(msg) => InputError::new("", msg),
        other => InputError::new("", other),
    })?;
    let coordinates: Vec<String> = g.coords().iter().map(|c| c.to_string()).collect();
    let per_component_max = coordinates
        .iter()
        .cloned()
        .zip(report.per_component_max.iter().map(|&v| number(v)))
        .collect();
    Ok(ReportDocument {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        manifest_sha256: sha256_hex(manifest_bytes),
        lift: kind.map_or("none", LiftKind::as_str).to_string(),
        coordinates,
        verdict: report.verdict,
        max_abs_residual: report.max_abs_residual,
        worst_point: report.worst_point,
        per_component_max,
        samples_used: report.samples_used,
        rejected_samples: report.rejected_samples,
        tolerance: report.tolerance,
        seed: report.seed,
    })
}

fn metric_strings(g: &ChartedMetric) -> Vec<Vec<String>> {
    let n = g.dim();
    (0..n)
        .map(|i| (0..n).map(|j| g.component(i, j).to_string()).collect())
        .collect()
}

/// The lifted pair as a `2m`-dimensional manifest with explicit metrics.
pub fn cmd_lift(manifest_bytes: &[u8], overrides: &Overrides, source: &str) -> Outcome {
    let result = (|| {
        let manifest = parse_manifest(manifest_bytes)?;
        let Some(kind) = resolve_lift(&manifest, overrides)? else {
            return Ok(None);
        };
        let g = apply_lift(manifest.base_metric()?, Some(kind), "metric")?;
        let hat = if manifest.has_hat() {
            Some(apply_lift(manifest.hat_metric()?, Some(kind), "hat_metric")?)
        } else {
            None
        };
        Ok(Some(Manifest {
            dimension: g.dim(),
            coordinates: Some(g.coords().iter().map(|c| c.to_string()).collect()),
            metric: Some(metric_strings(&g)),
            family: None,
            hat_metric: hat.as_ref().map(metric_strings),
            hat_family: None,
            domain: Some(g.domain().iter().map(|iv| [iv.lo, iv.hi]).collect()),
            lift: None,
            samples: overrides.samples.or(manifest.samples),
            tol: overrides.tol.or(manifest.tol),
            seed: overrides.seed.or(manifest.seed),
        }))
    })();
    match result {
        Ok(Some(lifted)) => Outcome::ok(EXIT_HARMONIC, to_json(&lifted)),
        Ok(None) => Outcome::ok(EXIT_HARMONIC, String::from_utf8_lossy(manifest_bytes).into_owned()),
        Err(e) => Outcome::input_error(source, &e),
    }
}

pub fn parse_point(s: &str) -> Result<Vec<f64>, InputError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| InputError::new("--at", format!("`{}`: {}", t.trim(), e)))
        })
        .collect()
}

fn index_label(idx: &[usize], dim: usize) -> String {
    let parts: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
    if dim <= 9 {
        parts.concat()
    } else {
        parts.join(",")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorDocument {
    pub coordinates: Vec<String>,
    pub point: Vec<f64>,
    pub metric: Vec<Vec<f64>>,
    pub inverse: Vec<Vec<f64>>,
    pub determinant: f64,
    /// Nonzero `Γ^k_ij` with `i ≤ j`, keyed `Γ^k_ij` (1-based).
    pub christoffel: BTreeMap<String, f64>,
    /// `curvature[k][i][j][h] = R^k_ijh`.
    pub curvature: Vec<Vec<Vec<Vec<f64>>>>,
}

pub fn tensors_document(manifest_bytes: &[u8], overrides: &Overrides, at: &str) -> Result<TensorDocument, InputError> {
    let manifest = parse_manifest(manifest_bytes)?;
    let kind = resolve_lift(&manifest, overrides)?;
    let g = apply_lift(manifest.base_metric()?, kind, "metric")?;
    let x = parse_point(at)?;
    if x.len() != g.dim() {
        return Err(InputError::new(
            "--at",
            format!("{} values for dimension {}", x.len(), g.dim()),
        ));
    }
    let me = |e| metric_error("metric", e);
    let gm = g.metric_at(&x).map_err(me)?;
    let inv = g.inverse_metric_at(&x).map_err(me)?;
    let gam = g.christoffel_at(&x).map_err(me)?;
    let r = g.curvature_at(&x).map_err(me)?;
    let n = g.dim();
    let mut christoffel = BTreeMap::new();
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = gam.get(k, i, j);
                if v.abs() > NONZERO_THRESHOLD {
                    christoffel.insert(format!("Γ^{}_{}", k + 1, index_label(&[i, j], n)), v);
                }
            }
        }
    }
    let curvature = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| (0..n).map(|j| (0..n).map(|h| r.get(k, i, j, h)).collect()).collect())
                .collect()
        })
        .collect();
    Ok(TensorDocument {
        coordinates: g.coords().iter().map(|c| c.to_string()).collect(),
        point: x,
        metric: gm.rows(),
        inverse: inv.rows(),
        determinant: gm.lu().determinant(),
        christoffel,
        curvature,
    })
}

/// Metric, inverse, Christoffel symbols and curvature at one point.
pub fn cmd_tensors(manifest_bytes: &[u8], overrides: &Overrides, at: &str, source: &str) -> Outcome {
    match tensors_document(manifest_bytes, overrides, at) {
        Ok(doc) => Outcome::ok(EXIT_HARMONIC, to_json(&doc)),
        Err(e) => Outcome::input_error(source, &e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn egorov_manifest(hat: &str) -> String {
        format!(
            r#"{{"dimension": 3, "family": {{"name": "egorov", "f": "exp(x3)"}}, "hat_family": {{"name": "egorov", "f": "{}"}}}}"#,
            hat
        )
    }

    #[test]
    fn harmonic_and_not() {
        let o = Overrides::default();
        let ok = cmd_check(egorov_manifest("exp(x3) + 0.5").as_bytes(), &o, "m.json");
        assert_eq!(ok.code, 0, "{}", ok.stderr);
        let bad = cmd_check(egorov_manifest("2*exp(x3)").as_bytes(), &o, "m.json");
        assert_eq!(bad.code, 1);
        let v: Value = serde_json::from_str(&bad.stdout).unwrap();
        assert!((v["per_component_max"]["x2"].as_f64().unwrap() - 0.5).abs() < 1e-9);
        assert_eq!(v["per_component_max"]["x1"].as_f64().unwrap(), 0.0);
    }

    #[test]
    fn report_key_order() {
        let out = cmd_check(egorov_manifest("exp(x3) + 1").as_bytes(), &Overrides::default(), "m");
        let keys: Vec<&str> = out
            .stdout
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        assert_eq!(
            keys,
            [
                "tool",
                "version",
                "manifest_sha256",
                "lift",
                "coordinates",
                "verdict",
                "max_abs_residual",
                "worst_point",
                "per_component_max",
                "samples_used",
                "rejected_samples",
                "tolerance",
                "seed"
            ]
        );
    }

    #[test]
    fn input_errors_exit_two() {
        let o = Overrides::default();
        let cases = [
            r#"{"dimension": 4, "metric": [["1","0","0"],["0","1","0"],["0","0","1"]], "hat_metric": [["1","0","0"],["0","1","0"],["0","0","1"]]}"#,
            r#"{"dimension": 2, "metric": [["1","0"],["0","1"]]}"#,
            r#"{"dimension": 2, "metric": [["1","0"],["0","1 +"]], "hat_metric": [["1","0"],["0","1"]]}"#,
            r#"{"dimension": 2, "metric": [["1","0"],["0","1"]], "hat_metric": [["1","0"],["0","1"]], "lift": "bogus"}"#,
            r#"{"dimension": 2, "metrc": []}"#,
            "not json",
        ];
        for c in cases {
            let out = cmd_check(c.as_bytes(), &o, "m.json");
            assert_eq!(out.code, 2, "{}", c);
            assert!(out.stderr.starts_with("error: m.json"), "{}", out.stderr);
        }
    }

    #[test]
    fn parse_error_carries_path_and_offset() {
        let m = r#"{"dimension": 2, "metric": [["1","0"],["0","1 + y"]], "hat_metric": [["1","0"],["0","1"]]}"#;
        let out = cmd_check(m.as_bytes(), &Overrides::default(), "m.json");
        assert!(out.stderr.contains("metric[1][1]"), "{}", out.stderr);
        assert!(out.stderr.contains("byte 4"), "{}", out.stderr);
    }

    #[test]
    fn lift_none_echoes() {
        let text = egorov_manifest("exp(x3) + 1");
        let out = cmd_lift(text.as_bytes(), &Overrides::default(), "m");
        assert_eq!(out.stdout, text);
    }

    #[test]
    fn lift_flat_sasaki() {
        let m = r#"{"dimension": 2, "metric": [["1","0"],["0","1"]], "lift": "sasaki-tm"}"#;
        let out = cmd_lift(m.as_bytes(), &Overrides::default(), "m");
        assert_eq!(out.code, 0, "{}", out.stderr);
        let lifted: Manifest = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(lifted.dimension, 4);
        let rows = lifted.metric.unwrap();
        for (i, r) in rows.iter().enumerate() {
            for (j, e) in r.iter().enumerate() {
                assert_eq!(e, if i == j { "1" } else { "0" });
            }
        }
    }

    #[test]
    fn tensors_for_egorov_origin() {
        let doc = tensors_document(egorov_manifest("exp(x3)").as_bytes(), &Overrides::default(), "0,0,0").unwrap();
        assert_eq!(doc.christoffel.len(), 2);
        assert_eq!(doc.christoffel["Γ^2_11"], -0.5);
        assert_eq!(doc.christoffel["Γ^1_13"], 0.5);
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
