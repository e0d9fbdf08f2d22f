use hmetric::gallery::{
    coordinate_names, egorov_metric, egorov_residual_closed_form, godel_condition, godel_metric, walker_metric,
    EgorovSpec, GalleryError, GodelSpec, WalkerSpec,
};
use hmetric::harmonic::{check_harmonic, tension_identity_at, tension_map_at, CoordinateMap, Verdict};
use hmetric::metric::{ChartedMetric, Interval};
use hmetric::sampling::Lattice;

fn line(component: &str) -> ChartedMetric {
    ChartedMetric::parse(
        vec!["x1".into()],
        &[vec![component.into()]],
        vec![Interval::new(-2.0, 2.0)],
    )
    .unwrap()
}

#[test]
fn identity_tension_examples() {
    let g = egorov_metric(&EgorovSpec::new(3, "exp(x3)").unwrap()).unwrap();
    let gk = egorov_metric(&EgorovSpec::new(3, "exp(x3) + 1").unwrap()).unwrap();
    let g4 = egorov_metric(&EgorovSpec::new(4, "exp(x4)").unwrap()).unwrap();
    let g4h = egorov_metric(&EgorovSpec::new(4, "2*exp(x4)").unwrap()).unwrap();
    for x in Lattice::new(g.domain(), 5).points(0..16) {
        assert_eq!(tension_identity_at(&g, &g, &x).unwrap().max_abs(), 0.0);
        assert!(tension_identity_at(&g, &gk, &x).unwrap().max_abs() < 1e-12);
    }
    for x in Lattice::new(g4.domain(), 6).points(0..16) {
        let t = tension_identity_at(&g4, &g4h, &x).unwrap();
        assert!((t.0[2] + 1.0).abs() < 1e-12, "{:?}", t);
        assert_eq!([t.0[0], t.0[1], t.0[3]], [0.0; 3]);
    }
}

#[test]
fn map_tension_examples() {
    let g = egorov_metric(&EgorovSpec::new(3, "exp(x3)").unwrap()).unwrap();
    let gh = egorov_metric(&EgorovSpec::new(3, "2*exp(x3)").unwrap()).unwrap();
    let names = coordinate_names(3);
    let x = [0.1, 0.7, -0.3];
    let via_map = tension_map_at(&CoordinateMap::identity(&names), &g, &gh, &x).unwrap();
    let direct = tension_identity_at(&g, &gh, &x).unwrap();
    for (a, b) in via_map.0.iter().zip(&direct.0) {
        assert!((a - b).abs() < 1e-12);
    }
    let constant = CoordinateMap::parse(&names, &["0.5", "-0.25", "0"]).unwrap();
    assert_eq!(tension_map_at(&constant, &g, &gh, &x).unwrap().max_abs(), 0.0);

    let square = CoordinateMap::parse(&["x1".to_string()], &["x1^2"]).unwrap();
    let t = tension_map_at(&square, &line("1"), &line("1"), &[0.7]).unwrap();
    let h = 1e-4;
    let fd = ((0.7_f64 + h).powi(2) - 2.0 * 0.49 + (0.7_f64 - h).powi(2)) / (h * h);
    assert!((t.0[0] - 2.0).abs() < 1e-12 && (t.0[0] - fd).abs() < 1e-6);
}

#[test]
fn check_examples() {
    let eg = |f: &str| egorov_metric(&EgorovSpec::new(5, f).unwrap()).unwrap();
    let r = check_harmonic(&eg("x5^2 + 2"), &eg("x5^2 + 2.5"), 64, 1e-9, 1).unwrap();
    assert_eq!(r.verdict, Verdict::HarmonicOnSamples);
    assert!(r.max_abs_residual < 1e-9);

    let gd = |h: &str| godel_metric(&GodelSpec::new(h, "cosh(x2)").unwrap()).unwrap();
    let r = check_harmonic(&gd("x2"), &gd("2*x2"), 64, 1e-9, 1).unwrap();
    assert_eq!(r.verdict, Verdict::NotHarmonic);

    let w = walker_metric(&WalkerSpec::new("x1", "x2", "0").unwrap()).unwrap();
    let r = check_harmonic(&w, &w, 64, 1e-9, 1).unwrap();
    assert_eq!((r.verdict, r.max_abs_residual), (Verdict::HarmonicOnSamples, 0.0));
}

#[test]
fn egorov_examples() {
    let g = egorov_metric(&EgorovSpec::new(4, "1").unwrap()).unwrap();
    assert_eq!(g.christoffel_at(&[0.3, 0.1, -0.2, 0.5]).unwrap().max_abs(), 0.0);

    let spec = EgorovSpec::new(5, "x5^2 + 2").unwrap();
    let g = egorov_metric(&spec).unwrap();
    for x in Lattice::new(g.domain(), 9).points(0..32) {
        let f = x[4] * x[4] + 2.0;
        let det = g.metric_at(&x).unwrap().lu().determinant();
        assert!((det + f.powi(3)).abs() < 1e-12 * f.powi(3), "det {} at {:?}", det, x);
    }

    let s4 = EgorovSpec::new(4, "exp(x4)").unwrap();
    let doubled = EgorovSpec::parse_function(4, "2*exp(x4)").unwrap();
    let shifted = EgorovSpec::parse_function(4, "exp(x4) + 3").unwrap();
    let same = EgorovSpec::parse_function(4, "exp(x4)").unwrap();
    for t in [-1.0, -0.25, 0.0, 0.6, 1.0] {
        let x = [0.2, 0.4, -0.1, t];
        assert!((egorov_residual_closed_form(&s4, &doubled, &x).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(egorov_residual_closed_form(&s4, &shifted, &x).unwrap(), 0.0);
        assert_eq!(egorov_residual_closed_form(&s4, &same, &x).unwrap(), 0.0);
    }
}

#[test]
fn walker_examples() {
    let flat = walker_metric(&WalkerSpec::new("0", "0", "0").unwrap()).unwrap();
    assert_eq!(flat.christoffel_at(&[0.1, 0.2, 0.3, 0.4]).unwrap().max_abs(), 0.0);
    let g = walker_metric(&WalkerSpec::new("x1", "x2", "0").unwrap()).unwrap();
    for x in Lattice::new(g.domain(), 3).points(0..16) {
        assert!((g.metric_at(&x).unwrap().lu().determinant() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn godel_examples() {
    let g = godel_metric(&GodelSpec::new("0", "1").unwrap()).unwrap();
    let diag = g.metric_at(&[0.0, 0.5, 0.0, 0.0]).unwrap();
    assert_eq!(
        diag.rows(),
        hmetric::linalg::SquareMatrix::from_fn(4, |i, j| match (i, j) {
            (0, 0) => 1.0,
            (i, j) if i == j => -1.0,
            _ => 0.0,
        })
        .rows()
    );

    let err = GodelSpec::with_domain("x2", "x2", vec![Interval::new(-1.0, 1.0); 4]).unwrap_err();
    assert!(matches!(err, GalleryError::BadValue { name: "P", .. }), "{err}");

    let base = GodelSpec::new("x2", "cosh(x2)").unwrap();
    let lifted_p = GodelSpec::new("x2", "sqrt(cosh(x2)^2 + 1)").unwrap();
    let doubled_h = GodelSpec::new("2*x2", "cosh(x2)").unwrap();
    for r in [0.1, 0.35, 0.8, 1.0] {
        assert!(godel_condition(&base, &lifted_p, r).unwrap().abs() < 1e-12);
        assert!((godel_condition(&base, &doubled_h, r).unwrap() - 2.0 * r).abs() < 1e-12);
        assert_eq!(godel_condition(&base, &base, r).unwrap(), 0.0);
    }
}
