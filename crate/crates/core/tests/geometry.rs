use hmetric::expr::{parse_expression, ParseError};
use hmetric::gallery::{coordinate_names, egorov_metric, godel_metric, EgorovSpec, GodelSpec};
use hmetric::metric::{ChartedMetric, Interval};

fn flat(m: usize, scale: &str) -> ChartedMetric {
    let rows: Vec<Vec<String>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { scale.to_string() } else { "0".into() })
                .collect()
        })
        .collect();
    ChartedMetric::parse(coordinate_names(m), &rows, vec![Interval::new(-1.0, 1.0); m]).unwrap()
}

fn egorov3() -> ChartedMetric {
    egorov_metric(&EgorovSpec::new(3, "exp(x3)").unwrap()).unwrap()
}

#[test]
fn parse_examples() {
    let syms = coordinate_names(3);
    assert_eq!(
        format!("{:?}", parse_expression("exp(x3)", &syms).unwrap()),
        "exp(var x3)"
    );
    let err = parse_expression("exp(y)", &["x1", "x2"]).unwrap_err();
    assert!(
        matches!(err, ParseError::UnknownIdentifier { ref name, offset: 4 } if name == "y"),
        "{err}"
    );
    let j = parse_expression("exp(x3)", &syms)
        .unwrap()
        .eval_jet2(&[0.3, -0.2, 0.0])
        .unwrap();
    assert_eq!((j.value, j.d(2), j.hess(2, 2)), (1.0, 1.0, 1.0));
}

#[test]
fn metric_and_inverse_examples() {
    let o = [0.0; 3];
    let want = [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
    let g = egorov3();
    assert_eq!(g.metric_at(&o).unwrap().rows(), want.map(|r| r.to_vec()).to_vec());
    assert_eq!(
        g.inverse_metric_at(&o).unwrap().rows(),
        want.map(|r| r.to_vec()).to_vec()
    );

    let id = flat(3, "1");
    let x = [0.2, -0.4, 0.9];
    assert_eq!(id.metric_at(&x).unwrap().max_abs(), 1.0);
    assert_eq!(
        id.inverse_metric_at(&x).unwrap().rows(),
        id.metric_at(&x).unwrap().rows()
    );
    let inv = flat(2, "4").inverse_metric_at(&[0.1, 0.1]).unwrap();
    assert_eq!(inv.rows(), vec![vec![0.25, 0.0], vec![0.0, 0.25]]);

    let spec = GodelSpec::with_domain("x2", "cosh(x2)", vec![Interval::new(-1.0, 1.0); 4]).unwrap();
    let gm = godel_metric(&spec).unwrap().metric_at(&[0.3, 0.0, -0.5, 0.2]).unwrap();
    assert_eq!((gm[(0, 0)], gm[(0, 2)], gm[(2, 2)]), (1.0, 0.0, -1.0));
}

#[test]
fn christoffel_examples() {
    let gam = egorov3().christoffel_at(&[0.0; 3]).unwrap();
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let want = match (k, i, j) {
                    (1, 0, 0) => -0.5,
                    (0, 0, 2) | (0, 2, 0) => 0.5,
                    _ => 0.0,
                };
                assert!(
                    (gam.get(k, i, j) - want).abs() < 1e-15,
                    "Γ^{}_{}{} = {}",
                    k,
                    i,
                    j,
                    gam.get(k, i, j)
                );
            }
        }
    }
    assert_eq!(
        flat(4, "3").christoffel_at(&[0.1, 0.2, 0.3, 0.4]).unwrap().max_abs(),
        0.0
    );
}

#[test]
fn curvature_examples() {
    assert_eq!(flat(3, "2").curvature_at(&[0.5, 0.5, 0.5]).unwrap().max_abs(), 0.0);

    // R from central differences of the Christoffel symbols
    let g = egorov3();
    let x = [0.2, -0.3, 0.4];
    let r = g.curvature_at(&x).unwrap();
    let gam = g.christoffel_at(&x).unwrap();
    let step = 1e-5;
    let d: Vec<_> = (0..3)
        .map(|l| {
            let mut p = x;
            let mut q = x;
            p[l] += step;
            q[l] -= step;
            (g.christoffel_at(&p).unwrap(), g.christoffel_at(&q).unwrap())
        })
        .collect();
    let dg = |l: usize, k: usize, i: usize, j: usize| (d[l].0.get(k, i, j) - d[l].1.get(k, i, j)) / (2.0 * step);
    let mut largest = 0.0_f64;
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                for h in 0..3 {
                    let quad: f64 = (0..3)
                        .map(|l| gam.get(k, i, l) * gam.get(l, j, h) - gam.get(k, j, l) * gam.get(l, i, h))
                        .sum();
                    let fd = dg(i, k, j, h) - dg(j, k, i, h) + quad;
                    assert!((fd - r.get(k, i, j, h)).abs() < 1e-6, "R^{}_{}{}{}", k, i, j, h);
                    assert_eq!(r.get(k, i, j, h), -r.get(k, j, i, h));
                    assert_eq!(r.get(k, i, i, h), 0.0);
                    largest = largest.max(fd.abs());
                }
            }
        }
    }
    assert!(largest > 0.1, "oracle should see curvature, max {}", largest);
}
