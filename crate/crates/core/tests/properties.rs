//! Pointwise invariants of the map families and the report round trip.

use conformal_det::conformality_defect;
use conformal_det::harness::{Check, LimitLine, ReportFile, ReportRow, RunConfig};
use conformal_det::maps::{normalize, reflect, MapFamily};
use proptest::prelude::*;

/// A point of the closed unit ball in dimension `d`.
fn ball_point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-1.0f64..1.0, d), 0.0f64..=1.0).prop_filter_map(
        "zero direction",
        |(v, r)| {
            let len = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            (len > 1e-9).then(|| v.iter().map(|t| t / len * r.cbrt()).collect())
        },
    )
}

fn dim_and_point() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..=4).prop_flat_map(|d| (Just(d), ball_point(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn values_shrink_as_n_grows((d, x) in dim_and_point(), n in 1u32..500) {
        let a = MapFamily::raw(d, n).unwrap().eval(&x).unwrap().norm();
        let b = MapFamily::raw(d, n + 1).unwrap().eval(&x).unwrap().norm();
        prop_assert!(b <= a * (1.0 + 4.0 * f64::EPSILON), "{b} > {a}");
    }

    #[test]
    fn normalized_maps_send_the_ball_into_the_ball((d, x) in dim_and_point(), n in 1u32..500) {
        let g = normalize(d, n).unwrap();
        let v = g.eval(&x).unwrap().norm();
        prop_assert!(v <= 1.0 + 1e-12, "|g(x)| = {v}");
    }

    #[test]
    fn determinant_sign_is_constant((d, x) in dim_and_point(), n in 1u32..500, axis in 1usize..=2) {
        let raw = MapFamily::raw(d, n).unwrap();
        prop_assert!(raw.det_jacobian(&x).unwrap() < 0.0);
        prop_assert!(normalize(d, n).unwrap().det_jacobian(&x).unwrap() < 0.0);
        prop_assert!(reflect(&raw, axis).unwrap().det_jacobian(&x).unwrap() > 0.0);
    }

    #[test]
    fn gradient_energy_density_equals_scaled_determinant((d, x) in dim_and_point(), n in 1u32..500) {
        for f in [MapFamily::raw(d, n).unwrap(), normalize(d, n).unwrap()] {
            let j = f.jacobian(&x).unwrap();
            prop_assert!(conformality_defect(&j).unwrap() < 1e-12);
            let lhs = j.frobenius().powi(d as i32);
            let rhs = (d as f64).powf(0.5 * d as f64) * j.det().abs();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn pointwise_values_stay_below_the_decay_bound((d, x) in dim_and_point(), n in 1u32..500) {
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        let dist = x.iter().zip(&e1).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assume!(dist > 1e-6);
        let v = MapFamily::raw(d, n).unwrap().eval(&x).unwrap().norm();
        prop_assert!(v <= 2.0 / (n as f64 * dist) * (1.0 + 1e-12));
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
    ]
}

fn row() -> impl Strategy<Value = ReportRow> {
    (
        1u32..10_000,
        prop::sample::select(vec![
            "det",
            "abs_det",
            "lp:2",
            "grad_lp:3",
            "concentration:0.5",
        ]),
        finite(),
        finite(),
        0usize..1 << 40,
        any::<bool>(),
    )
        .prop_map(|(n, name, value, abs_error, nodes, converged)| ReportRow {
            n,
            functional: name.to_string(),
            value,
            abs_error,
            nodes,
            converged,
        })
}

fn report() -> impl Strategy<Value = ReportFile> {
    (
        prop::collection::vec(row(), 0..20),
        prop::collection::vec((finite(), finite(), finite(), 0usize..100), 0..4),
        prop::collection::vec((1u8..=10, any::<bool>(), finite()), 0..6),
        prop::option::of("[0-9]{4}-[0-9]{2}-[0-9]{2}T[0-9:]{8}Z"),
    )
        .prop_map(|(rows, limits, checks, ts)| {
            let mut r = ReportFile::new("sweep", RunConfig::default());
            r.header.timestamp = ts;
            r.rows = rows;
            r.limits = limits
                .into_iter()
                .map(|(limit, slope, residual, rows_used)| LimitLine {
                    functional: "abs_det".into(),
                    model: "c0 + c1/n".into(),
                    limit,
                    slope,
                    residual,
                    rows_used,
                })
                .collect();
            r.checks = checks
                .into_iter()
                .map(|(criterion, passed, measured)| Check {
                    criterion,
                    name: format!("d=2 check {criterion}, n=4"),
                    passed,
                    measured,
                    expected: "<= 1e-6 relative".into(),
                })
                .collect();
            r
        })
}

fn bits(r: &ReportFile) -> Vec<u64> {
    r.rows
        .iter()
        .flat_map(|x| [x.value.to_bits(), x.abs_error.to_bits()])
        .chain(
            r.limits
                .iter()
                .flat_map(|l| [l.limit.to_bits(), l.slope.to_bits(), l.residual.to_bits()]),
        )
        .chain(r.checks.iter().map(|c| c.measured.to_bits()))
        .collect()
}

proptest! {
    #[test]
    fn reports_round_trip_bit_for_bit(r in report()) {
        let csv = ReportFile::parse(&r.to_csv().unwrap()).unwrap();
        prop_assert_eq!(&csv, &r);
        prop_assert_eq!(bits(&csv), bits(&r));
        let json = ReportFile::parse(&r.to_json().unwrap()).unwrap();
        prop_assert_eq!(&json, &r);
        prop_assert_eq!(bits(&json), bits(&r));
    }
}
