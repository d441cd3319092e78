use proptest::prelude::*;
use redgeo_core::functionals::{estimate_limit, pseudo_heat_ball, MonotoneSeries};
use redgeo_core::lgeo::{
    l_length, minimize, reduced_distance, reduced_distance_closed_form, Chart, DescentOptions, ExactEll,
    PathDiscretization, PathProblem, ReducedDistance,
};
use redgeo_core::models::{make_model, ModelSpec, Point};
use redgeo_core::weights::{weight_constant, weight_min, weight_shifted_heat_kernel};

fn catalog() -> Vec<ModelSpec> {
    vec![
        ModelSpec::gaussian(2),
        ModelSpec::cone(0.5),
        ModelSpec::sphere(2),
        ModelSpec::sphere(3),
        ModelSpec::scaled_super(2, 0.5),
        ModelSpec::product(2),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ell_dominates_distance_bound(idx in 0usize..6, u in 0.0f64..3.0, log_tau in -3.0f64..3.0) {
        let spec = &catalog()[idx];
        let m = make_model(spec).unwrap();
        let tau = 10f64.powf(log_tau);
        let u = u.min(m.radial_max());
        let q = if m.has_line() { Point::new(u, 0.3) } else { Point::on_axis(u) };
        let ell = reduced_distance(&m, q, tau).unwrap();
        let d = m.distance(m.basepoint(), q, 0.0).unwrap();
        let bound = d * d / (4.0 * tau);
        prop_assert!(ell >= bound - 1e-10 * (1.0 + bound), "{spec:?} ℓ={ell} bound={bound}");
    }

    #[test]
    fn product_ell_splits(u in 0.0f64..3.0, x in -4.0f64..4.0, log_tau in -2.0f64..2.0) {
        let tau = 10f64.powf(log_tau);
        let p = make_model(&ModelSpec::product(2)).unwrap();
        let s = make_model(&ModelSpec::sphere(2)).unwrap();
        let lp = reduced_distance(&p, Point::new(u, x), tau).unwrap();
        let ls = reduced_distance(&s, Point::on_axis(u), tau).unwrap();
        prop_assert!((lp - ls - x * x / (4.0 * tau)).abs() < 1e-10 * (1.0 + lp));
    }

    #[test]
    fn static_ell_scales_inversely(u in 0.0f64..10.0, tau in 0.01f64..100.0) {
        let m = make_model(&ModelSpec::cone(0.7)).unwrap();
        let a = reduced_distance_closed_form(&m, Point::on_axis(u), tau).unwrap();
        let b = reduced_distance_closed_form(&m, Point::on_axis(u), 2.0 * tau).unwrap();
        prop_assert!((a - 2.0 * b).abs() < 1e-12 * (1.0 + a));
    }

    #[test]
    fn descent_never_increases_and_pins_endpoints(
        theta in 0.1f64..2.5, tau in 0.1f64..5.0, bend in -0.5f64..0.5
    ) {
        let m = make_model(&ModelSpec::sphere(2)).unwrap();
        let problem = PathProblem { model: Some(&m), chart: Chart::Circle };
        let mut path = PathDiscretization::straight(tau, [0.0, 0.0], [theta, 0.0], 32);
        let k = path.nodes.len();
        for (i, node) in path.nodes.iter_mut().enumerate().take(k - 1).skip(1) {
            node[0] += bend * (std::f64::consts::PI * i as f64 / (k - 1) as f64).sin();
        }
        let before = l_length(&problem, &path);
        let report = minimize(&problem, &mut path, DescentOptions::default());
        prop_assert!(report.length <= before + 1e-12 * before.abs().max(1.0));
        prop_assert!(report.history.windows(2).all(|w| w[1] <= w[0] + 1e-14 * w[0].abs().max(1.0)));
        prop_assert_eq!(path.nodes[0], [0.0, 0.0]);
        prop_assert_eq!(path.nodes[k - 1], [theta, 0.0]);
    }

    #[test]
    fn heat_balls_nest(idx in 0usize..6, r1 in 0.5f64..5.0, grow in 1.01f64..3.0) {
        let m = make_model(&catalog()[idx]).unwrap();
        let e = ExactEll::new(&m);
        let r2 = r1 * grow;
        let top = r1 * r1 / (4.0 * std::f64::consts::PI);
        let taus: Vec<f64> = (1..=8).map(|k| top * k as f64 / 9.0).collect();
        let a = pseudo_heat_ball(&e, r1, &taus).unwrap();
        let b = pseudo_heat_ball(&e, r2, &taus).unwrap();
        for (sa, sb) in a.slices.iter().zip(&b.slices) {
            prop_assert!(sa.empty || sb.whole || sa.boundary <= sb.boundary + 1e-9, "{sa:?} {sb:?}");
        }
    }

    #[test]
    fn weights_are_nonnegative(u in 0.0f64..8.0, x in -3.0f64..3.0, tau in 0.01f64..20.0, c in 0.0f64..5.0) {
        let m = make_model(&ModelSpec::gaussian(2)).unwrap();
        let hk = weight_shifted_heat_kernel(&m, 0.5, 30.0).unwrap();
        let w = weight_min(weight_constant(c).unwrap(), hk);
        let s = w.slice(tau).unwrap();
        let v = s.value(u, x);
        prop_assert!(v >= 0.0 && v <= c + 1e-15);
    }

    #[test]
    fn exact_slice_is_consistent_with_pointwise_route(u in 0.0f64..2.5, log_tau in -2.0f64..2.0) {
        let m = make_model(&ModelSpec::sphere(2)).unwrap();
        let e = ExactEll::new(&m);
        let tau = 10f64.powf(log_tau);
        let s = e.slice(tau).unwrap();
        let p = reduced_distance(&m, Point::on_axis(u), tau).unwrap();
        prop_assert!((s.ell(u, 0.0) - p).abs() < 1e-12 * (1.0 + p));
    }

    #[test]
    fn constant_series_has_exact_limit(c in -5.0f64..5.0, len in 9usize..40) {
        let args: Vec<f64> = (0..len).map(|k| 10f64.powf(k as f64 / 4.0)).collect();
        let vals = vec![c; len];
        let series = MonotoneSeries::new(args, vals, 1e-9);
        let est = estimate_limit(&series).unwrap();
        prop_assert_eq!(est.limit, c);
        prop_assert_eq!(est.error, 0.0);
        prop_assert!(est.converged);
    }
}
