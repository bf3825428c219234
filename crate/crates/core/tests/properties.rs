use emf_sg::analytic::{Analytic, AnalyticOptions, ExposureLink};
use emf_sg::cli::{format_float, parse_grid};
use emf_sg::simulate::{run_mc, McOptions};
use emf_sg::units::{db_to_linear, dbm_to_watts, per_km2, NetworkParams};
use proptest::prelude::*;

fn network() -> impl Strategy<Value = NetworkParams> {
    (0.0f64..2.5, 1.0f64..50.0, 2.5f64..4.0, 0.0f64..1.0, 0.0f64..40.0).prop_map(|(lb_exp, delta, alpha, eps, z)| {
        let lambda_b = 10f64.powf(lb_exp);
        NetworkParams {
            lambda_b: per_km2(lambda_b),
            lambda_u: per_km2(lambda_b * delta),
            alpha,
            epsilon: eps,
            z,
            ..NetworkParams::default()
        }
        .with_open_loop()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn analytic_curves_are_valid(p in network()) {
        let a = Analytic::new(&p, AnalyticOptions::default()).unwrap();
        let sinr: Vec<f64> = (-10..=20).step_by(5).map(|d| db_to_linear(d as f64)).collect();
        let exposure: Vec<f64> = (-90..=-20).step_by(10).map(|d| dbm_to_watts(d as f64)).collect();
        for c in [a.coverage_ul(&sinr).unwrap(), a.coverage_dl(&sinr).unwrap()] {
            prop_assert!(c.is_valid(0.0), "{:?}", c.values);
        }
        for link in [ExposureLink::Ul, ExposureLink::Dl, ExposureLink::Total] {
            let c = a.cdf_exposure(link, &exposure).unwrap();
            prop_assert!(c.is_valid(0.0), "{:?}", c.values);
        }
        let (tc, te) = (1.0, dbm_to_watts(-50.0));
        let (cov, cdf) = a.joint_uec_factors(tc, te).unwrap();
        let j = a.joint_uec(tc, te).unwrap();
        prop_assert!(j <= cov.min(cdf) + 1e-12);
        let both = a.joint_coverage(tc, db_to_linear(3.0)).unwrap();
        let emp = a.joint_emp_udc(tc, te, db_to_linear(3.0)).unwrap();
        prop_assert!((0.0..=both + 1e-6).contains(&emp), "{emp} {both}");
    }

    #[test]
    fn means_scale_with_power_and_density(p in network(), k in 1.5f64..10.0) {
        let base = Analytic::new(&p, AnalyticOptions::default()).unwrap();
        let louder = Analytic::new(&NetworkParams { p_d: k * p.p_d, ..p.clone() }, AnalyticOptions::default()).unwrap();
        let r = louder.mean_dl_exposure().unwrap() / base.mean_dl_exposure().unwrap();
        prop_assert!((r / k - 1.0).abs() < 1e-9);
        // UL mean is linear in λu once the serving law and P0 are held fixed.
        let crowded = NetworkParams { lambda_u: k * p.lambda_u, ..p.clone() };
        let r = Analytic::new(&crowded, AnalyticOptions::default()).unwrap().mean_ul_exposure().unwrap()
            / base.mean_ul_exposure().unwrap();
        prop_assert!((r / k - 1.0).abs() < 1e-9);
    }

    #[test]
    fn grid_size_matches_arithmetic(start in -100i32..100, step_tenths in 1u32..50, n in 1usize..200) {
        let step = step_tenths as f64 / 10.0;
        let stop = start as f64 + step * (n - 1) as f64;
        let g = parse_grid(&format!("{start}:{step}:{stop}")).unwrap();
        prop_assert_eq!(g.len(), n);
        prop_assert!((g[n - 1] - stop).abs() < 1e-9 * stop.abs().max(1.0));
    }

    #[test]
    fn float_format_keeps_nine_digits(x in -1e30f64..1e30) {
        let s = format_float(x);
        let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
        prop_assert_eq!(mantissa.len(), 10);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-9 * x.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn mc_records_are_physical(p in network(), seed in 0u64..1000) {
        let opts = McOptions { realizations: 30, seed, tail_fraction: 0.05, ..McOptions::default() };
        let run = run_mc(&p, &opts).unwrap();
        prop_assert_eq!(run.records.len(), 30);
        for r in &run.records {
            prop_assert!(r.sinr_ul > 0.0 && r.sinr_dl > 0.0 && r.sinr_ul.is_finite() && r.sinr_dl.is_finite());
            prop_assert!(r.exp_ul_w >= 0.0 && r.exp_dl_w > 0.0 && r.r0_m >= 0.0);
        }
    }
}
