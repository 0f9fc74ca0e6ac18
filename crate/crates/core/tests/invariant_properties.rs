use std::f64::consts::TAU;

use boussinesq_core::diagnostics::{
    chi_lambda, distribution_function, energy_spectrum, lambda_region_check, mean_check, DiagRecord, DiagRecorder,
};
use boussinesq_core::dynamics::{run, step, StepperConfig};
use boussinesq_core::io::csv::write_records;
use boussinesq_core::io::snapshot::{decode_snapshot, encode_snapshot};
use boussinesq_core::random::{random_state, RandomSpec};
use boussinesq_core::{Grid, PhysParams};
use proptest::prelude::*;

fn spec() -> impl Strategy<Value = (usize, RandomSpec)> {
    (
        prop_oneof![Just(16usize), Just(24), Just(32)],
        any::<u64>(),
        1.0f64..2.0,
        0.0f64..1.0,
        0.1f64..1.0,
    )
        .prop_map(|(n, seed, k_peak, u_l2, theta_l2)| (n, RandomSpec { seed, k_peak, u_l2, theta_l2 }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steps_keep_structural_invariants((n, s) in spec(), nu in 0.1f64..1.0, g in 0.0f64..2.0) {
        let grid = Grid::new(n, TAU).unwrap();
        let p = PhysParams::new(nu, g, TAU).unwrap();
        let initial = random_state(&grid, &s).unwrap();
        let cfg = StepperConfig { resolution_limit: 1.0, ..StepperConfig::new(1e-3, 0.05) };
        let mut state = initial.clone();
        for _ in 0..20 {
            state = step(&state, &p, &cfg).unwrap();
        }
        let (m1, m2, mt) = mean_check(&state);
        prop_assert!(m1.abs() < 1e-12 && m2.abs() < 1e-12 && mt.abs() < 1e-12);
        prop_assert!(state.u.is_solenoidal(1e-10));
        prop_assert!(state.theta.hermitian_defect() == 0.0 && state.theta.mask_defect() == 0.0);
        let th0 = initial.theta.norm_l2();
        prop_assert!((state.theta.norm_l2() - th0).abs() <= 1e-10 * th0);
        if let Some((_, lambda)) = chi_lambda(&state.u) {
            prop_assert!(lambda >= grid.kappa0().powi(2));
        }
    }

    #[test]
    fn diagnostics_are_deterministic((n, s) in spec()) {
        let grid = Grid::new(n, TAU).unwrap();
        let p = PhysParams::new(0.5, 1.0, TAU).unwrap();
        let initial = random_state(&grid, &s).unwrap();
        let cfg = StepperConfig { sample_every: 2, ..StepperConfig::new(2e-3, 0.02) };
        let csv = || {
            let mut rec = DiagRecorder::new(1e-6);
            run(&initial, &p, &cfg, &mut [&mut rec]).unwrap();
            let mut bytes = Vec::new();
            write_records(&mut bytes, &rec.records).unwrap();
            bytes
        };
        prop_assert_eq!(csv(), csv());
    }

    #[test]
    fn snapshot_round_trip_preserves_diagnostics((n, s) in spec(), nu in 0.01f64..2.0, g in 0.0f64..3.0) {
        let grid = Grid::new(n, TAU).unwrap();
        let p = PhysParams::new(nu, g, TAU).unwrap();
        let state = random_state(&grid, &s).unwrap();
        let (back, q) = decode_snapshot(&encode_snapshot(&state, &p)).unwrap();
        prop_assert_eq!(q, p);
        prop_assert_eq!(back.t, state.t);
        let th0 = state.theta.norm_l2();
        let a = DiagRecord::from_state(&state, &p, th0, 0.0, 1e-6);
        let b = DiagRecord::from_state(&back, &p, th0, 0.0, 1e-6);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(1e-300) || (x.abs() < 1e-14 && y.abs() < 1e-14);
        let pairs = [
            (a.energy, b.energy),
            (a.enstrophy, b.enstrophy),
            (a.theta_l2, b.theta_l2),
            (a.theta_lp.l1, b.theta_lp.l1),
            (a.theta_lp.l4, b.theta_lp.l4),
            (a.theta_lp.linf, b.theta_lp.linf),
            (a.g_sigma, b.g_sigma),
            (a.chi.unwrap_or(0.0), b.chi.unwrap_or(0.0)),
            (a.lambda.unwrap_or(0.0), b.lambda.unwrap_or(0.0)),
        ];
        for (x, y) in pairs {
            prop_assert!(close(x, y), "{} vs {}", x, y);
        }
    }

    #[test]
    fn spectrum_partitions_energy((n, s) in spec()) {
        let grid = Grid::new(n, TAU).unwrap();
        let p = PhysParams::new(0.1, 1.0, TAU).unwrap();
        let state = random_state(&grid, &s).unwrap();
        let e = state.u.norm_l2_sq();
        let total: f64 = energy_spectrum(&state, &p).shell_energy.iter().sum();
        prop_assert!((total - e).abs() <= 1e-10 * e.max(1e-300));
    }

    #[test]
    fn distribution_is_a_cdf((n, s) in spec()) {
        let grid = Grid::new(n, TAU).unwrap();
        let theta = random_state(&grid, &s).unwrap().theta;
        let f = distribution_function(&theta, 64).unwrap();
        prop_assert!(f.cdf.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*f.cdf.last().unwrap(), 1.0);
        prop_assert_eq!(f.eval(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn region_check_agrees_with_its_inequalities((n, s) in spec(), g in 0.1f64..2.0) {
        let grid = Grid::new(n, TAU).unwrap();
        let p = PhysParams::new(0.5, g, TAU).unwrap();
        let state = random_state(&grid, &s).unwrap();
        let th0 = state.theta.norm_l2();
        let inside = lambda_region_check(&state.u, th0, &p, 0.0);
        let (e, h1) = (state.u.norm_l2_sq(), state.u.norm_h1_sq());
        let expected = h1 >= grid.kappa0().powi(2) * e && h1 <= g * th0 / p.nu * e.sqrt();
        prop_assert_eq!(inside, expected);
    }
}
