//! Invariants of the emission models and the fitting routines.

use fnemit::device::{
    aggregate_parameters, breakdown_check, device_current, iv_sweep, screening_factor, turn_on_voltage,
    TurnOnOptions,
};
use fnemit::environment::{ballistic_fraction, pressure_from_current};
use fnemit::extraction::{
    fn_linear_fit, fn_transform, nonlinear_refine, residual_jacobian, RefineOptions, ResidualSpace,
};
use fnemit::physics::{
    fn_coefficients, fn_current_density_full, fn_current_density_simplified, thermionic_current_density,
};
use fnemit::{DeviceGeometry, EnvironmentState, FNPlotPoint, IVCurve, Material, ScreeningModel};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn material(phi: f64) -> Material {
    Material::new("m", phi, phi, 1.2e6).unwrap()
}

fn unlimited(beta: f64) -> DeviceGeometry {
    DeviceGeometry {
        field_conversion_beta: beta,
        breakdown_field_limit: f64::INFINITY,
        ..DeviceGeometry::default()
    }
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.log10()..hi.log10()).prop_map(|e| 10f64.powf(e))
}

fn synthetic(c: f64, b: f64, volts: &[f64]) -> IVCurve {
    let pairs: Vec<(f64, f64)> = volts
        .iter()
        .map(|&v| (v, c * v * v * (-b / v).exp()))
        .collect();
    IVCurve::from_pairs(&pairs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fn_current_increases_with_field(phi in 2.0f64..6.0, f1 in log_uniform(1e8, 1e10), k in 1.001f64..10.0) {
        let c = fn_coefficients(&material(phi)).unwrap();
        let f2 = f1 * k;
        prop_assert!(fn_current_density_simplified(&c, f2).unwrap() > fn_current_density_simplified(&c, f1).unwrap());
    }

    #[test]
    fn fn_current_decreases_with_work_function(phi1 in 2.0f64..6.0, dphi in 0.01f64..2.0, f in log_uniform(1e9, 2e10)) {
        let lo = fn_coefficients(&material(phi1)).unwrap();
        let hi = fn_coefficients(&material(phi1 + dphi)).unwrap();
        prop_assert!(fn_current_density_simplified(&hi, f).unwrap() < fn_current_density_simplified(&lo, f).unwrap());
    }

    #[test]
    fn thermionic_increases_with_temperature(t1 in 300.0f64..3000.0, k in 1.001f64..2.0) {
        let m = material(4.5);
        prop_assert!(thermionic_current_density(&m, t1 * k).unwrap() > thermionic_current_density(&m, t1).unwrap());
    }

    #[test]
    fn full_and_simplified_agree_at_mu_equals_phi(phi in 1.0f64..6.0, f in log_uniform(1e8, 1e10)) {
        let m = material(phi);
        let full = fn_current_density_full(&m, f).unwrap();
        let simple = fn_current_density_simplified(&fn_coefficients(&m).unwrap(), f).unwrap();
        if simple > 0.0 {
            prop_assert!(rel(full, simple) < 1e-12, "{full} vs {simple}");
        } else {
            prop_assert_eq!(full, 0.0);
        }
    }

    #[test]
    fn outputs_finite_and_non_negative(phi in 0.5f64..8.0, mu in 0.5f64..15.0, f in log_uniform(1e-3, 1e12), t in 0.0f64..5000.0) {
        let m = Material::new("m", phi, mu, 1.2e6).unwrap();
        for j in [
            fn_current_density_full(&m, f).unwrap(),
            fn_current_density_simplified(&fn_coefficients(&m).unwrap(), f).unwrap(),
            thermionic_current_density(&m, t).unwrap(),
        ] {
            prop_assert!(j.is_finite() && j >= 0.0);
        }
    }

    #[test]
    fn fn_plot_is_affine(phi in 3.0f64..5.5) {
        let c = fn_coefficients(&material(phi)).unwrap();
        // ln(J/F²) = ln a − b·(1/F); check residual of the exact line.
        for i in 0..20 {
            let f = 5e9 * (1.0 + i as f64 * 0.25);
            let j = fn_current_density_simplified(&c, f).unwrap();
            let y = (j / (f * f)).ln();
            let line = c.a_fn.ln() - c.b_fn / f;
            prop_assert!(((y - line) / line).abs() < 1e-10);
        }
    }

    #[test]
    fn additivity_without_screening(n in 1u32..200, v in 10.0f64..150.0) {
        let g = DeviceGeometry { num_emitters_n: n, screening: ScreeningModel::Disabled, ..unlimited(5e7) };
        let one = DeviceGeometry { num_emitters_n: 1, ..g.clone() };
        let m = Material::aluminum();
        let env = EnvironmentState::default();
        let all = device_current(&g, &m, &env, v).unwrap();
        let single = device_current(&one, &m, &env, v).unwrap();
        prop_assert!(rel(all, f64::from(n) * single) < 1e-12);
    }

    #[test]
    fn screening_is_bounded(pitch in log_uniform(1e-9, 1e-2), gap in log_uniform(1e-7, 1e-4), c in 0.1f64..10.0, v in 20.0f64..150.0) {
        let g = DeviceGeometry { pitch, gap_d: gap, screening: ScreeningModel::Exponential { c }, ..unlimited(5e7) };
        let s = screening_factor(&g);
        prop_assert!(s > 0.0 && s <= 1.0);
        let off = DeviceGeometry { screening: ScreeningModel::Disabled, ..g.clone() };
        let env = EnvironmentState::default();
        let m = Material::aluminum();
        prop_assert!(device_current(&g, &m, &env, v).unwrap() <= device_current(&off, &m, &env, v).unwrap());
    }

    #[test]
    fn screening_increases_with_pitch(p1 in log_uniform(1e-7, 1e-5), k in 1.01f64..3.0) {
        let g1 = DeviceGeometry { pitch: p1, ..DeviceGeometry::default() };
        let g2 = DeviceGeometry { pitch: p1 * k, ..DeviceGeometry::default() };
        prop_assert!(screening_factor(&g2) > screening_factor(&g1));
    }

    #[test]
    fn sweep_is_strictly_increasing(beta in log_uniform(2e7, 2e8), v_max in 50.0f64..200.0) {
        let g = unlimited(beta);
        let curve = iv_sweep(&g, &Material::aluminum(), &EnvironmentState::default(), 0.0, v_max, 41).unwrap();
        for w in curve.samples().windows(2) {
            if w[0].current > 0.0 {
                prop_assert!(w[1].current > w[0].current);
            }
        }
    }

    #[test]
    fn breakdown_invariant_under_rescaling(beta in log_uniform(1e6, 1e9), v in 0.0f64..1000.0, k in -10i32..10) {
        let alpha = 2f64.powi(k);
        let g = DeviceGeometry { field_conversion_beta: beta, ..DeviceGeometry::default() };
        let scaled = DeviceGeometry { field_conversion_beta: beta * alpha, ..g.clone() };
        prop_assert_eq!(
            breakdown_check(&g, v).unwrap().passed,
            breakdown_check(&scaled, v / alpha).unwrap().passed
        );
    }

    #[test]
    fn ballistic_fraction_decreases_with_pressure(p1 in log_uniform(1e-6, 1e4), k in 1.01f64..10.0) {
        let env = EnvironmentState::default();
        let f1 = ballistic_fraction(&env.with_pressure(p1), 2e-6).unwrap();
        let f2 = ballistic_fraction(&env.with_pressure(p1 * k), 2e-6).unwrap();
        prop_assert!(f2 < f1 && f1 <= 1.0 && f2 > 0.0);
    }

    #[test]
    fn linear_fit_ignores_order(seed in any::<u64>(), n in 3usize..30) {
        use rand::{seq::SliceRandom, Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<FNPlotPoint> = (0..n)
            .map(|i| FNPlotPoint { x: 0.005 + 0.001 * i as f64, y: -20.0 - 150.0 * (0.005 + 0.001 * i as f64) + rng.gen_range(-0.1..0.1) })
            .collect();
        let mut shuffled = pts.clone();
        shuffled.shuffle(&mut rng);
        let a = fn_linear_fit(&pts).unwrap();
        let b = fn_linear_fit(&shuffled).unwrap();
        prop_assert_eq!(a.prefactor_c, b.prefactor_c);
        prop_assert_eq!(a.slope_b, b.slope_b);
        prop_assert_eq!(a.covariance, b.covariance);
    }

    #[test]
    fn current_scaling_shifts_only_prefactor(c in log_uniform(1e-12, 1e-6), b in 20.0f64..2000.0, alpha in log_uniform(1e-3, 1e3)) {
        let volts: Vec<f64> = (0..15).map(|i| b / 6.0 * (1.0 + 0.3 * i as f64)).collect();
        let base = synthetic(c, b, &volts);
        let scaled = synthetic(c * alpha, b, &volts);
        let f1 = fn_linear_fit(&fn_transform(&base, 0.0).unwrap().points).unwrap();
        let f2 = fn_linear_fit(&fn_transform(&scaled, 0.0).unwrap().points).unwrap();
        prop_assert!((f2.prefactor_c.ln() - f1.prefactor_c.ln() - alpha.ln()).abs() < 1e-9);
        prop_assert!(rel(f2.slope_b, f1.slope_b) < 1e-9);
    }

    #[test]
    fn sweep_fit_round_trip(beta in log_uniform(3e7, 3e8), phi in 3.5f64..5.0, n in 3usize..25) {
        let g = unlimited(beta);
        let m = material(phi);
        let env = EnvironmentState::default();
        let (c, b) = aggregate_parameters(&g, &m, &env).unwrap();
        // Grid from roughly turn-on to well above it.
        let curve = iv_sweep(&g, &m, &env, b / 20.0, b / 2.0, n).unwrap();
        let fit = fn_linear_fit(&fn_transform(&curve, 0.0).unwrap().points).unwrap();
        prop_assert!(rel(fit.prefactor_c, c) < 1e-6, "C {} vs {}", fit.prefactor_c, c);
        prop_assert!(rel(fit.slope_b, b) < 1e-6);
    }

    #[test]
    fn refine_never_increases_residual(c in log_uniform(1e-11, 1e-7), b in 50.0f64..1500.0, kc in 0.3f64..3.0, kb in 0.6f64..1.6, linear in any::<bool>()) {
        let volts: Vec<f64> = (0..20).map(|i| b / 5.0 * (1.0 + 0.25 * i as f64)).collect();
        let curve = synthetic(c, b, &volts);
        let opts = RefineOptions {
            residual_space: if linear { ResidualSpace::Linear } else { ResidualSpace::Log },
            current_floor: 0.0,
            ..RefineOptions::default()
        };
        match nonlinear_refine(&curve, (c * kc, b * kb), &opts) {
            Ok(fit) => prop_assert!(fit.residual_history.windows(2).all(|w| w[1] <= w[0])),
            Err(e) => prop_assert!(false, "refine failed: {e}"),
        }
    }

    #[test]
    fn jacobian_matches_central_differences(c in log_uniform(1e-12, 1e-6), b in 10.0f64..3000.0) {
        let volts: Vec<f64> = (0..12).map(|i| b / 8.0 * (1.0 + 0.5 * i as f64)).collect();
        let curve = synthetic(c, b, &volts);
        let jac = residual_jacobian((c, b), &curve);
        let model = |cc: f64, bb: f64, v: f64| cc * v * v * (-bb / v).exp();
        for (row, &v) in jac.iter().zip(&volts) {
            let hc = 1e-6 * c;
            let hb = 1e-6 * b;
            let dc = (model(c + hc, b, v) - model(c - hc, b, v)) / (2.0 * hc);
            let db = (model(c, b + hb, v) - model(c, b - hb, v)) / (2.0 * hb);
            prop_assert!(rel(row[0], dc) < 1e-6);
            prop_assert!(rel(row[1], db) < 1e-6);
        }
    }

    #[test]
    fn turn_on_monotone_in_threshold(t1 in log_uniform(1e-12, 1e-6), k in 2.0f64..100.0) {
        let g = unlimited(1e8);
        let m = Material::aluminum();
        let env = EnvironmentState::default();
        let opts = |t: f64| TurnOnOptions { threshold_current: t, ..TurnOnOptions::default() };
        let v1 = turn_on_voltage(&g, &m, &env, &opts(t1)).unwrap();
        let v2 = turn_on_voltage(&g, &m, &env, &opts(t1 * k)).unwrap();
        prop_assert!(v2 >= v1);
    }

    #[test]
    fn pressure_inverts_forward_model(logp in -6.0f64..3.0, v in 40.0f64..150.0) {
        let g = unlimited(1e8);
        let m = Material::aluminum();
        let env = EnvironmentState { attenuation: true, ..EnvironmentState::default() };
        let p = 10f64.powf(logp);
        let measured = device_current(&g, &m, &env.with_pressure(p), v).unwrap();
        let back = pressure_from_current(&g, &m, &env, measured, v).unwrap();
        prop_assert!(rel(back, p) < 0.01, "{back} vs {p}");
    }
}

#[test]
fn work_function_shift_lowers_current_and_raises_turn_on() {
    let g = unlimited(1e8);
    let m = Material::aluminum();
    let clean = EnvironmentState::default();
    let dirty = EnvironmentState {
        surface_delta_phi: 0.3,
        ..clean.clone()
    };
    for v in [30.0, 60.0, 100.0, 150.0] {
        assert!(device_current(&g, &m, &dirty, v).unwrap() < device_current(&g, &m, &clean, v).unwrap());
    }
    let opts = TurnOnOptions::default();
    let v_clean = turn_on_voltage(&g, &m, &clean, &opts).unwrap();
    let v_dirty = turn_on_voltage(&g, &m, &dirty, &opts).unwrap();
    assert!(v_dirty > v_clean);
    let (_, b_clean) = aggregate_parameters(&g, &m, &clean).unwrap();
    let (_, b_dirty) = aggregate_parameters(&g, &m, &dirty).unwrap();
    assert!(b_dirty > b_clean);
}

#[test]
fn pressure_inversion_edges() {
    let g = unlimited(1e8);
    let m = Material::aluminum();
    let env = EnvironmentState::default();
    let vac = device_current(&g, &m, &env, 100.0).unwrap();
    assert_eq!(pressure_from_current(&g, &m, &env, vac, 100.0).unwrap(), 0.0);
    assert!(matches!(
        pressure_from_current(&g, &m, &env, 2.0 * vac, 100.0),
        Err(fnemit::Error::InconsistentMeasurement { .. })
    ));
    assert!(matches!(
        pressure_from_current(&g, &m, &env, 0.0, 100.0),
        Err(fnemit::Error::InvalidInput(_))
    ));
}

#[test]
fn pressure_round_trip_matches_closed_form() {
    // I(p) = I_vac·exp(−d·p·σ/(kT)) inverts to p = −ln(I/I_vac)·kT/(dσ).
    let g = unlimited(1e8);
    let m = Material::aluminum();
    let env = EnvironmentState::default();
    let vac = device_current(&g, &m, &env, 100.0).unwrap();
    let kt_over_sigma = 1.380_649e-23 * env.temperature_t / env.gas_cross_section_sigma;
    for ratio in [0.999, 0.9, 0.5, 0.1] {
        let expected = -f64::ln(ratio) * kt_over_sigma / g.gap_d;
        let p = pressure_from_current(&g, &m, &env, vac * ratio, 100.0).unwrap();
        assert!(rel(p, expected) < 0.01, "{p} vs {expected}");
    }
}
