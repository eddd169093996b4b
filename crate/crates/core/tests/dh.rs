use proptest::prelude::*;
use std::f64::consts::PI;
use symdesk_core::dh::*;
use symdesk_core::Error;

fn factory() -> Vec<HamiltonianS1Model> {
    let s2 = HamiltonianS1Model::sphere();
    let s2xs2 = s2.product(&s2).unwrap();
    let toric = Polytope::unit_square().circle_model(&[1, 3]).unwrap();
    vec![s2, s2xs2, HamiltonianS1Model::cp2(), toric]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shift_covariance(c in -3.0f64..3.0, t in 0.1f64..5.0) {
        for m in factory() {
            let s = m.shifted(c).unwrap();
            let want = (-t * c).exp() * m.localization_value(t).unwrap();
            prop_assert!((s.localization_value(t).unwrap() - want).abs() <= 1e-12 * want.abs());
            let (d, ds) = (m.density(), s.density());
            for i in 0..20 {
                let x = -4.0 + 0.4 * i as f64;
                prop_assert!((ds.eval(x + c) - d.eval(x)).abs() <= 1e-9 * (1.0 + d.eval(x)));
            }
        }
    }

    #[test]
    fn negation_symmetry(t in 0.1f64..5.0) {
        for m in factory() {
            let a = m.localization_value(t).unwrap();
            let b = m.negated().unwrap().localization_value(-t).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        }
    }
}

#[test]
fn factory_models_satisfy_support_identities() {
    for m in factory() {
        let r = support_residuals(m.halfdim(), m.points());
        assert!(r.iter().all(|v| v.abs() <= SUPPORT_TOL), "{}: {r:?}", m.label());
    }
    let r = support_residuals(2, HamiltonianS1Model::cp2().points());
    assert_eq!(r, vec![0.0, 0.0]);
}

#[test]
fn densities_are_nonnegative_and_have_the_symbolic_volume() {
    for m in factory() {
        let d = m.density();
        let (lo, hi) = m.image();
        for i in 0..=10_000 {
            let x = lo - 0.1 + (hi - lo + 0.2) * i as f64 / 10_000.0;
            assert!(d.eval(x) >= -1e-12, "{} at {x}", m.label());
        }
        assert_eq!(d.eval(hi + 1e-9), 0.0);
        let v = m.total_volume();
        assert!((d.integral() - v).abs() <= 1e-10 * v, "{}", m.label());
    }
}

#[test]
fn laplace_round_trip_on_wide_grid() {
    for m in factory() {
        let ts: Vec<f64> = (1..=100).map(|i| 0.1 * i as f64).collect();
        let r = verify_identity(&m, &ts, None).unwrap();
        assert!(r.max_internal_error <= 1e-10, "{}: {}", m.label(), r.max_internal_error);
    }
}

#[test]
fn density_is_continuous_in_dimension_two_and_up() {
    for m in factory().into_iter().filter(|m| m.halfdim() >= 2) {
        let d = m.density();
        for &b in d.breakpoints() {
            assert!((d.eval(b - 1e-9) - d.eval(b + 1e-9)).abs() < 1e-6, "{} at {b}", m.label());
        }
    }
}

#[test]
fn cp2_tent() {
    let d = HamiltonianS1Model::cp2().density();
    for x in [0.0, 0.25, 0.5, 1.0, 1.5, 2.0] {
        let want = 2.0 * PI * PI * if x <= 1.0 { x } else { 2.0 - x };
        assert!((d.eval(x) - want).abs() < 1e-12, "{x}");
    }
}

#[test]
fn square_slices_form_a_symmetric_tent() {
    let s = ToricSlice::new(Polytope::unit_square(), vec![1, 1]);
    // (1, 1) is non-generic for the square: two vertices share the value 1
    assert!(matches!(s, Err(Error::NonGeneric(_))));
    let s = ToricSlice::new(Polytope::unit_square(), vec![1, 2]).unwrap();
    let m = Polytope::unit_square().circle_model(&[1, 2]).unwrap();
    let d = m.density();
    for i in 0..1000 {
        let x = -0.5 + 4.0 * i as f64 / 999.0;
        assert!((s.density(x) - d.eval(x)).abs() < 1e-10, "{x}");
        assert!((s.density(x) - s.density(3.0 - x)).abs() < 1e-10);
    }
    assert_eq!(s.density(-0.1), 0.0);
    assert_eq!(s.density(3.1), 0.0);
}

#[test]
fn corrupted_models_report_residuals() {
    let mut pts = HamiltonianS1Model::cp2().points().to_vec();
    pts[1].weights[0] = 1;
    match HamiltonianS1Model::new(2, "broken", pts) {
        Err(Error::SupportIdentities(r)) => assert!(r.iter().any(|v| v.abs() > 0.1)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn coincident_values_merge_breakpoints() {
    // S² × S² has the value 0 twice
    let m = HamiltonianS1Model::sphere().product(&HamiltonianS1Model::sphere()).unwrap();
    assert_eq!(m.density().breakpoints(), &[-2.0, 0.0, 2.0]);
}

#[test]
fn chunked_sampling_is_order_independent() {
    let samples = 3 * MC_CHUNK + 17;
    let serial = mc_pushforward_oracle(samples, 99, 16, true).unwrap();
    let mut counts = vec![0u64; 16];
    let chunks: Vec<_> = mc_chunks(samples).collect();
    for &(c, n) in chunks.iter().rev() {
        for (a, b) in counts.iter_mut().zip(mc_chunk_counts(99, c, n, 16, true)) {
            *a += b;
        }
    }
    assert_eq!(mc_histogram_from_counts(counts, samples, 99, true), serial);
    assert_ne!(mc_pushforward_oracle(samples, 100, 16, true).unwrap().counts, serial.counts);
}

#[test]
fn histogram_agrees_with_sphere_transform() {
    let h = mc_pushforward_oracle(200_000, 1, 20, true).unwrap();
    let r = verify_identity(&HamiltonianS1Model::sphere(), &[0.1, 0.5, 1.0, 2.0, 5.0], Some(DensityOracle::Histogram(&h))).unwrap();
    assert!(r.max_oracle_error.unwrap() < 0.01);
}
