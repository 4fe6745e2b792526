mod common;

use std::f64::consts::PI;

use common::{durand_kerner, match_roots};
use doblab_core::discretize::{substitute, zoh_double_integrator, SubstitutionRule};
use doblab_core::dob::{
    inner_loop_ct, inner_loop_dt, inner_open_loop_ct, inner_open_loop_dt, outer_loop_ct, outer_loop_dt, Cutoff,
    DObParams, LoopSet, OuterGains,
};
use doblab_core::poly::Polynomial;
use doblab_core::tf::{Stability, TransferFunction};
use doblab_core::Complex64;
use proptest::prelude::*;

fn roots_strategy() -> impl Strategy<Value = Vec<Complex64>> {
    // Up to six real roots or conjugate pairs, degree <= 12, moduli in
    // [0.2, 5], rejected unless pairwise separated.
    prop::collection::vec((0.2f64..5.0, 0.0f64..PI, any::<bool>()), 1..=6)
        .prop_map(|spec| {
            let mut out = Vec::new();
            for (r, th, real) in spec {
                if real {
                    out.push(Complex64::new(if th > PI / 2.0 { -r } else { r }, 0.0));
                } else {
                    let th = th.clamp(0.2, PI - 0.2);
                    let z = Complex64::from_polar(r, th);
                    out.push(z);
                    out.push(z.conj());
                }
            }
            out
        })
        .prop_filter("roots too close", |rs| {
            rs.iter().enumerate().all(|(i, a)| rs[i + 1..].iter().all(|b| (a - b).norm() > 0.15))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn roots_round_trip(roots in roots_strategy()) {
        let p = Polynomial::from_roots(&roots);
        let got = p.roots().unwrap();
        let err = match_roots(&roots, &got);
        prop_assert!(err < 1e-8, "degree {} error {err:e}", roots.len());
    }
}

/// Stability class from explicit root magnitudes, skipping draws whose
/// roots sit within `1e-6` of the boundary.
fn explicit_verdict(roots: &[Complex64], discrete: bool) -> Option<bool> {
    let margin = |r: &Complex64| if discrete { 1.0 - r.norm() } else { -r.re };
    if roots.iter().any(|r| margin(r).abs() < 1e-6) {
        return None;
    }
    Some(roots.iter().all(|r| margin(r) > 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn stability_matches_root_magnitudes(
        coeffs in prop::collection::vec(-3.0f64..3.0, 2..=9),
        discrete in any::<bool>(),
    ) {
        prop_assume!(coeffs[0].abs() > 0.1);
        let den = Polynomial::new(coeffs.clone());
        let tf = if discrete {
            TransferFunction::discrete(vec![1.0], coeffs.clone(), 1e-3).unwrap()
        } else {
            TransferFunction::continuous(vec![1.0], coeffs.clone()).unwrap()
        };
        let oracle = durand_kerner(den.coeffs());
        if let Some(expect) = explicit_verdict(&oracle, discrete) {
            let got = tf.stability().unwrap();
            prop_assert_eq!(got.is_stable(), expect, "{:?} oracle {:?}", coeffs, oracle);
        }
    }
}

fn loop_sets(alpha: f64, g: f64, ts: f64, gv: Cutoff, gains: OuterGains) -> Vec<LoopSet> {
    let p = DObParams::new(alpha, g).unwrap().with_gv(gv).unwrap().with_ts(ts).unwrap();
    vec![
        inner_loop_ct(&p).unwrap(),
        inner_loop_dt(&p).unwrap(),
        outer_loop_ct(&p, &gains).unwrap(),
        outer_loop_dt(&p, &gains).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sensitivity_plus_complementary_is_one(
        alpha in 0.05f64..3.0,
        g in 50.0f64..2000.0,
        ts in 1e-4f64..2e-3,
        gv in prop_oneof![Just(Cutoff::Infinite), (100.0f64..5000.0).prop_map(Cutoff::Finite)],
        kp in 10.0f64..2000.0,
        kd in 0.0f64..300.0,
    ) {
        let gains = OuterGains::new(kp, kd).unwrap();
        for set in loop_sets(alpha, g, ts, gv, gains) {
            let top = set.s.domain().nyquist().unwrap_or(1e5);
            for i in 1..=1000 {
                let w = top * i as f64 / 1000.0;
                let (s, t) = set.eval_at_frequency(w).unwrap();
                let err = (s + t - 1.0).norm();
                prop_assert!(err < 1e-12, "w = {w}, |S+T-1| = {err:e}");
            }
        }
    }
}

#[test]
fn sensitivity_plus_complementary_on_reference_sets() {
    let gains = OuterGains::new(1000.0, 250.0).unwrap();
    for gv in [Cutoff::Infinite, Cutoff::Finite(1000.0)] {
        for set in loop_sets(1.0, 750.0, 1e-3, gv, gains) {
            let top = set.s.domain().nyquist().unwrap_or(1e5);
            for i in 1..=1000 {
                let w = top * i as f64 / 1000.0;
                // Also through the stand-alone closed-loop transfer functions,
                // which is well conditioned at these parameters.
                let err = (set.s.eval_at_frequency(w).unwrap() + set.t.eval_at_frequency(w).unwrap() - 1.0).norm();
                assert!(err < 1e-12, "w = {w}: {err:e}");
                let (s, t) = set.eval_at_frequency(w).unwrap();
                assert!((s + t - 1.0).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn zoh_double_integrator_is_step_invariant() {
    // Sampled unit-step response of 1/s^2 is (k ts)^2 / 2.
    for ts in [1e-4, 1e-3, 0.05] {
        let g = zoh_double_integrator(1.0, ts).unwrap();
        let y = g.filter(&[1.0; 1000]).unwrap();
        for (k, yk) in y.iter().enumerate() {
            let t = k as f64 * ts;
            let exact = t * t / 2.0;
            assert!((yk - exact).abs() <= 1e-12 * exact.max(ts * ts), "ts {ts} k {k}: {yk} vs {exact}");
        }
    }
}

#[test]
fn forward_euler_of_inner_loop_is_exact() {
    for (alpha, g, ts) in [(1.0, 500.0, 1e-3), (0.37, 1234.5, 2.5e-4), (3.0, 10.0, 0.1)] {
        let p = DObParams::new(alpha, g).unwrap().with_ts(ts).unwrap();
        let fe = substitute(&inner_open_loop_ct(&p).unwrap(), ts, SubstitutionRule::ForwardEuler).unwrap();
        let dt = inner_open_loop_dt(&p).unwrap();
        assert_eq!(fe.num().coeffs(), dt.num().coeffs());
        assert_eq!(fe.den().coeffs(), dt.den().coeffs());
        assert_eq!(fe.domain(), dt.domain());
    }
}

#[test]
fn inner_verdict_boundary() {
    let ts = 1e-3;
    let verdict = |c: f64| {
        let p = DObParams::new(1.0, c / ts).unwrap().with_ts(ts).unwrap();
        inner_loop_dt(&p).unwrap().s.stability().unwrap().class
    };
    assert_eq!(verdict(1.999), Stability::Stable);
    assert_eq!(verdict(2.0), Stability::Marginal);
    assert_eq!(verdict(2.001), Stability::Unstable);
}

#[test]
fn outer_sensitivity_matches_factored_blocks() {
    // 1 / (1 + C Ci Gp) from each block's factored form, small ts.
    let (alpha, g, kp, kd, ts) = (0.05, 50.0, 10.0, 3.0, 1e-4);
    let p = DObParams::new(alpha, g).unwrap().with_ts(ts).unwrap();
    let set = outer_loop_dt(&p, &OuterGains::new(kp, kd).unwrap()).unwrap();
    let c = alpha * g * ts;
    for i in 1..=1000 {
        let w = PI / ts * i as f64 / 1000.0;
        let z = Complex64::from_polar(1.0, w * ts);
        let pd = kp + kd * (z - 1.0) / (ts * z);
        let ci = alpha * ((1.0 + g * ts) * z - 1.0) / (z - (1.0 - c));
        let gp = ts * ts / 2.0 * (z + 1.0) / ((z - 1.0) * (z - 1.0));
        let expect = 1.0 / (1.0 + pd * ci * gp);
        let (s, _) = set.eval_at_frequency(w).unwrap();
        assert!((s - expect).norm() <= 1e-9 * expect.norm().max(1e-3), "w {w}: {s} vs {expect}");
    }
}
