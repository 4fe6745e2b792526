mod common;

use std::f64::consts::PI;

use common::{durand_kerner, match_roots, outer_ct_characteristic, outer_dt_characteristic};
use doblab_core::analysis::{
    bode_integral, check_constraints, critical_parameter, max_bandwidth, root_locus, sensitivity_peak, LoopBuilder,
    LoopKind, PeakSpec, Spacing, Sweep, SweptParam,
};
use doblab_core::dob::{inner_loop_ct, inner_open_loop_ct, outer_loop_ct, Cutoff, DObParams, OuterGains};
use proptest::prelude::*;

const G: f64 = 750.0;
const KP: f64 = 1000.0;
const KD: f64 = 250.0;
const TS: f64 = 1e-3;

fn builder(kind: LoopKind, alpha: f64) -> LoopBuilder {
    LoopBuilder::new(kind, DObParams::new(alpha, G).unwrap().with_ts(TS).unwrap(), OuterGains::new(KP, KD).unwrap())
}

#[test]
fn reference_roots_match_independent_solver() {
    for alpha in [0.01, 0.5, 1.0, 2.5] {
        let row = builder(LoopKind::OuterDiscrete, alpha).closed_loop(SweptParam::Alpha, alpha).unwrap();
        let oracle = durand_kerner(&outer_dt_characteristic(alpha, G, KP, KD, TS));
        let err = match_roots(&oracle, &row.roots);
        assert!(err < 1e-9, "discrete alpha {alpha}: {err:e}");

        let row = builder(LoopKind::OuterContinuous, alpha).closed_loop(SweptParam::Alpha, alpha).unwrap();
        let oracle = durand_kerner(&outer_ct_characteristic(alpha, G, KP, KD));
        let scale = oracle.iter().fold(1.0f64, |m, r| m.max(r.norm()));
        let err = match_roots(&oracle, &row.roots);
        assert!(err < 1e-9 * scale, "continuous alpha {alpha}: {err:e}");
    }
}

#[test]
fn reference_point_is_stable_in_both_domains() {
    for kind in [LoopKind::OuterDiscrete, LoopKind::OuterContinuous] {
        assert!(builder(kind, 0.01).is_stable_at(SweptParam::Alpha, 0.01).unwrap());
    }
}

#[test]
fn continuous_loop_stays_stable_for_large_alpha() {
    let t = root_locus(
        &builder(LoopKind::OuterContinuous, 1.0),
        &Sweep { param: SweptParam::Alpha, start: 0.01, end: 1e4, count: 200, spacing: Spacing::Log },
    )
    .unwrap();
    assert!(t.rows.iter().all(|r| r.stable));
}

#[test]
fn discrete_critical_alpha_below_inner_envelope() {
    let b = builder(LoopKind::OuterDiscrete, 1.0);
    let a = critical_parameter(&b, SweptParam::Alpha, (1.0, 10.0)).unwrap();
    let envelope = 2.0 / (G * TS);
    assert!(a <= envelope * (1.0 + 1e-6), "{a} vs {envelope}");
    assert!(a > 0.9 * envelope);
    assert!(!b.is_stable_at(SweptParam::Alpha, a * 1.001).unwrap());
    assert!(b.is_stable_at(SweptParam::Alpha, a * 0.999).unwrap());
}

#[test]
fn discrete_gdob_sweep_destabilises() {
    let t = root_locus(
        &builder(LoopKind::OuterDiscrete, 0.01),
        &Sweep { param: SweptParam::GDob, start: 100.0, end: 1e6, count: 120, spacing: Spacing::Log },
    )
    .unwrap();
    assert!(t.rows.iter().any(|r| r.stable));
    assert!(!t.rows.last().unwrap().stable);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn outer_stability_implies_inner_envelope(
        log_alpha in -3.0f64..2.0,
        log_g in 1.0f64..5.5,
        log_ts in -4.0f64..-2.0,
        kp in 1.0f64..1e5,
        kd in 0.0f64..1e3,
    ) {
        let (alpha, g, ts) = (10f64.powf(log_alpha), 10f64.powf(log_g), 10f64.powf(log_ts));
        let b = LoopBuilder::new(
            LoopKind::OuterDiscrete,
            DObParams::new(alpha, g).unwrap().with_ts(ts).unwrap(),
            OuterGains::new(kp, kd).unwrap(),
        );
        if b.is_stable_at(SweptParam::Alpha, alpha).unwrap() {
            prop_assert!(alpha * g * ts < 2.0);
        }
    }
}

#[test]
fn finite_velocity_filter_peak_grows_with_bandwidth() {
    for alpha in [0.5, 1.0, 2.0] {
        let peaks: Vec<f64> = [250.0, 500.0, 750.0, 1000.0]
            .iter()
            .map(|&g| {
                let p = DObParams::new(alpha, g).unwrap().with_gv(Cutoff::Finite(1000.0)).unwrap();
                sensitivity_peak(&inner_loop_ct(&p).unwrap().s).unwrap().value
            })
            .collect();
        assert!(peaks[0] > 1.0);
        assert!(peaks.windows(2).all(|w| w[1] > w[0]), "alpha {alpha}: {peaks:?}");
    }
}

#[test]
fn ideal_velocity_never_amplifies() {
    for alpha in [0.1, 0.5, 1.0, 2.0, 10.0] {
        for g in [10.0, 100.0, 750.0, 5e3, 1e5] {
            let p = DObParams::new(alpha, g).unwrap();
            let peak = sensitivity_peak(&inner_loop_ct(&p).unwrap().s).unwrap();
            assert!(peak.value <= 1.0 + 1e-12, "alpha {alpha} g {g}: {}", peak.value);
        }
    }
}

#[test]
fn continuous_integrals() {
    for (alpha, g) in [(1.0, 500.0), (0.3, 750.0), (2.0, 100.0)] {
        let p = DObParams::new(alpha, g).unwrap();
        let r = bode_integral(&inner_open_loop_ct(&p).unwrap()).unwrap();
        let expect = -PI / 2.0 * alpha * g;
        assert!((r.value - expect).abs() <= 1e-3 * expect.abs(), "{} vs {expect}", r.value);
        let p = p.with_gv(Cutoff::Finite(1000.0)).unwrap();
        let r = bode_integral(&inner_open_loop_ct(&p).unwrap()).unwrap();
        assert!(r.value.abs() < 1e-2, "{}", r.value);
    }
}

#[test]
fn bandwidth_round_trip_lands_on_binding_constraint() {
    let gains = OuterGains::new(KP, KD).unwrap();
    for (gs, gt) in [(0.5, 0.5), (0.2, 0.8), (0.9, 0.1), (0.3, 0.3)] {
        for (alpha, ts) in [(1.0, 1e-3), (0.25, 1e-4), (3.0, 5e-3)] {
            let spec = PeakSpec::new(gs, gt).unwrap();
            let g = max_bandwidth(alpha, ts, &spec).unwrap();
            let p = DObParams::new(alpha, g).unwrap().with_ts(ts).unwrap();
            let r = check_constraints(&p, &gains, &spec).unwrap();
            let m = r.margins.sensitivity_peak.min(r.margins.complementary_peak);
            assert!(m.abs() <= 1e-12, "{gs} {gt} {alpha} {ts}: {m:e}");

            // The Nyquist peaks sit exactly on the budgets that bind.
            let set = doblab_core::dob::inner_loop_dt(&p).unwrap();
            let s_peak = sensitivity_peak(&set.s).unwrap().value;
            let t_peak = sensitivity_peak(&set.t).unwrap().value;
            assert!(s_peak <= 1.0 / gs * (1.0 + 1e-9));
            assert!(t_peak <= 1.0 / gt * (1.0 + 1e-9));
        }
    }
}

#[test]
fn locus_is_thread_count_independent() {
    let sweep = Sweep { param: SweptParam::Alpha, start: 1e-3, end: 5.0, count: 300, spacing: Spacing::Log };
    let b = builder(LoopKind::OuterDiscrete, 1.0);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| root_locus(&b, &sweep).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.rows.len(), four.rows.len());
    for (a, b) in one.rows.iter().zip(&four.rows) {
        assert_eq!(a.param.to_bits(), b.param.to_bits());
        assert_eq!(a.stable, b.stable);
        for (x, y) in a.roots.iter().zip(&b.roots) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}

#[test]
fn continuous_predicate_audit_against_routh() {
    // Exact Routh-Hurwitz condition on s^3 + a2 s^2 + a1 s + a0, all
    // coefficients positive: a2 a1 > a0.
    let gains = OuterGains::new(KP, KD).unwrap();
    for alpha in [1e-5, 1e-4, 1e-3, 3e-3, 5e-3, 1e-2, 0.1, 1.0, 10.0] {
        let c = outer_ct_characteristic(alpha, G, KP, KD);
        let routh = c[1] * c[2] > c[3];
        let p = DObParams::new(alpha, G).unwrap().with_ts(TS).unwrap();
        let r = check_constraints(&p, &gains, &PeakSpec::new(0.5, 0.5).unwrap()).unwrap();
        assert_eq!(r.continuous_roots_stable, routh, "alpha {alpha}");
        assert_eq!(r.continuous_disagreement, r.continuous_stability_ok != routh);
        assert!(outer_loop_ct(&p, &gains).unwrap().s.stability().unwrap().is_stable() == routh);
    }
}
