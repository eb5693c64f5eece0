//! Property tests for the structural invariants: transforms invert, periods
//! shift nothing, lifts commute with the deck translation, and shooting is
//! monotone. Cases involving integrations keep the case count small.

use proptest::prelude::*;

use relpend::model::{
    momentum_from_velocity, scaled_from_qp, scaled_to_qp, velocity_from_momentum, Chart,
    ForcingSpec, Harmonic, ModelSpec, PhasePoint, PotentialSpec,
};
use relpend::poincare::{lift_equivariance_defect, CylinderMap, FactorMap, PoincareMap, TwistFactor};

fn forced_pendulum() -> ModelSpec {
    ModelSpec::new(
        PotentialSpec::pendulum(1.0),
        ForcingSpec::new(1.0, 0.0, vec![Harmonic::new(1, 0.3, 0.1)]).unwrap(),
    )
}

fn unit_pendulum() -> ModelSpec {
    ModelSpec::new(
        PotentialSpec::sine(1.0, 1.0 / std::f64::consts::TAU),
        ForcingSpec::new(1.0, 0.0, vec![Harmonic::new(1, 0.1, 0.0)]).unwrap(),
    )
}

proptest! {
    #[test]
    fn legendre_involution(p in -1e3f64..1e3) {
        let v = velocity_from_momentum(p);
        prop_assert!(v.abs() < 1.0);
        let back = momentum_from_velocity(v).unwrap();
        // The momentum-side round trip is conditioning-limited: one rounding
        // of v costs ~(1+p²)^{3/2}·eps in p, so the tolerance carries the
        // condition number. The velocity-side trip below stays strict.
        let cond = (1.0 + p * p).powf(1.5);
        prop_assert!((back - p).abs() <= 8.0 * f64::EPSILON * cond,
            "p = {p}: round trip off by {}", (back - p).abs());
        let v_forward = 2.0 * (p.abs() / 1e3) - 1.0; // deterministic v in (-1, 1)
        if v_forward.abs() < 1.0 {
            let p2 = momentum_from_velocity(v_forward).unwrap();
            prop_assert!((velocity_from_momentum(p2) - v_forward).abs() <= 1e-12);
        }
    }

    #[test]
    fn forcing_and_potential_periodicity(t in -50.0f64..50.0, x in -50.0f64..50.0) {
        let spec = forced_pendulum();
        let f0 = spec.forcing.value(t);
        let f1 = spec.forcing.value(t + spec.t_period());
        prop_assert!((f0 - f1).abs() <= 1e-11 * (1.0 + f0.abs()));
        let g0 = spec.potential.value(x);
        let g1 = spec.potential.value(x + spec.s_period());
        prop_assert!((g0 - g1).abs() <= 1e-11 * (1.0 + g0.abs()));
        // The primitive of the zero-mean forcing is itself periodic.
        let big_f0 = spec.forcing.primitive(t);
        let big_f1 = spec.forcing.primitive(t + spec.t_period());
        prop_assert!((big_f0 - big_f1).abs() <= 1e-11 * (1.0 + big_f0.abs()));
    }

    #[test]
    fn charts_invert(t in -5.0f64..5.0, q in -10.0f64..10.0, p in -10.0f64..10.0) {
        let spec = forced_pendulum();
        for chart in [Chart::Expansion, Chart::Factor] {
            let (qq, pp) = chart.to_qp(&spec, t, q, p);
            let (q2, p2) = chart.from_qp(&spec, t, qq, pp);
            prop_assert!((q2 - q).abs() < 1e-12 && (p2 - p).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_chart_inverts_inside_band(delta in 0.01f64..0.5, v in 0.5f64..3.5) {
        let p = 1.0 / (delta * v);
        let (u2, v2) = scaled_from_qp(delta, 0.3, p).unwrap();
        prop_assert!((v2 - v).abs() <= 1e-12 * (1.0 + v));
        let (_, p2) = scaled_to_qp(delta, u2, v2);
        prop_assert!((p2 - p).abs() <= 1e-9 * (1.0 + p.abs()));
    }

    #[test]
    fn scaled_chart_rejects_outside_band(delta in 0.01f64..0.5) {
        let (lo, hi) = relpend::model::scaled_band(delta);
        prop_assert!(scaled_from_qp(delta, 0.0, lo * 0.9).is_err());
        prop_assert!(scaled_from_qp(delta, 0.0, hi * 1.1).is_err());
    }

    #[test]
    fn rescaling_conjugates_trajectories(p0 in -2.0f64..2.0, q0 in 0.0f64..6.2) {
        let spec = forced_pendulum();
        let unit = spec.rescaled();
        let s = spec.s_period();
        let t1 = 3.0;
        let tol = 1e-11;
        let full = relpend::flow::integrate(
            relpend::flow::SystemId::Rpend1, &spec, 0.0, t1, PhasePoint::new(q0, p0), tol).unwrap();
        let scaled = relpend::flow::integrate(
            relpend::flow::SystemId::Rpend1, &unit, 0.0, t1 / s, PhasePoint::new(q0 / s, p0), tol).unwrap();
        // x(t) = S·y(t/S) and the momenta agree on the nose, within ten times
        // the integration tolerance.
        prop_assert!((full.state.q - s * scaled.state.q).abs() < 10.0 * tol,
            "position mismatch {}", (full.state.q - s * scaled.state.q).abs());
        prop_assert!((full.state.p - scaled.state.p).abs() < 10.0 * tol);
    }
}

/// The full-strength lift sweep: a thousand seeded points for the period map
/// and a factor map, in parallel.
#[test]
fn lift_equivariance_thousand_points() {
    use rayon::prelude::*;
    let spec = forced_pendulum();
    let unit = unit_pendulum();
    let map = PoincareMap::new(&spec, 1e-11);
    let factor = TwistFactor::new(&unit, 0.25, 0.25).unwrap();
    let fmap = FactorMap::new(&unit, factor, 1e-11);
    let worst = (0..500u64)
        .into_par_iter()
        .map(|i| {
            // Cheap splitmix stream for reproducible points.
            let mut x = i.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(0x2545f4914f6cdd1d);
            let mut unit_f = || {
                x ^= x >> 30;
                x = x.wrapping_mul(0xbf58476d1ce4e5b9);
                x ^= x >> 27;
                (x >> 11) as f64 / (1u64 << 53) as f64
            };
            let z = PhasePoint::new(8.0 * unit_f() - 4.0, 16.0 * unit_f() - 8.0);
            let a = lift_equivariance_defect(&map, z).unwrap();
            let b = lift_equivariance_defect(&fmap, z).unwrap();
            a.max(b)
        })
        .reduce(|| 0.0, f64::max);
    assert!(worst < 1e-10, "worst lift defect {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn period_map_lift_equivariance(q in -2.0f64..2.0, p in -8.0f64..8.0) {
        let spec = forced_pendulum();
        let map = PoincareMap::new(&spec, 1e-11);
        let defect = lift_equivariance_defect(&map, PhasePoint::new(q, p)).unwrap();
        prop_assert!(defect < 1e-10, "defect {defect}");
    }

    #[test]
    fn factor_map_lift_equivariance_and_momentum_bound(q in -1.0f64..1.0, p in -30.0f64..30.0) {
        let spec = unit_pendulum();
        let factor = TwistFactor::new(&spec, 0.25, 0.25).unwrap();
        let map = FactorMap::new(&spec, factor, 1e-11);
        let defect = lift_equivariance_defect(&map, PhasePoint::new(q, p)).unwrap();
        prop_assert!(defect < 1e-10, "defect {defect}");
        let image = map.apply(PhasePoint::new(q, p)).unwrap();
        prop_assert!((image.p - p).abs() <= factor.momentum_bound + 1e-12);
    }

    #[test]
    fn shooting_monotone_in_target(theta in 0.0f64..1.0, a in -0.2f64..0.18, gap in 0.002f64..0.02) {
        let spec = unit_pendulum();
        let factor = TwistFactor::new(&spec, 0.0, 0.25).unwrap();
        let gf = relpend::genfun::GeneratingFunction::with_defaults(&spec, factor);
        let p_low = gf.shoot(theta, theta + a).unwrap().p0;
        let p_high = gf.shoot(theta, theta + a + gap).unwrap().p0;
        prop_assert!(p_high > p_low, "not monotone: {p_low} vs {p_high}");
    }
}
