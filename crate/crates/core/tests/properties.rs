//! Randomized invariants across models, guidance, error-space dynamics and constraints.

use std::f64::consts::PI;

use proptest::prelude::*;

use rendezvous::constraints::{docking_residual, ConstraintSet, NAMES};
use rendezvous::error_space::{equivalence_check, CoupledInput, CoupledModel, Grid};
use rendezvous::guidance::{
    desired_gamma, initial_trajectory, predicted_time, space_to_time, time_to_space, DesiredProfiles,
};
use rendezvous::models::{
    aero_forces, gamma_one, load_factor, trim_descent, trim_level, wind_triangle, Limits, VehicleParams, Wind,
};
use rendezvous::scenarios::{preset_straight, preset_turn90, Path, Pose, Segment};
use rendezvous::{InputVec, StateVec};

fn zagi() -> VehicleParams {
    VehicleParams::zagi()
}

fn wind() -> impl Strategy<Value = Wind> {
    (-6.0..6.0f64, -6.0..6.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Wind::new(x, y, z))
}

fn random_path() -> impl Strategy<Value = Path> {
    (
        -PI..PI,
        prop_oneof![Just(0.0), 1.0 / 200.0..1.0 / 30.0, -1.0 / 30.0..-1.0 / 200.0],
    )
        .prop_map(|(chi, sigma)| {
            Path::new(Pose { x: 10.0, y: -20.0, chi }, vec![Segment::arc(3000.0, sigma)]).unwrap()
        })
}

/// Trim thrust, clamped at the zero-thrust end where rounding can make it slightly negative.
fn descent_thrust(v_a: f64, gamma: f64) -> f64 {
    trim_descent(v_a, gamma, &zagi()).map(|t| t.0).unwrap_or(0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wind_triangle_reproduces_ground_velocity(
        v in 12.0..25.0f64, chi in -PI..PI, gamma in -0.3..0.3f64, w in wind(),
    ) {
        let a = wind_triangle(v, chi, gamma, &w).unwrap();
        let ground = [
            a.v_a * a.psi.cos() * a.gamma_a.cos() + w.w_x,
            a.v_a * a.psi.sin() * a.gamma_a.cos() + w.w_y,
            -a.v_a * a.gamma_a.sin() + w.w_z,
        ];
        let expect = [v * chi.cos() * gamma.cos(), v * chi.sin() * gamma.cos(), -v * gamma.sin()];
        for i in 0..3 {
            prop_assert!((ground[i] - expect[i]).abs() < 1e-9, "{i}: {} vs {}", ground[i], expect[i]);
        }
    }

    #[test]
    fn calm_air_is_ground_data(v in 1.0..30.0f64, chi in -PI..PI, gamma in -1.0..1.0f64) {
        let a = wind_triangle(v, chi, gamma, &Wind::calm()).unwrap();
        prop_assert_eq!(a.v_a, v);
        prop_assert_eq!(a.gamma_a, gamma);
        prop_assert_eq!(a.psi, chi);
    }

    #[test]
    fn descent_balance_load_factor(gamma in -0.5..0.0f64, phi in -0.5..0.5f64) {
        let p = zagi();
        let lift = p.m * p.g * gamma.cos() / phi.cos();
        let n = load_factor(lift, &p);
        prop_assert!((n - gamma.cos() / phi.cos()).abs() < 1e-12);
    }

    #[test]
    fn descent_thrust_decreases_with_flight_path_angle(v_a in 12.0..20.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        prop_assume!((a - b).abs() > 1e-6);
        let g1 = gamma_one(&zagi(), v_a);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        // gamma = g1 * t maps t in [0, 1] onto [g1, 0]; larger t is shallower
        let steep = descent_thrust(v_a, g1 * hi);
        let shallow = descent_thrust(v_a, g1 * lo);
        prop_assert!(shallow > steep, "{shallow} vs {steep}");
    }

    #[test]
    fn predicted_time_decreases_with_aggressiveness(a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        prop_assume!((a - b).abs() > 1e-9);
        let sc = preset_straight();
        let time = |k: f64| {
            let mut spec = sc.spec;
            spec.k_aggr = k;
            predicted_time(&spec, &sc.params, &sc.limits).unwrap()
        };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(time(lo) > time(hi));
    }

    #[test]
    fn space_time_round_trip(frac in 0.0..=1.0f64, vf in 12.0..17.9f64, s_r in 100.0..3000.0f64) {
        let s = frac * s_r;
        let t = space_to_time(s, 18.0, vf, s_r);
        prop_assert!((time_to_space(t, 18.0, vf, s_r) - s).abs() < 1e-9);
    }

    #[test]
    fn residual_signs_match_direct_inequalities(
        e_x in -40.0..40.0f64, e_y in -40.0..40.0f64, e_z in -5.0..1.0f64,
        e_v in -8.0..8.0f64, e_gamma in -0.3..0.3f64, e_chi in -0.1..0.1f64, e_phi in -0.6..0.6f64,
        v_g in 8.0..20.0f64, s_g in 0.0..2000.0f64,
        u1 in -0.5..2.5f64, u2 in -0.15..0.15f64, u3 in -0.9..0.9f64, u4 in -4.0..4.0f64,
        path in random_path(),
    ) {
        let l = Limits::appendix();
        let w = Wind::new(-4.33, 2.5, 0.0);
        let model = CoupledModel::new(w, zagi(), path.clone());
        let r = ConstraintSet::new(l)
            .residuals(&model, &[e_x, e_y, e_z, e_v, e_gamma, e_chi, e_phi, v_g, s_g], &[u1, u2, u3, u4])
            .unwrap();

        let chi_g = path.lookup(s_g).unwrap().chi;
        let sigma = path.curvature(s_g).unwrap();
        let air = wind_triangle(e_v + v_g, e_chi + chi_g, e_gamma, &w).unwrap();
        let (lift, _) = aero_forces(air.v_a, u3, &zagi());
        let n = load_factor(lift, &zagi());
        let q = (e_x / l.ebar_x).powi(2) + (e_y / l.ebar_y).powi(2) + (e_z / l.ebar_z).powi(2)
            + (e_chi / l.ebar_chi).powi(2);
        let holds = [
            air.v_a <= l.v_max,
            air.v_a >= l.v_min,
            n <= l.nlf_max,
            n >= l.nlf_min,
            e_gamma <= l.gamma_max,
            e_gamma >= l.gamma_min,
            u1 >= 0.0,
            u1 <= l.u1_max,
            e_phi <= l.phi_max,
            e_phi >= -l.phi_max,
            u2 <= l.u2_max,
            u2 >= -l.u2_max,
            u3 <= l.u3_max,
            u3 >= -l.u3_max,
            (u4 * u4 + (v_g * v_g * sigma).powi(2)).sqrt() <= l.a_max,
            e_z <= 0.0,
            e_chi <= q,
            -e_chi <= q,
        ];
        for i in 0..NAMES.len() {
            // points on the boundary itself are measure-zero; skip near-ties
            if r[i].abs() > 1e-9 {
                prop_assert_eq!(r[i] <= 0.0, holds[i], "{}: residual {}", NAMES[i], r[i]);
            }
        }
        let (rp, rm) = docking_residual(e_x, e_y, e_z, e_chi, &l);
        prop_assert_eq!((rp, rm), (r[16], r[17]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coupled_and_decoupled_models_agree(
        w in wind(),
        path in random_path(),
        e_x in -20.0..20.0f64, e_y in -20.0..20.0f64, e_z in -60.0..-10.0f64,
        e_v in -2.0..4.0f64, e_gamma in -0.05..0.05f64, e_chi in -0.2..0.2f64, e_phi in -0.2..0.2f64,
        v_g in 12.0..18.0f64,
        amp in 0.0..1.0f64, freq in 0.1..1.0f64,
    ) {
        let model = CoupledModel::new(w, zagi(), path);
        let x0 = StateVec::from([e_x, e_y, e_z, e_v, e_gamma, e_chi, e_phi, v_g, 0.0]);
        let input = |t: f64| CoupledInput {
            thrust: 0.8 + 0.3 * amp * (freq * t).sin(),
            roll_rate: 0.05 * amp * (1.3 * freq * t).cos(),
            lift_coeff: 0.35 + 0.05 * amp * (0.7 * freq * t).sin(),
            ugv_accel: 0.3 * amp * (0.5 * freq * t).cos(),
        };
        let d = equivalence_check(&model, &x0, input, 10.0, 0.01).unwrap();
        prop_assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn trajectories_keep_altitude_and_arc_length_consistent(
        w in wind(),
        path in random_path(),
        thrust in 0.3..1.5f64, roll in -0.02..0.02f64, accel in -0.2..0.2f64,
    ) {
        let model = CoupledModel::new(w, zagi(), path);
        let x0 = StateVec::from([0.0, 0.0, -50.0, 0.0, 0.0, 0.0, 0.0, 15.0, 0.0]);
        let grid = Grid::covering(0.05, 20.0);
        let inputs = vec![InputVec::new(thrust, roll, 0.4, accel); grid.len];
        let traj = model.integrate(&x0, &inputs, grid).unwrap();
        prop_assert!(model.max_defect(&traj).unwrap() < 1e-8);
        for k in 0..grid.len {
            let uav = model.uav_state(&traj.states[k]).unwrap();
            prop_assert!((uav.z - traj.states[k][2]).abs() < 1e-9);
            if k > 0 {
                prop_assert!(traj.states[k][8] > traj.states[k - 1][8]);
            }
        }
    }

    #[test]
    fn initial_trajectory_is_dynamically_consistent(turn in any::<bool>(), k in 0.0..=1.0f64) {
        let mut sc = if turn { preset_turn90() } else { preset_straight() };
        sc.spec.k_aggr = k;
        let grid = Grid::covering(0.05, 60.0);
        let traj = initial_trajectory(&sc, grid).unwrap();
        prop_assert!(sc.model().max_defect(&traj).unwrap() < 1e-8);
    }
}

#[test]
fn desired_gamma_endpoints_are_exact() {
    let sc = preset_straight();
    let p = DesiredProfiles::new(&sc.spec, &sc.params, &sc.limits).unwrap();
    assert_eq!(desired_gamma(0.0, p.gamma0, p.gamma1), p.gamma0);
    assert_eq!(desired_gamma(1.0, p.gamma0, p.gamma1), p.gamma1);
}

#[test]
fn trim_level_holds_speed_and_flight_path() {
    let p = zagi();
    let (u1, u3) = trim_level(16.0, &p, &Limits::appendix()).unwrap();
    let (lift, drag) = aero_forces(16.0, u3, &p);
    assert!((lift - p.m * p.g).abs() < 1e-12);
    assert!((u1 - drag).abs() < 1e-12);
}
